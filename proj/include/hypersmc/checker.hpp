#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hypersmc/dtmc.hpp"
#include "hypersmc/formula.hpp"
#include "hypersmc/region.hpp"
#include "hypersmc/sprt.hpp"

namespace hypersmc {

struct CheckTask {
  std::shared_ptr<const ModelSampler> model;
  FormulaPtr formula;
  ErrorBudget budget;
  double margin = 0.05;
  /// Truncation for unbounded untils; required when the formula has one.
  std::optional<std::size_t> horizon;
  std::int64_t batch = 1;
  std::int64_t max_samples = 1'000'000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

/// One Bernoulli source: a probability term and the body its path tuples are scored by.
struct Source {
  const node::Prob* prob = nullptr;
  FormulaPtr body;
  /// Steps drawn for each path of the tuple.
  std::size_t horizon = 0;
  std::string text;
};

/// Convex component of the violation region. AssertH1 on a piece means the vector is outside it.
struct Piece {
  TestRegion region;
  ErrorBudget budget;
  /// Set for one-dimensional halfspaces, which run the scalar test.
  std::optional<Indifference1D> scalar;
  std::string boundary;
};

struct TestPlan {
  /// Boolean combination of comparisons, with unbounded untils truncated.
  FormulaPtr formula;
  std::vector<Source> sources;
  std::vector<Piece> pieces;
  /// Truth value when no sampling is needed.
  std::optional<bool> constant;
  /// Plans for the comparisons nested inside source bodies.
  std::map<const node::Compare*, std::shared_ptr<const TestPlan>> nested;
  std::size_t level = 0;
  /// Number of levels in the subtree rooted here, this one included.
  std::size_t depth = 1;
  ErrorBudget budget;
  double margin = 0.0;
  std::vector<std::string> warnings;
};

struct CompileOptions {
  double margin = 0.05;
  std::optional<std::size_t> horizon;
  ErrorBudget budget;
};

/// Builds the test plan for a closed formula. Throws ConfigError for unsupported shapes
/// (equality, intersections of constraints in the violation region, unbounded untils without
/// a horizon, regions failing the probes, or a nested budget that eats the margin).
TestPlan compile(const FormulaPtr& formula, const CompileOptions& options);
TestPlan compile(const FormulaPtr& formula, double margin);

struct LevelBudget {
  std::size_t level;
  ErrorBudget budget;
  double margin;
};

struct CheckResult {
  Verdict verdict;
  std::int64_t draws = 0;
  /// Successes per top-level source.
  std::vector<std::int64_t> successes;
  double seconds = 0.0;
  std::vector<LevelBudget> levels;
  std::vector<std::string> warnings;
  /// Nested tests run, and whether any of them hit the cap.
  std::int64_t inner_tests = 0;
  bool inner_cap_hit = false;
};

CheckResult check(const CheckTask& task);
/// Same engine. Without nested comparisons it degenerates to check().
CheckResult check_nested(const CheckTask& task);

/// Exact value where the arithmetic allows it, always with a floating-point approximation.
struct ExactValue {
  std::optional<Rational> exact;
  double approx = 0.0;

  std::string to_string() const;
};

struct TermValue {
  std::string term;
  ExactValue value;
};

struct BruteForceResult {
  bool holds = false;
  /// Top-level probability terms and comparison sides, in evaluation order, without duplicates.
  std::vector<TermValue> terms;
};

/// Exact evaluation by enumerating bounded path tuples. Free variables, if any, are bound to the
/// path that starts in the initial state and always takes the first listed successor.
BruteForceResult brute_force_check(const Dtmc& dtmc, const FormulaPtr& formula,
                                   std::optional<std::size_t> horizon = std::nullopt,
                                   std::size_t cap = kDefaultEnumerationCap);

}  // namespace hypersmc
