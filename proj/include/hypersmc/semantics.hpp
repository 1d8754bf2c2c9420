#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "hypersmc/dtmc.hpp"
#include "hypersmc/formula.hpp"

namespace hypersmc {

/// A path variable's value: a path viewed from `offset` onwards.
struct Binding {
  const Path* path = nullptr;
  std::size_t offset = 0;

  const StateToken& state() const { return path->states[offset]; }
};

/// Maps path variables to shifted paths. An optional fallback binding answers
/// every lookup not covered by an explicit entry; association installs it.
class Assignment {
 public:
  void bind(const PathVar& var, const Path& path, std::size_t offset = 0);
  void set_fallback(Binding b) { fallback_ = b; }
  void clear() {
    entries_.clear();
    fallback_.reset();
  }

  const Binding* find(const PathVar& var) const;
  /// The i-shift: every binding (including the fallback) advances by i positions.
  Assignment shifted(std::size_t i) const;

 private:
  std::vector<std::pair<PathVar, Binding>> entries_;
  std::optional<Binding> fallback_;
};

/// Resolves proposition names against one model's proposition list.
class PropositionTable {
 public:
  explicit PropositionTable(const std::vector<std::string>& propositions);
  /// Throws EvalError for names the model does not declare.
  std::size_t index(const std::string& name) const;
  bool known(const std::string& name) const { return index_.count(name) > 0; }

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

/// Decides an embedded comparison under the current assignment.
using CompareOracle = std::function<bool(const node::Compare&, const Assignment&)>;

std::set<PathVar> free_vars(const Formula& f);
std::set<PathVar> free_vars(const Term& t);
/// Every path variable occurring anywhere, free or quantified.
std::set<PathVar> all_vars(const Formula& f);
/// Atomic propositions mentioned anywhere in f.
std::set<std::string> propositions_of(const Formula& f);

/// Replaces free variables by pv; quantified variables are left alone.
FormulaPtr apply_association(const FormulaPtr& f, const PathVar& pv);

/// Number of steps a path must have so evaluation never reads past its end;
/// nullopt when some Until is unbounded. Probability bodies are resampled and
/// count through their own horizon.
std::optional<std::size_t> required_horizon(const Formula& f);
std::optional<std::size_t> required_horizon(const Term& t);
/// Like required_horizon, but comparisons count as zero: only positions read on the
/// paths currently assigned, not on the paths a nested P draws afresh.
std::optional<std::size_t> read_horizon(const Formula& f);

/// Replaces every unbounded Until by its `horizon`-bounded version.
FormulaPtr truncate_unbounded(const FormulaPtr& f, std::size_t horizon);
bool has_unbounded(const Formula& f);

/// Truth of a path formula. Without an oracle, reaching a comparison is an error.
bool eval_path_formula(const Formula& f, const Assignment& v, const PropositionTable& props,
                       const CompareOracle& oracle = {});

}  // namespace hypersmc
