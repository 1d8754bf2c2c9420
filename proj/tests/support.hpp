#pragma once

// Random models and formulas shared by the property tests and the acceptance binary.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "hypersmc/checker.hpp"
#include "hypersmc/dtmc.hpp"
#include "hypersmc/formula.hpp"
#include "hypersmc/pctl.hpp"
#include "hypersmc/semantics.hpp"

namespace testsupport {

using namespace hypersmc;

inline std::size_t pick(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

/// Chain with 1..max_states states, random rational rows and random labels over {a, b}.
inline Dtmc random_dtmc(Rng& rng, std::size_t max_states) {
  const std::size_t n = 1 + pick(rng, max_states);
  std::vector<std::vector<Transition>> rows(n);
  std::vector<LabelSet> labels(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::size_t> targets(n);
    for (std::size_t i = 0; i < n; ++i) targets[i] = i;
    std::shuffle(targets.begin(), targets.end(), rng);
    targets.resize(1 + pick(rng, std::min<std::size_t>(n, 3)));
    std::vector<int> w;
    int total = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      w.push_back(1 + static_cast<int>(pick(rng, 4)));
      total += w.back();
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
      Rational r(w[i], total);
      rows[s].push_back({targets[i], r, static_cast<double>(r)});
    }
    labels[s] = LabelSet(pick(rng, 4));
  }
  return Dtmc(n, 0, {"a", "b"}, rows, labels);
}

// ---------------------------------------------------------------------------
// PCTL* formulas and their exact semantics

inline std::size_t horizon_of(const pctl::State& f);

inline std::size_t horizon_of(const pctl::PathF& f) {
  return std::visit(
      [](const auto& n) -> std::size_t {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, pctl::StateP>) return horizon_of(*n.body);
        else if constexpr (std::is_same_v<T, pctl::NotP>) return horizon_of(*n.body);
        else if constexpr (std::is_same_v<T, pctl::AndP>) return std::max(horizon_of(*n.lhs), horizon_of(*n.rhs));
        else if constexpr (std::is_same_v<T, pctl::NextP>) return 1 + horizon_of(*n.body);
        else return *n.bound + std::max(horizon_of(*n.lhs), horizon_of(*n.rhs));
      },
      f.node);
}

// State formulas read only the current state: nested P bodies draw their own paths.
inline std::size_t horizon_of(const pctl::State&) { return 0; }

/// Longest chain of path steps including nested probability bodies.
inline std::size_t total_horizon(const pctl::State& f);
inline std::size_t total_horizon(const pctl::PathF& f) {
  return std::visit(
      [](const auto& n) -> std::size_t {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, pctl::StateP>) return total_horizon(*n.body);
        else if constexpr (std::is_same_v<T, pctl::NotP>) return total_horizon(*n.body);
        else if constexpr (std::is_same_v<T, pctl::AndP>)
          return std::max(total_horizon(*n.lhs), total_horizon(*n.rhs));
        else if constexpr (std::is_same_v<T, pctl::NextP>) return 1 + total_horizon(*n.body);
        else return *n.bound + std::max(total_horizon(*n.lhs), total_horizon(*n.rhs));
      },
      f.node);
}
inline std::size_t total_horizon(const pctl::State& f) {
  return std::visit(
      [](const auto& n) -> std::size_t {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, pctl::Ap>) return 0;
        else if constexpr (std::is_same_v<T, pctl::NotS>) return total_horizon(*n.body);
        else if constexpr (std::is_same_v<T, pctl::AndS>)
          return std::max(total_horizon(*n.lhs), total_horizon(*n.rhs));
        else return total_horizon(*n.body);
      },
      f.node);
}

struct PctlGen {
  Rng& rng;

  pctl::Interval interval() {
    static const std::vector<pctl::Interval> choices{
        {0, Rational(1, 2), true, true},  {Rational(1, 2), 1, false, true}, {Rational(1, 4), Rational(3, 4), true, true},
        {0, 1, false, false},             {0, Rational(1, 3), true, false}, {Rational(2, 3), 1, true, true},
        {Rational(1, 5), 1, true, true},  {0, 1, true, true}};
    return choices[pick(rng, choices.size())];
  }

  pctl::StatePtr state(int depth) {
    if (depth <= 0 || pick(rng, 4) == 0) return pctl::ap(pick(rng, 2) ? "a" : "b");
    switch (pick(rng, 4)) {
      case 0: return pctl::not_s(state(depth - 1));
      case 1: return pctl::and_s(state(depth - 1), state(depth - 1));
      default: return pctl::prob_s(interval(), path(depth - 1));
    }
  }

  pctl::PathPtr path(int depth) {
    if (depth <= 0 || pick(rng, 4) == 0) return pctl::state_p(state(0));
    switch (pick(rng, 6)) {
      case 0: return pctl::not_p(path(depth - 1));
      case 1: return pctl::and_p(path(depth - 1), path(depth - 1));
      case 2: return pctl::next_p(path(depth - 1));
      case 3: return pctl::state_p(state(depth - 1));
      default: return pctl::until_p(path(depth - 1), path(depth - 1), pick(rng, 3));
    }
  }

  /// Random state formula whose path bodies need at most `max_horizon` steps.
  pctl::StatePtr bounded_state(int depth, std::size_t max_horizon) {
    for (;;) {
      auto f = state(depth);
      if (total_horizon(*f) <= max_horizon) return f;
    }
  }
};

/// Exact PCTL* semantics by recursion over enumerated bounded paths.
class PctlOracle {
 public:
  explicit PctlOracle(const Dtmc& d) : d_(d) {}

  bool sat(const pctl::State& f, std::size_t s) const {
    return std::visit(
        [&](const auto& n) -> bool {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, pctl::Ap>) return d_.labels(s).contains(*d_.proposition_index(n.name));
          else if constexpr (std::is_same_v<T, pctl::NotS>) return !sat(*n.body, s);
          else if constexpr (std::is_same_v<T, pctl::AndS>) return sat(*n.lhs, s) && sat(*n.rhs, s);
          else return n.range.contains(probability(*n.body, s));
        },
        f.node);
  }

  Rational probability(const pctl::PathF& f, std::size_t s) const {
    Rational total = 0;
    for (const auto& w : enumerate_paths_from(d_, s, horizon_of(f))) {
      std::vector<std::size_t> states;
      for (const auto& t : w.path.states) states.push_back(static_cast<std::size_t>(t[0]));
      if (holds(f, states, 0)) total += w.exact;
    }
    return total;
  }

  bool holds(const pctl::PathF& f, const std::vector<std::size_t>& path, std::size_t i) const {
    return std::visit(
        [&](const auto& n) -> bool {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, pctl::StateP>) return sat(*n.body, path.at(i));
          else if constexpr (std::is_same_v<T, pctl::NotP>) return !holds(*n.body, path, i);
          else if constexpr (std::is_same_v<T, pctl::AndP>) return holds(*n.lhs, path, i) && holds(*n.rhs, path, i);
          else if constexpr (std::is_same_v<T, pctl::NextP>) return holds(*n.body, path, i + 1);
          else {
            for (std::size_t k = 0; k <= *n.bound; ++k) {
              if (holds(*n.rhs, path, i + k)) return true;
              if (!holds(*n.lhs, path, i + k)) return false;
            }
            return false;
          }
        },
        f.node);
  }

 private:
  const Dtmc& d_;
};

// ---------------------------------------------------------------------------
// Non-nested HyperPCTL* comparisons for the oracle-agreement corpus

struct HyperGen {
  Rng& rng;

  FormulaPtr path(int depth, const std::vector<PathVar>& vars, std::size_t budget) {
    if (depth <= 0 || pick(rng, 3) == 0) return atom(pick(rng, 2) ? "a" : "b", vars[pick(rng, vars.size())]);
    switch (pick(rng, 5)) {
      case 0: return negate(path(depth - 1, vars, budget));
      case 1: return conj(path(depth - 1, vars, budget), path(depth - 1, vars, budget));
      case 2:
        if (budget > 0) return next(path(depth - 1, vars, budget - 1));
        return negate(path(depth - 1, vars, budget));
      default: {
        const std::size_t k = pick(rng, budget + 1);
        return until(path(depth - 1, vars, budget - k), path(depth - 1, vars, budget - k), k);
      }
    }
  }

  TermPtr term(const std::string& name) {
    std::vector<PathVar> vars{name + "a"};
    if (pick(rng, 3) == 0) vars.push_back(name + "b");
    return prob(vars, path(3, vars, 3));
  }

  /// `P(...) rel c` or a sum/difference of two probabilities against a constant.
  FormulaPtr formula() {
    const Relation rel = pick(rng, 2) ? Relation::Greater : Relation::Less;
    const Rational c(static_cast<long long>(1 + pick(rng, 9)), 10);
    if (pick(rng, 2)) return compare(term("p"), rel, constant(c));
    const bool sum = pick(rng, 2);
    auto lhs = func(sum ? FuncOp::Add : FuncOp::Sub, {term("p"), term("q")});
    const Rational offset = sum ? c * 2 : c - Rational(1, 2);
    return compare(lhs, rel, constant(offset));
  }
};

/// Signed distance of the exact term values from the comparison boundary, for the shapes HyperGen emits.
inline double boundary_distance(const Formula& f, const std::vector<double>& values) {
  const auto& c = std::get<node::Compare>(f.node);
  const double rhs = static_cast<double>(std::get<node::Const>(c.rhs->node).value);
  if (values.size() == 1) return std::abs(values[0] - rhs);
  const bool sum = std::get<node::Func>(c.lhs->node).op == FuncOp::Add;
  const double lhs = sum ? values[0] + values[1] : values[0] - values[1];
  return std::abs(lhs - rhs) / std::sqrt(2.0);
}

struct CorpusResult {
  int cases = 0;
  int agree = 0;
  int skipped = 0;
};

/// Random chains with at most 5 states and non-nested comparisons; only cases whose exact
/// probabilities lie outside the indifference band count. Each case runs one statistical check.
inline CorpusResult oracle_corpus(std::uint64_t seed, int models, int formulas_per_model, double alpha,
                                  double margin) {
  Rng rng(seed);
  HyperGen gen{rng};
  CorpusResult out;
  for (int m = 0; m < models; ++m) {
    auto dtmc = std::make_shared<const ExplicitSampler>(random_dtmc(rng, 5));
    for (int k = 0; k < formulas_per_model;) {
      const auto f = gen.formula();
      const auto exact = brute_force_check(dtmc->dtmc(), f);
      std::vector<double> probs;
      for (const auto& t : exact.terms)
        if (t.term.rfind("P[", 0) == 0) probs.push_back(t.value.approx);
      if (boundary_distance(*f, probs) <= margin) {
        ++out.skipped;
        continue;
      }
      CheckTask task;
      task.model = dtmc;
      task.formula = f;
      task.budget = {alpha, alpha};
      task.margin = margin;
      task.seed = derive_seed(seed, {static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(k)});
      const auto result = check(task);
      const bool holds = result.verdict.outcome == Outcome::AssertH1;
      const bool decided = result.verdict.outcome != Outcome::Undecided;
      out.agree += decided && holds == exact.holds;
      ++out.cases;
      ++k;
    }
  }
  return out;
}

}  // namespace testsupport
