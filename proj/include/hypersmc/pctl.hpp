#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "hypersmc/dtmc.hpp"
#include "hypersmc/formula.hpp"

namespace hypersmc::pctl {

struct State;
struct PathF;
using StatePtr = std::shared_ptr<const State>;
using PathPtr = std::shared_ptr<const PathF>;

/// Probability interval J with independently open or closed ends.
struct Interval {
  Rational lo = 0, hi = 1;
  bool lo_closed = true, hi_closed = true;

  bool contains(const Rational& x) const;
  bool contains(double x) const;
};

struct Ap {
  std::string name;
};
struct NotS {
  StatePtr body;
};
struct AndS {
  StatePtr lhs, rhs;
};
struct ProbS {
  Interval range;
  PathPtr body;
};

struct StateP {
  StatePtr body;
};
struct NotP {
  PathPtr body;
};
struct AndP {
  PathPtr lhs, rhs;
};
struct NextP {
  PathPtr body;
};
struct UntilP {
  PathPtr lhs, rhs;
  std::optional<std::size_t> bound;
};

struct State {
  std::variant<Ap, NotS, AndS, ProbS> node;
};
struct PathF {
  std::variant<StateP, NotP, AndP, NextP, UntilP> node;
};

StatePtr ap(std::string name);
StatePtr not_s(StatePtr body);
StatePtr and_s(StatePtr lhs, StatePtr rhs);
StatePtr prob_s(Interval range, PathPtr body);
PathPtr state_p(StatePtr body);
PathPtr not_p(PathPtr body);
PathPtr and_p(PathPtr lhs, PathPtr rhs);
PathPtr next_p(PathPtr body);
PathPtr until_p(PathPtr lhs, PathPtr rhs, std::optional<std::size_t> bound);

std::string to_string(const State& f);
std::string to_string(const PathF& f);

}  // namespace hypersmc::pctl

namespace hypersmc {

/// Maps a PCTL* state formula to an equivalent HyperPCTL* formula whose only free variable is pv.
/// Fresh variables are named `pv_1`, `pv_2`, ... in order of creation.
FormulaPtr translate_pctls(const pctl::State& f, const PathVar& pv);

}  // namespace hypersmc
