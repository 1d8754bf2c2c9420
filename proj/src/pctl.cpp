#include "hypersmc/pctl.hpp"

#include <sstream>

namespace hypersmc::pctl {

bool Interval::contains(const Rational& x) const {
  const bool above = lo_closed ? x >= lo : x > lo;
  const bool below = hi_closed ? x <= hi : x < hi;
  return above && below;
}

bool Interval::contains(double x) const {
  const double l = static_cast<double>(lo), h = static_cast<double>(hi);
  return (lo_closed ? x >= l : x > l) && (hi_closed ? x <= h : x < h);
}

StatePtr ap(std::string name) { return std::make_shared<const State>(State{Ap{std::move(name)}}); }
StatePtr not_s(StatePtr body) { return std::make_shared<const State>(State{NotS{std::move(body)}}); }
StatePtr and_s(StatePtr lhs, StatePtr rhs) {
  return std::make_shared<const State>(State{AndS{std::move(lhs), std::move(rhs)}});
}
StatePtr prob_s(Interval range, PathPtr body) {
  return std::make_shared<const State>(State{ProbS{std::move(range), std::move(body)}});
}
PathPtr state_p(StatePtr body) { return std::make_shared<const PathF>(PathF{StateP{std::move(body)}}); }
PathPtr not_p(PathPtr body) { return std::make_shared<const PathF>(PathF{NotP{std::move(body)}}); }
PathPtr and_p(PathPtr lhs, PathPtr rhs) {
  return std::make_shared<const PathF>(PathF{AndP{std::move(lhs), std::move(rhs)}});
}
PathPtr next_p(PathPtr body) { return std::make_shared<const PathF>(PathF{NextP{std::move(body)}}); }
PathPtr until_p(PathPtr lhs, PathPtr rhs, std::optional<std::size_t> bound) {
  return std::make_shared<const PathF>(PathF{UntilP{std::move(lhs), std::move(rhs), bound}});
}

namespace {

void print(std::ostream& out, const State& f);

void print(std::ostream& out, const PathF& f) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, StateP>) {
          print(out, *n.body);
        } else if constexpr (std::is_same_v<T, NotP>) {
          out << "!(";
          print(out, *n.body);
          out << ')';
        } else if constexpr (std::is_same_v<T, AndP>) {
          out << '(';
          print(out, *n.lhs);
          out << " & ";
          print(out, *n.rhs);
          out << ')';
        } else if constexpr (std::is_same_v<T, NextP>) {
          out << "X ";
          print(out, *n.body);
        } else {
          out << '(';
          print(out, *n.lhs);
          out << " U";
          if (n.bound) out << "<=" << *n.bound;
          out << ' ';
          print(out, *n.rhs);
          out << ')';
        }
      },
      f.node);
}

void print(std::ostream& out, const State& f) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Ap>) {
          out << n.name;
        } else if constexpr (std::is_same_v<T, NotS>) {
          out << "!(";
          print(out, *n.body);
          out << ')';
        } else if constexpr (std::is_same_v<T, AndS>) {
          out << '(';
          print(out, *n.lhs);
          out << " & ";
          print(out, *n.rhs);
          out << ')';
        } else {
          out << "P" << (n.range.lo_closed ? '[' : '(') << hypersmc::to_string(n.range.lo) << ", "
              << hypersmc::to_string(n.range.hi) << (n.range.hi_closed ? ']' : ')') << '(';
          print(out, *n.body);
          out << ')';
        }
      },
      f.node);
}

}  // namespace

std::string to_string(const State& f) {
  std::ostringstream out;
  print(out, f);
  return out.str();
}

std::string to_string(const PathF& f) {
  std::ostringstream out;
  print(out, f);
  return out.str();
}

}  // namespace hypersmc::pctl

namespace hypersmc {
namespace {

class Translator {
 public:
  explicit Translator(PathVar root) : root_(std::move(root)) {}

  FormulaPtr state(const pctl::State& f, const PathVar& pv) {
    return std::visit(
        [&](const auto& n) -> FormulaPtr {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, pctl::Ap>) {
            return atom(n.name, pv);
          } else if constexpr (std::is_same_v<T, pctl::NotS>) {
            return negate(state(*n.body, pv));
          } else if constexpr (std::is_same_v<T, pctl::AndS>) {
            auto l = state(*n.lhs, pv);
            return conj(l, state(*n.rhs, pv));
          } else {
            PathVar fresh = root_ + "_" + std::to_string(++counter_);
            auto p = prob({fresh}, path(*n.body, fresh));
            return assoc(in_range(p, n.range), pv);
          }
        },
        f.node);
  }

  FormulaPtr path(const pctl::PathF& f, const PathVar& pv) {
    return std::visit(
        [&](const auto& n) -> FormulaPtr {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, pctl::StateP>) {
            return state(*n.body, pv);
          } else if constexpr (std::is_same_v<T, pctl::NotP>) {
            return negate(path(*n.body, pv));
          } else if constexpr (std::is_same_v<T, pctl::AndP>) {
            auto l = path(*n.lhs, pv);
            return conj(l, path(*n.rhs, pv));
          } else if constexpr (std::is_same_v<T, pctl::NextP>) {
            return next(path(*n.body, pv));
          } else {
            auto l = path(*n.lhs, pv);
            return until(l, path(*n.rhs, pv), n.bound);
          }
        },
        f.node);
  }

 private:
  PathVar root_;
  std::size_t counter_ = 0;

  static FormulaPtr in_range(const TermPtr& p, const pctl::Interval& j) {
    FormulaPtr lo, hi;
    if (!(j.lo == 0 && j.lo_closed))
      lo = compare(p, j.lo_closed ? Relation::GreaterEq : Relation::Greater, constant(j.lo));
    if (!(j.hi == 1 && j.hi_closed)) hi = compare(p, j.hi_closed ? Relation::LessEq : Relation::Less, constant(j.hi));
    if (lo && hi) return conj(lo, hi);
    if (lo) return lo;
    if (hi) return hi;
    return compare(p, Relation::GreaterEq, constant(0));
  }
};

}  // namespace

FormulaPtr translate_pctls(const pctl::State& f, const PathVar& pv) { return Translator(pv).state(f, pv); }

}  // namespace hypersmc
