#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hypersmc/dtmc.hpp"

namespace hypersmc {

using PathVar = std::string;

struct Formula;
struct Term;
using FormulaPtr = std::shared_ptr<const Formula>;
using TermPtr = std::shared_ptr<const Term>;

enum class Relation { Less, Greater, Equal, LessEq, GreaterEq };
enum class FuncOp { Add, Sub, Mul, Div, Pow, Exp, Ln };

const char* to_string(Relation rel);
const char* to_string(FuncOp op);

namespace node {

struct Atom {
  std::string ap;
  PathVar pv;
};
struct Assoc {
  FormulaPtr body;
  PathVar pv;
};
struct Not {
  FormulaPtr body;
};
struct And {
  FormulaPtr lhs, rhs;
};
struct Next {
  FormulaPtr body;
};
/// Bounded when `bound` is set, unbounded otherwise.
struct Until {
  FormulaPtr lhs, rhs;
  std::optional<std::size_t> bound;
};
struct Compare {
  TermPtr lhs;
  Relation rel;
  TermPtr rhs;
};

struct Const {
  Rational value;
};
struct Func {
  FuncOp op;
  std::vector<TermPtr> args;
};
struct Prob {
  std::vector<PathVar> vars;
  FormulaPtr body;
};

}  // namespace node

struct Formula {
  std::variant<node::Atom, node::Assoc, node::Not, node::And, node::Next, node::Until, node::Compare> node;
};

struct Term {
  std::variant<node::Const, node::Func, node::Prob> node;
};

// Structural equality.
bool operator==(const Formula& a, const Formula& b);
bool operator==(const Term& a, const Term& b);
bool same(const FormulaPtr& a, const FormulaPtr& b);

// Builders for the core AST and its derived forms.
FormulaPtr atom(std::string ap, PathVar pv);
FormulaPtr assoc(FormulaPtr body, PathVar pv);
FormulaPtr negate(FormulaPtr body);
FormulaPtr conj(FormulaPtr lhs, FormulaPtr rhs);
FormulaPtr disj(FormulaPtr lhs, FormulaPtr rhs);
FormulaPtr implies(FormulaPtr lhs, FormulaPtr rhs);
FormulaPtr next(FormulaPtr body, std::size_t times = 1);
FormulaPtr until(FormulaPtr lhs, FormulaPtr rhs, std::optional<std::size_t> bound = std::nullopt);
FormulaPtr eventually(FormulaPtr body, std::optional<std::size_t> bound = std::nullopt);
FormulaPtr globally(FormulaPtr body, std::optional<std::size_t> bound = std::nullopt);
FormulaPtr compare(TermPtr lhs, Relation rel, TermPtr rhs);
/// Canonical truth constant, `1 >= 1`.
FormulaPtr truth();
bool is_truth(const Formula& f);
/// |a - b| <= eps, as the conjunction of two one-sided comparisons.
FormulaPtr approx_equal(TermPtr a, TermPtr b, Rational eps);

TermPtr constant(Rational value);
TermPtr func(FuncOp op, std::vector<TermPtr> args);
TermPtr prob(std::vector<PathVar> vars, FormulaPtr body);

/// Fully parenthesised rendering that parse_formula maps back to an equal AST.
std::string to_string(const Formula& f);
std::string to_string(const Term& t);
inline std::string pretty_print(const FormulaPtr& f) { return to_string(*f); }

}  // namespace hypersmc
