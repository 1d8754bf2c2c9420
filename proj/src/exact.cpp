#include "exact.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <sstream>

#include "hypersmc/error.hpp"

namespace hypersmc {

std::string ExactValue::to_string() const {
  if (exact) return hypersmc::to_string(*exact);
  std::ostringstream out;
  out.precision(17);
  out << approx;
  return out.str();
}

namespace detail {

namespace {

std::optional<Rational> exact_pow(const Rational& base, const Rational& e) {
  using boost::multiprecision::cpp_int;
  if (boost::multiprecision::denominator(e) != 1) return std::nullopt;
  const cpp_int n = boost::multiprecision::numerator(e);
  if (n > 256 || n < -256) return std::nullopt;
  const long k = n.convert_to<long>();
  if (k < 0 && base == 0) return std::nullopt;
  Rational r = 1;
  for (long i = 0; i < std::labs(k); ++i) r *= base;
  return k < 0 ? Rational(1) / r : r;
}

}  // namespace

ExactValue apply(FuncOp op, const std::vector<ExactValue>& a) {
  const bool all_exact = std::all_of(a.begin(), a.end(), [](const ExactValue& v) { return v.exact.has_value(); });
  switch (op) {
    case FuncOp::Add:
      return all_exact ? exact(*a[0].exact + *a[1].exact) : inexact(a[0].approx + a[1].approx);
    case FuncOp::Sub:
      return all_exact ? exact(*a[0].exact - *a[1].exact) : inexact(a[0].approx - a[1].approx);
    case FuncOp::Mul:
      return all_exact ? exact(*a[0].exact * *a[1].exact) : inexact(a[0].approx * a[1].approx);
    case FuncOp::Div:
      if (all_exact && *a[1].exact != 0) return exact(*a[0].exact / *a[1].exact);
      return inexact(a[0].approx / a[1].approx);
    case FuncOp::Pow:
      if (all_exact)
        if (auto r = exact_pow(*a[0].exact, *a[1].exact)) return exact(*r);
      return inexact(std::pow(a[0].approx, a[1].approx));
    case FuncOp::Exp:
      if (all_exact && *a[0].exact == 0) return exact(1);
      return inexact(std::exp(a[0].approx));
    case FuncOp::Ln:
      if (all_exact && *a[0].exact == 1) return exact(0);
      return inexact(std::log(a[0].approx));
  }
  return inexact(std::nan(""));
}

bool compare_values(const ExactValue& a, Relation rel, const ExactValue& b) {
  if (a.exact && b.exact) {
    const auto &x = *a.exact, &y = *b.exact;
    switch (rel) {
      case Relation::Less: return x < y;
      case Relation::Greater: return x > y;
      case Relation::Equal: return x == y;
      case Relation::LessEq: return x <= y;
      case Relation::GreaterEq: return x >= y;
    }
  }
  const double x = a.approx, y = b.approx;
  switch (rel) {
    case Relation::Less: return x < y;
    case Relation::Greater: return x > y;
    case Relation::Equal: return x == y;
    case Relation::LessEq: return x <= y;
    case Relation::GreaterEq: return x >= y;
  }
  return false;
}

bool has_prob(const Term& t) {
  if (std::holds_alternative<node::Prob>(t.node)) return true;
  if (auto* f = std::get_if<node::Func>(&t.node))
    return std::any_of(f->args.begin(), f->args.end(), [](const TermPtr& a) { return has_prob(*a); });
  return false;
}

ExactValue eval_constant(const Term& t) {
  if (auto* c = std::get_if<node::Const>(&t.node)) return exact(c->value);
  if (auto* f = std::get_if<node::Func>(&t.node)) {
    std::vector<ExactValue> args;
    for (const auto& a : f->args) args.push_back(eval_constant(*a));
    return detail::apply(f->op, args);
  }
  throw EvalError("probability term where a constant was expected");
}

}  // namespace detail
}  // namespace hypersmc
