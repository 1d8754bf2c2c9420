#pragma once

#include <Eigen/Core>

#include <cmath>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace hypersmc {

/// Elementary function of x1..xn built from constants, variables, + - * /, pow, exp and ln.
/// Immutable value type; copies share structure.
class Expr {
 public:
  enum class Kind { Const, Var, Add, Sub, Mul, Div, Pow, Exp, Ln };

  Expr() : Expr(constant(0.0)) {}
  static Expr constant(double value);
  /// Variable x_{index+1}; indices are zero-based.
  static Expr variable(std::size_t index);

  Kind kind() const noexcept { return node_->kind; }
  double value() const noexcept { return node_->value; }
  std::size_t index() const noexcept { return node_->index; }
  const Expr& arg(std::size_t i) const { return node_->args.at(i); }

  bool is_constant() const noexcept { return kind() == Kind::Const; }
  /// One more than the largest variable index used (0 for constants).
  std::size_t arity() const;

  template <typename Derived>
  typename Derived::Scalar eval(const Eigen::MatrixBase<Derived>& x) const;

  /// Symbolic partial derivative with light constant folding.
  Expr derivative(std::size_t index) const;
  std::string to_string() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a) { return constant(0.0) - a; }
  friend Expr pow(const Expr& a, const Expr& b);
  friend Expr exp(const Expr& a);
  friend Expr log(const Expr& a);

 private:
  struct Node {
    Kind kind;
    double value = 0.0;
    std::size_t index = 0;
    std::vector<Expr> args;
  };
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  static Expr make(Kind k, std::vector<Expr> args);

  std::shared_ptr<const Node> node_;
};

template <typename Derived>
typename Derived::Scalar Expr::eval(const Eigen::MatrixBase<Derived>& x) const {
  using Scalar = typename Derived::Scalar;
  using std::exp;
  using std::log;
  using std::pow;
  switch (kind()) {
    case Kind::Const: return Scalar(value());
    case Kind::Var: return x(static_cast<Eigen::Index>(index()));
    case Kind::Add: return arg(0).eval(x) + arg(1).eval(x);
    case Kind::Sub: return arg(0).eval(x) - arg(1).eval(x);
    case Kind::Mul: return arg(0).eval(x) * arg(1).eval(x);
    case Kind::Div: return arg(0).eval(x) / arg(1).eval(x);
    case Kind::Pow: return pow(arg(0).eval(x), arg(1).eval(x));
    case Kind::Exp: return exp(arg(0).eval(x));
    case Kind::Ln: return log(arg(0).eval(x));
  }
  return Scalar(0);
}

/// Parses `x1 + 2*x2 - 0.5`, `pow(x1, 2)`, `exp(x1) / x2`, ... Variables are x1..xn.
Expr parse_expr(std::string_view text);

}  // namespace hypersmc
