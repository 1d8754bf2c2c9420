#include "hypersmc/expr.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "hypersmc/error.hpp"

namespace hypersmc {

Expr Expr::constant(double value) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Const;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::variable(std::size_t index) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Var;
  n->index = index;
  return Expr(std::move(n));
}

Expr Expr::make(Kind k, std::vector<Expr> args) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->args = std::move(args);
  return Expr(std::move(n));
}

std::size_t Expr::arity() const {
  if (kind() == Kind::Var) return index() + 1;
  std::size_t n = 0;
  for (const auto& a : node_->args) n = std::max(n, a.arity());
  return n;
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() + b.value());
  if (a.is_constant() && a.value() == 0.0) return b;
  if (b.is_constant() && b.value() == 0.0) return a;
  return Expr::make(Expr::Kind::Add, {a, b});
}

Expr operator-(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() - b.value());
  if (b.is_constant() && b.value() == 0.0) return a;
  return Expr::make(Expr::Kind::Sub, {a, b});
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() * b.value());
  if ((a.is_constant() && a.value() == 0.0) || (b.is_constant() && b.value() == 0.0)) return Expr::constant(0.0);
  if (a.is_constant() && a.value() == 1.0) return b;
  if (b.is_constant() && b.value() == 1.0) return a;
  return Expr::make(Expr::Kind::Mul, {a, b});
}

Expr operator/(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant() && b.value() != 0.0) return Expr::constant(a.value() / b.value());
  if (a.is_constant() && a.value() == 0.0) return Expr::constant(0.0);
  if (b.is_constant() && b.value() == 1.0) return a;
  return Expr::make(Expr::Kind::Div, {a, b});
}

Expr pow(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(std::pow(a.value(), b.value()));
  if (b.is_constant() && b.value() == 1.0) return a;
  if (b.is_constant() && b.value() == 0.0) return Expr::constant(1.0);
  return Expr::make(Expr::Kind::Pow, {a, b});
}

Expr exp(const Expr& a) {
  if (a.is_constant()) return Expr::constant(std::exp(a.value()));
  return Expr::make(Expr::Kind::Exp, {a});
}

Expr log(const Expr& a) {
  if (a.is_constant()) return Expr::constant(std::log(a.value()));
  return Expr::make(Expr::Kind::Ln, {a});
}

Expr Expr::derivative(std::size_t i) const {
  switch (kind()) {
    case Kind::Const: return constant(0.0);
    case Kind::Var: return constant(index() == i ? 1.0 : 0.0);
    case Kind::Add: return arg(0).derivative(i) + arg(1).derivative(i);
    case Kind::Sub: return arg(0).derivative(i) - arg(1).derivative(i);
    case Kind::Mul: return arg(0).derivative(i) * arg(1) + arg(0) * arg(1).derivative(i);
    case Kind::Div: {
      const Expr &u = arg(0), &v = arg(1);
      return (u.derivative(i) * v - u * v.derivative(i)) / (v * v);
    }
    case Kind::Pow: {
      const Expr &u = arg(0), &v = arg(1);
      const Expr du = u.derivative(i), dv = v.derivative(i);
      if (v.is_constant()) return v * pow(u, constant(v.value() - 1.0)) * du;
      // d(u^v) = u^v (v' ln u + v u'/u)
      return pow(u, v) * (dv * log(u) + v * du / u);
    }
    case Kind::Exp: return exp(arg(0)) * arg(0).derivative(i);
    case Kind::Ln: return arg(0).derivative(i) / arg(0);
  }
  return constant(0.0);
}

std::string Expr::to_string() const {
  std::ostringstream out;
  switch (kind()) {
    case Kind::Const: out << value(); break;
    case Kind::Var: out << 'x' << index() + 1; break;
    case Kind::Add: out << '(' << arg(0).to_string() << " + " << arg(1).to_string() << ')'; break;
    case Kind::Sub: out << '(' << arg(0).to_string() << " - " << arg(1).to_string() << ')'; break;
    case Kind::Mul: out << '(' << arg(0).to_string() << " * " << arg(1).to_string() << ')'; break;
    case Kind::Div: out << '(' << arg(0).to_string() << " / " << arg(1).to_string() << ')'; break;
    case Kind::Pow: out << "pow(" << arg(0).to_string() << ", " << arg(1).to_string() << ')'; break;
    case Kind::Exp: out << "exp(" << arg(0).to_string() << ')'; break;
    case Kind::Ln: out << "ln(" << arg(0).to_string() << ')'; break;
  }
  return out.str();
}

namespace {

class ExprParser {
 public:
  explicit ExprParser(std::string_view s) : s_(s) {}

  Expr run() {
    Expr e = additive();
    skip();
    if (i_ != s_.size()) error("unexpected '" + std::string(1, s_[i_]) + "'");
    return e;
  }

 private:
  std::string_view s_;
  std::size_t i_ = 0;

  [[noreturn]] void error(const std::string& msg) const { throw ParseError(msg, 1, i_ + 1); }

  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool accept(char c) {
    skip();
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }

  Expr additive() {
    Expr lhs = multiplicative();
    for (;;) {
      if (accept('+'))
        lhs = lhs + multiplicative();
      else if (accept('-'))
        lhs = lhs - multiplicative();
      else
        return lhs;
    }
  }

  Expr multiplicative() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*'))
        lhs = lhs * unary();
      else if (accept('/'))
        lhs = lhs / unary();
      else
        return lhs;
    }
  }

  Expr unary() {
    if (accept('-')) return -unary();
    return primary();
  }

  Expr primary() {
    skip();
    if (i_ >= s_.size()) error("unexpected end of expression");
    if (accept('(')) {
      Expr e = additive();
      if (!accept(')')) error("expected ')'");
      return e;
    }
    const char c = s_[i_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = std::stod(std::string(s_.substr(i_)), &used);
      i_ += used;
      return Expr::constant(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t j = i_;
      while (j < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_')) ++j;
      std::string name(s_.substr(i_, j - i_));
      i_ = j;
      if (name.size() > 1 && name[0] == 'x' &&
          std::all_of(name.begin() + 1, name.end(), [](char d) { return std::isdigit(static_cast<unsigned char>(d)); })) {
        const auto k = std::stoul(name.substr(1));
        if (k == 0) error("variables are numbered from x1");
        return Expr::variable(k - 1);
      }
      if (!accept('(')) error("unknown identifier '" + name + "'");
      std::vector<Expr> args{additive()};
      while (accept(',')) args.push_back(additive());
      if (!accept(')')) error("expected ')'");
      auto need = [&](std::size_t n) {
        if (args.size() != n) error("'" + name + "' takes " + std::to_string(n) + " argument(s)");
      };
      if (name == "pow") {
        need(2);
        return pow(args[0], args[1]);
      }
      if (name == "exp") {
        need(1);
        return exp(args[0]);
      }
      if (name == "ln") {
        need(1);
        return log(args[0]);
      }
      error("unknown function '" + name + "'");
    }
    error("unexpected '" + std::string(1, c) + "'");
  }
};

}  // namespace

Expr parse_expr(std::string_view text) { return ExprParser(text).run(); }

}  // namespace hypersmc
