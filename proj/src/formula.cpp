#include "hypersmc/formula.hpp"

#include <sstream>

namespace hypersmc {

const char* to_string(Relation rel) {
  switch (rel) {
    case Relation::Less: return "<";
    case Relation::Greater: return ">";
    case Relation::Equal: return "=";
    case Relation::LessEq: return "<=";
    case Relation::GreaterEq: return ">=";
  }
  return "?";
}

const char* to_string(FuncOp op) {
  switch (op) {
    case FuncOp::Add: return "+";
    case FuncOp::Sub: return "-";
    case FuncOp::Mul: return "*";
    case FuncOp::Div: return "/";
    case FuncOp::Pow: return "pow";
    case FuncOp::Exp: return "exp";
    case FuncOp::Ln: return "ln";
  }
  return "?";
}

namespace {

bool eq(const FormulaPtr& a, const FormulaPtr& b) { return a == b || (a && b && *a == *b); }
bool eq(const TermPtr& a, const TermPtr& b) { return a == b || (a && b && *a == *b); }

struct FormulaEq {
  const Formula& other;
  bool operator()(const node::Atom& a) const {
    auto& b = std::get<node::Atom>(other.node);
    return a.ap == b.ap && a.pv == b.pv;
  }
  bool operator()(const node::Assoc& a) const {
    auto& b = std::get<node::Assoc>(other.node);
    return a.pv == b.pv && eq(a.body, b.body);
  }
  bool operator()(const node::Not& a) const { return eq(a.body, std::get<node::Not>(other.node).body); }
  bool operator()(const node::And& a) const {
    auto& b = std::get<node::And>(other.node);
    return eq(a.lhs, b.lhs) && eq(a.rhs, b.rhs);
  }
  bool operator()(const node::Next& a) const { return eq(a.body, std::get<node::Next>(other.node).body); }
  bool operator()(const node::Until& a) const {
    auto& b = std::get<node::Until>(other.node);
    return a.bound == b.bound && eq(a.lhs, b.lhs) && eq(a.rhs, b.rhs);
  }
  bool operator()(const node::Compare& a) const {
    auto& b = std::get<node::Compare>(other.node);
    return a.rel == b.rel && eq(a.lhs, b.lhs) && eq(a.rhs, b.rhs);
  }
};

struct TermEq {
  const Term& other;
  bool operator()(const node::Const& a) const { return a.value == std::get<node::Const>(other.node).value; }
  bool operator()(const node::Func& a) const {
    auto& b = std::get<node::Func>(other.node);
    if (a.op != b.op || a.args.size() != b.args.size()) return false;
    for (std::size_t i = 0; i < a.args.size(); ++i)
      if (!eq(a.args[i], b.args[i])) return false;
    return true;
  }
  bool operator()(const node::Prob& a) const {
    auto& b = std::get<node::Prob>(other.node);
    return a.vars == b.vars && eq(a.body, b.body);
  }
};

}  // namespace

bool operator==(const Formula& a, const Formula& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(FormulaEq{b}, a.node);
}

bool operator==(const Term& a, const Term& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(TermEq{b}, a.node);
}

bool same(const FormulaPtr& a, const FormulaPtr& b) { return eq(a, b); }

// ---------------------------------------------------------------------------

FormulaPtr atom(std::string ap, PathVar pv) {
  return std::make_shared<const Formula>(Formula{node::Atom{std::move(ap), std::move(pv)}});
}
FormulaPtr assoc(FormulaPtr body, PathVar pv) {
  return std::make_shared<const Formula>(Formula{node::Assoc{std::move(body), std::move(pv)}});
}
FormulaPtr negate(FormulaPtr body) { return std::make_shared<const Formula>(Formula{node::Not{std::move(body)}}); }
FormulaPtr conj(FormulaPtr lhs, FormulaPtr rhs) {
  return std::make_shared<const Formula>(Formula{node::And{std::move(lhs), std::move(rhs)}});
}
FormulaPtr disj(FormulaPtr lhs, FormulaPtr rhs) { return negate(conj(negate(std::move(lhs)), negate(std::move(rhs)))); }
FormulaPtr implies(FormulaPtr lhs, FormulaPtr rhs) { return negate(conj(std::move(lhs), negate(std::move(rhs)))); }
FormulaPtr next(FormulaPtr body, std::size_t times) {
  for (std::size_t i = 0; i < times; ++i) body = std::make_shared<const Formula>(Formula{node::Next{std::move(body)}});
  return body;
}
FormulaPtr until(FormulaPtr lhs, FormulaPtr rhs, std::optional<std::size_t> bound) {
  return std::make_shared<const Formula>(Formula{node::Until{std::move(lhs), std::move(rhs), bound}});
}
FormulaPtr eventually(FormulaPtr body, std::optional<std::size_t> bound) { return until(truth(), std::move(body), bound); }
FormulaPtr globally(FormulaPtr body, std::optional<std::size_t> bound) {
  return negate(eventually(negate(std::move(body)), bound));
}
FormulaPtr compare(TermPtr lhs, Relation rel, TermPtr rhs) {
  return std::make_shared<const Formula>(Formula{node::Compare{std::move(lhs), rel, std::move(rhs)}});
}

FormulaPtr truth() {
  static const FormulaPtr t = compare(constant(1), Relation::GreaterEq, constant(1));
  return t;
}

bool is_truth(const Formula& f) { return f == *truth(); }

FormulaPtr approx_equal(TermPtr a, TermPtr b, Rational eps) {
  auto e = constant(std::move(eps));
  return conj(compare(func(FuncOp::Sub, {a, b}), Relation::LessEq, e),
              compare(func(FuncOp::Sub, {b, a}), Relation::LessEq, e));
}

TermPtr constant(Rational value) { return std::make_shared<const Term>(Term{node::Const{std::move(value)}}); }
TermPtr func(FuncOp op, std::vector<TermPtr> args) {
  return std::make_shared<const Term>(Term{node::Func{op, std::move(args)}});
}
TermPtr prob(std::vector<PathVar> vars, FormulaPtr body) {
  return std::make_shared<const Term>(Term{node::Prob{std::move(vars), std::move(body)}});
}

// ---------------------------------------------------------------------------

namespace {

void print(std::ostream& out, const Formula& f);
void print(std::ostream& out, const Term& t);

void print_const(std::ostream& out, const Rational& v) {
  if (v < 0)
    out << "(0 - " << to_string(Rational(-v)) << ")";
  else
    out << to_string(v);
}

void print(std::ostream& out, const Term& t) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Const>) {
          print_const(out, n.value);
        } else if constexpr (std::is_same_v<T, node::Func>) {
          if (n.op == FuncOp::Pow || n.op == FuncOp::Exp || n.op == FuncOp::Ln) {
            out << to_string(n.op) << '(';
            for (std::size_t i = 0; i < n.args.size(); ++i) {
              if (i) out << ", ";
              print(out, *n.args[i]);
            }
            out << ')';
          } else {
            out << '(';
            print(out, *n.args[0]);
            out << ' ' << to_string(n.op) << ' ';
            print(out, *n.args[1]);
            out << ')';
          }
        } else {
          out << "P[";
          for (std::size_t i = 0; i < n.vars.size(); ++i) out << (i ? "," : "") << n.vars[i];
          out << "](";
          print(out, *n.body);
          out << ')';
        }
      },
      t.node);
}

void print(std::ostream& out, const Formula& f) {
  if (is_truth(f)) {
    out << "true";
    return;
  }
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Atom>) {
          out << n.ap << '@' << n.pv;
        } else if constexpr (std::is_same_v<T, node::Assoc>) {
          out << '(';
          print(out, *n.body);
          out << ")@" << n.pv;
        } else if constexpr (std::is_same_v<T, node::Not>) {
          out << "!(";
          print(out, *n.body);
          out << ')';
        } else if constexpr (std::is_same_v<T, node::And>) {
          out << '(';
          print(out, *n.lhs);
          out << ") & (";
          print(out, *n.rhs);
          out << ')';
        } else if constexpr (std::is_same_v<T, node::Next>) {
          out << "X (";
          print(out, *n.body);
          out << ')';
        } else if constexpr (std::is_same_v<T, node::Until>) {
          out << '(';
          print(out, *n.lhs);
          out << ") U";
          if (n.bound) out << "<=" << *n.bound;
          out << " (";
          print(out, *n.rhs);
          out << ')';
        } else {
          print(out, *n.lhs);
          out << ' ' << to_string(n.rel) << ' ';
          print(out, *n.rhs);
        }
      },
      f.node);
}

}  // namespace

std::string to_string(const Formula& f) {
  std::ostringstream out;
  print(out, f);
  return out.str();
}

std::string to_string(const Term& t) {
  std::ostringstream out;
  print(out, t);
  return out.str();
}

}  // namespace hypersmc
