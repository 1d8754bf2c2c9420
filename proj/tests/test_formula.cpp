#include "doctest.h"

#include <random>

#include "hypersmc/error.hpp"
#include "hypersmc/parser.hpp"
#include "hypersmc/semantics.hpp"

using namespace hypersmc;

namespace {

std::set<PathVar> vars(std::initializer_list<const char*> names) {
  std::set<PathVar> out;
  for (auto n : names) out.insert(n);
  return out;
}

// Random formula generator for the round-trip property.
struct Gen {
  Rng rng;
  int fresh = 0;

  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

  FormulaPtr path(int depth, const std::vector<PathVar>& scope) {
    if (depth == 0 || pick(4) == 0) {
      if (scope.empty()) return truth();
      return atom(pick(2) ? "a" : "b", scope[pick(scope.size())]);
    }
    switch (pick(9)) {
      case 0: return negate(path(depth - 1, scope));
      case 1: return conj(path(depth - 1, scope), path(depth - 1, scope));
      case 2: return next(path(depth - 1, scope));
      case 3: return until(path(depth - 1, scope), path(depth - 1, scope), pick(5));
      case 4: return until(path(depth - 1, scope), path(depth - 1, scope));
      case 5:
        if (!scope.empty()) return assoc(path(depth - 1, scope), scope[pick(scope.size())]);
        [[fallthrough]];
      case 6: return disj(path(depth - 1, scope), path(depth - 1, scope));
      default: return comparison(depth - 1, scope);
    }
  }

  TermPtr term(int depth, const std::vector<PathVar>& scope) {
    if (depth == 0 || pick(3) == 0) return constant(Rational(static_cast<long long>(pick(7)), 1 + pick(5)));
    switch (pick(4)) {
      case 0: {
        auto outer = scope;
        std::vector<PathVar> bound;
        for (std::size_t i = 0, k = 1 + pick(2); i < k; ++i) {
          bound.push_back("q" + std::to_string(++fresh));
          outer.push_back(bound.back());
        }
        return prob(bound, path(depth - 1, outer));
      }
      case 1: return func(FuncOp::Add, {term(depth - 1, scope), term(depth - 1, scope)});
      case 2: return func(FuncOp::Mul, {term(depth - 1, scope), term(depth - 1, scope)});
      default: return func(pick(2) ? FuncOp::Exp : FuncOp::Ln, {term(depth - 1, scope)});
    }
  }

  FormulaPtr comparison(int depth, const std::vector<PathVar>& scope) {
    static const Relation rels[] = {Relation::Less, Relation::Greater, Relation::Equal, Relation::LessEq,
                                    Relation::GreaterEq};
    return compare(term(depth, scope), rels[pick(5)], term(depth, scope));
  }
};

}  // namespace

TEST_CASE("joint probability formula parses to a comparison") {
  const auto f = parse_formula("P[p1,p2]( (ap1@p1 & ap1@p2) & F(ap2@p1 & ap2@p2) ) > 1/6");
  const auto* c = std::get_if<node::Compare>(&f->node);
  REQUIRE(c);
  CHECK(c->rel == Relation::Greater);
  const auto* p = std::get_if<node::Prob>(&c->lhs->node);
  REQUIRE(p);
  CHECK(p->vars == std::vector<PathVar>{"p1", "p2"});
  const auto* k = std::get_if<node::Const>(&c->rhs->node);
  REQUIRE(k);
  CHECK(k->value == Rational(1, 6));
}

TEST_CASE("negation wraps its operand") {
  const auto inner = parse_formula("ap@p1 U<=3 X b@p2");
  const auto f = parse_formula("!(ap@p1 U<=3 X b@p2)");
  const auto* n = std::get_if<node::Not>(&f->node);
  REQUIRE(n);
  CHECK(*n->body == *inner);
}

TEST_CASE("quantified variables must be fresh") {
  CHECK_THROWS_AS(parse_formula("P[p1]( P[p1](ap@p1) > 0.5 ) > 0.5"), ParseError);
  CHECK_THROWS_AS(parse_formula("P[p1,p1](ap@p1) > 0.5"), ParseError);
  CHECK_NOTHROW(parse_formula("P[p1]( P[p2](ap@p2) > 0.5 ) > 0.5"));
}

TEST_CASE("syntax errors carry locations") {
  try {
    parse_formula("ap@p1 &");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(e.column() >= 7);
  }
  CHECK_THROWS_AS(parse_formula("P[](ap@p) > 0"), ParseError);
  CHECK_THROWS_AS(parse_formula("ap@"), ParseError);
  CHECK_THROWS_AS(parse_formula("F<= ap@p"), ParseError);
  CHECK_THROWS_AS(parse_formula("P[p](ap@p) > 1 2"), ParseError);
}

TEST_CASE("closed formulas") {
  CHECK_THROWS_AS(parse_closed_formula("P[p1](ap1@p1 U ap2@p2) > 0"), ParseError);
  CHECK_NOTHROW(parse_closed_formula("P[p1,p2](ap1@p1 U ap2@p2) > 0"));
}

TEST_CASE("free variables") {
  CHECK(free_vars(*parse_formula("P[p1](ap1@p1 U ap2@p2) > 0")) == vars({"p2"}));
  CHECK(free_vars(*parse_formula("ap@p1")) == vars({"p1"}));
  CHECK(free_vars(*parse_formula("P[p1,p2](ap@p1 U ap@p2) > 0")).empty());
  CHECK(all_vars(*parse_formula("P[p1](ap1@p1 U ap2@p2) > 0")) == vars({"p1", "p2"}));
}

TEST_CASE("association replaces free variables only") {
  const auto a = parse_formula("(ap@p1)@p2");
  CHECK(*apply_association(std::get<node::Assoc>(a->node).body, "p2") == *parse_formula("ap@p2"));

  CHECK(*apply_association(parse_formula("P[p1](ap@p1 U ap@p2) > 0"), "p3") ==
        *parse_formula("P[p1](ap@p1 U ap@p3) > 0"));

  const auto closed = parse_formula("P[p1,p2](ap@p1 U ap@p2) > 0");
  CHECK(*apply_association(closed, "p3") == *closed);
}

TEST_CASE("derived operators desugar into the core") {
  CHECK(*parse_formula("F<=3 a@p") == *until(truth(), atom("a", "p"), 3));
  CHECK(*parse_formula("G<=3 a@p") == *negate(until(truth(), negate(atom("a", "p")), 3)));
  CHECK(*parse_formula("a@p | b@p") == *negate(conj(negate(atom("a", "p")), negate(atom("b", "p")))));
  CHECK(*parse_formula("a@p => b@p") == *negate(conj(atom("a", "p"), negate(atom("b", "p")))));
  CHECK(*parse_formula("X^(3) a@p") == *next(next(next(atom("a", "p")))));
  CHECK(is_truth(*parse_formula("true")));
  CHECK(*parse_formula("false") == *negate(truth()));
}

TEST_CASE("approximate equality expands to two one-sided comparisons") {
  const auto f = parse_formula("P[p](a@p) ~[0.1] P[q](b@q)");
  const auto a = prob({"p"}, atom("a", "p"));
  const auto b = prob({"q"}, atom("b", "q"));
  CHECK(*f == *approx_equal(a, b, Rational(1, 10)));
}

TEST_CASE("precedence") {
  CHECK(*parse_formula("a@p & b@p | c@p") == *disj(conj(atom("a", "p"), atom("b", "p")), atom("c", "p")));
  CHECK(*parse_formula("a@p => b@p => c@p") == *implies(atom("a", "p"), implies(atom("b", "p"), atom("c", "p"))));
  CHECK(*parse_formula("!a@p & b@p") == *conj(negate(atom("a", "p")), atom("b", "p")));
  CHECK(*parse_formula("a@p U b@p & c@p") == *conj(until(atom("a", "p"), atom("b", "p")), atom("c", "p")));
  const auto sum = parse_formula("P[p](a@p) + 2 * P[q](b@q) > 1");
  const auto& c = std::get<node::Compare>(sum->node);
  const auto& add = std::get<node::Func>(c.lhs->node);
  CHECK(add.op == FuncOp::Add);
  CHECK(std::get<node::Func>(add.args[1]->node).op == FuncOp::Mul);
}

TEST_CASE("elementary functions") {
  const auto f = parse_formula("pow(P[p](a@p), 2) + exp(ln(P[q](b@q))) - 1/2 / 3 >= 0");
  CHECK(*parse_formula(to_string(*f)) == *f);
  CHECK_THROWS_AS(parse_formula("sin(P[p](a@p)) > 0"), ParseError);
}

TEST_CASE("probability of a term") {
  const auto f = parse_formula("P[p](P[q](a@q) > 0.5) > 0.5");
  CHECK(*parse_formula(to_string(*f)) == *f);
}

TEST_CASE("printing round trips on random formulas") {
  Gen g{Rng(11)};
  for (int i = 0; i < 500; ++i) {
    const auto f = g.path(5, {"p", "q"});
    const auto text = to_string(*f);
    INFO(text);
    CHECK(*parse_formula(text) == *f);
  }
}

TEST_CASE("association is idempotent and leaves at most its own variable free") {
  Gen g{Rng(12)};
  for (int i = 0; i < 300; ++i) {
    const auto f = g.path(5, {"p", "q", "r"});
    const auto once = apply_association(f, "z");
    INFO(to_string(*f));
    CHECK(*apply_association(once, "z") == *once);
    for (const auto& v : free_vars(*once)) CHECK(v == "z");
  }
}

TEST_CASE("structural equality") {
  CHECK(*parse_formula("a@p") == *parse_formula("a@p"));
  CHECK_FALSE(*parse_formula("a@p") == *parse_formula("a@q"));
  CHECK_FALSE(*parse_formula("a@p U<=2 b@p") == *parse_formula("a@p U b@p"));
}
