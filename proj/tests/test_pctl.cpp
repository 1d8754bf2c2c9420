#include "doctest.h"

#include "hypersmc/checker.hpp"
#include "hypersmc/parser.hpp"
#include "hypersmc/pctl.hpp"
#include "support.hpp"

using namespace hypersmc;

namespace {

const char* kFig3 =
    "dtmc\nstates 4\ninitial 1\nprops ap\ntrans 0 1 1\ntrans 1 2 1/2\ntrans 1 3 1/2\n"
    "trans 2 2 1\ntrans 3 3 1\nlabel 1 ap\nlabel 3 ap\n";

}  // namespace

TEST_CASE("atoms translate to atoms on the given variable") {
  CHECK(*translate_pctls(*pctl::ap("ap"), "p") == *atom("ap", "p"));
}

TEST_CASE("negation translates to negation") {
  CHECK(*translate_pctls(*pctl::not_s(pctl::ap("ap")), "p") == *negate(atom("ap", "p")));
}

TEST_CASE("probability operator translates to an associated comparison on a fresh variable") {
  const auto f = pctl::prob_s({0, Rational(1, 2), true, true}, pctl::next_p(pctl::state_p(pctl::ap("ap"))));
  const auto t = translate_pctls(*f, "p");
  CHECK(*t == *parse_formula("(P[p_1](X ap@p_1) <= 1/2)@p"));

  // From s1 the value is exactly 1/2; hand and generated translations agree with the exact PCTL* value.
  const Dtmc d = parse_model(kFig3);
  const auto hand = parse_formula("(P[q](X ap@q) <= 0.5)@p");
  const bool expected = testsupport::PctlOracle(d).sat(*f, d.initial());
  CHECK(expected);
  CHECK(brute_force_check(d, t).holds == expected);
  CHECK(brute_force_check(d, hand).holds == expected);
}

TEST_CASE("fresh variables are numbered in creation order") {
  const auto inner = pctl::prob_s({Rational(1, 2), 1, false, true}, pctl::state_p(pctl::ap("a")));
  const auto f = pctl::and_s(inner, pctl::prob_s({0, 1, false, false}, pctl::state_p(inner)));
  const auto t = translate_pctls(*f, "v");
  const auto names = all_vars(*t);
  CHECK(names == std::set<PathVar>{"v", "v_1", "v_2", "v_3"});
  CHECK(free_vars(*t) == std::set<PathVar>{"v"});
}

TEST_CASE("interval membership") {
  const pctl::Interval j{Rational(1, 4), Rational(3, 4), false, true};
  CHECK_FALSE(j.contains(Rational(1, 4)));
  CHECK(j.contains(Rational(3, 4)));
  CHECK(j.contains(0.5));
  CHECK_FALSE(j.contains(0.8));
}

TEST_CASE("printing") {
  const auto f = pctl::prob_s({0, Rational(1, 2), true, false},
                              pctl::until_p(pctl::state_p(pctl::ap("a")), pctl::state_p(pctl::ap("b")), 2));
  CHECK(pctl::to_string(*f) == "P[0, 1/2)((a U<=2 b))");
}

TEST_CASE("translation agrees with exact PCTL* semantics on small random chains") {
  Rng rng(2024);
  testsupport::PctlGen gen{rng};
  int checked = 0;
  for (int model = 0; model < 20; ++model) {
    const Dtmc d = testsupport::random_dtmc(rng, 6);
    const testsupport::PctlOracle oracle(d);
    for (int k = 0; k < 5; ++k) {
      const auto f = gen.bounded_state(4, 4);
      INFO(pctl::to_string(*f));
      const auto t = translate_pctls(*f, "p");
      CHECK(brute_force_check(d, t).holds == oracle.sat(*f, d.initial()));
      ++checked;
    }
  }
  CHECK(checked == 100);
}
