#include "doctest.h"

#include <cmath>
#include <map>

#include "hypersmc/dtmc.hpp"
#include "hypersmc/error.hpp"

using namespace hypersmc;

namespace {

const char* kFig3 = R"(dtmc
states 4
initial 0
props ap1 ap2
trans 0 1 1
trans 1 2 1/2
trans 1 3 0.5
trans 2 2 1
trans 3 3 1
label 0 ap1
label 3 ap2
)";

std::size_t state_of(const StateToken& t) { return static_cast<std::size_t>(t[0]); }

std::vector<std::size_t> indices(const Path& p) {
  std::vector<std::size_t> out;
  for (const auto& s : p.states) out.push_back(state_of(s));
  return out;
}

// Random chain with up to `max_states` states and rational row probabilities.
Dtmc random_dtmc(Rng& rng, std::size_t max_states) {
  std::uniform_int_distribution<std::size_t> ns(1, max_states);
  const std::size_t n = ns(rng);
  std::vector<std::vector<Transition>> rows(n);
  std::vector<LabelSet> labels(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::uniform_int_distribution<std::size_t> deg(1, n);
    std::vector<std::size_t> targets(n);
    for (std::size_t i = 0; i < n; ++i) targets[i] = i;
    std::shuffle(targets.begin(), targets.end(), rng);
    targets.resize(deg(rng));
    std::vector<int> w;
    int total = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      w.push_back(1 + static_cast<int>(rng() % 4));
      total += w.back();
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
      Rational r(w[i], total);
      rows[s].push_back({targets[i], r, static_cast<double>(r)});
    }
    labels[s] = LabelSet(rng() % 4);
  }
  return Dtmc(n, 0, {"a", "b"}, rows, labels);
}

}  // namespace

TEST_CASE("parse the two-branch chain") {
  const Dtmc d = parse_model(kFig3);
  CHECK(d.num_states() == 4);
  CHECK(d.initial() == 0);
  REQUIRE(d.successors(1).size() == 2);
  CHECK(d.successors(1)[0].exact == Rational(1, 2));
  CHECK(d.successors(1)[1].exact == Rational(1, 2));
  CHECK(d.labels(0).contains(*d.proposition_index("ap1")));
  CHECK(d.labels(3).contains(*d.proposition_index("ap2")));
  CHECK(d.labels(1).empty());
}

TEST_CASE("smallest legal chain") {
  const Dtmc d = parse_model("dtmc\nstates 1\ninitial 0\ntrans 0 0 1\n");
  CHECK(d.num_states() == 1);
  CHECK(d.labels(0).empty());
}

TEST_CASE("row sum violation is reported at the offending state") {
  std::string text = kFig3;
  text.replace(text.find("trans 1 2 1/2"), 13, "trans 1 2 0.4");
  try {
    parse_model(text);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("state 1") != std::string::npos);
  }
}

TEST_CASE("malformed models are rejected") {
  CHECK_THROWS_AS(parse_model("dtmc\nstates 2\ninitial 0\ntrans 0 5 1\ntrans 1 1 1\n"), ParseError);
  CHECK_THROWS_AS(parse_model("dtmc\nstates 1\nstates 1\ninitial 0\ntrans 0 0 1\n"), ParseError);
  CHECK_THROWS_AS(parse_model("dtmc\nstates 1\ninitial 0\ntrans 0 0 1\ntrans 0 0 0\n"), ParseError);
  CHECK_THROWS_AS(parse_model("dtmc\nstates 1\ninitial 0\ntrans 0 0 1\nlabel 0 nope\n"), ParseError);
  CHECK_THROWS_AS(parse_model("dtmc\nstates 1\ninitial 0\ntrans 0 0 banana\n"), ParseError);
  CHECK_THROWS_AS(parse_model("markov\n"), ParseError);
}

TEST_CASE("probability literals") {
  CHECK(parse_probability("1/4") == Rational(1, 4));
  CHECK(parse_probability("0.25") == Rational(1, 4));
  CHECK(parse_probability("1e-3") == Rational(1, 1000));
  CHECK_THROWS(parse_probability("1/0"));
}

TEST_CASE("model text round trip") {
  const Dtmc d = parse_model(kFig3);
  const Dtmc again = parse_model(d.to_text());
  CHECK(again.to_text() == d.to_text());
}

TEST_CASE("sampling the two-branch chain") {
  const auto sampler = ExplicitSampler(parse_model(kFig3));
  Rng rng(1);

  const Path one = sample_path(sampler, rng, 1);
  CHECK(indices(one) == std::vector<std::size_t>{0, 1});

  const Path zero = sample_path(sampler, rng, 0);
  CHECK(zero.size() == 1);
  CHECK(state_of(zero.states[0]) == 0);

  int ends_in_3 = 0;
  const int n = 100'000;
  for (int i = 0; i < n; ++i) ends_in_3 += state_of(sample_path(sampler, rng, 2).states[2]) == 3;
  CHECK(std::abs(ends_in_3 / double(n) - 0.5) < 0.01);
}

TEST_CASE("path labels are cached per position") {
  const auto sampler = ExplicitSampler(parse_model(kFig3));
  Rng rng(2);
  const Path p = sample_path(sampler, rng, 5);
  REQUIRE(p.labels.size() == p.states.size());
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p.labels[i] == sampler.labels(p.states[i]));
}

TEST_CASE("path tuples") {
  const auto sampler = ExplicitSampler(parse_model(kFig3));
  Rng rng(3);

  const auto three = sample_path_tuple(sampler, 3, rng, 0);
  REQUIRE(three.size() == 3);
  for (const auto& p : three) CHECK(indices(p) == std::vector<std::size_t>{0});

  int both = 0;
  const int n = 100'000;
  for (int i = 0; i < n; ++i) {
    const auto t = sample_path_tuple(sampler, 2, rng, 2);
    both += state_of(t[0].states[2]) == 3 && state_of(t[1].states[2]) == 3;
  }
  CHECK(std::abs(both / double(n) - 0.25) < 0.01);
}

TEST_CASE("arity one tuple matches a single path in distribution") {
  const auto sampler = ExplicitSampler(parse_model(kFig3));
  Rng rng(4);
  int hits = 0;
  const int n = 50'000;
  for (int i = 0; i < n; ++i) hits += state_of(sample_path_tuple(sampler, 1, rng, 2)[0].states[2]) == 3;
  CHECK(std::abs(hits / double(n) - 0.5) < 0.015);
}

TEST_CASE("sampling is reproducible") {
  const auto sampler = ExplicitSampler(parse_model(kFig3));
  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) CHECK(indices(sample_path(sampler, a, 6)) == indices(sample_path(sampler, b, 6)));
}

TEST_CASE("enumeration of the two-branch chain") {
  const Dtmc d = parse_model(kFig3);
  const auto paths = enumerate_paths(d, 2);
  REQUIRE(paths.size() == 2);
  std::map<std::vector<std::size_t>, Rational> got;
  for (const auto& w : paths) got[indices(w.path)] = w.exact;
  CHECK(got[{0, 1, 2}] == Rational(1, 2));
  CHECK(got[{0, 1, 3}] == Rational(1, 2));

  const auto none = enumerate_paths(d, 0);
  REQUIRE(none.size() == 1);
  CHECK(none[0].exact == 1);
}

TEST_CASE("enumeration of the three-way branch") {
  const Dtmc d = parse_model(
      "dtmc\nstates 4\ninitial 0\ntrans 0 1 1/3\ntrans 0 2 1/3\ntrans 0 3 1/3\n"
      "trans 1 1 1\ntrans 2 2 1\ntrans 3 3 1\n");
  const auto paths = enumerate_paths(d, 1);
  REQUIRE(paths.size() == 3);
  for (const auto& w : paths) CHECK(w.exact == Rational(1, 3));
}

TEST_CASE("enumeration cap") {
  const Dtmc d = parse_model("dtmc\nstates 2\ninitial 0\ntrans 0 0 1/2\ntrans 0 1 1/2\ntrans 1 0 1/2\ntrans 1 1 1/2\n");
  CHECK(enumerate_paths(d, 4).size() == 16);
  CHECK_THROWS_AS(enumerate_paths(d, 10, 100), Error);
}

TEST_CASE("enumerated probabilities sum to one on random chains") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const Dtmc d = random_dtmc(rng, 5);
    for (std::size_t h = 0; h <= 4; ++h) {
      Rational total = 0;
      double approx = 0;
      for (const auto& w : enumerate_paths(d, h)) {
        total += w.exact;
        approx += w.probability;
      }
      CHECK(total == 1);
      CHECK(std::abs(approx - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("sampled path distribution matches enumeration on random chains") {
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const Dtmc d = random_dtmc(rng, 4);
    const std::size_t h = 3;
    std::map<std::vector<std::size_t>, double> exact;
    for (const auto& w : enumerate_paths(d, h)) exact[indices(w.path)] += w.probability;

    const ExplicitSampler sampler(d);
    std::map<std::vector<std::size_t>, double> seen;
    const int n = 100'000;
    Rng draw(100 + trial);
    for (int i = 0; i < n; ++i) seen[indices(sample_path(sampler, draw, h))] += 1.0 / n;

    double tv = 0;
    for (const auto& [k, p] : exact) tv += std::abs(p - seen[k]);
    for (const auto& [k, p] : seen)
      if (!exact.count(k)) tv += p;
    CHECK(tv / 2 < 0.02);
  }
}

TEST_CASE("exact rendering") {
  CHECK(to_string(Rational(1, 4)) == "1/4");
  CHECK(to_string(Rational(3)) == "3");
  CHECK(to_string(Rational(0)) == "0");
}
