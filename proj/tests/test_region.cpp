#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "hypersmc/error.hpp"
#include "hypersmc/region.hpp"
#include "hypersmc/rng.hpp"

using namespace hypersmc;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (auto x : xs) v(i++) = x;
  return v;
}

SampleCounts counts(std::int64_t n, std::initializer_list<std::int64_t> t) {
  CountVector v(static_cast<Eigen::Index>(t.size()));
  Eigen::Index i = 0;
  for (auto x : t) v(i++) = x;
  return SampleCounts(n, v);
}

BoundaryFn fn(const std::string& text, std::size_t dim) { return BoundaryFn(parse_expr(text), dim); }

TestRegion band_region() { return TestRegion(fn("x1 + x2 - 0.75", 2), fn("x1 + x2 - 0.85", 2)); }

// Points of the segment {x1 + x2 = s} inside the unit square, 1e-4 apart.
template <typename Score>
Eigen::VectorXd grid_on_diagonal(double s, Score score, bool maximise) {
  Eigen::VectorXd best;
  double best_value = maximise ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  for (double x1 = std::max(0.0, s - 1.0); x1 <= std::min(1.0, s) + 1e-12; x1 += 1e-4) {
    const Eigen::VectorXd x = vec({x1, s - x1});
    const double v = score(x);
    if (maximise ? v > best_value : v < best_value) {
      best_value = v;
      best = x;
    }
  }
  return best;
}

// Full sequential multi-dimensional test on independent Bernoulli(p_i) sources.
Verdict run_multi(const Eigen::VectorXd& p, const TestRegion& region, const ErrorBudget& budget, Rng& rng,
                  std::int64_t cap = 1'000'000) {
  SampleCounts c(p.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  while (c.draws < cap) {
    c.draws += 1;
    for (Eigen::Index i = 0; i < p.size(); ++i) c.successes(i) += u(rng) < p(i);
    if (auto v = sprt_multi_step(c, region, budget)) return *v;
  }
  return Verdict{Outcome::Undecided, c.draws, 0.0, std::nullopt, 0.0};
}

}  // namespace

TEST_CASE("expressions parse and differentiate") {
  const Expr e = parse_expr("pow(x1, 2) + exp(x2) / x1 - ln(x2)");
  CHECK(e.arity() == 2);
  const Eigen::VectorXd x = vec({0.3, 0.6});
  CHECK(e.eval(x) == doctest::Approx(0.09 + std::exp(0.6) / 0.3 - std::log(0.6)));
  CHECK(parse_expr(e.to_string()).eval(x) == doctest::Approx(e.eval(x)));
  CHECK_THROWS_AS(parse_expr("x1 +"), ParseError);
  CHECK_THROWS_AS(parse_expr("sin(x1)"), ParseError);
}

TEST_CASE("boundary gradients match central differences") {
  const std::vector<std::string> exprs{"x1 + x2 - 0.8",        "x1 * x2 - 0.2",
                                       "pow(x1, 2) + pow(x2, 2) - 0.5", "exp(x1) - 2 * x2",
                                       "ln(x1 + 0.1) - x2 / (x1 + 1)",  "x1 / (x2 + 0.5) - pow(x2, 3)"};
  Rng rng(7);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (const auto& text : exprs) {
    const BoundaryFn f = fn(text, 2);
    for (int i = 0; i < 100; ++i) {
      const Eigen::VectorXd x = vec({u(rng), u(rng)});
      const Eigen::VectorXd g = f.gradient(x);
      for (Eigen::Index k = 0; k < 2; ++k) {
        Eigen::VectorXd a = x, b = x;
        a(k) += 1e-6;
        b(k) -= 1e-6;
        const double fd = (f(a) - f(b)) / 2e-6;
        INFO(text);
        CHECK(std::abs(fd - g(k)) <= 1e-4 * std::max(1.0, std::abs(g(k))));
      }
    }
  }
}

TEST_CASE("linear boundaries keep their coefficients") {
  const BoundaryFn f = fn("2 * x1 - x2 + 0.5", 2);
  REQUIRE(f.is_linear());
  CHECK(f.coefficients().isApprox(vec({2.0, -1.0})));
  CHECK(f.offset() == doctest::Approx(0.5));
  CHECK_FALSE(fn("x1 * x2", 2).is_linear());
}

TEST_CASE("regions from a boundary and a margin") {
  const TestRegion r = TestRegion::from_boundary(parse_expr("x1 + x2 - 0.8"), 2, 0.05);
  // Unit-gradient rescaling: offsets are Euclidean distances.
  const Eigen::VectorXd on = vec({0.4, 0.4});
  const Eigen::VectorXd n = vec({1.0, 1.0}) / std::sqrt(2.0);
  CHECK(r.f0()(Eigen::VectorXd(on - 0.05 * n)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.f1()(Eigen::VectorXd(on + 0.05 * n)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.convex());
}

TEST_CASE("region probes reject inverted and touching bodies") {
  CHECK_THROWS_AS(TestRegion(fn("x1 - 0.6", 1), fn("x1 - 0.4", 1)), ConfigError);
  CHECK_THROWS_AS(TestRegion(fn("x1 - 0.5", 1), fn("x1 - 0.5", 1)), ConfigError);
  CHECK_NOTHROW(TestRegion(fn("x1 - 0.4", 1), fn("x1 - 0.6", 1)));
}

TEST_CASE("q by maximum likelihood, symmetric case") {
  const auto region = band_region();
  const auto q = project_q_max_likelihood(counts(20, {6, 6}), region);
  CHECK(q(0) == doctest::Approx(0.425).epsilon(1e-6));
  CHECK(q(1) == doctest::Approx(0.425).epsilon(1e-6));
  CHECK(std::abs(region.f1()(q)) < 1e-8);
}

TEST_CASE("q by maximum likelihood in one dimension") {
  const TestRegion region(fn("x1 - 0.5", 1), fn("x1 - 0.7", 1));
  const auto q = project_q_max_likelihood(counts(10, {3}), region);
  CHECK(q(0) == doctest::Approx(0.7));
}

TEST_CASE("q by maximum likelihood matches grid search") {
  const auto region = band_region();
  const auto c = counts(20, {4, 8});
  const auto q = project_q_max_likelihood(c, region);
  const auto grid = grid_on_diagonal(0.85, [&](const Eigen::VectorXd& x) { return log_likelihood(c, x); }, true);
  CHECK(std::abs(q(0) - grid(0)) < 1e-3);
  CHECK(std::abs(q(1) - grid(1)) < 1e-3);
  CHECK(lagrange_residual(log_likelihood_gradient(c, q), region.f1().gradient(q)) < 1e-6);
}

TEST_CASE("r by minimum divergence") {
  const auto region = band_region();
  const auto r = project_r_min_kl(vec({0.425, 0.425}), region);
  CHECK(r(0) == doctest::Approx(0.375).epsilon(1e-6));
  CHECK(r(1) == doctest::Approx(0.375).epsilon(1e-6));

  const Eigen::VectorXd q = vec({0.30, 0.55});
  const auto r2 = project_r_min_kl(q, region);
  const auto grid = grid_on_diagonal(0.75, [&](const Eigen::VectorXd& x) { return kl_divergence(x, q); }, false);
  CHECK(std::abs(r2(0) - grid(0)) < 1e-3);
  CHECK(std::abs(r2(1) - grid(1)) < 1e-3);
  CHECK(lagrange_residual(kl_gradient(r2, q), region.f0().gradient(r2)) < 1e-6);
}

TEST_CASE("r equals q when the margin collapses") {
  const TestRegion degenerate(fn("x1 + x2 - 0.8", 2), fn("x1 + x2 - 0.8", 2), false);
  const Eigen::VectorXd q = vec({0.3, 0.5});
  const auto r = project_r_min_kl(q, degenerate);
  CHECK((r - q).norm() < 1e-6);
  CHECK(kl_divergence(r, q) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("mirrored projections") {
  const TestRegion line(fn("x1 - 0.4", 1), fn("x1 - 0.6", 1));
  const auto c = counts(10, {9});
  const auto r = project_r_max_likelihood(c, line);
  CHECK(r(0) == doctest::Approx(0.4));
  CHECK(project_q_min_kl(r, line)(0) == doctest::Approx(0.6));

  const auto region = band_region();
  const auto c2 = counts(10, {6, 6});
  const auto r2 = project_r_max_likelihood(c2, region);
  CHECK(r2(0) == doctest::Approx(0.375).epsilon(1e-6));
  CHECK(r2(1) == doctest::Approx(0.375).epsilon(1e-6));
  const auto q2 = project_q_min_kl(r2, region);
  CHECK(q2(0) == doctest::Approx(0.425).epsilon(1e-6));
  CHECK(q2(1) == doctest::Approx(0.425).epsilon(1e-6));

  const auto c3 = counts(20, {18, 10});
  const auto r3 = project_r_max_likelihood(c3, region);
  const auto grid_r =
      grid_on_diagonal(0.75, [&](const Eigen::VectorXd& x) { return log_likelihood(c3, x); }, true);
  CHECK((r3 - grid_r).cwiseAbs().maxCoeff() < 1e-3);
  const auto q3 = project_q_min_kl(r3, region);
  const auto grid_q = grid_on_diagonal(0.85, [&](const Eigen::VectorXd& x) { return kl_divergence(x, r3); }, false);
  CHECK((q3 - grid_q).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("projections on a curved boundary beat a boundary grid search") {
  // D = {x1 * x2 <= 0.2}: the complement {x1 * x2 > 0.2} is convex, the region itself is not.
  const TestRegion region(fn("x1 * x2 - 0.18", 2), fn("x1 * x2 - 0.22", 2), false);
  const auto c = counts(40, {10, 12});
  const auto q = project_q_max_likelihood(c, region);
  CHECK(std::abs(region.f1()(q)) < 1e-6);
  double best = -std::numeric_limits<double>::infinity();
  for (double x1 = 0.22; x1 <= 1.0; x1 += 1e-3) best = std::max(best, log_likelihood(c, vec({x1, 0.22 / x1})));
  CHECK(log_likelihood(c, q) >= best - 1e-9);
}

TEST_CASE("projection onto the outside of a disc skips the symmetric saddle") {
  // The estimate lies on the disc's vertical axis; the point straight below is stationary but a minimum.
  const auto region = TestRegion::from_boundary(
      parse_expr("(x1 - 0.5) * (x1 - 0.5) + (x2 - 0.5) * (x2 - 0.5) - 0.09"), 2, 0.02, false);
  const auto c = counts(60, {30, 22});
  const auto q = project_q_max_likelihood(c, region);
  const double radius = std::sqrt(0.11);
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 100'000; ++k) {
    const double t = 2.0 * std::numbers::pi * k / 100'000;
    best = std::max(best, log_likelihood(c, vec({0.5 + radius * std::cos(t), 0.5 + radius * std::sin(t)})));
  }
  CHECK(std::abs(region.f1()(q)) < 1e-8);
  CHECK(std::abs(q(0) - 0.5) > 0.01);
  CHECK(log_likelihood(c, q) >= best - 1e-9);
}

TEST_CASE("shrinking the margin brings r and q together") {
  double previous = std::numeric_limits<double>::infinity();
  for (double margin : {0.1, 0.05, 0.02, 0.01, 0.005}) {
    const auto region = TestRegion::from_boundary(parse_expr("x1 + x2 - 0.8"), 2, margin);
    const auto q = project_q_max_likelihood(counts(20, {6, 6}), region);
    const auto r = project_r_min_kl(q, region);
    const double gap = (r - q).norm();
    CHECK(gap < previous);
    previous = gap;
  }
}

TEST_CASE("linear projections satisfy the Lagrange conditions") {
  Rng rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const double a1 = 0.3 + u(rng), a2 = 0.3 + u(rng), s = (0.3 + 0.4 * u(rng)) * (a1 + a2);
    const Eigen::VectorXd a = vec({a1, a2});
    const TestRegion region(BoundaryFn::linear(a, -(s - 0.05)), BoundaryFn::linear(a, -(s + 0.05)));
    const auto n = std::int64_t{50};
    // Draw counts with the estimate inside D0.
    SampleCounts c(2);
    do {
      c = counts(n, {static_cast<std::int64_t>(u(rng) * n), static_cast<std::int64_t>(u(rng) * n)});
    } while (!region.in_d0(mle(c)));
    const auto q = project_q_max_likelihood(c, region);
    const auto r = project_r_min_kl(q, region);
    CHECK(std::abs(region.f1()(q)) < 1e-8);
    CHECK(std::abs(region.f0()(r)) < 1e-8);
    CHECK(lagrange_residual(log_likelihood_gradient(c, q), a) < 1e-6);
    CHECK(lagrange_residual(kl_gradient(r, q), a) < 1e-6);
  }
}

TEST_CASE("multi-dimensional step") {
  const auto region = band_region();
  const ErrorBudget budget{0.01, 0.01};
  CHECK_FALSE(sprt_multi_step(counts(0, {0, 0}), region, budget));
  // Estimate (0.4, 0.4) sits in the gap: no verdict however many draws.
  CHECK_FALSE(sprt_multi_step(counts(100'000, {40'000, 40'000}), region, budget));
  const auto low = sprt_multi_step(counts(2000, {400, 400}), region, budget);
  REQUIRE(low);
  CHECK(low->outcome == Outcome::AssertH0);
  REQUIRE(low->pair);
  CHECK(std::abs(region.f0()(low->pair->r)) < 1e-8);
  CHECK(std::abs(region.f1()(low->pair->q)) < 1e-8);
  const auto high = sprt_multi_step(counts(2000, {1400, 1400}), region, budget);
  REQUIRE(high);
  CHECK(high->outcome == Outcome::AssertH1);
  CHECK_THROWS_AS(sprt_multi_step(counts(5, {1}), region, budget), ConfigError);
}

TEST_CASE("multi-dimensional test asserts membership for a point deep inside") {
  Rng rng(9);
  const auto region = band_region();
  int h0 = 0;
  for (int i = 0; i < 500; ++i) h0 += run_multi(vec({0.2, 0.2}), region, {0.01, 0.01}, rng).outcome == Outcome::AssertH0;
  CHECK(h0 >= 490);
}

TEST_CASE("one-dimensional halfspace: scalar and multi-dimensional steps agree outside the gap") {
  const Indifference1D spec{0.5, 0.1, true};
  const TestRegion region(fn("x1 - 0.4", 1), fn("x1 - 0.6", 1));
  const ErrorBudget budget{0.05, 0.05};
  Rng rng(10);
  std::bernoulli_distribution coin(0.5);
  int compared = 0;
  for (int run = 0; run < 200; ++run) {
    SampleCounts c(1);
    for (int n = 0; n < 400; ++n) {
      c.draws += 1;
      c.successes(0) += coin(rng);
      const double u = mle(c)(0);
      if (u > 0.4 - 1e-12 && u < 0.6 + 1e-12) continue;
      const auto s = sprt_scalar_step(c, spec, budget);
      const auto m = sprt_multi_step(c, region, budget);
      REQUIRE(s.has_value() == m.has_value());
      if (s) {
        CHECK(s->outcome == m->outcome);
        CHECK(s->llr == doctest::Approx(m->llr));
      }
      ++compared;
    }
  }
  CHECK(compared > 1000);
}

TEST_CASE("partitioning the budget") {
  const auto r = band_region();
  const std::vector<TestRegion> one{r}, two{r, r};
  const auto b1 = partition_region(one, {0.02, 0.04});
  REQUIRE(b1.size() == 1);
  CHECK(b1[0].alpha == 0.02);
  CHECK(b1[0].beta == 0.04);
  const auto b2 = partition_region(two, {0.02, 0.04});
  REQUIRE(b2.size() == 2);
  CHECK(b2[1].alpha == doctest::Approx(0.01));
  CHECK(b2[1].beta == doctest::Approx(0.02));
  CHECK_THROWS_AS(partition_region(std::vector<TestRegion>{}, {0.1, 0.1}), ConfigError);
}

TEST_CASE("band complement split into two halfspaces keeps the total false-positive rate") {
  // |x1 - x2| <= 0.2: violation pieces {x1 - x2 > 0.2} and {x2 - x1 > 0.2}, each a halfspace.
  const double delta = 0.05;
  const std::vector<TestRegion> pieces{TestRegion::from_boundary(parse_expr("x1 - x2 - 0.2"), 2, delta),
                                       TestRegion::from_boundary(parse_expr("x2 - x1 - 0.2"), 2, delta)};
  const auto budgets = partition_region(pieces, {0.02, 0.02});
  Rng rng(11);
  int false_positive = 0;
  const int runs = 300;
  for (int i = 0; i < runs; ++i) {
    // On the edge of D0 for the first piece: the hardest admissible point inside the band.
    const Eigen::VectorXd p = vec({0.6 - delta / std::sqrt(2.0), 0.4 + delta / std::sqrt(2.0)});
    bool outside = false;
    for (std::size_t k = 0; k < pieces.size(); ++k)
      outside |= run_multi(p, pieces[k], budgets[k], rng).outcome == Outcome::AssertH1;
    false_positive += outside;
  }
  CHECK(false_positive / double(runs) <= 0.02 + 3 * std::sqrt(0.02 * 0.98 / runs));
}
