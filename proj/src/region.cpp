#include "hypersmc/region.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "hypersmc/error.hpp"
#include "hypersmc/rng.hpp"

namespace hypersmc {

BoundaryFn::BoundaryFn(Expr expr, std::size_t dim) : expr_(std::move(expr)), dim_(dim) {
  if (dim_ == 0) throw ConfigError("boundary function needs at least one variable");
  if (expr_.arity() > dim_) throw ConfigError("boundary function uses x" + std::to_string(expr_.arity()) +
                                              " but the region has dimension " + std::to_string(dim_));
  gradient_.reserve(dim_);
  bool constant_gradient = true;
  for (std::size_t i = 0; i < dim_; ++i) {
    gradient_.push_back(expr_.derivative(i));
    constant_gradient &= gradient_.back().is_constant();
  }
  if (constant_gradient) {
    Eigen::VectorXd a(dim_);
    for (std::size_t i = 0; i < dim_; ++i) a(static_cast<Eigen::Index>(i)) = gradient_[i].value();
    linear_.emplace(a, expr_.eval(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_))));
  }
}

BoundaryFn BoundaryFn::linear(const Eigen::VectorXd& a, double b) {
  Expr e = Expr::constant(b);
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a(i) != 0.0) e = e + Expr::constant(a(i)) * Expr::variable(static_cast<std::size_t>(i));
  return BoundaryFn(e, static_cast<std::size_t>(a.size()));
}

Eigen::VectorXd BoundaryFn::gradient(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g(static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < dim_; ++i) g(static_cast<Eigen::Index>(i)) = gradient_[i].eval(x);
  return g;
}

BoundaryFn BoundaryFn::plus(double c) const {
  if (linear_) return linear(linear_->first, linear_->second + c);
  return BoundaryFn(expr_ + Expr::constant(c), dim_);
}

BoundaryFn BoundaryFn::times(double s) const {
  if (linear_) return linear(linear_->first * s, linear_->second * s);
  return BoundaryFn(Expr::constant(s) * expr_, dim_);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<Eigen::VectorXd> probe_points(std::size_t dim) {
  std::vector<Eigen::VectorXd> pts;
  const auto n = static_cast<Eigen::Index>(dim);
  if (dim <= 3) {
    const int m = dim == 1 ? 10001 : (dim == 2 ? 101 : 22);
    std::vector<int> idx(dim, 0);
    for (;;) {
      Eigen::VectorXd x(n);
      for (std::size_t i = 0; i < dim; ++i) x(static_cast<Eigen::Index>(i)) = static_cast<double>(idx[i]) / (m - 1);
      pts.push_back(x);
      std::size_t k = 0;
      while (k < dim && ++idx[k] == m) idx[k++] = 0;
      if (k == dim) break;
    }
  } else {
    Rng rng(0x5eed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
      Eigen::VectorXd x(n);
      for (Eigen::Index j = 0; j < n; ++j) x(j) = u(rng);
      pts.push_back(x);
    }
  }
  return pts;
}

/// Exact extremes of an affine function over the unit box.
std::pair<double, double> affine_range(const BoundaryFn& f) {
  const auto& a = f.coefficients();
  return {f.offset() + a.cwiseMin(0.0).sum(), f.offset() + a.cwiseMax(0.0).sum()};
}

}  // namespace

TestRegion::TestRegion(BoundaryFn f0, BoundaryFn f1, bool validate) : f0_(std::move(f0)), f1_(std::move(f1)) {
  if (f0_.dim() != f1_.dim()) throw ConfigError("inner and outer boundaries have different dimensions");
  if (validate) probe();
}

TestRegion TestRegion::from_boundary(const Expr& f, std::size_t dim, double margin, bool validate) {
  if (!(margin > 0.0)) throw ConfigError("margin must be positive");
  BoundaryFn base(f, dim);
  if (base.is_linear()) {
    const double norm = base.coefficients().norm();
    if (norm == 0.0) throw ConfigError("boundary " + f.to_string() + " is constant");
    base = base.times(1.0 / norm);
  }
  return TestRegion(base.plus(margin), base.plus(-margin), validate);
}

void TestRegion::probe() {
  const auto pts = probe_points(dim());
  bool any_d0 = false, any_outside = false;
  std::vector<const Eigen::VectorXd*> inner, outer;
  for (const auto& x : pts) {
    const double a = f0_(x), b = f1_(x);
    if (std::isnan(a) || std::isnan(b)) continue;
    if (a <= 0.0 && b > 0.0) {
      std::ostringstream msg;
      msg << "inner region is not contained in the outer region (e.g. at " << x.transpose() << ")";
      throw ConfigError(msg.str());
    }
    if (!(a > b)) {
      std::ostringstream msg;
      msg << "inner and outer boundaries are not separated (e.g. at " << x.transpose() << ")";
      throw ConfigError(msg.str());
    }
    if (a <= 0.0) {
      any_d0 = true;
      inner.push_back(&x);
    }
    if (b > 0.0) any_outside = true;
    if (b <= 0.0) outer.push_back(&x);
  }
  if (f0_.is_linear()) any_d0 = affine_range(f0_).first <= 0.0;
  if (f1_.is_linear()) any_outside = affine_range(f1_).second > 0.0;
  if (!any_d0) throw ConfigError("inner region D0 does not meet [0,1]^n; the margin is too wide for this threshold");
  if (!any_outside)
    throw ConfigError("outer region D1 covers [0,1]^n; the margin is too wide for this threshold");

  if (f0_.is_linear() && f1_.is_linear()) return;
  // Midpoint probe; a failure only means the guarantees may not apply.
  Rng rng(0xc0ffee);
  auto check = [&](const std::vector<const Eigen::VectorXd*>& set, const BoundaryFn& f, const char* name) {
    if (set.size() < 2) return;
    std::uniform_int_distribution<std::size_t> pick(0, set.size() - 1);
    for (int i = 0; i < 2000; ++i) {
      const Eigen::VectorXd mid = 0.5 * (*set[pick(rng)] + *set[pick(rng)]);
      if (f(mid) > 1e-12) {
        convex_ = false;
        warnings_.push_back(std::string("region ") + name + " failed a convexity probe; error bounds may not hold");
        return;
      }
    }
  };
  check(inner, f0_, "D0");
  check(outer, f1_, "D1");
}

// ---------------------------------------------------------------------------

namespace {

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }
double logit(double p) {
  p = clamp_probability(p);
  return std::log(p / (1.0 - p));
}

/// Solution of u/q - (1-u)/(1-q) = t for q in [0, 1].
double ml_coordinate(double u, double t) {
  auto solve = [](double uu, double tt) {
    const double s = tt + 1.0;
    const double disc = std::max(0.0, s * s - 4.0 * tt * uu);
    return 2.0 * uu / (s + std::sqrt(disc));
  };
  return t >= 0.0 ? solve(u, t) : 1.0 - solve(1.0 - u, -t);
}

/// Objective to maximise over {h >= 0}, with a closed form for affine h.
struct Objective {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  /// Point on the multiplier path for multiplier nu along normal a.
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> path;
  /// Sign of d h(path(nu)) / d nu.
  double direction;
  Eigen::VectorXd center;
};

Objective likelihood_objective(const SampleCounts& counts) {
  Objective o;
  o.center = mle(counts);
  o.value = [&counts](const Eigen::VectorXd& x) { return log_likelihood(counts, x); };
  o.gradient = [&counts](const Eigen::VectorXd& x) { return log_likelihood_gradient(counts, x); };
  o.path = [u = o.center](double nu, const Eigen::VectorXd& a) {
    Eigen::VectorXd x(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) x(i) = clamp_probability(ml_coordinate(u(i), nu * a(i)));
    return x;
  };
  o.direction = -1.0;
  return o;
}

Objective kl_objective(const Eigen::VectorXd& ref) {
  Objective o;
  o.center = ref.unaryExpr([](double v) { return clamp_probability(v); });
  o.value = [ref](const Eigen::VectorXd& x) { return -kl_divergence(x, ref); };
  o.gradient = [ref](const Eigen::VectorXd& x) { return Eigen::VectorXd(-kl_gradient(x, ref)); };
  o.path = [ref](double nu, const Eigen::VectorXd& a) {
    Eigen::VectorXd x(ref.size());
    for (Eigen::Index i = 0; i < ref.size(); ++i) x(i) = clamp_probability(sigmoid(logit(ref(i)) + nu * a(i)));
    return x;
  };
  o.direction = 1.0;
  return o;
}

/// Maximiser over {a.x + b >= 0} when the centre violates the constraint.
Eigen::VectorXd solve_affine(const Objective& o, const Eigen::VectorXd& a, double b) {
  auto h = [&](double nu) { return a.dot(o.path(nu, a)) + b; };
  double inside = o.direction;
  while (h(inside) < 0.0) {
    inside *= 2.0;
    if (std::abs(inside) > 1e18) throw NumericError("constraint set does not meet the unit box");
  }
  double outside = 0.0;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (inside + outside);
    if (mid == inside || mid == outside) break;
    (h(mid) >= 0.0 ? inside : outside) = mid;
  }
  return o.path(inside, a);
}

struct Constraint {
  const BoundaryFn& g;
  double sign;
  double operator()(const Eigen::VectorXd& x) const { return sign * g(x); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const { return sign * g.gradient(x); }
};

bool snap_to_boundary(const Constraint& h, Eigen::VectorXd& x);

/// Stationary on the boundary and no better along any tangent direction. The second test
/// rejects saddles, which the linearisation reaches on symmetric non-convex constraints.
bool certified(const Objective& o, const Constraint& h, const Eigen::VectorXd& x) {
  const double hx = h(x);
  if (!std::isfinite(hx) || std::abs(hx) > 1e-9) return false;
  const Eigen::VectorXd normal = h.gradient(x);
  if (lagrange_residual(o.gradient(x), normal) >= 1e-6) return false;
  const Eigen::Index n = x.size();
  if (n == 1) return true;
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(normal).householderQ();
  const double fx = o.value(x);
  for (Eigen::Index j = 1; j < n; ++j)
    for (double t : {1e-3, -1e-3}) {
      Eigen::VectorXd y = (x + t * q.col(j)).unaryExpr([](double v) { return clamp_probability(v); });
      if (snap_to_boundary(h, y) && o.value(y) > fx + 1e-12) return false;
    }
  return true;
}

/// Iterated linearisation: each step solves the problem with h replaced by its tangent plane.
std::optional<Eigen::VectorXd> solve_linearised(const Objective& o, const Constraint& h) {
  Eigen::VectorXd x = o.center;
  for (int it = 0; it < 300; ++it) {
    const Eigen::VectorXd a = h.gradient(x);
    if (!a.allFinite() || a.norm() == 0.0) return std::nullopt;
    const double b = h(x) - a.dot(x);
    if (!std::isfinite(b) || a.dot(o.center) + b >= 0.0) return std::nullopt;
    Eigen::VectorXd next;
    try {
      next = solve_affine(o, a, b);
    } catch (const NumericError&) {
      return std::nullopt;
    }
    const double step = (next - x).norm();
    x = next;
    if (step < 1e-14) break;
  }
  if (certified(o, h, x)) return x;
  return std::nullopt;
}

/// Newton steps along the gradient back onto {h = 0}.
bool snap_to_boundary(const Constraint& h, Eigen::VectorXd& x) {
  for (int it = 0; it < 50; ++it) {
    const double v = h(x);
    if (std::abs(v) < 1e-13) return true;
    const Eigen::VectorXd g = h.gradient(x);
    const double gg = g.squaredNorm();
    if (!(gg > 0.0) || !std::isfinite(v)) return false;
    x -= (v / gg) * g;
    x = x.unaryExpr([](double t) { return clamp_probability(t); });
  }
  return std::abs(h(x)) < 1e-10;
}

/// First point along centre + s*d where h becomes non-negative, if any inside the box.
std::optional<Eigen::VectorXd> ray_crossing(const Constraint& h, const Eigen::VectorXd& c, const Eigen::VectorXd& d) {
  double s_max = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) > 0) s_max = std::min(s_max, (1.0 - kClamp - c(i)) / d(i));
    if (d(i) < 0) s_max = std::min(s_max, (kClamp - c(i)) / d(i));
  }
  if (!(s_max > 0.0) || !std::isfinite(s_max)) return std::nullopt;
  constexpr int kSteps = 64;
  double prev = 0.0;
  for (int k = 1; k <= kSteps; ++k) {
    const double s = s_max * k / kSteps;
    const double v = h(Eigen::VectorXd(c + s * d));
    if (v >= 0.0) {
      double lo = prev, hi = s;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (h(Eigen::VectorXd(c + mid * d)) >= 0.0 ? hi : lo) = mid;
      }
      return Eigen::VectorXd(c + hi * d);
    }
    prev = s;
  }
  return std::nullopt;
}

/// Projected-gradient ascent along {h = 0} from a boundary point.
Eigen::VectorXd polish(const Objective& o, const Constraint& h, Eigen::VectorXd x) {
  double step = 1e-2;
  for (int it = 0; it < 2000 && step > 1e-15; ++it) {
    const Eigen::VectorXd g = o.gradient(x);
    Eigen::VectorXd normal = h.gradient(x);
    if (normal.norm() == 0.0) break;
    normal.normalize();
    const Eigen::VectorXd tangent = g - g.dot(normal) * normal;
    if (tangent.norm() < 1e-14 * std::max(1.0, g.norm())) break;
    Eigen::VectorXd cand = (x + step * tangent / tangent.norm()).unaryExpr([](double t) { return clamp_probability(t); });
    if (snap_to_boundary(h, cand) && o.value(cand) > o.value(x)) {
      x = cand;
      step *= 1.5;
    } else {
      step *= 0.5;
    }
  }
  snap_to_boundary(h, x);
  return x;
}

/// Dense boundary search followed by a projected-gradient polish.
Eigen::VectorXd solve_by_search(const Objective& o, const Constraint& h) {
  const Eigen::Index n = o.center.size();
  std::vector<Eigen::VectorXd> dirs;
  if (n == 1) {
    dirs.push_back(Eigen::VectorXd::Constant(1, 1.0));
    dirs.push_back(Eigen::VectorXd::Constant(1, -1.0));
  } else if (n == 2) {
    for (int k = 0; k < 1024; ++k) {
      const double t = 2.0 * std::numbers::pi * k / 1024;
      Eigen::VectorXd d(2);
      d << std::cos(t), std::sin(t);
      dirs.push_back(d);
    }
  } else {
    Rng rng(0xd1ce);
    std::normal_distribution<double> g;
    for (int k = 0; k < 8192; ++k) {
      Eigen::VectorXd d(n);
      for (Eigen::Index i = 0; i < n; ++i) d(i) = g(rng);
      dirs.push_back(d.normalized());
    }
  }
  // Coarse scan of boundary crossings; the few best seeds are polished and the best result kept.
  std::vector<std::optional<Eigen::VectorXd>> hits(dirs.size());
  std::vector<double> values(dirs.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    hits[k] = ray_crossing(h, o.center, dirs[k]);
    if (hits[k]) values[k] = o.value(*hits[k]);
  }
  // In the plane the directions are ordered by angle: seed from local maxima so distinct basins compete.
  std::vector<std::pair<double, Eigen::VectorXd>> seeds;
  const std::size_t m = dirs.size();
  for (std::size_t k = 0; k < m; ++k) {
    if (!hits[k]) continue;
    if (n == 2 && (values[k] < values[(k + m - 1) % m] || values[k] < values[(k + 1) % m])) continue;
    seeds.emplace_back(values[k], *hits[k]);
  }
  if (seeds.empty()) throw NumericError("no boundary point found: constraint set does not meet the unit box");
  constexpr std::size_t kSeeds = 4;
  const std::size_t keep = std::min(kSeeds, seeds.size());
  std::partial_sort(seeds.begin(), seeds.begin() + static_cast<std::ptrdiff_t>(keep), seeds.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });

  std::optional<Eigen::VectorXd> best;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < keep; ++k) {
    Eigen::VectorXd x = polish(o, h, seeds[k].second);
    const double v = o.value(x);
    if (!best || v > best_value) {
      best_value = v;
      best = std::move(x);
    }
  }
  return *best;
}

Eigen::VectorXd optimise(const Objective& o, const Constraint& h) {
  if (h(o.center) >= 0.0) return o.center;
  if (h.g.is_linear()) return solve_affine(o, h.sign * h.g.coefficients(), h.sign * h.g.offset());
  if (auto x = solve_linearised(o, h)) return *x;
  return solve_by_search(o, h);
}

}  // namespace

double lagrange_residual(const Eigen::VectorXd& objective_gradient, const Eigen::VectorXd& boundary_gradient) {
  const double a = objective_gradient.norm(), b = boundary_gradient.norm();
  if (a == 0.0 || b == 0.0) return 0.0;
  const double c = objective_gradient.dot(boundary_gradient) / (a * b);
  return std::sqrt(std::max(0.0, 1.0 - c * c));
}

Eigen::VectorXd project_q_max_likelihood(const SampleCounts& counts, const TestRegion& region) {
  return optimise(likelihood_objective(counts), Constraint{region.f1(), 1.0});
}

Eigen::VectorXd project_r_min_kl(const Eigen::VectorXd& q, const TestRegion& region) {
  return optimise(kl_objective(q), Constraint{region.f0(), -1.0});
}

Eigen::VectorXd project_r_max_likelihood(const SampleCounts& counts, const TestRegion& region) {
  return optimise(likelihood_objective(counts), Constraint{region.f0(), -1.0});
}

Eigen::VectorXd project_q_min_kl(const Eigen::VectorXd& r, const TestRegion& region) {
  return optimise(kl_objective(r), Constraint{region.f1(), 1.0});
}

std::optional<Verdict> sprt_multi_step(const SampleCounts& counts, const TestRegion& region,
                                       const ErrorBudget& budget) {
  if (counts.draws <= 0) return std::nullopt;
  if (static_cast<std::size_t>(counts.dim()) != region.dim())
    throw ConfigError("sample counts and region have different dimensions");
  const Eigen::VectorXd u = mle(counts);
  if (region.in_d0(u)) {
    const Eigen::VectorXd q = project_q_max_likelihood(counts, region);
    const Eigen::VectorXd r = project_r_min_kl(q, region);
    const double llr = log_likelihood(counts, q) - log_likelihood(counts, r);
    if (-llr > budget.h0_threshold())
      return Verdict{Outcome::AssertH0, counts.draws, llr, HypothesisPair{r, q}, 0.0};
    return std::nullopt;
  }
  if (region.in_d1_complement(u)) {
    const Eigen::VectorXd r = project_r_max_likelihood(counts, region);
    const Eigen::VectorXd q = project_q_min_kl(r, region);
    const double llr = log_likelihood(counts, q) - log_likelihood(counts, r);
    if (llr > budget.h1_threshold())
      return Verdict{Outcome::AssertH1, counts.draws, llr, HypothesisPair{r, q}, 0.0};
  }
  return std::nullopt;
}

std::vector<ErrorBudget> partition_region(std::span<const TestRegion> regions, const ErrorBudget& budget) {
  if (regions.empty()) throw ConfigError("partition needs at least one region");
  const double k = static_cast<double>(regions.size());
  return std::vector<ErrorBudget>(regions.size(), ErrorBudget{budget.alpha / k, budget.beta / k});
}

}  // namespace hypersmc
