#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

namespace hypersmc {

/// Probabilities are clamped to [kClamp, 1 - kClamp] before taking logarithms.
constexpr double kClamp = 1e-9;

/// False-positive ratio alpha and false-negative ratio beta.
struct ErrorBudget {
  double alpha = 0.01;
  double beta = 0.01;

  /// Throws ConfigError unless both lie in (0, 1).
  void validate() const;
  /// alpha + beta >= 1 voids the guarantees; callers surface this as a warning.
  bool degenerate() const noexcept { return alpha + beta >= 1.0; }

  double h0_threshold() const { return std::log((1.0 - beta) / alpha); }
  double h1_threshold() const { return std::log((1.0 - alpha) / beta); }
};

/// One-dimensional test of a threshold p with margin epsilon.
/// With `h1_above`, H1 is "probability >= p + epsilon"; otherwise H1 is "probability <= p - epsilon".
struct Indifference1D {
  double p = 0.5;
  double epsilon = 0.05;
  bool h1_above = true;

  void validate() const;
  double h1_point() const { return h1_above ? p + epsilon : p - epsilon; }
  double h0_point() const { return h1_above ? p - epsilon : p + epsilon; }
};

using CountVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// N draws of each of n Bernoulli sources and their success counts.
struct SampleCounts {
  std::int64_t draws = 0;
  CountVector successes;

  SampleCounts() = default;
  explicit SampleCounts(Eigen::Index n) : successes(CountVector::Zero(n)) {}
  SampleCounts(std::int64_t n_draws, CountVector t) : draws(n_draws), successes(std::move(t)) {}

  Eigen::Index dim() const noexcept { return successes.size(); }
};

struct HypothesisPair {
  Eigen::VectorXd r;  // on the inner boundary
  Eigen::VectorXd q;  // on the outer boundary
};

enum class Outcome { AssertH0, AssertH1, Undecided };
const char* to_string(Outcome o);

struct Verdict {
  Outcome outcome = Outcome::Undecided;
  std::int64_t samples_used = 0;
  /// Log-likelihood of the H1 point minus that of the H0 point at termination.
  double llr = 0.0;
  std::optional<HypothesisPair> pair;
  double seconds = 0.0;
};

template <typename Scalar>
Scalar clamp_probability(Scalar x) {
  const Scalar lo(kClamp), hi(1.0 - kClamp);
  return x < lo ? lo : (x > hi ? hi : x);
}

/// Sum of T_i ln x_i + (N - T_i) ln(1 - x_i) with x clamped.
template <typename Derived>
typename Derived::Scalar log_likelihood(const SampleCounts& counts, const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  using std::log;
  Scalar total(0);
  for (Eigen::Index i = 0; i < counts.dim(); ++i) {
    const Scalar xi = clamp_probability<Scalar>(x(i));
    const auto t = counts.successes(i);
    const auto f = counts.draws - t;
    if (t) total += Scalar(t) * log(xi);
    if (f) total += Scalar(f) * log(Scalar(1) - xi);
  }
  return total;
}

/// Gradient of log_likelihood with respect to x.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> log_likelihood_gradient(
    const SampleCounts& counts, const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> g(counts.dim());
  for (Eigen::Index i = 0; i < counts.dim(); ++i) {
    const Scalar xi = clamp_probability<Scalar>(x(i));
    const Scalar t = Scalar(counts.successes(i)), f = Scalar(counts.draws - counts.successes(i));
    g(i) = t / xi - f / (Scalar(1) - xi);
  }
  return g;
}

/// Kullback-Leibler divergence of Bernoulli products, K(x || q).
template <typename DerivedX, typename DerivedQ>
typename DerivedX::Scalar kl_divergence(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedX::Scalar;
  using std::log;
  Scalar total(0);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const Scalar xi = clamp_probability<Scalar>(x(i)), qi = clamp_probability<Scalar>(Scalar(q(i)));
    total += xi * log(xi / qi) + (Scalar(1) - xi) * log((Scalar(1) - xi) / (Scalar(1) - qi));
  }
  return total;
}

/// Gradient of K(x || q) with respect to x.
template <typename DerivedX, typename DerivedQ>
Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, 1> kl_gradient(const Eigen::MatrixBase<DerivedX>& x,
                                                                       const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedX::Scalar;
  using std::log;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const Scalar xi = clamp_probability<Scalar>(x(i)), qi = clamp_probability<Scalar>(Scalar(q(i)));
    g(i) = log(xi / (Scalar(1) - xi)) - log(qi / (Scalar(1) - qi));
  }
  return g;
}

/// Empirical frequencies T_i / N. Throws for N = 0.
Eigen::VectorXd mle(const SampleCounts& counts);

/// One termination check of the scalar test on a single source; nullopt means continue.
std::optional<Verdict> sprt_scalar_step(const SampleCounts& counts, const Indifference1D& spec,
                                        const ErrorBudget& budget);

}  // namespace hypersmc
