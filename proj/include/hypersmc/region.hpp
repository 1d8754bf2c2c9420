#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hypersmc/expr.hpp"
#include "hypersmc/sprt.hpp"

namespace hypersmc {

/// Scalar function on [0,1]^n with its symbolic gradient.
class BoundaryFn {
 public:
  BoundaryFn() = default;
  BoundaryFn(Expr expr, std::size_t dim);
  /// a.x + b
  static BoundaryFn linear(const Eigen::VectorXd& a, double b);

  std::size_t dim() const noexcept { return dim_; }
  const Expr& expr() const noexcept { return expr_; }

  template <typename Derived>
  typename Derived::Scalar operator()(const Eigen::MatrixBase<Derived>& x) const {
    return expr_.eval(x);
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;

  /// Affine functions keep their coefficients so the solvers can take closed-form paths.
  bool is_linear() const noexcept { return linear_.has_value(); }
  const Eigen::VectorXd& coefficients() const { return linear_->first; }
  double offset() const { return linear_->second; }

  BoundaryFn plus(double c) const;
  BoundaryFn times(double s) const;

 private:
  Expr expr_;
  std::vector<Expr> gradient_;
  std::size_t dim_ = 0;
  std::optional<std::pair<Eigen::VectorXd, double>> linear_;
};

/// Region D with an inner body D0 = {f0 <= 0} and an outer body D1 = {f1 <= 0}, D0 inside D1.
/// The band D1 \ D0 is the indifference region.
class TestRegion {
 public:
  /// Explicit boundaries. Runs the empirical probes unless `validate` is false.
  TestRegion(BoundaryFn f0, BoundaryFn f1, bool validate = true);

  /// D = {F <= 0}; D0 = {F + margin <= 0}, D1 = {F - margin <= 0}. An affine F is first
  /// rescaled to a unit gradient so the offset is a Euclidean distance.
  static TestRegion from_boundary(const Expr& f, std::size_t dim, double margin, bool validate = true);

  std::size_t dim() const noexcept { return f0_.dim(); }
  const BoundaryFn& f0() const noexcept { return f0_; }
  const BoundaryFn& f1() const noexcept { return f1_; }
  bool convex() const noexcept { return convex_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  bool in_d0(const Eigen::VectorXd& x) const { return f0_(x) <= 0.0; }
  bool in_d1(const Eigen::VectorXd& x) const { return f1_(x) <= 0.0; }
  bool in_d1_complement(const Eigen::VectorXd& x) const { return f1_(x) > 0.0; }

 private:
  BoundaryFn f0_, f1_;
  bool convex_ = true;
  std::vector<std::string> warnings_;

  void probe();
};

/// argmax of the log-likelihood over the closure of D1^c. Expects the MLE inside D1.
Eigen::VectorXd project_q_max_likelihood(const SampleCounts& counts, const TestRegion& region);
/// argmin over D0 of K(x || q).
Eigen::VectorXd project_r_min_kl(const Eigen::VectorXd& q, const TestRegion& region);
/// argmax of the log-likelihood over D0. Expects the MLE outside D0.
Eigen::VectorXd project_r_max_likelihood(const SampleCounts& counts, const TestRegion& region);
/// argmin over the closure of D1^c of K(x || r).
Eigen::VectorXd project_q_min_kl(const Eigen::VectorXd& r, const TestRegion& region);

/// sin of the angle between the objective gradient and the boundary normal; 0 at a Lagrange point.
double lagrange_residual(const Eigen::VectorXd& objective_gradient, const Eigen::VectorXd& boundary_gradient);

/// One termination check of the multi-dimensional test; nullopt means continue.
/// AssertH0 means the probability vector lies in D.
std::optional<Verdict> sprt_multi_step(const SampleCounts& counts, const TestRegion& region,
                                       const ErrorBudget& budget);

/// Equal split of the budget across k sub-regions.
std::vector<ErrorBudget> partition_region(std::span<const TestRegion> regions, const ErrorBudget& budget);

}  // namespace hypersmc
