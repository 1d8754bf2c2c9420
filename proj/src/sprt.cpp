#include "hypersmc/sprt.hpp"

#include <sstream>

#include "hypersmc/error.hpp"

namespace hypersmc {

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::AssertH0: return "AssertH0";
    case Outcome::AssertH1: return "AssertH1";
    case Outcome::Undecided: return "Undecided";
  }
  return "?";
}

void ErrorBudget::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
}

void Indifference1D::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("indifference margin must be positive");
  if (p - epsilon < 0.0 || p + epsilon > 1.0) {
    std::ostringstream msg;
    msg << "indifference interval [" << p - epsilon << ", " << p + epsilon << "] leaves [0, 1]";
    throw ConfigError(msg.str());
  }
}

Eigen::VectorXd mle(const SampleCounts& counts) {
  if (counts.draws <= 0) throw NumericError("maximum likelihood estimate needs at least one draw");
  return counts.successes.cast<double>() / static_cast<double>(counts.draws);
}

std::optional<Verdict> sprt_scalar_step(const SampleCounts& counts, const Indifference1D& spec,
                                        const ErrorBudget& budget) {
  if (counts.dim() != 1) throw ConfigError("scalar test expects exactly one source");
  Eigen::Matrix<double, 1, 1> h1, h0;
  h1 << spec.h1_point();
  h0 << spec.h0_point();
  const double llr = log_likelihood(counts, h1) - log_likelihood(counts, h0);
  if (-llr > budget.h0_threshold()) return Verdict{Outcome::AssertH0, counts.draws, llr, std::nullopt, 0.0};
  if (llr > budget.h1_threshold()) return Verdict{Outcome::AssertH1, counts.draws, llr, std::nullopt, 0.0};
  return std::nullopt;
}

}  // namespace hypersmc
