#pragma once

#include <cmath>

#include "hypersmc/checker.hpp"

namespace hypersmc::detail {

inline ExactValue exact(const Rational& r) { return ExactValue{r, static_cast<double>(r)}; }
inline ExactValue inexact(double v) { return ExactValue{std::nullopt, v}; }

ExactValue apply(FuncOp op, const std::vector<ExactValue>& args);
bool compare_values(const ExactValue& a, Relation rel, const ExactValue& b);

/// Value of a term without probability subterms.
ExactValue eval_constant(const Term& t);
bool has_prob(const Term& t);

}  // namespace hypersmc::detail
