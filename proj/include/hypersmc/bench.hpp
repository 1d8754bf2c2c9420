#pragma once

#include <functional>
#include <optional>
#include <string>

#include "hypersmc/checker.hpp"

namespace hypersmc {

struct BenchRow {
  std::string label;
  int runs = 0;
  Outcome reference = Outcome::Undecided;
  /// Fraction of runs agreeing with the reference verdict.
  double accuracy = 0.0;
  /// Mean draws per source, and mean wall time.
  double mean_samples = 0.0;
  double mean_seconds = 0.0;
  int undecided = 0;
};

/// Budget of the statistical run that supplies the reference verdict when none is given.
constexpr double kReferenceError = 1e-4;

/// Repeats `task` with seeds derived from task.seed. Without a reference verdict, one run at
/// alpha = beta = kReferenceError decides it. `progress` is called after every run.
BenchRow run_bench(const CheckTask& task, int runs, std::optional<Outcome> reference = std::nullopt,
                   const std::function<void(int)>& progress = {});

}  // namespace hypersmc
