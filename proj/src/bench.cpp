#include "hypersmc/bench.hpp"

#include "hypersmc/error.hpp"

namespace hypersmc {

BenchRow run_bench(const CheckTask& task, int runs, std::optional<Outcome> reference,
                   const std::function<void(int)>& progress) {
  if (runs < 1) throw ConfigError("runs must be at least 1");
  BenchRow row;
  row.runs = runs;
  if (reference) {
    row.reference = *reference;
  } else {
    CheckTask ref = task;
    ref.budget = ErrorBudget{kReferenceError, kReferenceError};
    ref.seed = derive_seed(task.seed, {0xFFFF'FFFFu});
    row.reference = check(ref).verdict.outcome;
  }
  int agree = 0;
  double samples = 0.0, seconds = 0.0;
  for (int r = 0; r < runs; ++r) {
    CheckTask t = task;
    t.seed = derive_seed(task.seed, {static_cast<std::uint64_t>(r)});
    const CheckResult res = check(t);
    agree += res.verdict.outcome == row.reference;
    row.undecided += res.verdict.outcome == Outcome::Undecided;
    samples += static_cast<double>(res.draws);
    seconds += res.seconds;
    if (progress) progress(r + 1);
  }
  row.accuracy = agree / static_cast<double>(runs);
  row.mean_samples = samples / runs;
  row.mean_seconds = seconds / runs;
  return row;
}

}  // namespace hypersmc
