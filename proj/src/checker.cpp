#include <algorithm>
#include <chrono>
#include <deque>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>

#include "exact.hpp"
#include "hypersmc/checker.hpp"
#include "hypersmc/error.hpp"
#include "hypersmc/semantics.hpp"

namespace hypersmc {
namespace {

using Clock = std::chrono::steady_clock;

struct InnerStats {
  std::int64_t tests = 0;
  bool cap_hit = false;

  void merge(const InnerStats& o) {
    tests += o.tests;
    cap_hit |= o.cap_hit;
  }
};

/// Running state of one level's sequential test: counts plus a frozen verdict per piece.
class SequentialTest {
 public:
  explicit SequentialTest(const TestPlan& plan)
      : plan_(plan), counts_(static_cast<Eigen::Index>(plan.sources.size())), decided_(plan.pieces.size()) {}

  void add(const std::vector<char>& outcome) {
    ++counts_.draws;
    for (std::size_t i = 0; i < outcome.size(); ++i) counts_.successes(static_cast<Eigen::Index>(i)) += outcome[i];
  }

  /// Verdict once the plan is decided.
  std::optional<Verdict> check() {
    if (counts_.draws == 0) return std::nullopt;
    bool all_h1 = true;
    std::optional<Verdict> last;
    for (std::size_t k = 0; k < plan_.pieces.size(); ++k) {
      if (!decided_[k]) {
        const Piece& piece = plan_.pieces[k];
        decided_[k] = piece.scalar ? sprt_scalar_step(counts_, *piece.scalar, piece.budget)
                                   : sprt_multi_step(counts_, piece.region, piece.budget);
      }
      if (!decided_[k]) {
        all_h1 = false;
        continue;
      }
      if (decided_[k]->outcome == Outcome::AssertH0) return finish(*decided_[k]);
      last = decided_[k];
    }
    if (all_h1 && last) return finish(*last);
    return std::nullopt;
  }

  const SampleCounts& counts() const noexcept { return counts_; }

 private:
  const TestPlan& plan_;
  SampleCounts counts_;
  std::vector<std::optional<Verdict>> decided_;

  Verdict finish(Verdict v) const {
    v.samples_used = counts_.draws;
    return v;
  }
};

class Engine {
 public:
  Engine(const CheckTask& task, const TestPlan& plan)
      : model_(*task.model), props_(task.model->propositions()), task_(task) {
    for (const auto& [cmp, sub] : plan.nested) register_ids(*sub, cmp);
  }

  /// Scores every source of `plan` on draw `seed`, given the enclosing assignment (empty at the top).
  std::vector<char> draw(const TestPlan& plan, const Assignment& context, std::uint64_t seed,
                         InnerStats& stats) const {
    std::vector<char> out(plan.sources.size());
    for (std::size_t i = 0; i < plan.sources.size(); ++i) {
      const Source& src = plan.sources[i];
      std::deque<Path> paths;
      Assignment v = context;
      for (std::size_t k = 0; k < src.prob->vars.size(); ++k) {
        const auto& var = src.prob->vars[k];
        const Binding* b = context.find(var);
        const StateToken start = b ? b->state() : model_.initial_state();
        Rng rng = make_rng(seed, {i, k});
        paths.push_back(sample_path_from(model_, start, rng, src.horizon));
        v.bind(var, paths.back());
      }
      std::uint64_t calls = 0;
      CompareOracle oracle = [&](const node::Compare& c, const Assignment& w) {
        auto it = plan.nested.find(&c);
        if (it == plan.nested.end() && !detail::has_prob(*c.lhs) && !detail::has_prob(*c.rhs))
          return detail::compare_values(detail::eval_constant(*c.lhs), c.rel, detail::eval_constant(*c.rhs));
        if (it == plan.nested.end()) throw EvalError("comparison without a test plan: " + to_string(Formula{c}));
        const std::uint64_t s = derive_seed(seed, {i, 0xC0u, ids_.at(&c), calls++});
        return decide(*it->second, w, s, stats);
      };
      out[i] = eval_path_formula(*src.body, v, props_, oracle) ? 1 : 0;
    }
    return out;
  }

  /// Runs a nested test to completion on a single thread.
  bool decide(const TestPlan& plan, const Assignment& context, std::uint64_t seed, InnerStats& stats) const {
    ++stats.tests;
    if (plan.constant) return *plan.constant;
    SequentialTest test(plan);
    const std::int64_t batch = std::max<std::int64_t>(task_.batch, 1);
    for (std::int64_t j = 0; j < task_.max_samples; ++j) {
      test.add(draw(plan, context, derive_seed(seed, {static_cast<std::uint64_t>(j)}), stats));
      if ((j + 1) % batch == 0 || j + 1 == task_.max_samples)
        if (auto v = test.check()) return v->outcome == Outcome::AssertH1;
    }
    stats.cap_hit = true;
    return false;
  }

 private:
  const ModelSampler& model_;
  PropositionTable props_;
  const CheckTask& task_;
  std::map<const node::Compare*, std::uint64_t> ids_;

  void register_ids(const TestPlan& plan, const node::Compare* key) {
    // Stable across runs: derived from the comparison's text rather than its address.
    ids_.emplace(key, std::hash<std::string>{}(to_string(Formula{*key})));
    for (const auto& [cmp, sub] : plan.nested) register_ids(*sub, cmp);
  }
};

void collect_levels(const TestPlan& plan, std::vector<LevelBudget>& out) {
  if (std::none_of(out.begin(), out.end(), [&](const LevelBudget& l) { return l.level == plan.level; }))
    out.push_back(LevelBudget{plan.level, plan.budget, plan.margin});
  for (const auto& [cmp, sub] : plan.nested) collect_levels(*sub, out);
}

void collect_warnings(const TestPlan& plan, std::vector<std::string>& out) {
  for (const auto& w : plan.warnings)
    if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
  for (const auto& [cmp, sub] : plan.nested) collect_warnings(*sub, out);
}

CheckResult run(const CheckTask& task, const TestPlan& plan) {
  const auto start = Clock::now();
  CheckResult result;
  collect_levels(plan, result.levels);
  std::sort(result.levels.begin(), result.levels.end(),
            [](const LevelBudget& a, const LevelBudget& b) { return a.level < b.level; });
  collect_warnings(plan, result.warnings);
  result.successes.assign(plan.sources.size(), 0);

  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };
  if (plan.constant) {
    result.verdict.outcome = *plan.constant ? Outcome::AssertH1 : Outcome::AssertH0;
    result.seconds = result.verdict.seconds = elapsed();
    return result;
  }

  PropositionTable props(task.model->propositions());
  for (const auto& ap : propositions_of(*plan.formula)) props.index(ap);

  Engine engine(task, plan);
  SequentialTest test(plan);
  const std::int64_t batch = std::max<std::int64_t>(task.batch, 1);
  const unsigned workers = std::max(1u, task.workers);
  const std::int64_t block = workers == 1 ? batch : std::max<std::int64_t>(batch, 16 * workers);

  std::optional<Verdict> verdict;
  std::int64_t next = 0;
  std::vector<std::vector<char>> outcomes;
  std::vector<InnerStats> stats;
  while (!verdict && next < task.max_samples) {
    const std::int64_t n = std::min(block, task.max_samples - next);
    outcomes.assign(static_cast<std::size_t>(n), {});
    stats.assign(static_cast<std::size_t>(n), {});
    auto work = [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t j = lo; j < hi; ++j) {
        const auto seed = derive_seed(task.seed, {static_cast<std::uint64_t>(next + j)});
        outcomes[static_cast<std::size_t>(j)] = engine.draw(plan, Assignment{}, seed, stats[static_cast<std::size_t>(j)]);
      }
    };
    if (workers == 1 || n < 2) {
      work(0, n);
    } else {
      std::vector<std::exception_ptr> errors(workers);
      {
        std::vector<std::jthread> pool;
        const std::int64_t chunk = (n + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
          const std::int64_t lo = std::min<std::int64_t>(n, w * chunk), hi = std::min<std::int64_t>(n, lo + chunk);
          if (lo >= hi) break;
          pool.emplace_back([&, w, lo, hi] {
            try {
              work(lo, hi);
            } catch (...) {
              errors[w] = std::current_exception();
            }
          });
        }
      }
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }
    for (std::int64_t j = 0; j < n && !verdict; ++j) {
      test.add(outcomes[static_cast<std::size_t>(j)]);
      const auto& s = stats[static_cast<std::size_t>(j)];
      result.inner_tests += s.tests;
      result.inner_cap_hit |= s.cap_hit;
      const std::int64_t done = next + j + 1;
      if (done % batch == 0 || done == task.max_samples) verdict = test.check();
    }
    next += n;
  }

  result.draws = test.counts().draws;
  for (std::size_t i = 0; i < plan.sources.size(); ++i)
    result.successes[i] = test.counts().successes(static_cast<Eigen::Index>(i));
  if (result.inner_cap_hit) {
    result.warnings.push_back("a nested test reached the sample cap; the verdict is undecided");
    verdict.reset();
  }
  if (verdict) {
    result.verdict = *verdict;
  } else {
    result.verdict.outcome = Outcome::Undecided;
    result.verdict.samples_used = result.draws;
  }
  result.seconds = result.verdict.seconds = elapsed();
  return result;
}

TestPlan plan_for(const CheckTask& task) {
  if (!task.model) throw ConfigError("no model");
  if (task.batch < 1) throw ConfigError("batch must be at least 1");
  if (task.max_samples < 0) throw ConfigError("max-samples must be non-negative");
  CompileOptions options;
  options.margin = task.margin;
  options.horizon = task.horizon;
  options.budget = task.budget;
  return compile(task.formula, options);
}

}  // namespace

CheckResult check(const CheckTask& task) {
  const TestPlan plan = plan_for(task);
  return run(task, plan);
}

CheckResult check_nested(const CheckTask& task) {
  const TestPlan plan = plan_for(task);
  return run(task, plan);
}

}  // namespace hypersmc
