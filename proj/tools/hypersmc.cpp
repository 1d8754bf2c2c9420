#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hypersmc/bench.hpp"
#include "hypersmc/casestudies.hpp"
#include "hypersmc/checker.hpp"
#include "hypersmc/error.hpp"
#include "hypersmc/parser.hpp"
#include "hypersmc/records.hpp"
#include "hypersmc/task_file.hpp"

namespace fs = std::filesystem;
using namespace hypersmc;

namespace {

enum Exit { kHolds = 0, kViolated = 1, kUndecided = 2, kError = 3 };

struct Globals {
  double alpha = 0.01;
  double beta = 0.01;
  std::vector<double> margins{0.05};
  std::optional<std::size_t> horizon;
  std::int64_t batch = 1;
  std::int64_t max_samples = 1'000'000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string format = "csv";
  bool no_time = false;
  bool verbose = false;
};

struct CaseFlags {
  std::vector<std::size_t> n;
  std::vector<double> eps;
  std::string payer = "uniform";
  std::vector<std::size_t> pair{1, 2};
  int low = 0;
  std::size_t lines = 256, blocks = 1024, warmup = 0;
  std::vector<std::size_t> window{10};
  double sd = 0.0;
  std::string access = "normal";
  std::string s1 = "5:1", s2 = "5:1";
  std::vector<std::size_t> tau{10};
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string formula_text(const std::string& arg) {
  std::error_code ec;
  if (fs::is_regular_file(arg, ec)) {
    std::string s = slurp(arg);
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
    return s;
  }
  return arg;
}

OutputFormat output_format(const Globals& g) { return g.format == "jsonl" ? OutputFormat::Jsonl : OutputFormat::Csv; }

int exit_code(Outcome o) {
  switch (o) {
    case Outcome::AssertH1: return kHolds;
    case Outcome::AssertH0: return kViolated;
    case Outcome::Undecided: return kUndecided;
  }
  return kError;
}

double single_margin(const Globals& g) {
  if (g.margins.size() != 1) throw ConfigError("--margin takes a single value here");
  return g.margins.front();
}

CheckTask base_task(const Globals& g) {
  CheckTask t;
  t.budget = ErrorBudget{g.alpha, g.beta};
  t.margin = g.margins.front();
  t.horizon = g.horizon;
  t.batch = g.batch;
  t.max_samples = g.max_samples;
  t.seed = g.seed;
  t.workers = g.workers;
  return t;
}

void report(const Globals& g, const CheckResult& res) {
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  if (!g.verbose) return;
  for (const auto& l : res.levels)
    std::cerr << "level " << l.level << ": alpha " << l.budget.alpha << ", beta " << l.budget.beta << ", margin "
              << l.margin << '\n';
  for (std::size_t i = 0; i < res.successes.size(); ++i)
    std::cerr << "source " << i << ": " << res.successes[i] << "/" << res.draws << '\n';
  if (res.inner_tests) std::cerr << "nested tests: " << res.inner_tests << '\n';
  std::cerr << "llr: " << res.verdict.llr << '\n';
}

RunRecord record_for(const Globals& g, const CheckTask& t, const std::string& command, const std::string& model,
                     const std::string& formula, const CheckResult& res) {
  RunRecord r;
  r.command = command;
  r.model = model;
  r.formula = formula;
  r.alpha = t.budget.alpha;
  r.beta = t.budget.beta;
  r.margin = t.margin;
  r.horizon = t.horizon;
  r.batch = t.batch;
  r.max_samples = t.max_samples;
  r.seed = t.seed;
  r.workers = t.workers;
  r.verdict = res.verdict.outcome;
  r.samples = res.draws;
  if (!g.no_time) r.seconds = res.seconds;
  return r;
}

// ---- check / oracle -------------------------------------------------------------------------

struct CheckArgs {
  std::string model, formula, task;
};

int cmd_check(const Globals& g, const CheckArgs& a, const CLI::App& app) {
  Globals eff = g;
  std::string model = a.model, formula = a.formula;
  if (!a.task.empty()) {
    const TaskSettings s = load_task_file(a.task);
    // Flags given on the command line win over the file.
    auto unset = [&](const char* name) { return app.count(name) == 0; };
    if (s.model && model.empty()) model = *s.model;
    if (s.formula && formula.empty()) formula = *s.formula;
    if (s.alpha && unset("--alpha")) eff.alpha = *s.alpha;
    if (s.beta && unset("--beta")) eff.beta = *s.beta;
    if (s.margin && unset("--margin")) eff.margins = {*s.margin};
    if (s.horizon && unset("--horizon")) eff.horizon = s.horizon;
    if (s.batch && unset("--batch")) eff.batch = *s.batch;
    if (s.max_samples && unset("--max-samples")) eff.max_samples = *s.max_samples;
    if (s.seed && unset("--seed") && !std::getenv("HYPERSMC_SEED")) eff.seed = *s.seed;
    if (s.workers && unset("--workers")) eff.workers = *s.workers;
  }
  if (model.empty()) throw ConfigError("no model given (--model or task file)");
  if (formula.empty()) throw ConfigError("no formula given (--formula or task file)");
  single_margin(eff);
  const std::string text = formula_text(formula);
  CheckTask t = base_task(eff);
  t.model = std::make_shared<ExplicitSampler>(load_model(model));
  t.formula = parse_closed_formula(text);
  const CheckResult res = check(t);
  report(eff, res);
  const auto fmt = output_format(eff);
  write_header(std::cout, fmt);
  write_record(std::cout, fmt, record_for(eff, t, "check", model, text, res));
  return exit_code(res.verdict.outcome);
}

int cmd_oracle(const Globals& g, const CheckArgs& a) {
  if (a.model.empty() || a.formula.empty()) throw ConfigError("oracle needs --model and --formula");
  const std::string text = formula_text(a.formula);
  const Dtmc dtmc = load_model(a.model);
  const BruteForceResult res = brute_force_check(dtmc, parse_formula(text), g.horizon);
  if (g.format == "jsonl") {
    nlohmann::ordered_json j;
    j["formula"] = text;
    j["terms"] = nlohmann::ordered_json::array();
    for (const auto& tv : res.terms)
      j["terms"].push_back({{"term", tv.term}, {"value", tv.value.to_string()}, {"approx", tv.value.approx}});
    j["holds"] = res.holds;
    std::cout << j.dump() << '\n';
  } else {
    for (const auto& tv : res.terms) std::cout << tv.term << " = " << tv.value.to_string() << '\n';
    std::cout << "verdict: " << (res.holds ? "true" : "false") << '\n';
  }
  return res.holds ? kHolds : kViolated;
}

// ---- case studies ---------------------------------------------------------------------------

void add_case_flags(CLI::App* sub, const std::string& name, CaseFlags& f) {
  if (name == "dining") {
    sub->add_option("--n", f.n, "number of cryptographers (comma list in bench)")->delimiter(',');
    sub->add_option("--eps", f.eps, "approximate equality bound")->delimiter(',');
    sub->add_option("--payer", f.payer, "nsa, uniform, or a cryptographer 1..n");
    sub->add_option("--pair", f.pair, "neighbours i,j whose shared coin is observed")->delimiter(',')->expected(2);
  } else if (name == "threads") {
    sub->add_option("--n", f.n, "number of threads (comma list in bench)")->delimiter(',');
    sub->add_option("--eps", f.eps, "approximate equality bound")->delimiter(',');
    sub->add_option("--low", f.low, "observed low value, 0 or 1")->check(CLI::Range(0, 1));
  } else if (name == "cache") {
    sub->add_option("--lines", f.lines, "cache lines");
    sub->add_option("--blocks", f.blocks, "program blocks");
    sub->add_option("--T", f.window, "window length (comma list in bench)")->delimiter(',');
    sub->add_option("--eps", f.eps, "required gap between the two probabilities")->delimiter(',');
    sub->add_option("--warmup", f.warmup, "warm-up steps N (default: lines)");
    sub->add_option("--sd", f.sd, "standard deviation of the access distribution (default: sqrt(lines)/2)");
    sub->add_option("--access", f.access, "normal or uniform")->check(CLI::IsMember({"normal", "uniform"}));
  } else {
    sub->add_option("--s1", f.s1, "termination distribution for S1, as pos:prob,...");
    sub->add_option("--s2", f.s2, "termination distribution for S2, as pos:prob,...");
    sub->add_option("--tau", f.tau, "step bound (comma list in bench)")->delimiter(',');
    sub->add_option("--eps", f.eps, "approximate equality bound")->delimiter(',');
  }
}

double default_eps(const std::string& name) {
  if (name == "dining") return 0.1;
  if (name == "threads") return 0.001;
  if (name == "cache") return 0.05;
  return 0.1;
}

struct Instance {
  std::string label;
  CaseStudy study;
};

std::vector<Instance> instances(const std::string& name, const CaseFlags& f) {
  const std::vector<double> eps = f.eps.empty() ? std::vector<double>{default_eps(name)} : f.eps;
  std::vector<Instance> out;
  auto label = [](std::initializer_list<std::pair<const char*, std::string>> kv) {
    std::string s;
    for (const auto& [k, v] : kv) s += (s.empty() ? "" : " ") + std::string(k) + "=" + v;
    return s;
  };
  auto str = [](double x) {
    std::ostringstream o;
    o << x;
    return o.str();
  };
  if (name == "dining") {
    const std::vector<std::size_t> ns = f.n.empty() ? std::vector<std::size_t>{3} : f.n;
    for (auto n : ns)
      for (double e : eps) {
        DiningConfig c;
        c.n = n;
        c.epsilon = e;
        if (f.payer == "nsa") {
          c.payer = PayerMode::Nsa;
        } else if (f.payer == "uniform") {
          c.payer = PayerMode::Uniform;
        } else {
          c.payer = PayerMode::Fixed;
          try {
            c.fixed_payer = std::stoul(f.payer);
          } catch (const std::logic_error&) {
            throw ConfigError("--payer must be nsa, uniform or a cryptographer number");
          }
        }
        c.secret_pair = {f.pair.at(0), f.pair.at(1)};
        out.push_back({label({{"n", std::to_string(n)}, {"eps", str(e)}}), dining_case(c)});
      }
  } else if (name == "threads") {
    const std::vector<std::size_t> ns = f.n.empty() ? std::vector<std::size_t>{2} : f.n;
    for (auto n : ns)
      for (double e : eps) {
        ThreadsConfig c;
        c.n = n;
        c.epsilon = e;
        c.low = f.low;
        out.push_back({label({{"n", std::to_string(n)}, {"eps", str(e)}}), threads_case(c)});
      }
  } else if (name == "cache") {
    for (auto t : f.window)
      for (double e : eps) {
        CacheConfig c;
        c.lines = f.lines;
        c.blocks = f.blocks;
        c.window = t;
        c.epsilon = e;
        c.warmup = f.warmup;
        c.sd = f.sd;
        if (f.access == "uniform") c.access.assign(f.blocks, 1.0);
        out.push_back({label({{"T", std::to_string(t)}, {"eps", str(e)}}), cache_case(c)});
      }
  } else if (name == "timing") {
    for (auto tau : f.tau)
      for (double e : eps) {
        TimingConfig c;
        c.s1 = parse_step_distribution(f.s1);
        c.s2 = parse_step_distribution(f.s2);
        c.tau = tau;
        c.epsilon = e;
        out.push_back({label({{"tau", std::to_string(tau)}, {"eps", str(e)}}), timing_case(c)});
      }
  } else {
    throw ConfigError("unknown case study '" + name + "'");
  }
  return out;
}

int cmd_casestudy(const Globals& g, const std::string& name, const CaseFlags& f) {
  auto list = instances(name, f);
  if (list.size() != 1) throw ConfigError("casestudy runs one configuration; use bench for parameter grids");
  const auto& inst = list.front();
  CheckTask t = base_task(g);
  single_margin(g);
  t.model = inst.study.model;
  t.formula = inst.study.formula;
  if (!t.horizon) t.horizon = inst.study.horizon;
  const CheckResult res = check(t);
  report(g, res);
  const auto fmt = output_format(g);
  write_header(std::cout, fmt);
  write_record(std::cout, fmt, record_for(g, t, "casestudy", name + " " + inst.label, inst.study.text, res));
  return exit_code(res.verdict.outcome);
}

int cmd_bench(const Globals& g, const std::string& name, const CaseFlags& f, int runs,
              const std::optional<std::string>& expect) {
  std::optional<Outcome> reference;
  if (expect) reference = (*expect == "h1") ? Outcome::AssertH1 : Outcome::AssertH0;
  const auto fmt = output_format(g);
  if (fmt == OutputFormat::Csv)
    std::cout << "study,parameters,margin,alpha,beta,runs,reference,accuracy,mean_samples,mean_seconds,undecided\n";
  for (const auto& inst : instances(name, f)) {
    for (double margin : g.margins) {
      CheckTask t = base_task(g);
      t.margin = margin;
      t.model = inst.study.model;
      t.formula = inst.study.formula;
      if (!t.horizon) t.horizon = inst.study.horizon;
      const BenchRow row = run_bench(t, runs, reference);
      if (fmt == OutputFormat::Jsonl) {
        nlohmann::ordered_json j;
        j["study"] = name;
        j["parameters"] = inst.label;
        j["margin"] = margin;
        j["alpha"] = g.alpha;
        j["beta"] = g.beta;
        j["runs"] = row.runs;
        j["reference"] = to_string(row.reference);
        j["accuracy"] = row.accuracy;
        j["mean_samples"] = row.mean_samples;
        j["mean_seconds"] = g.no_time ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(row.mean_seconds);
        j["undecided"] = row.undecided;
        std::cout << j.dump() << '\n';
      } else {
        std::cout << name << ',' << csv_field(inst.label) << ',' << margin << ',' << g.alpha << ',' << g.beta << ','
                  << row.runs << ',' << to_string(row.reference) << ',' << row.accuracy << ',' << row.mean_samples
                  << ',';
        if (!g.no_time) std::cout << row.mean_seconds;
        std::cout << ',' << row.undecided << '\n';
      }
      std::cout.flush();
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Statistical model checking of HyperPCTL* formulas on Markov chains"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--alpha", g.alpha, "bound on the probability of asserting the property when it fails");
  app.add_option("--beta", g.beta, "bound on the probability of rejecting the property when it holds");
  app.add_option("--margin", g.margins, "indifference margin (comma list in bench)")->delimiter(',');
  app.add_option("--horizon", g.horizon, "path length for truncating unbounded untils");
  app.add_option("--batch", g.batch, "draws between termination checks")->check(CLI::PositiveNumber);
  app.add_option("--max-samples", g.max_samples, "cap on draws per source")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", g.seed, "master seed")->envname("HYPERSMC_SEED");
  app.add_option("--workers", g.workers, "sampling threads")->check(CLI::PositiveNumber);
  app.add_option("--format", g.format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  app.add_flag("--no-time", g.no_time, "omit wall-clock times so seeded output is byte-identical");
  app.add_flag("--verbose", g.verbose, "print budgets and counts to stderr");

  CheckArgs check_args, oracle_args;
  auto* check_cmd = app.add_subcommand("check", "statistical check of a formula on an explicit model");
  check_cmd->add_option("--model", check_args.model, "model file");
  check_cmd->add_option("--formula", check_args.formula, "formula text or file");
  check_cmd->add_option("--task", check_args.task, "task file with key = value settings");
  auto* oracle_cmd = app.add_subcommand("oracle", "exact evaluation by path enumeration");
  oracle_cmd->add_option("--model", oracle_args.model, "model file")->required();
  oracle_cmd->add_option("--formula", oracle_args.formula, "formula text or file")->required();

  const std::vector<std::string> studies{"dining", "threads", "cache", "timing"};
  std::map<std::string, CaseFlags> case_flags, bench_flags;
  auto* cs_cmd = app.add_subcommand("casestudy", "run one case study");
  cs_cmd->require_subcommand(1);
  auto* bench_cmd = app.add_subcommand("bench", "accuracy and sample counts over repeated runs");
  bench_cmd->require_subcommand(1);
  int runs = 100;
  std::optional<std::string> expect;
  bench_cmd->add_option("--runs", runs, "repetitions per configuration")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--expect", expect, "reference verdict h0 or h1 instead of a high-confidence run")
      ->check(CLI::IsMember({"h0", "h1"}));
  for (const auto& s : studies) {
    add_case_flags(cs_cmd->add_subcommand(s)->fallthrough(), s, case_flags[s]);
    add_case_flags(bench_cmd->add_subcommand(s)->fallthrough(), s, bench_flags[s]);
  }
  for (auto* sub : {check_cmd, oracle_cmd, cs_cmd, bench_cmd}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kError;
  }

  try {
    if (*check_cmd) return cmd_check(g, check_args, app);
    if (*oracle_cmd) return cmd_oracle(g, oracle_args);
    for (const auto& s : studies) {
      if (cs_cmd->got_subcommand(s)) return cmd_casestudy(g, s, case_flags[s]);
      if (bench_cmd->got_subcommand(s)) return cmd_bench(g, s, bench_flags[s], runs, expect);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  return kError;
}
