#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "exact.hpp"
#include "hypersmc/checker.hpp"
#include "hypersmc/error.hpp"
#include "hypersmc/semantics.hpp"

namespace hypersmc {
namespace {

constexpr std::size_t kMaxConjuncts = 4096;

/// A comparison either violated (`violated`) or satisfied.
struct Literal {
  std::size_t compare;
  bool violated;
  auto operator<=>(const Literal&) const = default;
};
using Conjunct = std::vector<Literal>;
/// Disjunctive normal form; empty = false, containing an empty conjunct = true.
using Dnf = std::vector<Conjunct>;

struct CompareInfo {
  const node::Compare* node;
  std::optional<bool> folded;
  /// Violation boundary B: the comparison fails iff B < 0 (strict) or B <= 0.
  Expr boundary;
  bool strict;
};


void collect_probs(const TermPtr& t, std::vector<TermPtr>& out) {
  if (std::holds_alternative<node::Prob>(t->node)) {
    out.push_back(t);
  } else if (auto* fn = std::get_if<node::Func>(&t->node)) {
    for (const auto& a : fn->args) collect_probs(a, out);
  }
}

/// Comparison nodes of a boolean combination, in order.
void top_compares(const Formula& f, std::vector<const node::Compare*>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Compare>) {
          out.push_back(&n);
        } else if constexpr (std::is_same_v<T, node::Not>) {
          top_compares(*n.body, out);
        } else if constexpr (std::is_same_v<T, node::And>) {
          top_compares(*n.lhs, out);
          top_compares(*n.rhs, out);
        } else {
          throw ConfigError(
              "the formula must be a comparison of probability terms, or a combination of comparisons with "
              "!, &, |, =>; found a path operator at the top level: " +
              to_string(f));
        }
      },
      f.node);
}

bool constant_compare(const node::Compare& c) { return !detail::has_prob(*c.lhs) && !detail::has_prob(*c.rhs); }

/// Comparisons of probabilities inside a path formula, not descending into probability bodies.
/// Constant comparisons such as `true` are decided without sampling and are left out.
void body_compares(const Formula& f, std::vector<const node::Compare*>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Compare>) {
          if (!constant_compare(n)) out.push_back(&n);
        } else if constexpr (std::is_same_v<T, node::Assoc> || std::is_same_v<T, node::Not> ||
                             std::is_same_v<T, node::Next>) {
          body_compares(*n.body, out);
        } else if constexpr (std::is_same_v<T, node::And> || std::is_same_v<T, node::Until>) {
          body_compares(*n.lhs, out);
          body_compares(*n.rhs, out);
        }
      },
      f.node);
}

/// How many times one evaluation of f may consult comparisons.
std::size_t compare_calls(const Formula& f) {
  return std::visit(
      [&](const auto& n) -> std::size_t {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Compare>) {
          return constant_compare(n) ? 0 : 1;
        } else if constexpr (std::is_same_v<T, node::Assoc> || std::is_same_v<T, node::Not> ||
                             std::is_same_v<T, node::Next>) {
          return compare_calls(*n.body);
        } else if constexpr (std::is_same_v<T, node::And>) {
          return compare_calls(*n.lhs) + compare_calls(*n.rhs);
        } else if constexpr (std::is_same_v<T, node::Until>) {
          const std::size_t k = n.bound.value_or(0);
          return (k + 1) * compare_calls(*n.rhs) + k * compare_calls(*n.lhs);
        } else {
          return 0;
        }
      },
      f.node);
}

std::size_t compare_depth(const node::Compare& c);

std::size_t formula_depth(const Formula& f) {
  std::vector<const node::Compare*> cmps;
  top_compares(f, cmps);
  std::size_t d = 1;
  for (const auto* c : cmps) d = std::max(d, compare_depth(*c));
  return d;
}

std::size_t compare_depth(const node::Compare& c) {
  std::vector<TermPtr> probs;
  collect_probs(c.lhs, probs);
  collect_probs(c.rhs, probs);
  std::size_t d = 1;
  for (const auto& p : probs) {
    std::vector<const node::Compare*> inner;
    body_compares(*std::get<node::Prob>(p->node).body, inner);
    for (const auto* ic : inner) d = std::max(d, 1 + compare_depth(*ic));
  }
  return d;
}

Expr to_expr(const Term& t, const std::map<const node::Prob*, std::size_t>& index) {
  return std::visit(
      [&](const auto& n) -> Expr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Const>) {
          return Expr::constant(static_cast<double>(n.value));
        } else if constexpr (std::is_same_v<T, node::Prob>) {
          return Expr::variable(index.at(&n));
        } else {
          std::vector<Expr> a;
          for (const auto& arg : n.args) a.push_back(to_expr(*arg, index));
          switch (n.op) {
            case FuncOp::Add: return a[0] + a[1];
            case FuncOp::Sub: return a[0] - a[1];
            case FuncOp::Mul: return a[0] * a[1];
            case FuncOp::Div: return a[0] / a[1];
            case FuncOp::Pow: return pow(a[0], a[1]);
            case FuncOp::Exp: return exp(a[0]);
            case FuncOp::Ln: return log(a[0]);
          }
          return Expr();
        }
      },
      t.node);
}

Dnf dnf_and(const Dnf& a, const Dnf& b) {
  Dnf out;
  for (const auto& x : a) {
    for (const auto& y : b) {
      Conjunct c = x;
      c.insert(c.end(), y.begin(), y.end());
      std::sort(c.begin(), c.end());
      c.erase(std::unique(c.begin(), c.end()), c.end());
      bool contradiction = false;
      for (std::size_t i = 0; i + 1 < c.size(); ++i)
        contradiction |= c[i].compare == c[i + 1].compare;
      if (!contradiction) out.push_back(std::move(c));
      if (out.size() > kMaxConjuncts) throw ConfigError("boolean structure of the formula is too large");
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Dnf dnf_or(Dnf a, const Dnf& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  if (a.size() > kMaxConjuncts) throw ConfigError("boolean structure of the formula is too large");
  return a;
}

/// DNF of f (or of its negation) over comparison literals.
Dnf to_dnf(const Formula& f, bool negated, const std::vector<CompareInfo>& cmps) {
  return std::visit(
      [&](const auto& n) -> Dnf {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Compare>) {
          std::size_t i = 0;
          while (cmps[i].node != &n) ++i;
          if (cmps[i].folded) return (*cmps[i].folded != negated) ? Dnf{Conjunct{}} : Dnf{};
          return Dnf{Conjunct{Literal{i, negated}}};
        } else if constexpr (std::is_same_v<T, node::Not>) {
          return to_dnf(*n.body, !negated, cmps);
        } else if constexpr (std::is_same_v<T, node::And>) {
          auto l = to_dnf(*n.lhs, negated, cmps), r = to_dnf(*n.rhs, negated, cmps);
          return negated ? dnf_or(std::move(l), r) : dnf_and(l, r);
        } else {
          throw ConfigError("unexpected path operator at the top level");
        }
      },
      f.node);
}

/// Range of an expression over the unit box: exact for affine functions, sampled otherwise.
std::pair<double, double> box_range(const BoundaryFn& f) {
  if (f.is_linear()) {
    const auto& a = f.coefficients();
    return {f.offset() + a.cwiseMin(0.0).sum(), f.offset() + a.cwiseMax(0.0).sum()};
  }
  const auto n = static_cast<Eigen::Index>(f.dim());
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  Rng rng(0xb0c5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    Eigen::VectorXd x(n);
    for (Eigen::Index j = 0; j < n; ++j) x(j) = i < (1 << std::min<Eigen::Index>(n, 12)) ? ((i >> j) & 1) : u(rng);
    x = x.unaryExpr([](double v) { return clamp_probability(v); });
    const double v = f(x);
    if (std::isnan(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

/// Largest value of sum_i |dB/dx_i| * weight_i over the box.
double weighted_slope(const BoundaryFn& f, const Eigen::VectorXd& weight) {
  if (f.is_linear()) return f.coefficients().cwiseAbs().dot(weight);
  const auto n = static_cast<Eigen::Index>(f.dim());
  double best = 0.0;
  Rng rng(0x51095);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int i = 0; i < 4000; ++i) {
    Eigen::VectorXd x(n);
    for (Eigen::Index j = 0; j < n; ++j) x(j) = u(rng);
    const Eigen::VectorXd g = f.gradient(x);
    if (g.allFinite()) best = std::max(best, g.cwiseAbs().dot(weight));
  }
  return best;
}

class Compiler {
 public:
  Compiler(const CompileOptions& options, std::size_t total_depth) : options_(options), total_depth_(total_depth) {}

  std::shared_ptr<TestPlan> level(const FormulaPtr& formula, std::size_t level_index) {
    auto plan = std::make_shared<TestPlan>();
    plan->formula = formula;
    plan->level = level_index;
    plan->budget = ErrorBudget{options_.budget.alpha / static_cast<double>(total_depth_),
                               options_.budget.beta / static_cast<double>(total_depth_)};

    std::vector<const node::Compare*> nodes;
    top_compares(*formula, nodes);

    // Sources in order of first appearance.
    std::map<const node::Prob*, std::size_t> index;
    for (const auto* c : nodes) {
      std::vector<TermPtr> probs;
      collect_probs(c->lhs, probs);
      collect_probs(c->rhs, probs);
      for (const auto& t : probs) {
        const auto* p = &std::get<node::Prob>(t->node);
        if (index.count(p)) continue;
        index.emplace(p, plan->sources.size());
        auto h = read_horizon(*p->body);
        if (!h) throw ConfigError("unbounded until in " + to_string(*t) + "; supply a horizon");
        plan->sources.push_back(Source{p, p->body, *h, to_string(*t)});
      }
    }
    const std::size_t n = plan->sources.size();

    // Nested comparisons and the noise they inject into each source.
    Eigen::VectorXd noise = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(std::max<std::size_t>(n, 1)));
    plan->depth = 1;
    const double inner_error = std::max(plan->budget.alpha, plan->budget.beta);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<const node::Compare*> inner;
      body_compares(*plan->sources[i].body, inner);
      for (const auto* ic : inner) {
        if (plan->nested.count(ic)) continue;
        auto sub = level(std::make_shared<const Formula>(Formula{*ic}), level_index + 1);
        // keep the original node as key; the copy shares all children
        plan->nested.emplace(ic, sub);
        plan->depth = std::max(plan->depth, 1 + sub->depth);
      }
      if (!inner.empty())
        noise(static_cast<Eigen::Index>(i)) =
            static_cast<double>(compare_calls(*plan->sources[i].body)) * inner_error;
    }

    // Comparisons as violation boundaries.
    std::vector<CompareInfo> cmps;
    for (const auto* c : nodes) {
      CompareInfo info{c, std::nullopt, Expr(), false};
      if (constant_compare(*c)) {
        info.folded = detail::compare_values(detail::eval_constant(*c->lhs), c->rel, detail::eval_constant(*c->rhs));
      } else {
        const Expr diff = to_expr(*c->lhs, index) - to_expr(*c->rhs, index);
        switch (c->rel) {
          case Relation::Greater: info.boundary = diff; info.strict = false; break;      // fails iff diff <= 0
          case Relation::GreaterEq: info.boundary = diff; info.strict = true; break;     // fails iff diff < 0
          case Relation::Less: info.boundary = -diff; info.strict = false; break;        // fails iff diff >= 0
          case Relation::LessEq: info.boundary = -diff; info.strict = true; break;       // fails iff diff > 0
          case Relation::Equal:
            throw ConfigError("equality between probability terms cannot be decided statistically: " +
                              to_string(Formula{*c}) + "; use an approximate equality such as a ~[0.05] b");
        }
      }
      cmps.push_back(std::move(info));
    }

    const Dnf violation = to_dnf(*formula, true, cmps);
    std::vector<std::pair<BoundaryFn, std::string>> convex;
    bool always_violated = false;
    std::set<Literal> seen;
    for (const auto& conjunct : violation) {
      if (conjunct.empty()) {
        always_violated = true;
        break;
      }
      if (conjunct.size() > 1)
        throw ConfigError(
            "unsupported formula shape: the violation region is an intersection of several constraints; "
            "only unions of single constraints are supported");
      const Literal lit = conjunct[0];
      if (!seen.insert(lit).second) continue;
      const auto& info = cmps[lit.compare];
      // The literal's region {B <= 0}: for a violated comparison B is its boundary, for a satisfied one -B.
      const Expr b = lit.violated ? info.boundary : -info.boundary;
      const bool strict = lit.violated ? info.strict : !info.strict;
      BoundaryFn fn(b, std::max<std::size_t>(n, 1));
      auto [lo, hi] = box_range(fn);
      if (strict ? lo >= 0.0 : lo > 0.0) continue;  // empty inside the box
      if (strict ? hi < 0.0 : hi <= 0.0) {
        always_violated = true;
        break;
      }
      std::ostringstream text;
      text << b.to_string() << (strict ? " < 0" : " <= 0");
      convex.emplace_back(fn, text.str());
    }
    if (always_violated) {
      plan->constant = false;
      return plan;
    }
    if (convex.empty()) {
      plan->constant = true;
      return plan;
    }

    const double k = static_cast<double>(convex.size());
    const ErrorBudget piece_budget{plan->budget.alpha / k, plan->budget.beta / k};
    plan->margin = options_.margin;
    for (auto& [fn, text] : convex) {
      BoundaryFn unit = fn;
      if (unit.is_linear()) unit = unit.times(1.0 / unit.coefficients().norm());
      const double shrink = weighted_slope(unit, noise.head(static_cast<Eigen::Index>(n)));
      const double margin = options_.margin - shrink;
      if (!(margin > 0.0)) {
        std::ostringstream msg;
        msg << "nested comparisons may flip with probability up to " << inner_error
            << ", which uses up the margin " << options_.margin
            << "; lower alpha/beta or widen the margin";
        throw ConfigError(msg.str());
      }
      plan->margin = std::min(plan->margin, margin);
      TestRegion region = TestRegion::from_boundary(unit.expr(), n, margin);
      for (const auto& w : region.warnings()) plan->warnings.push_back(w);
      std::optional<Indifference1D> scalar;
      if (n == 1 && unit.is_linear()) {
        const double a = unit.coefficients()(0), b = unit.offset();
        // region {a x + b <= 0} with |a| = 1
        scalar = Indifference1D{a > 0 ? -b : b, margin, a > 0};
        scalar->validate();
      }
      plan->pieces.push_back(Piece{std::move(region), piece_budget, scalar, text});
    }
    return plan;
  }

 private:
  const CompileOptions& options_;
  std::size_t total_depth_;
};

}  // namespace

TestPlan compile(const FormulaPtr& formula, const CompileOptions& options) {
  if (!formula) throw ConfigError("no formula");
  options.budget.validate();
  if (!(options.margin > 0.0)) throw ConfigError("margin must be positive");
  auto fv = free_vars(*formula);
  if (!fv.empty()) throw ConfigError("formula must be closed; free path variable '" + *fv.begin() + "'");
  FormulaPtr f = formula;
  std::vector<std::string> warnings;
  if (has_unbounded(*f)) {
    if (!options.horizon) throw ConfigError("formula has an unbounded until; supply a horizon to truncate it");
    f = truncate_unbounded(f, *options.horizon);
    warnings.push_back("unbounded untils truncated at horizon " + std::to_string(*options.horizon) +
                       "; the verdict is for the bounded approximation");
  }
  const std::size_t depth = formula_depth(*f);
  Compiler compiler(options, depth);
  auto plan = compiler.level(f, 0);
  plan->warnings.insert(plan->warnings.begin(), warnings.begin(), warnings.end());
  if (options.budget.degenerate())
    plan->warnings.push_back("alpha + beta >= 1: the error guarantees of the test do not hold");
  return *plan;
}

TestPlan compile(const FormulaPtr& formula, double margin) {
  CompileOptions options;
  options.margin = margin;
  return compile(formula, options);
}

}  // namespace hypersmc
