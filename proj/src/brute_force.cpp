#include <algorithm>
#include <map>

#include "exact.hpp"
#include "hypersmc/checker.hpp"
#include "hypersmc/error.hpp"
#include "hypersmc/semantics.hpp"

namespace hypersmc {
namespace {

class Enumerator {
 public:
  Enumerator(const Dtmc& dtmc, std::size_t cap) : dtmc_(dtmc), props_(dtmc.propositions()), cap_(cap) {}

  bool eval(const Formula& f, const Assignment& v, bool top) {
    return eval_path_formula(f, v, props_, [&](const node::Compare& c, const Assignment& w) {
      const ExactValue lhs = term(*c.lhs, w, top), rhs = term(*c.rhs, w, top);
      if (top) {
        record(*c.lhs, lhs);
        record(*c.rhs, rhs);
      }
      return detail::compare_values(lhs, c.rel, rhs);
    });
  }

  std::vector<TermValue> take_terms() { return std::move(terms_); }

 private:
  const Dtmc& dtmc_;
  PropositionTable props_;
  std::size_t cap_;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<WeightedPath>> paths_;
  std::map<std::pair<const node::Prob*, std::vector<std::size_t>>, Rational> memo_;
  std::vector<TermValue> terms_;

  void record(const Term& t, const ExactValue& value) {
    if (std::holds_alternative<node::Const>(t.node)) return;
    const std::string text = to_string(t);
    for (const auto& tv : terms_)
      if (tv.term == text) return;
    terms_.push_back(TermValue{text, value});
  }

  const std::vector<WeightedPath>& paths_from(std::size_t start, std::size_t horizon) {
    auto key = std::make_pair(start, horizon);
    auto it = paths_.find(key);
    if (it == paths_.end()) it = paths_.emplace(key, enumerate_paths_from(dtmc_, start, horizon, cap_)).first;
    return it->second;
  }

  ExactValue term(const Term& t, const Assignment& v, bool top) {
    return std::visit(
        [&](const auto& n) -> ExactValue {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, node::Const>) {
            return detail::exact(n.value);
          } else if constexpr (std::is_same_v<T, node::Func>) {
            std::vector<ExactValue> args;
            for (const auto& a : n.args) {
              args.push_back(term(*a, v, top));
              if (top && std::holds_alternative<node::Prob>(a->node)) record(*a, args.back());
            }
            return detail::apply(n.op, args);
          } else {
            return detail::exact(probability(n, t, v));
          }
        },
        t.node);
  }

  Rational probability(const node::Prob& p, const Term& whole, const Assignment& v) {
    std::vector<std::size_t> starts;
    for (const auto& var : p.vars) {
      const Binding* b = v.find(var);
      starts.push_back(b ? static_cast<std::size_t>(b->state()[0]) : dtmc_.initial());
    }
    const bool closed = free_vars(whole).empty();
    if (closed) {
      auto it = memo_.find({&p, starts});
      if (it != memo_.end()) return it->second;
    }
    const auto h = read_horizon(*p.body);
    if (!h) throw ConfigError("unbounded until in " + to_string(whole) + "; supply a horizon");

    std::vector<const std::vector<WeightedPath>*> choices;
    double tuples = 1.0;
    for (std::size_t k = 0; k < p.vars.size(); ++k) {
      choices.push_back(&paths_from(starts[k], *h));
      tuples *= static_cast<double>(choices.back()->size());
    }
    if (tuples > static_cast<double>(cap_))
      throw Error("path tuple enumeration exceeds the cap of " + std::to_string(cap_) + " tuples");

    Rational total = 0;
    Assignment w = v;
    // Depth-first over the tuple, multiplying path weights on the way down.
    std::function<void(std::size_t, const Rational&)> rec = [&](std::size_t k, const Rational& weight) {
      if (k == p.vars.size()) {
        if (eval(*p.body, w, false)) total += weight;
        return;
      }
      for (const auto& wp : *choices[k]) {
        w.bind(p.vars[k], wp.path);
        rec(k + 1, weight * wp.exact);
      }
    };
    rec(0, Rational(1));
    if (closed) memo_.emplace(std::make_pair(&p, starts), total);
    return total;
  }
};

/// The path that always takes the first listed successor.
Path first_successor_path(const Dtmc& dtmc, std::size_t horizon) {
  Path path;
  std::size_t s = dtmc.initial();
  path.states.push_back(explicit_token(s));
  path.labels.push_back(dtmc.labels(s));
  for (std::size_t i = 0; i < horizon; ++i) {
    s = dtmc.successors(s).front().target;
    path.states.push_back(explicit_token(s));
    path.labels.push_back(dtmc.labels(s));
  }
  return path;
}

}  // namespace

BruteForceResult brute_force_check(const Dtmc& dtmc, const FormulaPtr& formula, std::optional<std::size_t> horizon,
                                   std::size_t cap) {
  if (!formula) throw ConfigError("no formula");
  FormulaPtr f = formula;
  if (has_unbounded(*f)) {
    if (!horizon) throw ConfigError("formula has an unbounded until; supply a horizon to truncate it");
    f = truncate_unbounded(f, *horizon);
  }
  PropositionTable props(dtmc.propositions());
  for (const auto& ap : propositions_of(*f)) props.index(ap);

  Assignment v;
  Path free_path;
  const auto fv = free_vars(*f);
  if (!fv.empty()) {
    free_path = first_successor_path(dtmc, read_horizon(*f).value_or(0));
    for (const auto& var : fv) v.bind(var, free_path);
  }
  Enumerator e(dtmc, cap);
  BruteForceResult result;
  result.holds = e.eval(*f, v, true);
  result.terms = e.take_terms();
  return result;
}

}  // namespace hypersmc
