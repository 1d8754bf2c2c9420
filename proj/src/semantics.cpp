#include "hypersmc/semantics.hpp"

#include <algorithm>

#include "hypersmc/error.hpp"

namespace hypersmc {

void Assignment::bind(const PathVar& var, const Path& path, std::size_t offset) {
  for (auto& [name, b] : entries_) {
    if (name == var) {
      b = Binding{&path, offset};
      return;
    }
  }
  entries_.emplace_back(var, Binding{&path, offset});
}

const Binding* Assignment::find(const PathVar& var) const {
  for (const auto& [name, b] : entries_)
    if (name == var) return &b;
  return fallback_ ? &*fallback_ : nullptr;
}

Assignment Assignment::shifted(std::size_t i) const {
  Assignment out = *this;
  for (auto& entry : out.entries_) entry.second.offset += i;
  if (out.fallback_) out.fallback_->offset += i;
  return out;
}

PropositionTable::PropositionTable(const std::vector<std::string>& propositions) {
  for (std::size_t i = 0; i < propositions.size(); ++i) index_.emplace(propositions[i], i);
}

std::size_t PropositionTable::index(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw EvalError("unknown atomic proposition '" + name + "'");
  return it->second;
}

// ---------------------------------------------------------------------------

namespace {

void collect_free(const Formula& f, std::set<PathVar>& bound, std::set<PathVar>& out);

void collect_free(const Term& t, std::set<PathVar>& bound, std::set<PathVar>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Func>) {
          for (const auto& a : n.args) collect_free(*a, bound, out);
        } else if constexpr (std::is_same_v<T, node::Prob>) {
          std::vector<PathVar> added;
          for (const auto& v : n.vars)
            if (bound.insert(v).second) added.push_back(v);
          collect_free(*n.body, bound, out);
          for (const auto& v : added) bound.erase(v);
        }
      },
      t.node);
}

void collect_free(const Formula& f, std::set<PathVar>& bound, std::set<PathVar>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Atom>) {
          if (!bound.count(n.pv)) out.insert(n.pv);
        } else if constexpr (std::is_same_v<T, node::Assoc>) {
          if (!bound.count(n.pv)) out.insert(n.pv);
        } else if constexpr (std::is_same_v<T, node::Not> || std::is_same_v<T, node::Next>) {
          collect_free(*n.body, bound, out);
        } else if constexpr (std::is_same_v<T, node::And> || std::is_same_v<T, node::Until>) {
          collect_free(*n.lhs, bound, out);
          collect_free(*n.rhs, bound, out);
        } else {
          collect_free(*n.lhs, bound, out);
          collect_free(*n.rhs, bound, out);
        }
      },
      f.node);
}

template <typename Visit>
void walk(const Formula& f, Visit&& visit);

template <typename Visit>
void walk(const Term& t, Visit&& visit) {
  visit(t);
  if (auto* fn = std::get_if<node::Func>(&t.node))
    for (const auto& a : fn->args) walk(*a, visit);
  else if (auto* p = std::get_if<node::Prob>(&t.node))
    walk(*p->body, visit);
}

template <typename Visit>
void walk(const Formula& f, Visit&& visit) {
  visit(f);
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Assoc> || std::is_same_v<T, node::Not> ||
                      std::is_same_v<T, node::Next>) {
          walk(*n.body, visit);
        } else if constexpr (std::is_same_v<T, node::And> || std::is_same_v<T, node::Until>) {
          walk(*n.lhs, visit);
          walk(*n.rhs, visit);
        } else if constexpr (std::is_same_v<T, node::Compare>) {
          walk(*n.lhs, visit);
          walk(*n.rhs, visit);
        }
      },
      f.node);
}

struct Overloaded {
  std::function<void(const Formula&)> on_formula;
  std::function<void(const Term&)> on_term;
  void operator()(const Formula& f) const {
    if (on_formula) on_formula(f);
  }
  void operator()(const Term& t) const {
    if (on_term) on_term(t);
  }
};

}  // namespace

std::set<PathVar> free_vars(const Formula& f) {
  std::set<PathVar> bound, out;
  collect_free(f, bound, out);
  return out;
}

std::set<PathVar> free_vars(const Term& t) {
  std::set<PathVar> bound, out;
  collect_free(t, bound, out);
  return out;
}

std::set<PathVar> all_vars(const Formula& f) {
  std::set<PathVar> out;
  walk(f, Overloaded{[&](const Formula& g) {
                       if (auto* a = std::get_if<node::Atom>(&g.node)) out.insert(a->pv);
                       if (auto* a = std::get_if<node::Assoc>(&g.node)) out.insert(a->pv);
                     },
                     [&](const Term& t) {
                       if (auto* p = std::get_if<node::Prob>(&t.node)) out.insert(p->vars.begin(), p->vars.end());
                     }});
  return out;
}

std::set<std::string> propositions_of(const Formula& f) {
  std::set<std::string> out;
  walk(f, Overloaded{[&](const Formula& g) {
                       if (auto* a = std::get_if<node::Atom>(&g.node)) out.insert(a->ap);
                     },
                     {}});
  return out;
}

// ---------------------------------------------------------------------------

namespace {

FormulaPtr substitute(const FormulaPtr& f, const PathVar& pv, std::set<PathVar>& bound);

TermPtr substitute(const TermPtr& t, const PathVar& pv, std::set<PathVar>& bound) {
  if (auto* fn = std::get_if<node::Func>(&t->node)) {
    std::vector<TermPtr> args;
    bool changed = false;
    for (const auto& a : fn->args) {
      args.push_back(substitute(a, pv, bound));
      changed |= args.back() != a;
    }
    return changed ? func(fn->op, std::move(args)) : t;
  }
  if (auto* p = std::get_if<node::Prob>(&t->node)) {
    std::vector<PathVar> added;
    for (const auto& v : p->vars)
      if (bound.insert(v).second) added.push_back(v);
    auto body = substitute(p->body, pv, bound);
    for (const auto& v : added) bound.erase(v);
    return body != p->body ? prob(p->vars, body) : t;
  }
  return t;
}

FormulaPtr substitute(const FormulaPtr& f, const PathVar& pv, std::set<PathVar>& bound) {
  return std::visit(
      [&](const auto& n) -> FormulaPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Atom>) {
          return (bound.count(n.pv) || n.pv == pv) ? f : atom(n.ap, pv);
        } else if constexpr (std::is_same_v<T, node::Assoc>) {
          return (bound.count(n.pv) || n.pv == pv) ? f : assoc(n.body, pv);
        } else if constexpr (std::is_same_v<T, node::Not>) {
          auto b = substitute(n.body, pv, bound);
          return b != n.body ? negate(b) : f;
        } else if constexpr (std::is_same_v<T, node::Next>) {
          auto b = substitute(n.body, pv, bound);
          return b != n.body ? next(b) : f;
        } else if constexpr (std::is_same_v<T, node::And>) {
          auto l = substitute(n.lhs, pv, bound), r = substitute(n.rhs, pv, bound);
          return (l != n.lhs || r != n.rhs) ? conj(l, r) : f;
        } else if constexpr (std::is_same_v<T, node::Until>) {
          auto l = substitute(n.lhs, pv, bound), r = substitute(n.rhs, pv, bound);
          return (l != n.lhs || r != n.rhs) ? until(l, r, n.bound) : f;
        } else {
          auto l = substitute(n.lhs, pv, bound), r = substitute(n.rhs, pv, bound);
          return (l != n.lhs || r != n.rhs) ? compare(l, n.rel, r) : f;
        }
      },
      f->node);
}

std::optional<std::size_t> add(std::optional<std::size_t> a, std::size_t b) {
  if (!a) return std::nullopt;
  return *a + b;
}

std::optional<std::size_t> max_of(std::optional<std::size_t> a, std::optional<std::size_t> b) {
  if (!a || !b) return std::nullopt;
  return std::max(*a, *b);
}

std::optional<std::size_t> horizon(const Formula& f, bool through_compare);

std::optional<std::size_t> horizon(const Term& t, bool through_compare) {
  if (auto* fn = std::get_if<node::Func>(&t.node)) {
    std::optional<std::size_t> h = 0;
    for (const auto& a : fn->args) h = max_of(h, horizon(*a, through_compare));
    return h;
  }
  if (auto* p = std::get_if<node::Prob>(&t.node)) return horizon(*p->body, through_compare);
  return 0;
}

std::optional<std::size_t> horizon(const Formula& f, bool through_compare) {
  return std::visit(
      [&](const auto& n) -> std::optional<std::size_t> {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Atom>) {
          return 0;
        } else if constexpr (std::is_same_v<T, node::Assoc> || std::is_same_v<T, node::Not>) {
          return horizon(*n.body, through_compare);
        } else if constexpr (std::is_same_v<T, node::Next>) {
          return add(horizon(*n.body, through_compare), 1);
        } else if constexpr (std::is_same_v<T, node::And>) {
          return max_of(horizon(*n.lhs, through_compare), horizon(*n.rhs, through_compare));
        } else if constexpr (std::is_same_v<T, node::Until>) {
          if (!n.bound) return std::nullopt;
          const std::size_t k = *n.bound;
          auto r = horizon(*n.rhs, through_compare);
          if (k == 0) return r;
          return max_of(add(r, k), add(horizon(*n.lhs, through_compare), k - 1));
        } else {
          if (!through_compare) return 0;
          return max_of(horizon(*n.lhs, true), horizon(*n.rhs, true));
        }
      },
      f.node);
}

}  // namespace

FormulaPtr apply_association(const FormulaPtr& f, const PathVar& pv) {
  std::set<PathVar> bound;
  return substitute(f, pv, bound);
}

std::optional<std::size_t> required_horizon(const Formula& f) { return horizon(f, true); }
std::optional<std::size_t> required_horizon(const Term& t) { return horizon(t, true); }
std::optional<std::size_t> read_horizon(const Formula& f) { return horizon(f, false); }

bool has_unbounded(const Formula& f) {
  bool found = false;
  walk(f, Overloaded{[&](const Formula& g) {
                       if (auto* u = std::get_if<node::Until>(&g.node)) found |= !u->bound.has_value();
                     },
                     {}});
  return found;
}

namespace {

TermPtr truncate(const TermPtr& t, std::size_t h);

FormulaPtr truncate(const FormulaPtr& f, std::size_t h) {
  return std::visit(
      [&](const auto& n) -> FormulaPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Atom>) {
          return f;
        } else if constexpr (std::is_same_v<T, node::Assoc>) {
          auto b = truncate(n.body, h);
          return b != n.body ? assoc(b, n.pv) : f;
        } else if constexpr (std::is_same_v<T, node::Not>) {
          auto b = truncate(n.body, h);
          return b != n.body ? negate(b) : f;
        } else if constexpr (std::is_same_v<T, node::Next>) {
          auto b = truncate(n.body, h);
          return b != n.body ? next(b) : f;
        } else if constexpr (std::is_same_v<T, node::And>) {
          auto l = truncate(n.lhs, h), r = truncate(n.rhs, h);
          return (l != n.lhs || r != n.rhs) ? conj(l, r) : f;
        } else if constexpr (std::is_same_v<T, node::Until>) {
          auto l = truncate(n.lhs, h), r = truncate(n.rhs, h);
          if (l == n.lhs && r == n.rhs && n.bound) return f;
          return until(l, r, n.bound ? n.bound : std::optional<std::size_t>(h));
        } else {
          auto l = truncate(n.lhs, h), r = truncate(n.rhs, h);
          return (l != n.lhs || r != n.rhs) ? compare(l, n.rel, r) : f;
        }
      },
      f->node);
}

TermPtr truncate(const TermPtr& t, std::size_t h) {
  if (auto* fn = std::get_if<node::Func>(&t->node)) {
    std::vector<TermPtr> args;
    bool changed = false;
    for (const auto& a : fn->args) {
      args.push_back(truncate(a, h));
      changed |= args.back() != a;
    }
    return changed ? func(fn->op, std::move(args)) : t;
  }
  if (auto* p = std::get_if<node::Prob>(&t->node)) {
    auto b = truncate(p->body, h);
    return b != p->body ? prob(p->vars, b) : t;
  }
  return t;
}

class Evaluator {
 public:
  Evaluator(const PropositionTable& props, const CompareOracle& oracle) : props_(props), oracle_(oracle) {}

  bool eval(const Formula& f, const Assignment& v, std::size_t shift) const {
    return std::visit([&](const auto& n) { return eval_node(n, v, shift); }, f.node);
  }

 private:
  const PropositionTable& props_;
  const CompareOracle& oracle_;

  static const Binding& lookup(const Assignment& v, const PathVar& pv) {
    const Binding* b = v.find(pv);
    if (!b || !b->path) throw EvalError("path variable '" + pv + "' is not assigned");
    return *b;
  }

  static std::size_t position(const Binding& b, std::size_t shift, const PathVar& pv) {
    const std::size_t at = b.offset + shift;
    if (at >= b.path->size())
      throw EvalError("path assigned to '" + pv + "' is too short: position " + std::to_string(at) +
                      " requested, length " + std::to_string(b.path->size()));
    return at;
  }

  bool eval_node(const node::Atom& n, const Assignment& v, std::size_t shift) const {
    const Binding& b = lookup(v, n.pv);
    return b.path->labels[position(b, shift, n.pv)].contains(props_.index(n.ap));
  }

  bool eval_node(const node::Assoc& n, const Assignment& v, std::size_t shift) const {
    const Binding& b = lookup(v, n.pv);
    Assignment inner;
    inner.set_fallback(Binding{b.path, position(b, shift, n.pv)});
    return eval(*n.body, inner, 0);
  }

  bool eval_node(const node::Not& n, const Assignment& v, std::size_t shift) const {
    return !eval(*n.body, v, shift);
  }

  bool eval_node(const node::And& n, const Assignment& v, std::size_t shift) const {
    return eval(*n.lhs, v, shift) && eval(*n.rhs, v, shift);
  }

  bool eval_node(const node::Next& n, const Assignment& v, std::size_t shift) const {
    return eval(*n.body, v, shift + 1);
  }

  bool eval_node(const node::Until& n, const Assignment& v, std::size_t shift) const {
    if (!n.bound) throw EvalError("unbounded until must be truncated to a horizon before evaluation");
    for (std::size_t i = 0; i <= *n.bound; ++i) {
      if (eval(*n.rhs, v, shift + i)) return true;
      if (i == *n.bound || !eval(*n.lhs, v, shift + i)) return false;
    }
    return false;
  }

  bool eval_node(const node::Compare& n, const Assignment& v, std::size_t shift) const {
    // Constant comparisons (notably `true`) need neither the oracle nor the paths.
    static const node::Compare* const truth_node = &std::get<node::Compare>(truth()->node);
    if (&n == truth_node) return true;
    const auto* a = std::get_if<node::Const>(&n.lhs->node);
    const auto* b = std::get_if<node::Const>(&n.rhs->node);
    if (a && b) {
      // Cross-multiplied to avoid the normalising arithmetic of rational comparison.
      using boost::multiprecision::denominator;
      using boost::multiprecision::numerator;
      const boost::multiprecision::cpp_int l = numerator(a->value) * denominator(b->value);
      const boost::multiprecision::cpp_int r = numerator(b->value) * denominator(a->value);
      switch (n.rel) {
        case Relation::Less: return l < r;
        case Relation::Greater: return l > r;
        case Relation::Equal: return l == r;
        case Relation::LessEq: return l <= r;
        case Relation::GreaterEq: return l >= r;
      }
    }
    if (!oracle_) throw EvalError("comparison reached without a probability oracle");
    return oracle_(n, shift ? v.shifted(shift) : v);
  }
};

}  // namespace

FormulaPtr truncate_unbounded(const FormulaPtr& f, std::size_t horizon) { return truncate(f, horizon); }

namespace {

// Variables read directly on the current paths; comparisons read nothing here.
void read_vars(const Formula& f, std::vector<const PathVar*>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Atom> || std::is_same_v<T, node::Assoc>) {
          out.push_back(&n.pv);
        } else if constexpr (std::is_same_v<T, node::Not> || std::is_same_v<T, node::Next>) {
          read_vars(*n.body, out);
        } else if constexpr (std::is_same_v<T, node::And> || std::is_same_v<T, node::Until>) {
          read_vars(*n.lhs, out);
          read_vars(*n.rhs, out);
        }
      },
      f.node);
}

}  // namespace

bool eval_path_formula(const Formula& f, const Assignment& v, const PropositionTable& props,
                       const CompareOracle& oracle) {
  // Paths must cover every bound up front, whichever positions the evaluation happens to reach.
  if (const auto need = read_horizon(f)) {
    std::vector<const PathVar*> vars;
    read_vars(f, vars);
    for (const PathVar* pv : vars) {
      const Binding* b = v.find(*pv);
      if (!b || !b->path) throw EvalError("path variable '" + *pv + "' is not assigned");
      if (b->offset + *need >= b->path->size())
        throw EvalError("path assigned to '" + *pv + "' is too short for the formula's bounds: " +
                        std::to_string(b->path->size() - std::min(b->offset, b->path->size())) +
                        " positions left, " + std::to_string(*need + 1) + " needed");
    }
  }
  return Evaluator(props, oracle).eval(f, v, 0);
}

}  // namespace hypersmc
