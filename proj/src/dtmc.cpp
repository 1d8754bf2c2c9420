#include "hypersmc/dtmc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hypersmc/error.hpp"

namespace hypersmc {

std::optional<std::size_t> ModelSampler::proposition_index(std::string_view name) const {
  const auto& props = propositions();
  auto it = std::find(props.begin(), props.end(), name);
  if (it == props.end()) return std::nullopt;
  return static_cast<std::size_t>(it - props.begin());
}

std::vector<std::string> ModelSampler::label_names(const StateToken& state) const {
  std::vector<std::string> out;
  const auto set = labels(state);
  const auto& props = propositions();
  for (std::size_t i = 0; i < props.size(); ++i)
    if (set.contains(i)) out.push_back(props[i]);
  return out;
}

Path sample_path_from(const ModelSampler& model, const StateToken& start, Rng& rng, std::size_t horizon) {
  Path path;
  path.states.reserve(horizon + 1);
  path.labels.reserve(horizon + 1);
  path.states.push_back(start);
  path.labels.push_back(model.labels(start));
  for (std::size_t i = 0; i < horizon; ++i) {
    path.states.push_back(model.step(path.states.back(), rng));
    path.labels.push_back(model.labels(path.states.back()));
  }
  return path;
}

Path sample_path(const ModelSampler& model, Rng& rng, std::size_t horizon) {
  return sample_path_from(model, model.initial_state(), rng, horizon);
}

std::vector<Path> sample_path_tuple(const ModelSampler& model, std::size_t n, Rng& rng, std::size_t horizon) {
  std::vector<Path> out;
  out.reserve(n);
  const std::uint64_t base = rng();
  for (std::size_t i = 0; i < n; ++i) {
    Rng sub = make_rng(base, {i});
    out.push_back(sample_path(model, sub, horizon));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kRowTolerance = 1e-9;

std::string describe(std::size_t s) { return "state " + std::to_string(s); }

}  // namespace

Dtmc::Dtmc(std::size_t num_states, std::size_t initial, std::vector<std::string> propositions,
           std::vector<std::vector<Transition>> transitions, std::vector<LabelSet> labels)
    : initial_(initial),
      propositions_(std::move(propositions)),
      transitions_(std::move(transitions)),
      labels_(std::move(labels)) {
  if (num_states == 0) throw Error("model has no states");
  if (transitions_.size() != num_states) throw Error("transition table size does not match state count");
  if (labels_.empty()) labels_.resize(num_states);
  if (labels_.size() != num_states) throw Error("label table size does not match state count");
  if (initial_ >= num_states) throw Error("initial state " + std::to_string(initial_) + " out of range");
  if (propositions_.size() > LabelSet::kMaxPropositions)
    throw Error("at most " + std::to_string(LabelSet::kMaxPropositions) + " propositions are supported");
  std::set<std::string> seen;
  for (const auto& p : propositions_)
    if (!seen.insert(p).second) throw Error("duplicate proposition '" + p + "'");
  const std::uint64_t allowed =
      propositions_.size() == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << propositions_.size()) - 1);
  for (std::size_t s = 0; s < num_states; ++s) {
    if (labels_[s].bits() & ~allowed) throw Error(describe(s) + " carries an undeclared proposition");
    double sum = 0.0;
    std::set<std::size_t> targets;
    for (const auto& t : transitions_[s]) {
      if (t.target >= num_states) throw Error(describe(s) + " has dangling successor " + std::to_string(t.target));
      if (!(t.probability > 0.0) || t.exact <= 0) throw Error(describe(s) + " has a zero-probability transition");
      if (t.probability > 1.0 + kRowTolerance) throw Error(describe(s) + " has a transition probability above 1");
      if (!targets.insert(t.target).second) throw Error(describe(s) + " has a duplicate transition");
      sum += t.probability;
    }
    if (std::abs(sum - 1.0) > kRowTolerance) {
      std::ostringstream msg;
      msg << describe(s) << ": outgoing probabilities sum to " << sum << ", expected 1";
      throw Error(msg.str());
    }
  }
}

std::optional<std::size_t> Dtmc::proposition_index(std::string_view name) const {
  auto it = std::find(propositions_.begin(), propositions_.end(), name);
  if (it == propositions_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - propositions_.begin());
}

std::string Dtmc::to_text() const {
  std::ostringstream out;
  out << "dtmc\nstates " << num_states() << "\ninitial " << initial_ << "\nprops";
  for (const auto& p : propositions_) out << ' ' << p;
  out << '\n';
  for (std::size_t s = 0; s < num_states(); ++s)
    for (const auto& t : transitions_[s]) out << "trans " << s << ' ' << t.target << ' ' << to_string(t.exact) << '\n';
  for (std::size_t s = 0; s < num_states(); ++s) {
    if (labels_[s].empty()) continue;
    out << "label " << s;
    for (std::size_t i = 0; i < propositions_.size(); ++i)
      if (labels_[s].contains(i)) out << ' ' << propositions_[i];
    out << '\n';
  }
  return out.str();
}

std::string to_string(const Rational& value) {
  const auto num = boost::multiprecision::numerator(value);
  const auto den = boost::multiprecision::denominator(value);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

Rational parse_probability(std::string_view text) {
  using boost::multiprecision::cpp_int;
  auto digits_only = [](std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto a = text.substr(0, slash), b = text.substr(slash + 1);
    if (!digits_only(a) || !digits_only(b)) throw Error("malformed rational literal '" + std::string(text) + "'");
    auto integer = [](std::string_view s) {
      s.remove_prefix(std::min(s.find_first_not_of('0'), s.size()));
      return s.empty() ? cpp_int(0) : cpp_int(std::string(s));
    };
    cpp_int den = integer(b);
    if (den == 0) throw Error("zero denominator in '" + std::string(text) + "'");
    return Rational(integer(a), den);
  }
  std::string_view mant = text;
  long long exponent = 0;
  if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
    mant = text.substr(0, e);
    auto ex = text.substr(e + 1);
    bool neg = false;
    if (!ex.empty() && (ex[0] == '+' || ex[0] == '-')) {
      neg = ex[0] == '-';
      ex.remove_prefix(1);
    }
    if (!digits_only(ex) || ex.size() > 6) throw Error("malformed exponent in '" + std::string(text) + "'");
    exponent = std::stoll(std::string(ex));
    if (neg) exponent = -exponent;
  }
  std::string whole(mant), frac;
  if (auto dot = mant.find('.'); dot != std::string_view::npos) {
    whole = std::string(mant.substr(0, dot));
    frac = std::string(mant.substr(dot + 1));
  }
  if ((whole.empty() && frac.empty()) || (!whole.empty() && !digits_only(whole)) || (!frac.empty() && !digits_only(frac)))
    throw Error("malformed number '" + std::string(text) + "'");
  // cpp_int reads a leading zero as an octal prefix
  std::string digits = whole + frac;
  digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size()));
  cpp_int num(digits.empty() ? std::string("0") : digits);
  exponent -= static_cast<long long>(frac.size());
  cpp_int scale = boost::multiprecision::pow(cpp_int(10), static_cast<unsigned>(std::llabs(exponent)));
  return exponent >= 0 ? Rational(num * scale) : Rational(num, scale);
}

// ---------------------------------------------------------------------------

namespace {

struct Token {
  std::string text;
  std::size_t column;
};

std::vector<Token> split_line(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == '#') break;
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])) && line[j] != '#') ++j;
    out.push_back({std::string(line.substr(i, j - i)), i + 1});
    i = j;
  }
  return out;
}

struct Located {
  std::size_t line = 0;
  std::size_t column = 0;
};

}  // namespace

Dtmc parse_model(std::string_view text) {
  std::optional<std::size_t> num_states, initial;
  Located states_at, initial_at;
  std::vector<std::string> props;
  bool have_props = false, have_header = false;
  struct Edge {
    std::size_t src, dst;
    Rational exact;
    Located at;
  };
  std::vector<Edge> edges;
  struct LabelLine {
    std::size_t state;
    std::vector<Token> names;
    Located at;
  };
  std::vector<LabelLine> label_lines;

  auto parse_index = [](const Token& tok, std::size_t line) -> std::size_t {
    if (tok.text.empty() || !std::all_of(tok.text.begin(), tok.text.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
        tok.text.size() > 18)
      throw ParseError("expected a state id, got '" + tok.text + "'", line, tok.column);
    return static_cast<std::size_t>(std::stoull(tok.text));
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    auto toks = split_line(line);
    if (toks.empty()) continue;
    const auto& kw = toks[0].text;
    auto need = [&](std::size_t n) {
      if (toks.size() < n) throw ParseError("'" + kw + "' expects more arguments", line_no, toks.back().column);
    };
    auto exact = [&](std::size_t n) {
      if (toks.size() != n) throw ParseError("wrong number of arguments for '" + kw + "'", line_no, toks[0].column);
    };
    if (!have_header) {
      if (kw != "dtmc" || toks.size() != 1) throw ParseError("model must start with 'dtmc'", line_no, toks[0].column);
      have_header = true;
      continue;
    }
    if (kw == "states") {
      exact(2);
      if (num_states) throw ParseError("duplicate state declaration", line_no, toks[0].column);
      num_states = parse_index(toks[1], line_no);
      if (*num_states == 0) throw ParseError("state count must be positive", line_no, toks[1].column);
      states_at = {line_no, toks[0].column};
    } else if (kw == "initial") {
      exact(2);
      if (initial) throw ParseError("duplicate initial declaration", line_no, toks[0].column);
      initial = parse_index(toks[1], line_no);
      initial_at = {line_no, toks[1].column};
    } else if (kw == "props") {
      if (have_props) throw ParseError("duplicate props declaration", line_no, toks[0].column);
      have_props = true;
      for (std::size_t i = 1; i < toks.size(); ++i) {
        if (std::find(props.begin(), props.end(), toks[i].text) != props.end())
          throw ParseError("duplicate proposition '" + toks[i].text + "'", line_no, toks[i].column);
        props.push_back(toks[i].text);
      }
      if (props.size() > LabelSet::kMaxPropositions)
        throw ParseError("too many propositions (limit 64)", line_no, toks[0].column);
    } else if (kw == "trans") {
      exact(4);
      Edge e{parse_index(toks[1], line_no), parse_index(toks[2], line_no), 0, {line_no, toks[0].column}};
      try {
        e.exact = parse_probability(toks[3].text);
      } catch (const Error& err) {
        throw ParseError(err.what(), line_no, toks[3].column);
      }
      if (e.exact <= 0) throw ParseError("zero-probability transitions must be omitted", line_no, toks[3].column);
      if (e.exact > 1) throw ParseError("probability above 1", line_no, toks[3].column);
      edges.push_back(std::move(e));
    } else if (kw == "label") {
      need(2);
      LabelLine l{parse_index(toks[1], line_no), {toks.begin() + 2, toks.end()}, {line_no, toks[1].column}};
      label_lines.push_back(std::move(l));
    } else {
      throw ParseError("unknown directive '" + kw + "'", line_no, toks[0].column);
    }
  }
  if (!have_header) throw ParseError("empty model", 1, 1);
  if (!num_states) throw ParseError("missing 'states' declaration", line_no, 1);
  if (!initial) throw ParseError("missing 'initial' declaration", line_no, 1);
  const std::size_t n = *num_states;
  if (*initial >= n) throw ParseError("dangling state id " + std::to_string(*initial), initial_at.line, initial_at.column);

  std::vector<std::vector<Transition>> rows(n);
  std::vector<Located> first_edge(n);
  for (const auto& e : edges) {
    if (e.src >= n) throw ParseError("dangling state id " + std::to_string(e.src), e.at.line, e.at.column);
    if (e.dst >= n) throw ParseError("dangling state id " + std::to_string(e.dst), e.at.line, e.at.column);
    for (const auto& t : rows[e.src])
      if (t.target == e.dst) throw ParseError("duplicate transition", e.at.line, e.at.column);
    if (rows[e.src].empty()) first_edge[e.src] = e.at;
    rows[e.src].push_back({e.dst, e.exact, static_cast<double>(e.exact)});
  }
  for (std::size_t s = 0; s < n; ++s) {
    double sum = 0.0;
    for (const auto& t : rows[s]) sum += t.probability;
    if (std::abs(sum - 1.0) > kRowTolerance) {
      std::ostringstream msg;
      msg << "row-sum violation at state " << s << ": outgoing probabilities sum to " << sum;
      Located at = rows[s].empty() ? states_at : first_edge[s];
      throw ParseError(msg.str(), at.line, at.column);
    }
  }
  std::vector<LabelSet> labels(n);
  std::vector<bool> labelled(n, false);
  for (const auto& l : label_lines) {
    if (l.state >= n) throw ParseError("dangling state id " + std::to_string(l.state), l.at.line, l.at.column);
    if (labelled[l.state]) throw ParseError("duplicate label declaration", l.at.line, l.at.column);
    labelled[l.state] = true;
    for (const auto& name : l.names) {
      auto it = std::find(props.begin(), props.end(), name.text);
      if (it == props.end()) throw ParseError("undeclared proposition '" + name.text + "'", l.at.line, name.column);
      labels[l.state].insert(static_cast<std::size_t>(it - props.begin()));
    }
  }
  return Dtmc(n, *initial, std::move(props), std::move(rows), std::move(labels));
}

Dtmc load_model(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open model file '" + file.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_model(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(file.string() + ": " + std::string(e.what()).substr(std::string(e.what()).find(' ') + 1),
                     e.line(), e.column());
  }
}

// ---------------------------------------------------------------------------

ExplicitSampler::ExplicitSampler(Dtmc dtmc) : dtmc_(std::move(dtmc)) {
  rows_.reserve(dtmc_.num_states());
  for (std::size_t s = 0; s < dtmc_.num_states(); ++s) {
    std::vector<double> w;
    for (const auto& t : dtmc_.successors(s)) w.push_back(t.probability);
    rows_.emplace_back(w.begin(), w.end());
  }
}

StateToken ExplicitSampler::initial_state() const { return explicit_token(dtmc_.initial()); }

StateToken ExplicitSampler::step(const StateToken& state, Rng& rng) const {
  const auto s = static_cast<std::size_t>(state[0]);
  const auto& succ = dtmc_.successors(s);
  if (succ.size() == 1) return explicit_token(succ[0].target);
  std::discrete_distribution<std::size_t> pick;
  return explicit_token(succ[pick(rng, rows_[s])].target);
}

LabelSet ExplicitSampler::labels(const StateToken& state) const {
  return dtmc_.labels(static_cast<std::size_t>(state[0]));
}

// ---------------------------------------------------------------------------

std::vector<WeightedPath> enumerate_paths_from(const Dtmc& dtmc, std::size_t start, std::size_t horizon,
                                               std::size_t cap) {
  if (start >= dtmc.num_states()) throw Error("start state out of range");
  std::vector<WeightedPath> frontier;
  WeightedPath root;
  root.path.states.push_back(explicit_token(start));
  root.path.labels.push_back(dtmc.labels(start));
  root.exact = 1;
  root.probability = 1.0;
  frontier.push_back(std::move(root));
  for (std::size_t step = 0; step < horizon; ++step) {
    std::size_t next_size = 0;
    for (const auto& wp : frontier) next_size += dtmc.successors(static_cast<std::size_t>(wp.path.states.back()[0])).size();
    if (next_size > cap)
      throw Error("path enumeration exceeds the cap of " + std::to_string(cap) + " paths");
    std::vector<WeightedPath> next;
    next.reserve(next_size);
    for (auto& wp : frontier) {
      const auto& succ = dtmc.successors(static_cast<std::size_t>(wp.path.states.back()[0]));
      for (std::size_t i = 0; i < succ.size(); ++i) {
        WeightedPath ext = (i + 1 == succ.size()) ? std::move(wp) : wp;
        ext.path.states.push_back(explicit_token(succ[i].target));
        ext.path.labels.push_back(dtmc.labels(succ[i].target));
        ext.exact *= succ[i].exact;
        ext.probability *= succ[i].probability;
        next.push_back(std::move(ext));
      }
    }
    frontier = std::move(next);
  }
  return frontier;
}

std::vector<WeightedPath> enumerate_paths(const Dtmc& dtmc, std::size_t horizon, std::size_t cap) {
  return enumerate_paths_from(dtmc, dtmc.initial(), horizon, cap);
}

}  // namespace hypersmc
