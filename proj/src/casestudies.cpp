#include "hypersmc/casestudies.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hypersmc/error.hpp"
#include "hypersmc/parser.hpp"

namespace hypersmc {
namespace {

std::string number(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

std::vector<double> cumulative(const std::vector<double>& w) {
  std::vector<double> cdf(w.size());
  std::partial_sum(w.begin(), w.end(), cdf.begin());
  for (auto& c : cdf) c /= cdf.back();
  return cdf;
}

std::size_t draw_index(const std::vector<double>& cdf, Rng& rng) {
  const double u = uniform01(rng);
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

std::size_t uniform_below(std::size_t n, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::uint64_t field(std::uint64_t w, unsigned lo, unsigned bits) { return (w >> lo) & ((std::uint64_t{1} << bits) - 1); }
void set_field(std::uint64_t& w, unsigned lo, unsigned bits, std::uint64_t v) {
  const std::uint64_t mask = ((std::uint64_t{1} << bits) - 1) << lo;
  w = (w & ~mask) | ((v << lo) & mask);
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// Dining cryptographers
//
// word 0: position [0,16), payer [16,32), coin 1 [32], previous coin [33], shared coin [34],
// shared coin flipped [35], parity of disagree announcements [36]

namespace {
constexpr unsigned kPos = 0, kPayer = 16, kFirst = 32, kPrev = 33, kShared = 34, kRevealed = 35, kParity = 36;
enum DiningProp : std::size_t { kC0, kCi, kCj, kR, kS, kP, kDone };
}  // namespace

void DiningConfig::validate() const {
  if (n < 3) throw ConfigError("dining cryptographers needs at least 3 cryptographers");
  if (n > 60000) throw ConfigError("at most 60000 cryptographers are supported");
  if (payer == PayerMode::Fixed && (fixed_payer < 1 || fixed_payer > n))
    throw ConfigError("fixed payer must be a cryptographer 1..n");
  const auto [i, j] = secret_pair;
  if (i < 1 || i > n || j < 1 || j > n) throw ConfigError("secret pair indices must lie in 1..n");
  if (i == j) throw ConfigError("secret pair needs two different cryptographers");
  if (j != i % n + 1 && i != j % n + 1) throw ConfigError("secret pair must be neighbours sharing a coin");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
}

std::vector<bool> dining_announcements(const std::vector<bool>& coins, std::size_t payer) {
  const std::size_t n = coins.size();
  std::vector<bool> disagree(n);
  for (std::size_t k = 1; k <= n; ++k) {
    const bool own = coins[k - 1], left = coins[(k + n - 2) % n];
    disagree[k - 1] = (own != left) != (payer == k);
  }
  return disagree;
}

DiningSampler::DiningSampler(DiningConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  const auto [i, j] = cfg_.secret_pair;
  coin_ = (j == i % cfg_.n + 1) ? i : j;
  const std::string pair = std::to_string(i) + "_" + std::to_string(j);
  props_ = {"C0", "C" + std::to_string(i), "C" + std::to_string(j), "R_" + pair, "S_" + pair, "P", "done"};
}

StateToken DiningSampler::initial_state() const { return StateToken{0}; }

StateToken DiningSampler::step(const StateToken& state, Rng& rng) const {
  std::uint64_t w = state[0];
  const std::size_t pos = field(w, kPos, 16), n = cfg_.n;
  if (pos == n + 1) return state;
  if (pos == 0) {
    std::size_t payer = 0;
    if (cfg_.payer == PayerMode::Uniform) payer = 1 + uniform_below(n, rng);
    if (cfg_.payer == PayerMode::Fixed) payer = cfg_.fixed_payer;
    set_field(w, kPayer, 16, payer);
  } else {
    const std::size_t k = pos;
    const std::size_t payer = field(w, kPayer, 16);
    const std::uint64_t c = rng() & 1U;
    if (k == 1) set_field(w, kFirst, 1, c);
    if (k >= 2) w ^= (c ^ field(w, kPrev, 1) ^ (payer == k ? 1U : 0U)) << kParity;
    // Cryptographer 1 speaks once its left neighbour's coin, the last one, is known.
    if (k == n) w ^= (field(w, kFirst, 1) ^ c ^ (payer == 1 ? 1U : 0U)) << kParity;
    if (k == coin_) {
      set_field(w, kShared, 1, c);
      set_field(w, kRevealed, 1, 1);
    }
    set_field(w, kPrev, 1, c);
  }
  set_field(w, kPos, 16, pos + 1);
  return StateToken{w};
}

LabelSet DiningSampler::labels(const StateToken& state) const {
  const std::uint64_t w = state[0];
  const std::size_t pos = field(w, kPos, 16);
  LabelSet l;
  if (pos == 0) return l;
  const std::size_t payer = field(w, kPayer, 16);
  if (payer == 0) l.insert(kC0);
  if (payer == cfg_.secret_pair.first) l.insert(kCi);
  if (payer == cfg_.secret_pair.second) l.insert(kCj);
  if (field(w, kRevealed, 1)) {
    l.insert(kR);
    if (field(w, kShared, 1)) l.insert(kS);
  }
  if (pos == cfg_.n + 1) {
    l.insert(kDone);
    if (field(w, kParity, 1)) l.insert(kP);
  }
  return l;
}

std::size_t DiningSampler::payer_of(const StateToken& s) { return field(s[0], kPayer, 16); }
bool DiningSampler::parity_of(const StateToken& s) { return field(s[0], kParity, 1) != 0; }

CaseStudy dining_case(const DiningConfig& cfg) {
  auto model = std::make_shared<DiningSampler>(cfg);
  const std::size_t h = cfg.n + 1;
  const auto& props = model->propositions();
  const std::string& r = props[kR];
  const std::string& s = props[kS];
  const std::string bound = "<=" + std::to_string(h);
  auto tail = [&](const std::string& v) { return "F" + bound + " P@" + v; };
  auto unset = [&](const std::string& v) {
    return "P[" + v + "](F" + bound + " ((" + r + "@" + v + " & !" + s + "@" + v + ") & " + tail(v) + "))";
  };
  auto set = [&](const std::string& v) {
    return "P[" + v + "](F" + bound + " (" + s + "@" + v + " & " + tail(v) + "))";
  };
  const std::string approx = " ~[" + number(cfg.epsilon) + "] ";
  const std::string text = unset("p1") + approx + set("p2") + approx + unset("p3") + approx + set("p4");
  return CaseStudy{model, parse_closed_formula(text), text, h};
}

// ---------------------------------------------------------------------------------------------
// Threads
//
// word 0: started [0], h [1], l [2], unfinished threads [8,16); words 1..: remaining iterations,
// one byte per thread

namespace {
enum ThreadsProp : std::size_t { kH0, kH1, kL0, kL1, kF };

unsigned byte_at(const StateToken& s, std::size_t k) {
  return static_cast<unsigned>((s[1 + (k - 1) / 8] >> (8 * ((k - 1) % 8))) & 0xFFU);
}
void set_byte(StateToken& s, std::size_t k, unsigned v) {
  auto& w = s[1 + (k - 1) / 8];
  const unsigned sh = 8 * ((k - 1) % 8);
  w = (w & ~(std::uint64_t{0xFF} << sh)) | (std::uint64_t{v} << sh);
}
}  // namespace

void ThreadsConfig::validate() const {
  if (n < 1) throw ConfigError("at least one thread is required");
  if (n > ThreadsSampler::kMaxThreads)
    throw ConfigError("at most " + std::to_string(ThreadsSampler::kMaxThreads) + " threads are supported");
  if (low != 0 && low != 1) throw ConfigError("low value must be 0 or 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
}

ThreadsSampler::ThreadsSampler(ThreadsConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  props_ = {"H0", "H1", "L0", "L1", "F"};
}

StateToken ThreadsSampler::initial_state() const {
  StateToken s(1 + (cfg_.n + 7) / 8, 0);
  return s;
}

StateToken ThreadsSampler::step(const StateToken& state, Rng& rng) const {
  StateToken s = state;
  std::uint64_t& w = s[0];
  if (!field(w, 0, 1)) {
    const std::uint64_t h = rng() & 1U;
    set_field(w, 0, 1, 1);
    set_field(w, 1, 1, h);
    for (std::size_t k = 1; k <= cfg_.n; ++k) set_byte(s, k, static_cast<unsigned>((h + 1) * k));
    set_field(w, 8, 8, cfg_.n);
    return s;
  }
  const std::size_t unfinished = field(w, 8, 8);
  if (unfinished == 0) return s;
  std::size_t pick = uniform_below(unfinished, rng);
  for (std::size_t k = 1; k <= cfg_.n; ++k) {
    const unsigned left = byte_at(s, k);
    if (left == 0) continue;
    if (pick-- != 0) continue;
    set_byte(s, k, left - 1);
    if (left == 1) set_field(w, 8, 8, unfinished - 1);
    set_field(w, 2, 1, k % 2);
    break;
  }
  return s;
}

LabelSet ThreadsSampler::labels(const StateToken& s) const {
  const std::uint64_t w = s[0];
  LabelSet l;
  l.insert(field(w, 2, 1) ? kL1 : kL0);
  if (field(w, 0, 1)) {
    l.insert(field(w, 1, 1) ? kH1 : kH0);
    if (field(w, 8, 8) == 0) l.insert(kF);
  }
  return l;
}

unsigned ThreadsSampler::remaining(const StateToken& s, std::size_t k) { return byte_at(s, k); }

CaseStudy threads_case(const ThreadsConfig& cfg) {
  auto model = std::make_shared<ThreadsSampler>(cfg);
  const std::size_t h = cfg.n * (cfg.n + 1) + 1;
  const std::string low = "L" + std::to_string(cfg.low);
  auto side = [&](const std::string& v, const char* high) {
    return "P[" + v + "]((X " + high + "@" + v + ") => F<=" + std::to_string(h) + " (F@" + v + " & " + low + "@" + v +
           "))";
  };
  const std::string text = side("p1", "H0") + " ~[" + number(cfg.epsilon) + "] " + side("p2", "H1");
  return CaseStudy{model, parse_closed_formula(text), text, h};
}

// ---------------------------------------------------------------------------------------------
// Cache
//
// word 0: outcome of the last access (1 hit, 2 miss) [0,2), occupancy [8,40); words 1..: bitset of
// cached blocks

namespace {
enum CacheProp : std::size_t { kB, kHit, kMiss };
}

std::vector<double> discretized_normal(std::size_t blocks, double mean, double sd) {
  std::vector<double> w(blocks);
  auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0))); };
  for (std::size_t b = 0; b < blocks; ++b) {
    const double lo = b == 0 ? 0.0 : cdf(static_cast<double>(b) - 0.5);
    const double hi = b + 1 == blocks ? 1.0 : cdf(static_cast<double>(b) + 0.5);
    w[b] = hi - lo;
  }
  return w;
}

void CacheConfig::validate() const {
  if (lines < 1) throw ConfigError("cache needs at least one line");
  if (blocks < lines) throw ConfigError("program must have at least as many blocks as the cache has lines");
  if (blocks > (std::size_t{1} << 20)) throw ConfigError("too many blocks");
  if (window < 1) throw ConfigError("window must be at least 1");
  if (sd < 0.0) throw ConfigError("standard deviation must be non-negative");
  if (!access.empty()) {
    if (access.size() != blocks) throw ConfigError("access distribution must have one weight per block");
    double total = 0.0;
    for (double p : access) {
      if (!(p >= 0.0)) throw ConfigError("access weights must be non-negative");
      total += p;
    }
    if (!(total > 0.0)) throw ConfigError("access weights must not all be zero");
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
}

std::vector<double> CacheConfig::access_distribution() const {
  if (!access.empty()) return access;
  const double s = sd > 0.0 ? sd : std::sqrt(static_cast<double>(lines)) / 2.0;
  return discretized_normal(blocks, static_cast<double>(blocks) / 2.0, s);
}

CacheSampler::CacheSampler(CacheConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  cdf_ = cumulative(cfg_.access_distribution());
  props_ = {"B", "H", "M"};
}

StateToken CacheSampler::initial_state() const { return StateToken(1 + (cfg_.blocks + 63) / 64, 0); }

bool CacheSampler::cached(const StateToken& s, std::size_t block) { return (s[1 + block / 64] >> (block % 64)) & 1U; }

std::size_t CacheSampler::occupancy(const StateToken& s) { return field(s[0], 8, 32); }

StateToken CacheSampler::access(const StateToken& state, std::size_t block, Rng& rng) const {
  StateToken s = state;
  std::uint64_t& w = s[0];
  const std::size_t used = occupancy(s);
  if (cached(s, block)) {
    set_field(w, 0, 2, 1);
    return s;
  }
  set_field(w, 0, 2, 2);
  if (used < cfg_.lines) {
    set_field(w, 8, 32, used + 1);
  } else {
    // Evict the victim-th cached block.
    std::size_t victim = uniform_below(used, rng);
    for (std::size_t i = 1; i < s.size(); ++i) {
      const auto c = static_cast<std::size_t>(std::popcount(s[i]));
      if (victim >= c) {
        victim -= c;
        continue;
      }
      std::uint64_t bits = s[i];
      for (; victim > 0; --victim) bits &= bits - 1;
      s[i] &= ~(bits & (~bits + 1));
      break;
    }
  }
  s[1 + block / 64] |= std::uint64_t{1} << (block % 64);
  return s;
}

StateToken CacheSampler::step(const StateToken& state, Rng& rng) const {
  return access(state, draw_index(cdf_, rng), rng);
}

LabelSet CacheSampler::labels(const StateToken& s) const {
  LabelSet l;
  switch (field(s[0], 0, 2)) {
    case 0: l.insert(kB); break;
    case 1: l.insert(kHit); break;
    default: l.insert(kMiss); break;
  }
  return l;
}

CaseStudy cache_case(const CacheConfig& cfg) {
  auto model = std::make_shared<CacheSampler>(cfg);
  const std::size_t n = cfg.effective_warmup(), t = cfg.window;
  auto at = [](std::size_t k, const std::string& a) {
    if (k == 0) return a;
    return "X^" + std::to_string(k) + " " + a;
  };
  std::ostringstream one_miss;
  for (std::size_t m = 0; m < t; ++m) {
    if (m) one_miss << " | ";
    one_miss << "(";
    for (std::size_t k = 0; k < t; ++k) {
      if (k) one_miss << " & ";
      one_miss << at(k, k == m ? "M@p2" : "H@p2");
    }
    one_miss << ")";
  }
  const std::string text = "P[p1](X^" + std::to_string(n) + " G<=" + std::to_string(t - 1) + " H@p1) > P[p2](X^" +
                           std::to_string(n) + " (" + one_miss.str() + ")) + " + number(cfg.epsilon);
  return CaseStudy{model, parse_closed_formula(text), text, n + t - 1};
}

// ---------------------------------------------------------------------------------------------
// Timing
//
// word 0: position [0,32), secret chosen [32], secret [33]; word 1: termination position

namespace {
enum TimingProp : std::size_t { kS1, kS2, kFin };

void check_distribution(const std::vector<std::pair<std::size_t, double>>& d, const char* name) {
  if (d.empty()) throw ConfigError(std::string("termination distribution ") + name + " is empty");
  double total = 0.0;
  for (const auto& [pos, p] : d) {
    if (pos < 2) throw ConfigError(std::string("termination positions must be at least 2 in ") + name);
    if (pos > 1'000'000) throw ConfigError(std::string("termination position too large in ") + name);
    if (!(p >= 0.0)) throw ConfigError(std::string("negative probability in ") + name);
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError(std::string("probabilities in ") + name + " must sum to 1");
}
}  // namespace

void TimingConfig::validate() const {
  check_distribution(s1, "S1");
  check_distribution(s2, "S2");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
}

std::vector<std::pair<std::size_t, double>> parse_step_distribution(const std::string& text) {
  std::vector<std::pair<std::size_t, double>> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("expected pos:prob in '" + item + "'");
    try {
      std::size_t used = 0;
      const std::string pos_text = item.substr(0, colon), p_text = item.substr(colon + 1);
      const auto pos = std::stoull(pos_text, &used);
      if (used != pos_text.size()) throw std::invalid_argument(pos_text);
      const double p = static_cast<double>(parse_probability(p_text));
      out.emplace_back(static_cast<std::size_t>(pos), p);
    } catch (const std::logic_error&) {
      throw ConfigError("bad entry '" + item + "' in termination distribution");
    }
  }
  if (out.empty()) throw ConfigError("empty termination distribution");
  return out;
}

TimingSampler::TimingSampler(TimingConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  auto weights = [](const auto& d) {
    std::vector<double> w;
    for (const auto& e : d) w.push_back(e.second);
    return cumulative(w);
  };
  cdf1_ = weights(cfg_.s1);
  cdf2_ = weights(cfg_.s2);
  props_ = {"S1", "S2", "F"};
}

StateToken TimingSampler::initial_state() const { return StateToken{0, 0}; }

StateToken TimingSampler::step(const StateToken& state, Rng& rng) const {
  StateToken s = state;
  std::uint64_t& w = s[0];
  if (!field(w, 32, 1)) {
    const std::uint64_t secret = rng() & 1U;
    set_field(w, 32, 1, 1);
    set_field(w, 33, 1, secret);
    const auto& d = secret ? cfg_.s2 : cfg_.s1;
    s[1] = d[draw_index(secret ? cdf2_ : cdf1_, rng)].first;
  }
  const std::uint64_t pos = field(w, 0, 32);
  if (pos < s[1]) set_field(w, 0, 32, pos + 1);
  return s;
}

LabelSet TimingSampler::labels(const StateToken& s) const {
  LabelSet l;
  const std::uint64_t w = s[0];
  if (!field(w, 32, 1)) return l;
  l.insert(field(w, 33, 1) ? kS2 : kS1);
  if (field(w, 0, 32) >= s[1]) l.insert(kFin);
  return l;
}

CaseStudy timing_case(const TimingConfig& cfg) {
  auto model = std::make_shared<TimingSampler>(cfg);
  const std::string k = std::to_string(cfg.tau);
  auto side = [&](const std::string& v, const char* secret) {
    return "P[" + v + "]((X " + secret + "@" + v + ") => F<=" + k + " F@" + v + ")";
  };
  const std::string text = side("p1", "S1") + " ~[" + number(cfg.epsilon) + "] " + side("p2", "S2");
  return CaseStudy{model, parse_closed_formula(text), text, std::max<std::size_t>(cfg.tau, 1)};
}

}  // namespace hypersmc
