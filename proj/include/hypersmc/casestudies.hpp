#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hypersmc/dtmc.hpp"
#include "hypersmc/formula.hpp"

namespace hypersmc {

/// A generative model with the formula it is checked against.
struct CaseStudy {
  std::shared_ptr<const ModelSampler> model;
  FormulaPtr formula;
  std::string text;
  /// Path length after which every run of the model has terminated.
  std::size_t horizon = 0;
};

// Dining cryptographers. Cryptographers are numbered 1..n around the table; payer 0 is the NSA.
// Coin k is flipped by cryptographer k and shared with its right neighbour k % n + 1.

enum class PayerMode { Nsa, Uniform, Fixed };

struct DiningConfig {
  std::size_t n = 3;
  PayerMode payer = PayerMode::Uniform;
  /// Paying cryptographer for PayerMode::Fixed.
  std::size_t fixed_payer = 1;
  /// Neighbours sharing the observed coin.
  std::pair<std::size_t, std::size_t> secret_pair{1, 2};
  double epsilon = 0.1;

  void validate() const;
};

/// "Disagree" bit announced by each cryptographer. coins[k-1] is coin k, payer 0 is the NSA.
std::vector<bool> dining_announcements(const std::vector<bool>& coins, std::size_t payer);

/// Positions: 0 initial, 1 payer chosen, k + 1 after coin k is flipped, n + 1 final.
class DiningSampler final : public ModelSampler {
 public:
  explicit DiningSampler(DiningConfig cfg);

  StateToken initial_state() const override;
  StateToken step(const StateToken& state, Rng& rng) const override;
  LabelSet labels(const StateToken& state) const override;
  const std::vector<std::string>& propositions() const override { return props_; }

  const DiningConfig& config() const noexcept { return cfg_; }
  /// Payer of a state at position >= 1, and whether the final parity says a cryptographer paid.
  static std::size_t payer_of(const StateToken& s);
  static bool parity_of(const StateToken& s);

 private:
  DiningConfig cfg_;
  std::size_t coin_;  // index of the shared coin of the secret pair
  std::vector<std::string> props_;
};

CaseStudy dining_case(const DiningConfig& cfg);

// Probabilistic noninterference: thread k runs (h + 1) * k iterations, each setting l = k mod 2.

struct ThreadsConfig {
  std::size_t n = 2;
  double epsilon = 0.001;
  /// Low value observed in the formula (L0 or L1).
  int low = 0;

  void validate() const;
};

class ThreadsSampler final : public ModelSampler {
 public:
  static constexpr std::size_t kMaxThreads = 127;

  explicit ThreadsSampler(ThreadsConfig cfg);

  StateToken initial_state() const override;
  StateToken step(const StateToken& state, Rng& rng) const override;
  LabelSet labels(const StateToken& state) const override;
  const std::vector<std::string>& propositions() const override { return props_; }

  /// Iterations thread k (1-based) still has to run.
  static unsigned remaining(const StateToken& s, std::size_t k);

 private:
  ThreadsConfig cfg_;
  std::vector<std::string> props_;
};

CaseStudy threads_case(const ThreadsConfig& cfg);

// Fully associative cache with uniformly random replacement.

struct CacheConfig {
  std::size_t lines = 256;
  std::size_t blocks = 1024;
  /// Probability of accessing each block; empty selects the discretized normal default.
  std::vector<double> access;
  /// Standard deviation of the default access distribution; 0 selects sqrt(lines) / 2.
  double sd = 0.0;
  /// Warm-up steps N; 0 selects N = lines.
  std::size_t warmup = 0;
  std::size_t window = 10;
  double epsilon = 0.05;

  void validate() const;
  std::size_t effective_warmup() const { return warmup ? warmup : lines; }
  std::vector<double> access_distribution() const;
};

/// Discretized normal over 0..blocks-1 with the tails clipped onto the end blocks.
std::vector<double> discretized_normal(std::size_t blocks, double mean, double sd);

class CacheSampler final : public ModelSampler {
 public:
  explicit CacheSampler(CacheConfig cfg);

  StateToken initial_state() const override;
  StateToken step(const StateToken& state, Rng& rng) const override;
  LabelSet labels(const StateToken& state) const override;
  const std::vector<std::string>& propositions() const override { return props_; }

  static bool cached(const StateToken& s, std::size_t block);
  static std::size_t occupancy(const StateToken& s);
  /// Access a fixed block; used to exercise the replacement rules directly.
  StateToken access(const StateToken& state, std::size_t block, Rng& rng) const;

 private:
  CacheConfig cfg_;
  std::vector<double> cdf_;
  std::vector<std::string> props_;
};

CaseStudy cache_case(const CacheConfig& cfg);

// Synthetic timing channel: the secret is picked at step 1, termination time depends on it.

struct TimingConfig {
  /// (termination position, probability) for secrets S1 and S2. Positions are at least 2.
  std::vector<std::pair<std::size_t, double>> s1{{5, 1.0}};
  std::vector<std::pair<std::size_t, double>> s2{{5, 1.0}};
  std::size_t tau = 10;
  double epsilon = 0.1;

  void validate() const;
};

/// Parses "pos:prob,pos:prob,...".
std::vector<std::pair<std::size_t, double>> parse_step_distribution(const std::string& text);

class TimingSampler final : public ModelSampler {
 public:
  explicit TimingSampler(TimingConfig cfg);

  StateToken initial_state() const override;
  StateToken step(const StateToken& state, Rng& rng) const override;
  LabelSet labels(const StateToken& state) const override;
  const std::vector<std::string>& propositions() const override { return props_; }

 private:
  TimingConfig cfg_;
  std::vector<double> cdf1_, cdf2_;
  std::vector<std::string> props_;
};

CaseStudy timing_case(const TimingConfig& cfg);

}  // namespace hypersmc
