#pragma once

#include <boost/container/small_vector.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hypersmc/rng.hpp"

namespace hypersmc {

using Rational = boost::multiprecision::cpp_rational;

/// Opaque state handle. Explicit models use one word holding the state index;
/// generative models pack their state into as many words as they need.
using StateToken = boost::container::small_vector<std::uint64_t, 4>;

/// Set of atomic propositions, stored as bit positions into the owning model's proposition list.
class LabelSet {
 public:
  static constexpr std::size_t kMaxPropositions = 64;

  LabelSet() = default;
  explicit LabelSet(std::uint64_t bits) : bits_(bits) {}

  bool contains(std::size_t prop) const noexcept { return prop < kMaxPropositions && ((bits_ >> prop) & 1U); }
  void insert(std::size_t prop) { bits_ |= (std::uint64_t{1} << prop); }
  bool empty() const noexcept { return bits_ == 0; }
  std::uint64_t bits() const noexcept { return bits_; }

  friend bool operator==(LabelSet a, LabelSet b) noexcept { return a.bits_ == b.bits_; }

 private:
  std::uint64_t bits_ = 0;
};

/// Generative model: initial state, successor sampling, labelling.
/// Implementations are immutable and may be shared between threads.
class ModelSampler {
 public:
  virtual ~ModelSampler() = default;

  virtual StateToken initial_state() const = 0;
  virtual StateToken step(const StateToken& state, Rng& rng) const = 0;
  virtual LabelSet labels(const StateToken& state) const = 0;
  virtual const std::vector<std::string>& propositions() const = 0;

  std::optional<std::size_t> proposition_index(std::string_view name) const;
  std::vector<std::string> label_names(const StateToken& state) const;
};

/// Finite path prefix with cached labels.
struct Path {
  std::vector<StateToken> states;
  std::vector<LabelSet> labels;

  std::size_t size() const noexcept { return states.size(); }
};

Path sample_path(const ModelSampler& model, Rng& rng, std::size_t horizon);
Path sample_path_from(const ModelSampler& model, const StateToken& start, Rng& rng, std::size_t horizon);
/// n independent paths; path i uses its own substream drawn from `rng`.
std::vector<Path> sample_path_tuple(const ModelSampler& model, std::size_t n, Rng& rng, std::size_t horizon);

struct Transition {
  std::size_t target;
  Rational exact;
  double probability;
};

/// Explicit labelled DTMC. Validated on construction.
class Dtmc {
 public:
  Dtmc(std::size_t num_states, std::size_t initial, std::vector<std::string> propositions,
       std::vector<std::vector<Transition>> transitions, std::vector<LabelSet> labels);

  std::size_t num_states() const noexcept { return transitions_.size(); }
  std::size_t initial() const noexcept { return initial_; }
  const std::vector<std::string>& propositions() const noexcept { return propositions_; }
  const std::vector<Transition>& successors(std::size_t s) const { return transitions_.at(s); }
  LabelSet labels(std::size_t s) const { return labels_.at(s); }
  std::optional<std::size_t> proposition_index(std::string_view name) const;

  /// Re-emits the model in the text format accepted by parse_model.
  std::string to_text() const;

 private:
  std::size_t initial_;
  std::vector<std::string> propositions_;
  std::vector<std::vector<Transition>> transitions_;
  std::vector<LabelSet> labels_;
};

/// Parses a probability literal: decimal (`0.25`, `1e-3`) or rational (`1/4`).
Rational parse_probability(std::string_view text);

Dtmc parse_model(std::string_view text);
Dtmc load_model(const std::filesystem::path& file);

/// ModelSampler view of an explicit chain. Tokens hold the state index in word 0.
class ExplicitSampler final : public ModelSampler {
 public:
  explicit ExplicitSampler(Dtmc dtmc);

  StateToken initial_state() const override;
  StateToken step(const StateToken& state, Rng& rng) const override;
  LabelSet labels(const StateToken& state) const override;
  const std::vector<std::string>& propositions() const override { return dtmc_.propositions(); }

  const Dtmc& dtmc() const noexcept { return dtmc_; }

 private:
  Dtmc dtmc_;
  std::vector<std::discrete_distribution<std::size_t>::param_type> rows_;
};

inline StateToken explicit_token(std::size_t state) { return StateToken{static_cast<std::uint64_t>(state)}; }

struct WeightedPath {
  Path path;
  Rational exact;
  double probability;
};

constexpr std::size_t kDefaultEnumerationCap = 10'000'000;

/// All paths of `horizon` steps from `start` with their exact probabilities.
std::vector<WeightedPath> enumerate_paths(const Dtmc& dtmc, std::size_t horizon,
                                          std::size_t cap = kDefaultEnumerationCap);
std::vector<WeightedPath> enumerate_paths_from(const Dtmc& dtmc, std::size_t start, std::size_t horizon,
                                               std::size_t cap = kDefaultEnumerationCap);

/// Exact decimal/rational rendering used by the oracle output: integers as `n`, others as `a/b`.
std::string to_string(const Rational& value);

}  // namespace hypersmc
