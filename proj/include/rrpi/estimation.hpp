#pragma once

// Count-based kernel fitting and ensemble uncertainty sets from offline data.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rrpi/core.hpp"

namespace rrpi {

struct Transition {
  std::size_t state = 0;
  std::size_t action = 0;
  double reward = 0.0;
  std::size_t next_state = 0;
};

struct OfflineDataset {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<Transition> transitions;

  /// Throws InvalidInput on out-of-range indices or non-finite rewards.
  void validate() const;

  /// counts[(s * A + a) * S + s'].
  std::vector<std::uint64_t> counts() const;
};

enum class EnsembleMethod { Bootstrap, Dirichlet };

EnsembleMethod parse_ensemble_method(const std::string& name);
std::string to_string(EnsembleMethod method);

struct EnsembleSpec {
  std::size_t n_members = 5;
  EnsembleMethod method = EnsembleMethod::Dirichlet;
  double dirichlet_prior = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Empirical next-state frequencies; pairs never observed get a uniform row.
/// Throws InvalidInput("no transitions") on an empty dataset.
TransitionKernel fit_mle_kernel(const OfflineDataset& dataset);

/// N members per (s, a).
///   bootstrap: each member is the frequency row of a with-replacement resample
///              of that pair's n(s,a) records (uniform row if n(s,a) = 0).
///   dirichlet: each member row is a draw from Dirichlet(counts + prior).
/// Pair (s, a) draws from its own generator seeded by stream_seed(seed, s, a).
UncertaintySet build_uncertainty_set(const OfflineDataset& dataset, const EnsembleSpec& spec);

/// Log floor applied to disagreement values.
inline constexpr double kDisagreementFloor = 1e-12;

struct Disagreement {
  /// n_states x n_actions: mean over s' of the population standard deviation of p_m(s').
  Table value;
  /// log(max(value, kDisagreementFloor)).
  Table log_value;
};

Disagreement ensemble_disagreement(const UncertaintySet& set);

/// Mean total-variation distance over all member pairs, per (s, a). Zero for
/// singleton lists.
Table pairwise_tv_disagreement(const UncertaintySet& set);

/// Draws n transitions with uniformly random (s, a) and s' ~ kernel(s, a).
OfflineDataset sample_dataset(const TransitionKernel& kernel, std::size_t n, std::uint64_t seed);

}  // namespace rrpi
