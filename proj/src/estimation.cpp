#include "rrpi/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rrpi/error.hpp"
#include "rrpi/random.hpp"

namespace rrpi {

void OfflineDataset::validate() const {
  if (n_states == 0 || n_actions == 0) throw InvalidInput("dataset: empty state or action space");
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const auto& t = transitions[i];
    if (t.state >= n_states || t.next_state >= n_states || t.action >= n_actions) {
      throw InvalidInput("dataset: record " + std::to_string(i) + " index out of range");
    }
    if (!std::isfinite(t.reward)) {
      throw InvalidInput("dataset: record " + std::to_string(i) + " has non-finite reward");
    }
  }
}

std::vector<std::uint64_t> OfflineDataset::counts() const {
  std::vector<std::uint64_t> c(n_states * n_actions * n_states, 0);
  for (const auto& t : transitions) ++c[(t.state * n_actions + t.action) * n_states + t.next_state];
  return c;
}

EnsembleMethod parse_ensemble_method(const std::string& name) {
  if (name == "bootstrap") return EnsembleMethod::Bootstrap;
  if (name == "dirichlet") return EnsembleMethod::Dirichlet;
  throw InvalidInput("unknown ensemble method '" + name + "'");
}

std::string to_string(EnsembleMethod method) {
  return method == EnsembleMethod::Bootstrap ? "bootstrap" : "dirichlet";
}

void EnsembleSpec::validate() const {
  if (n_members < 1) throw InvalidInput("ensemble: n_members must be >= 1");
  if (!(dirichlet_prior > 0.0) || !std::isfinite(dirichlet_prior)) {
    throw InvalidInput("ensemble: dirichlet_prior must be > 0");
  }
}

namespace {

void require_nonempty(const OfflineDataset& dataset) {
  dataset.validate();
  if (dataset.transitions.empty()) throw InvalidInput("no transitions");
}

std::vector<double> frequency_row(std::span<const std::uint64_t> counts) {
  const double total = double(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
  std::vector<double> row(counts.size());
  if (total == 0.0) {
    std::fill(row.begin(), row.end(), 1.0 / double(counts.size()));
  } else {
    for (std::size_t t = 0; t < counts.size(); ++t) row[t] = double(counts[t]) / total;
  }
  return row;
}

/// Normalizes in place; returns false if the total is not positive.
bool normalize(std::vector<double>& row) {
  const double total = std::accumulate(row.begin(), row.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) return false;
  for (double& x : row) x /= total;
  return true;
}

std::vector<double> dirichlet_draw(std::span<const std::uint64_t> counts, double prior, Rng& rng) {
  std::vector<double> shape(counts.size());
  for (std::size_t t = 0; t < counts.size(); ++t) shape[t] = double(counts[t]) + prior;
  std::vector<double> row(counts.size());
  for (std::size_t t = 0; t < counts.size(); ++t) {
    std::gamma_distribution<double> g(shape[t], 1.0);
    row[t] = g(rng);
  }
  if (!normalize(row)) {
    // Every gamma draw underflowed (tiny shapes): fall back to the posterior mean.
    row = shape;
    normalize(row);
  }
  return row;
}

std::vector<double> bootstrap_draw(std::span<const std::uint64_t> counts, Rng& rng) {
  const auto total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  if (total == 0) return frequency_row(counts);
  // Resampling n records from the empirical distribution is one multinomial draw.
  std::discrete_distribution<std::size_t> pick(counts.begin(), counts.end());
  std::vector<std::uint64_t> resampled(counts.size(), 0);
  for (std::uint64_t k = 0; k < total; ++k) ++resampled[pick(rng)];
  return frequency_row(resampled);
}

}  // namespace

TransitionKernel fit_mle_kernel(const OfflineDataset& dataset) {
  require_nonempty(dataset);
  const auto S = dataset.n_states;
  const auto counts = dataset.counts();
  TransitionKernel k(S, dataset.n_actions);
  for (std::size_t p = 0; p < S * dataset.n_actions; ++p) {
    const auto row = frequency_row(std::span(counts).subspan(p * S, S));
    std::copy(row.begin(), row.end(), k.probs.begin() + std::ptrdiff_t(p * S));
  }
  return k;
}

UncertaintySet build_uncertainty_set(const OfflineDataset& dataset, const EnsembleSpec& spec) {
  spec.validate();
  require_nonempty(dataset);
  const auto S = dataset.n_states;
  const auto A = dataset.n_actions;
  const auto counts = dataset.counts();
  std::vector<std::vector<std::vector<double>>> members(S * A);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      auto rng = make_rng(spec.seed, s, a);
      const auto pair_counts = std::span(counts).subspan((s * A + a) * S, S);
      auto& list = members[s * A + a];
      for (std::size_t m = 0; m < spec.n_members; ++m) {
        list.push_back(spec.method == EnsembleMethod::Dirichlet
                           ? dirichlet_draw(pair_counts, spec.dirichlet_prior, rng)
                           : bootstrap_draw(pair_counts, rng));
      }
    }
  }
  return UncertaintySet(S, A, std::move(members));
}

Disagreement ensemble_disagreement(const UncertaintySet& set) {
  const auto S = set.n_states();
  const auto A = set.n_actions();
  Disagreement out{Table(S, A), Table(S, A)};
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const auto n = set.member_count(s, a);
      double total_std = 0.0;
      for (std::size_t t = 0; t < S; ++t) {
        // Deviations from the first member, so identical members give exactly 0.
        const double ref = set.member(s, a, 0)[t];
        double mean = 0.0;
        for (std::size_t m = 0; m < n; ++m) mean += set.member(s, a, m)[t] - ref;
        mean /= double(n);
        double var = 0.0;
        for (std::size_t m = 0; m < n; ++m) {
          const double d = set.member(s, a, m)[t] - ref - mean;
          var += d * d;
        }
        total_std += std::sqrt(var / double(n));
      }
      out.value(s, a) = total_std / double(S);
      out.log_value(s, a) = std::log(std::max(out.value(s, a), kDisagreementFloor));
    }
  }
  return out;
}

Table pairwise_tv_disagreement(const UncertaintySet& set) {
  const auto S = set.n_states();
  const auto A = set.n_actions();
  Table out(S, A);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const auto n = set.member_count(s, a);
      if (n < 2) continue;
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          auto p = set.member(s, a, i);
          auto q = set.member(s, a, j);
          double tv = 0.0;
          for (std::size_t t = 0; t < S; ++t) tv += std::abs(p[t] - q[t]);
          total += 0.5 * tv;
        }
      }
      out(s, a) = total / (double(n) * double(n - 1) / 2.0);
    }
  }
  return out;
}

OfflineDataset sample_dataset(const TransitionKernel& kernel, std::size_t n, std::uint64_t seed) {
  OfflineDataset d{kernel.n_states, kernel.n_actions, {}};
  d.transitions.reserve(n);
  Rng rng(stream_seed(seed, 0));
  std::uniform_int_distribution<std::size_t> pick_s(0, kernel.n_states - 1);
  std::uniform_int_distribution<std::size_t> pick_a(0, kernel.n_actions - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = pick_s(rng);
    const auto a = pick_a(rng);
    auto row = kernel.row(s, a);
    std::discrete_distribution<std::size_t> next(row.begin(), row.end());
    d.transitions.push_back({s, a, 0.0, next(rng)});
  }
  return d;
}

}  // namespace rrpi
