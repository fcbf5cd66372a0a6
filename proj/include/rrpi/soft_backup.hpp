#pragma once

// KL-regularized soft maximum and its conjugate duality.
//
//   soft_value(q; mu, alpha) = alpha * log E_mu[exp(q / alpha)]
//                            = max_pi { E_pi[q] - alpha * KL(pi || mu) }
//
// with the maximum attained at pi ∝ mu * exp(q / alpha).

#include <span>
#include <vector>

namespace rrpi {

/// log(sum_i exp(x_i)) with max-shift. Returns -inf for an empty or all -inf input.
double logsumexp(std::span<const double> x);

struct SoftValueResult {
  double value = 0.0;
  std::vector<double> argmax_policy_row;
};

/// alpha * logsumexp(log_mu + q / alpha) and the Boltzmann row that attains it.
/// Throws InvalidInput if alpha <= 0, lengths differ, or log_mu has a non-finite entry.
SoftValueResult soft_value(std::span<const double> q_row, std::span<const double> log_mu_row,
                           double alpha);

/// Value only; skips building the argmax row. Same preconditions, unchecked.
double soft_value_unchecked(std::span<const double> q_row, std::span<const double> log_mu_row,
                            double alpha);

/// KL(p || q) for rows given as log-probabilities.
double kl_divergence(std::span<const double> log_p_row, std::span<const double> log_q_row);

/// soft_value - (E_candidate[q] - alpha * KL(candidate || mu)); candidate_row
/// holds probabilities. Nonnegative up to rounding; zero at the Boltzmann row.
double duality_gap(std::span<const double> q_row, std::span<const double> log_mu_row,
                   double alpha, std::span<const double> candidate_row);

}  // namespace rrpi
