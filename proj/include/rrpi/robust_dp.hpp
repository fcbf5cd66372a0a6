#pragma once

// Robust dynamic-programming operators over sa-rectangular ensembles.
//
// The inner minimum over the uncertainty set is realized exactly as
// worst-member selection: for each (s, a) the member with the smallest expected
// next-state value is used, ties going to the lowest member index. Sweeps are
// synchronous (Jacobi).

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rrpi/core.hpp"
#include "rrpi/random.hpp"

namespace rrpi {

struct BackupDiagnostics {
  /// n_states x n_actions member index picked by the inner minimum.
  std::vector<std::size_t> worst_member;
  /// Sup-norm change between input and output of the sweep.
  double backup_residual = 0.0;
};

/// (T q)(s,a) = r(s,a) + gamma * min_m sum_s' p_m(s'|s,a) soft_value(q(s',.); mu(.|s'), alpha),
/// clipped elementwise at clip_bound when given.
QTable robust_reg_operator(const QTable& q, const FiniteMdp& mdp, const UncertaintySet& set,
                           const LogPolicy& log_mu, double alpha,
                           std::optional<double> clip_bound = std::nullopt,
                           BackupDiagnostics* diagnostics = nullptr);

/// Ablation backup: the inner minimum is replaced by a uniformly drawn member per
/// (s, a). Draws happen in row-major pair order.
QTable random_member_operator(const QTable& q, const FiniteMdp& mdp, const UncertaintySet& set,
                              const LogPolicy& log_mu, double alpha, Rng& rng,
                              std::optional<double> clip_bound = std::nullopt);

/// Backup with a fixed member index at every pair (index clamped to the pair's count).
QTable fixed_member_operator(const QTable& q, const FiniteMdp& mdp, const UncertaintySet& set,
                             const LogPolicy& log_mu, double alpha, std::size_t member);

struct FixedPointResult {
  QTable q;
  int iterations = 0;
  /// residuals[k] = ||T^{k+1} q0 - T^k q0||_inf.
  std::vector<double> residuals;
  /// Per flat member index: number of sweeps in which it was the worst member.
  std::vector<std::size_t> worst_member_counts;
  BackupDiagnostics last;
};

/// Iterates robust_reg_operator from q_init until the sweep residual drops below
/// config.eps_inner. Throws NonConvergence at config.max_inner_iters.
FixedPointResult solve_fixed_point(const FiniteMdp& mdp, const UncertaintySet& set,
                                   const LogPolicy& log_mu, const SolverConfig& config,
                                   const QTable& q_init);

/// A priori bound on ||q - Q*||_inf once the last residual is below eps:
/// eps * gamma / (1 - gamma) + eps.
double fixed_point_error_bound(double eps, double discount);

/// Per-state Boltzmann improvement: log pi(a|s) = log mu(a|s) + q(s,a)/alpha - logZ(s).
LogPolicy boltzmann_improve(const QTable& q, const LogPolicy& log_mu, double alpha);

/// (T^pi q)(s,a) = r + gamma * min_m sum_s' p_m(s') (E_pi[q(s',.)] - alpha KL(pi(.|s') || mu(.|s'))).
QTable policy_eval_operator(const QTable& q, const FiniteMdp& mdp, const UncertaintySet& set,
                            const LogPolicy& log_pi, const LogPolicy& log_mu, double alpha);

/// Fixed point of policy_eval_operator.
FixedPointResult solve_policy_eval(const FiniteMdp& mdp, const UncertaintySet& set,
                                   const LogPolicy& log_pi, const LogPolicy& log_mu,
                                   const SolverConfig& config, const QTable& q_init);

/// Unregularized robust policy-evaluation map on state values:
/// V(s) = sum_a pi(a|s) [r(s,a) + gamma min_m sum_s' p_m(s') V(s')].
VTable robust_eval_operator(const VTable& v, const FiniteMdp& mdp, const UncertaintySet& set,
                            const LogPolicy& log_pi);

/// Unregularized robust optimality map: V(s) = max_a [r + gamma min_m p_m . V].
VTable robust_optimality_operator(const VTable& v, const FiniteMdp& mdp,
                                  const UncertaintySet& set);

struct RobustValue {
  VTable v;
  double j = 0.0;
  int iterations = 0;
};

/// Worst-case value of pi over the rectangular set, and J = E_rho0[V].
RobustValue robust_policy_value(const FiniteMdp& mdp, const UncertaintySet& set,
                                const LogPolicy& log_pi, const SolverConfig& config = {});

/// Robust Q-values of pi: Q(s,a) = r + gamma min_m p_m . V_pi.
QTable robust_q_of_policy(const FiniteMdp& mdp, const UncertaintySet& set, const VTable& v);

struct BruteForceResult {
  double j = 0.0;
  /// Minimizing member index per (s, a), row-major.
  std::vector<std::size_t> assignment;
  std::size_t assignments_checked = 0;
};

/// Largest number of stationary assignments brute_force_robust_value will enumerate.
inline constexpr double kMaxEnumeration = 1e6;

/// Enumerates every stationary member assignment, evaluates eta(pi, p) with a
/// direct linear solve, and returns the minimum. Independent of the iterative
/// code paths; intended as an oracle. Throws InvalidInput above kMaxEnumeration.
BruteForceResult brute_force_robust_value(const FiniteMdp& mdp, const UncertaintySet& set,
                                          const LogPolicy& log_pi);

struct RobustOptimum {
  VTable v;
  DeterministicPolicy policy;
  double j = 0.0;
  int iterations = 0;
};

/// Robust value iteration; greedy ties go to the lowest action index.
RobustOptimum robust_value_iteration(const FiniteMdp& mdp, const UncertaintySet& set,
                                     const SolverConfig& config = {});

struct IsEstimate {
  double estimate = 0.0;
  /// Sample standard deviation of the summands divided by sqrt(n).
  double std_error = 0.0;
};

/// Importance-sampling estimate of E_mu[exp(q/alpha)] with actions drawn from pi:
/// (1/n) sum_i mu(a_i)/pi(a_i) exp(q(a_i)/alpha).
IsEstimate is_estimate_soft_denominator(std::span<const double> q_row,
                                        std::span<const double> log_mu_row,
                                        std::span<const double> log_pi_row, double alpha,
                                        std::size_t n_samples, Rng& rng);

}  // namespace rrpi
