#pragma once

// Robust regularized policy iteration.
//
// Each outer step solves the KL-regularized robust subproblem with the current
// policy as reference, then moves to its Boltzmann maximizer:
//
//   Q_i       = fixed point of T with mu = pi_i
//   pi_{i+1}  ∝ pi_i * exp(Q_i / alpha)
//   J_{i+1}   = worst-case (unregularized) return of pi_{i+1}
//
// J is nondecreasing along the run; a drop beyond kMonotonicityHardTol raises
// TheoremViolation.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rrpi/core.hpp"

namespace rrpi {

inline constexpr double kMonotonicityTol = 1e-8;
inline constexpr double kMonotonicityHardTol = 1e-6;

/// (state, a, a') whose log-ratio log pi(a|s) - log pi(a'|s) is recorded per step.
using RatioTriple = std::array<std::size_t, 3>;

struct OuterStep {
  int iter = 0;
  double j = 0.0;
  /// max_{s,a} |pi_i(a|s) - pi_{i-1}(a|s)|; 0 for the initial policy.
  double policy_delta = 0.0;
  int inner_iters = 0;
  double min_log_prob = 0.0;
  double max_log_prob = 0.0;
  std::vector<double> tracked_log_ratios;
};

struct RrpiTrace {
  std::vector<OuterStep> steps;
  std::vector<RatioTriple> tracked;
  /// pi_0, pi_1, ... when SolverConfig::retain_policies is set.
  std::vector<LogPolicy> policies;
};

struct RrpiResult {
  LogPolicy final_policy;
  QTable final_q;
  RrpiTrace trace;
  bool converged = false;
  /// E_rho0[V*] from robust value iteration minus the final J.
  double robust_gap = 0.0;
  double optimal_j = 0.0;
  SolverConfig config;
};

struct RrpiOptions {
  std::vector<RatioTriple> tracked;
  /// Skip the robust value-iteration reference (robust_gap stays 0).
  bool skip_optimum = false;
};

RrpiResult rrpi_solve(const FiniteMdp& mdp, const UncertaintySet& set, const SolverConfig& config,
                      const std::optional<LogPolicy>& pi0 = std::nullopt,
                      const RrpiOptions& options = {});

/// Ablated outer loop: each inner sweep backs up through a uniformly drawn
/// member per (s, a) instead of the worst one. The sweep count per outer step
/// is fixed at ceil(log(eps_inner) / log(gamma)), capped by max_inner_iters,
/// because the randomized map has no fixed point to detect.
RrpiResult rrpi_solve_ablated(const FiniteMdp& mdp, const UncertaintySet& set,
                              const SolverConfig& config, unsigned long long seed,
                              const std::optional<LogPolicy>& pi0 = std::nullopt);

struct RatioRow {
  std::size_t state = 0;
  std::size_t better = 0;
  std::size_t worse = 0;
  double gap = 0.0;
  double expected_slope = 0.0;
  double min_tail_slope = 0.0;
  double mean_tail_slope = 0.0;
  bool passed = false;
  std::vector<double> log_ratios;
};

struct RatioReport {
  std::vector<RatioRow> rows;
  std::size_t tail_start = 0;
  bool all_passed = true;
};

/// For every (s, a, a') with q_limit(s,a) - q_limit(s,a') > gap_threshold,
/// checks that the log-ratio grows by at least gap/alpha - tol per outer step
/// over the last half of the run. Requires retained policies.
RatioReport ratio_divergence_report(const RrpiResult& result, const QTable& q_limit,
                                    double gap_threshold = 0.05, double tol = 1e-3);

struct AblationReport {
  std::vector<double> robust_j;
  std::vector<double> ablated_j;
  double robust_mean = 0.0;
  double robust_std = 0.0;
  double ablated_mean = 0.0;
  double ablated_std = 0.0;
  /// 100 * (robust_mean - ablated_mean) / |robust_mean|.
  double percent_drop = 0.0;
  /// ablated_std / robust_std (inf when only the ablated variant varies).
  double std_ratio = 1.0;

  /// "↓7.4% (↑2.5x)" style summary.
  std::string summary() const;
};

/// Runs the robust loop and `trials` ablated loops (seeded per trial from `seed`),
/// scoring each final policy by its worst-case J. Trials run on up to `jobs`
/// threads; results are independent of the thread count.
AblationReport ablation_run(const FiniteMdp& mdp, const UncertaintySet& set,
                            const SolverConfig& config, std::size_t trials,
                            unsigned long long seed, std::size_t jobs = 1);

}  // namespace rrpi
