#pragma once

// Randomized property checks for the operators and the outer loop. Used by the
// `check` subcommand; every check is deterministic given its seed.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rrpi/generators.hpp"

namespace rrpi {

struct CheckResult {
  std::string name;
  std::size_t trials = 0;
  std::size_t violations = 0;
  /// Largest amount by which an inequality was exceeded (<= 0 when all held).
  double worst_excess = -1e300;

  bool passed() const noexcept { return violations == 0 && trials > 0; }
};

struct CheckSuiteOptions {
  std::uint64_t seed = 0;
  std::size_t contraction_instances = 20;
  std::size_t contraction_pairs = 1000;
  std::size_t duality_rows = 10000;
  std::size_t oracle_instances = 100;
  std::size_t monotone_runs = 20;
};

/// ||T q1 - T q2|| <= gamma ||q1 - q2|| + 1e-10 for the regularized operator,
/// the policy-evaluation operator and the unregularized robust evaluation map.
CheckResult check_contraction(const std::vector<RobustInstance>& instances, std::size_t pairs,
                              std::uint64_t seed);

/// duality_gap >= -1e-9 for random candidates and |gap| <= 1e-9 at the Boltzmann row.
CheckResult check_duality(std::size_t rows, std::uint64_t seed);

/// q1 <= q2 implies T q1 <= T q2 + 1e-10.
CheckResult check_monotone_operator(const std::vector<RobustInstance>& instances,
                                    std::size_t pairs, std::uint64_t seed);

/// robust_policy_value agrees with brute_force_robust_value within 1e-6.
CheckResult check_oracle_equivalence(const std::vector<RobustInstance>& instances,
                                     std::uint64_t seed);

/// Every recorded J step of rrpi_solve is nondecreasing within 1e-8.
CheckResult check_monotone_improvement(const std::vector<RobustInstance>& instances);

/// Q* of T dominates the policy-evaluation fixed point of random policies (1e-8).
CheckResult check_fixed_point_dominance(const std::vector<RobustInstance>& instances,
                                        std::uint64_t seed);

/// Random instances with |S| <= max_states, |A| <= max_actions, N <= max_members.
std::vector<RobustInstance> random_instances(std::size_t count, std::size_t max_states,
                                             std::size_t max_actions, std::size_t max_members,
                                             std::uint64_t seed);

/// Runs the full suite over `fixtures` plus seeded random instances.
std::vector<CheckResult> run_check_suite(const std::vector<RobustInstance>& fixtures,
                                         const CheckSuiteOptions& options);

}  // namespace rrpi
