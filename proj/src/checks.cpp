#include "rrpi/checks.hpp"

#include <algorithm>
#include <cmath>

#include "rrpi/driver.hpp"
#include "rrpi/random.hpp"
#include "rrpi/robust_dp.hpp"
#include "rrpi/soft_backup.hpp"

namespace rrpi {

namespace {

void record(CheckResult& r, double excess) {
  ++r.trials;
  r.worst_excess = std::max(r.worst_excess, excess);
  if (excess > 0.0) ++r.violations;
}

QTable random_q(std::size_t S, std::size_t A, double scale, Rng& rng) {
  std::uniform_real_distribution<double> u(-scale, scale);
  QTable q(S, A);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) q(s, a) = u(rng);
  }
  return q;
}

LogPolicy random_policy(std::size_t S, std::size_t A, Rng& rng) {
  std::normal_distribution<double> n(0.0, 2.0);
  Table logits(S, A);
  for (double& x : logits.data()) x = n(rng);
  return LogPolicy::from_unnormalized(std::move(logits));
}

double random_alpha(Rng& rng) {
  std::uniform_real_distribution<double> u(std::log(0.05), std::log(5.0));
  return std::exp(u(rng));
}

std::size_t per_instance(std::size_t total, std::size_t n) { return n ? (total + n - 1) / n : 0; }

}  // namespace

std::vector<RobustInstance> random_instances(std::size_t count, std::size_t max_states,
                                             std::size_t max_actions, std::size_t max_members,
                                             std::uint64_t seed) {
  std::vector<RobustInstance> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Rng rng(stream_seed(seed, k, 7));
    RandomMdpSpec spec;
    spec.n_states = std::uniform_int_distribution<std::size_t>(1, max_states)(rng);
    spec.n_actions = std::uniform_int_distribution<std::size_t>(1, max_actions)(rng);
    spec.branching = std::uniform_int_distribution<std::size_t>(1, spec.n_states)(rng);
    spec.reward_min = -1.0;
    spec.reward_max = 1.0;
    spec.discount = std::uniform_real_distribution<double>(0.5, 0.95)(rng);
    spec.seed = rng();
    const auto n = std::uniform_int_distribution<std::size_t>(1, max_members)(rng);
    out.push_back(gen_random_robust(spec, n));
  }
  return out;
}

CheckResult check_contraction(const std::vector<RobustInstance>& instances, std::size_t pairs,
                              std::uint64_t seed) {
  CheckResult r{"contraction"};
  const auto each = per_instance(pairs, instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& [mdp, set] = instances[i];
    Rng rng(stream_seed(seed, i, 11));
    const auto S = mdp.n_states;
    const auto A = mdp.n_actions;
    for (std::size_t k = 0; k < each; ++k) {
      const double alpha = random_alpha(rng);
      const auto mu = random_policy(S, A, rng);
      const auto pi = random_policy(S, A, rng);
      const auto q1 = random_q(S, A, 10.0, rng);
      const auto q2 = random_q(S, A, 10.0, rng);
      const double d = sup_distance(q1, q2);

      const double t = sup_distance(robust_reg_operator(q1, mdp, set, mu, alpha),
                                    robust_reg_operator(q2, mdp, set, mu, alpha));
      record(r, t - (mdp.discount * d + 1e-10));

      const double e = sup_distance(policy_eval_operator(q1, mdp, set, pi, mu, alpha),
                                    policy_eval_operator(q2, mdp, set, pi, mu, alpha));
      record(r, e - (mdp.discount * d + 1e-10));

      VTable v1{std::vector<double>(S)};
      VTable v2{std::vector<double>(S)};
      for (std::size_t s = 0; s < S; ++s) {
        v1[s] = q1(s, 0);
        v2[s] = q2(s, 0);
      }
      const double dv = sup_distance(v1.values, v2.values);
      const double u = sup_distance(robust_eval_operator(v1, mdp, set, pi).values,
                                    robust_eval_operator(v2, mdp, set, pi).values);
      record(r, u - (mdp.discount * dv + 1e-10));
    }
  }
  return r;
}

CheckResult check_duality(std::size_t rows, std::uint64_t seed) {
  CheckResult r{"duality"};
  Rng rng(stream_seed(seed, 0, 13));
  for (std::size_t k = 0; k < rows; ++k) {
    const auto n = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
    const double alpha = random_alpha(rng);
    const auto q = random_q(1, n, 10.0, rng);
    const auto mu = random_policy(1, n, rng);
    const auto cand = random_policy(1, n, rng);

    const auto sv = soft_value(q.row(0), mu.log_row(0), alpha);
    record(r, std::abs(duality_gap(q.row(0), mu.log_row(0), alpha, sv.argmax_policy_row)) - 1e-9);
    record(r, -duality_gap(q.row(0), mu.log_row(0), alpha, cand.prob_row(0)) - 1e-9);
  }
  return r;
}

CheckResult check_monotone_operator(const std::vector<RobustInstance>& instances,
                                    std::size_t pairs, std::uint64_t seed) {
  CheckResult r{"operator_monotonicity"};
  const auto each = per_instance(pairs, instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& [mdp, set] = instances[i];
    Rng rng(stream_seed(seed, i, 17));
    std::uniform_real_distribution<double> bump(0.0, 3.0);
    for (std::size_t k = 0; k < each; ++k) {
      const double alpha = random_alpha(rng);
      const auto mu = random_policy(mdp.n_states, mdp.n_actions, rng);
      const auto q1 = random_q(mdp.n_states, mdp.n_actions, 10.0, rng);
      QTable q2 = q1;
      for (std::size_t s = 0; s < mdp.n_states; ++s) {
        for (std::size_t a = 0; a < mdp.n_actions; ++a) q2(s, a) += bump(rng);
      }
      const auto t1 = robust_reg_operator(q1, mdp, set, mu, alpha);
      const auto t2 = robust_reg_operator(q2, mdp, set, mu, alpha);
      double excess = -1e300;
      for (std::size_t s = 0; s < mdp.n_states; ++s) {
        for (std::size_t a = 0; a < mdp.n_actions; ++a) {
          excess = std::max(excess, t1(s, a) - t2(s, a) - 1e-10);
        }
      }
      record(r, excess);
    }
  }
  return r;
}

CheckResult check_oracle_equivalence(const std::vector<RobustInstance>& instances,
                                     std::uint64_t seed) {
  CheckResult r{"oracle_equivalence"};
  SolverConfig cfg;
  cfg.eps_inner = 1e-12;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& [mdp, set] = instances[i];
    Rng rng(stream_seed(seed, i, 19));
    const auto pi = random_policy(mdp.n_states, mdp.n_actions, rng);
    const double iterative = robust_policy_value(mdp, set, pi, cfg).j;
    const double brute = brute_force_robust_value(mdp, set, pi).j;
    record(r, std::abs(iterative - brute) - 1e-6);
  }
  return r;
}

CheckResult check_monotone_improvement(const std::vector<RobustInstance>& instances) {
  CheckResult r{"monotone_improvement"};
  for (const auto& [mdp, set] : instances) {
    auto cfg = SolverConfig::driver_defaults(mdp);
    cfg.max_outer_iters = 50;
    RrpiOptions opts;
    opts.skip_optimum = true;
    const auto res = rrpi_solve(mdp, set, cfg, std::nullopt, opts);
    const auto& steps = res.trace.steps;
    for (std::size_t k = 1; k < steps.size(); ++k) {
      record(r, steps[k - 1].j - steps[k].j - kMonotonicityTol);
    }
  }
  return r;
}

CheckResult check_fixed_point_dominance(const std::vector<RobustInstance>& instances,
                                        std::uint64_t seed) {
  CheckResult r{"fixed_point_dominance"};
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& [mdp, set] = instances[i];
    Rng rng(stream_seed(seed, i, 23));
    SolverConfig cfg;
    cfg.alpha = random_alpha(rng);
    cfg.eps_inner = 1e-12;
    const auto mu = random_policy(mdp.n_states, mdp.n_actions, rng);
    const auto pi = random_policy(mdp.n_states, mdp.n_actions, rng);
    const QTable zero(mdp.n_states, mdp.n_actions);
    const auto star = solve_fixed_point(mdp, set, mu, cfg, zero).q;
    const auto qpi = solve_policy_eval(mdp, set, pi, mu, cfg, zero).q;
    double excess = -1e300;
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      for (std::size_t a = 0; a < mdp.n_actions; ++a) {
        excess = std::max(excess, qpi(s, a) - star(s, a) - 1e-8);
      }
    }
    record(r, excess);
  }
  return r;
}

std::vector<CheckResult> run_check_suite(const std::vector<RobustInstance>& fixtures,
                                         const CheckSuiteOptions& o) {
  auto contraction_set = random_instances(o.contraction_instances, 20, 4, 4, o.seed);
  contraction_set.insert(contraction_set.end(), fixtures.begin(), fixtures.end());

  auto small = random_instances(o.oracle_instances, 3, 2, 2, stream_seed(o.seed, 1));
  for (const auto& f : fixtures) {
    double total = 1.0;
    for (std::size_t s = 0; s < f.mdp.n_states; ++s) {
      for (std::size_t a = 0; a < f.mdp.n_actions; ++a) total *= double(f.set.member_count(s, a));
    }
    if (total <= 4096) small.push_back(f);
  }

  auto monotone_set = random_instances(o.monotone_runs, 6, 3, 3, stream_seed(o.seed, 2));
  monotone_set.insert(monotone_set.end(), fixtures.begin(), fixtures.end());

  return {
      check_contraction(contraction_set, o.contraction_pairs, o.seed),
      check_duality(o.duality_rows, o.seed),
      check_monotone_operator(contraction_set, o.contraction_pairs / 4, o.seed),
      check_oracle_equivalence(small, o.seed),
      check_monotone_improvement(monotone_set),
      check_fixed_point_dominance(monotone_set, o.seed),
  };
}

}  // namespace rrpi
