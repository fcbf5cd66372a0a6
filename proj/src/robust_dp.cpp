#include "rrpi/robust_dp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "rrpi/error.hpp"
#include "rrpi/soft_backup.hpp"

namespace rrpi {

namespace {

void check_operator_inputs(const QTable& q, const FiniteMdp& mdp, const UncertaintySet& set,
                           const LogPolicy& log_mu, double alpha) {
  require_shape(mdp, q);
  require_shape(mdp, set);
  require_shape(mdp, log_mu);
  if (!(alpha > 0.0)) throw InvalidInput("alpha must be > 0");
}

double dot(std::span<const double> p, std::span<const double> v) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += p[i] * v[i];
  return acc;
}

/// f(s') = soft_value(q(s', .); mu(. | s'), alpha) for every s'.
std::vector<double> soft_next_values(const QTable& q, const LogPolicy& log_mu, double alpha) {
  std::vector<double> f(q.n_states());
  for (std::size_t s = 0; s < f.size(); ++s) {
    f[s] = soft_value_unchecked(q.row(s), log_mu.log_row(s), alpha);
  }
  return f;
}

struct MinResult {
  double value;
  std::size_t index;
};

/// min_m p_m . f with ties to the lowest index.
MinResult worst_member(const UncertaintySet& set, std::size_t s, std::size_t a,
                       std::span<const double> f) {
  MinResult best{std::numeric_limits<double>::infinity(), 0};
  const auto n = set.member_count(s, a);
  for (std::size_t m = 0; m < n; ++m) {
    const double e = dot(set.member(s, a, m), f);
    if (e < best.value) best = {e, m};
  }
  return best;
}

double clip(double x, std::optional<double> bound) { return bound ? std::min(x, *bound) : x; }

}  // namespace

QTable robust_reg_operator(const QTable& q, const FiniteMdp& mdp, const UncertaintySet& set,
                           const LogPolicy& log_mu, double alpha, std::optional<double> clip_bound,
                           BackupDiagnostics* diagnostics) {
  check_operator_inputs(q, mdp, set, log_mu, alpha);
  const auto f = soft_next_values(q, log_mu, alpha);
  QTable out(mdp.n_states, mdp.n_actions);
  if (diagnostics) diagnostics->worst_member.assign(mdp.n_states * mdp.n_actions, 0);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      const auto w = worst_member(set, s, a, f);
      out(s, a) = clip(mdp.reward(s, a) + mdp.discount * w.value, clip_bound);
      if (diagnostics) diagnostics->worst_member[s * mdp.n_actions + a] = w.index;
    }
  }
  if (diagnostics) diagnostics->backup_residual = sup_distance(out, q);
  return out;
}

QTable random_member_operator(const QTable& q, const FiniteMdp& mdp, const UncertaintySet& set,
                              const LogPolicy& log_mu, double alpha, Rng& rng,
                              std::optional<double> clip_bound) {
  check_operator_inputs(q, mdp, set, log_mu, alpha);
  const auto f = soft_next_values(q, log_mu, alpha);
  QTable out(mdp.n_states, mdp.n_actions);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      std::uniform_int_distribution<std::size_t> pick(0, set.member_count(s, a) - 1);
      const auto m = pick(rng);
      out(s, a) = clip(mdp.reward(s, a) + mdp.discount * dot(set.member(s, a, m), f), clip_bound);
    }
  }
  return out;
}

QTable fixed_member_operator(const QTable& q, const FiniteMdp& mdp, const UncertaintySet& set,
                             const LogPolicy& log_mu, double alpha, std::size_t member) {
  check_operator_inputs(q, mdp, set, log_mu, alpha);
  const auto f = soft_next_values(q, log_mu, alpha);
  QTable out(mdp.n_states, mdp.n_actions);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      const auto m = std::min(member, set.member_count(s, a) - 1);
      out(s, a) = mdp.reward(s, a) + mdp.discount * dot(set.member(s, a, m), f);
    }
  }
  return out;
}

double fixed_point_error_bound(double eps, double discount) {
  return eps * discount / (1.0 - discount) + eps;
}

FixedPointResult solve_fixed_point(const FiniteMdp& mdp, const UncertaintySet& set,
                                   const LogPolicy& log_mu, const SolverConfig& config,
                                   const QTable& q_init) {
  config.validate();
  require_valid(mdp);
  FixedPointResult res;
  res.q = q_init;
  res.worst_member_counts.assign(set.total_members(), 0);
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= config.max_inner_iters; ++it) {
    BackupDiagnostics diag;
    QTable next = robust_reg_operator(res.q, mdp, set, log_mu, config.alpha, config.clip_bound, &diag);
    residual = diag.backup_residual;
    res.residuals.push_back(residual);
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      for (std::size_t a = 0; a < mdp.n_actions; ++a) {
        ++res.worst_member_counts[set.flat_index(s, a, diag.worst_member[s * mdp.n_actions + a])];
      }
    }
    res.q = std::move(next);
    res.last = std::move(diag);
    res.iterations = it;
    if (residual < config.eps_inner) return res;
  }
  throw NonConvergence("solve_fixed_point", config.max_inner_iters, residual);
}

LogPolicy boltzmann_improve(const QTable& q, const LogPolicy& log_mu, double alpha) {
  if (!(alpha > 0.0)) throw InvalidInput("boltzmann_improve: alpha must be > 0");
  if (q.n_states() != log_mu.n_states() || q.n_actions() != log_mu.n_actions()) {
    throw InvalidInput("boltzmann_improve: shape mismatch");
  }
  Table logits(q.n_states(), q.n_actions());
  for (std::size_t s = 0; s < q.n_states(); ++s) {
    for (std::size_t a = 0; a < q.n_actions(); ++a) {
      logits(s, a) = log_mu.log_prob(s, a) + q(s, a) / alpha;
    }
  }
  return LogPolicy::from_unnormalized(std::move(logits));
}

QTable policy_eval_operator(const QTable& q, const FiniteMdp& mdp, const UncertaintySet& set,
                            const LogPolicy& log_pi, const LogPolicy& log_mu, double alpha) {
  check_operator_inputs(q, mdp, set, log_mu, alpha);
  require_shape(mdp, log_pi);
  std::vector<double> g(mdp.n_states);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    double ev = 0.0;
    for (std::size_t a = 0; a < mdp.n_actions; ++a) ev += log_pi.prob(s, a) * q(s, a);
    g[s] = ev - alpha * kl_divergence(log_pi.log_row(s), log_mu.log_row(s));
  }
  QTable out(mdp.n_states, mdp.n_actions);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      out(s, a) = mdp.reward(s, a) + mdp.discount * worst_member(set, s, a, g).value;
    }
  }
  return out;
}

FixedPointResult solve_policy_eval(const FiniteMdp& mdp, const UncertaintySet& set,
                                   const LogPolicy& log_pi, const LogPolicy& log_mu,
                                   const SolverConfig& config, const QTable& q_init) {
  config.validate();
  require_valid(mdp);
  FixedPointResult res;
  res.q = q_init;
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= config.max_inner_iters; ++it) {
    QTable next = policy_eval_operator(res.q, mdp, set, log_pi, log_mu, config.alpha);
    residual = sup_distance(next, res.q);
    res.residuals.push_back(residual);
    res.q = std::move(next);
    res.iterations = it;
    if (residual < config.eps_inner) return res;
  }
  throw NonConvergence("solve_policy_eval", config.max_inner_iters, residual);
}

VTable robust_eval_operator(const VTable& v, const FiniteMdp& mdp, const UncertaintySet& set,
                            const LogPolicy& log_pi) {
  require_shape(mdp, set);
  require_shape(mdp, log_pi);
  if (v.size() != mdp.n_states) throw InvalidInput("robust_eval_operator: V length mismatch");
  VTable out{std::vector<double>(mdp.n_states, 0.0)};
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    double acc = 0.0;
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      const double w = log_pi.prob(s, a);
      acc += w * (mdp.reward(s, a) + mdp.discount * worst_member(set, s, a, v.values).value);
    }
    out[s] = acc;
  }
  return out;
}

VTable robust_optimality_operator(const VTable& v, const FiniteMdp& mdp,
                                  const UncertaintySet& set) {
  require_shape(mdp, set);
  if (v.size() != mdp.n_states) throw InvalidInput("robust_optimality_operator: V length mismatch");
  VTable out{std::vector<double>(mdp.n_states, 0.0)};
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      best = std::max(best,
                      mdp.reward(s, a) + mdp.discount * worst_member(set, s, a, v.values).value);
    }
    out[s] = best;
  }
  return out;
}

namespace {

double initial_average(const FiniteMdp& mdp, const VTable& v) {
  double j = 0.0;
  for (std::size_t s = 0; s < mdp.n_states; ++s) j += mdp.initial_dist[s] * v[s];
  return j;
}

template <typename Sweep>
std::pair<VTable, int> iterate_values(const FiniteMdp& mdp, const SolverConfig& config,
                                      const char* where, Sweep&& sweep) {
  VTable v{std::vector<double>(mdp.n_states, 0.0)};
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= config.max_inner_iters; ++it) {
    VTable next = sweep(v);
    residual = sup_distance(next.values, v.values);
    v = std::move(next);
    if (residual < config.eps_inner) return {std::move(v), it};
  }
  throw NonConvergence(where, config.max_inner_iters, residual);
}

}  // namespace

RobustValue robust_policy_value(const FiniteMdp& mdp, const UncertaintySet& set,
                                const LogPolicy& log_pi, const SolverConfig& config) {
  require_valid(mdp);
  require_shape(mdp, set);
  require_shape(mdp, log_pi);
  auto [v, iters] = iterate_values(mdp, config, "robust_policy_value", [&](const VTable& cur) {
    return robust_eval_operator(cur, mdp, set, log_pi);
  });
  RobustValue out;
  out.j = initial_average(mdp, v);
  out.v = std::move(v);
  out.iterations = iters;
  return out;
}

QTable robust_q_of_policy(const FiniteMdp& mdp, const UncertaintySet& set, const VTable& v) {
  require_shape(mdp, set);
  QTable q(mdp.n_states, mdp.n_actions);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      q(s, a) = mdp.reward(s, a) + mdp.discount * worst_member(set, s, a, v.values).value;
    }
  }
  return q;
}

BruteForceResult brute_force_robust_value(const FiniteMdp& mdp, const UncertaintySet& set,
                                          const LogPolicy& log_pi) {
  require_valid(mdp);
  require_shape(mdp, set);
  require_shape(mdp, log_pi);
  const auto S = mdp.n_states;
  const auto A = mdp.n_actions;
  const auto pairs = S * A;

  double total = 1.0;
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) total *= double(set.member_count(s, a));
  }
  if (total > kMaxEnumeration) {
    throw InvalidInput("brute_force_robust_value: " + std::to_string(total) +
                       " assignments exceed the enumeration limit");
  }

  Eigen::VectorXd r_pi(S);
  Eigen::VectorXd rho(S);
  for (std::size_t s = 0; s < S; ++s) {
    r_pi[Eigen::Index(s)] = 0.0;
    for (std::size_t a = 0; a < A; ++a) r_pi[Eigen::Index(s)] += log_pi.prob(s, a) * mdp.reward(s, a);
    rho[Eigen::Index(s)] = mdp.initial_dist[s];
  }

  BruteForceResult best;
  best.j = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> assignment(pairs, 0);
  Eigen::MatrixXd system(S, S);
  while (true) {
    system.setIdentity();
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        const double w = log_pi.prob(s, a);
        auto row = set.member(s, a, assignment[s * A + a]);
        for (std::size_t t = 0; t < S; ++t) {
          system(Eigen::Index(s), Eigen::Index(t)) -= mdp.discount * w * row[t];
        }
      }
    }
    const Eigen::VectorXd v = system.partialPivLu().solve(r_pi);
    const double j = rho.dot(v);
    ++best.assignments_checked;
    if (j < best.j) {
      best.j = j;
      best.assignment = assignment;
    }
    // Odometer increment over the mixed-radix assignment.
    std::size_t p = 0;
    for (; p < pairs; ++p) {
      if (++assignment[p] < set.member_count(p / A, p % A)) break;
      assignment[p] = 0;
    }
    if (p == pairs) break;
  }
  return best;
}

RobustOptimum robust_value_iteration(const FiniteMdp& mdp, const UncertaintySet& set,
                                     const SolverConfig& config) {
  require_valid(mdp);
  require_shape(mdp, set);
  auto [v, iters] = iterate_values(mdp, config, "robust_value_iteration", [&](const VTable& cur) {
    return robust_optimality_operator(cur, mdp, set);
  });
  RobustOptimum out;
  out.policy.assign(mdp.n_states, 0);
  const QTable q = robust_q_of_policy(mdp, set, v);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    for (std::size_t a = 1; a < mdp.n_actions; ++a) {
      if (q(s, a) > q(s, out.policy[s])) out.policy[s] = a;
    }
  }
  out.j = initial_average(mdp, v);
  out.v = std::move(v);
  out.iterations = iters;
  return out;
}

IsEstimate is_estimate_soft_denominator(std::span<const double> q_row,
                                        std::span<const double> log_mu_row,
                                        std::span<const double> log_pi_row, double alpha,
                                        std::size_t n_samples, Rng& rng) {
  if (!(alpha > 0.0)) throw InvalidInput("is_estimate: alpha must be > 0");
  if (n_samples == 0) throw InvalidInput("is_estimate: n_samples must be >= 1");
  if (q_row.size() != log_mu_row.size() || q_row.size() != log_pi_row.size() || q_row.empty()) {
    throw InvalidInput("is_estimate: length mismatch");
  }
  std::vector<double> pi(q_row.size());
  std::vector<double> weight(q_row.size());
  for (std::size_t a = 0; a < q_row.size(); ++a) {
    if (!std::isfinite(log_mu_row[a]) || !std::isfinite(log_pi_row[a])) {
      throw InvalidInput("is_estimate: rows must have full support");
    }
    pi[a] = std::exp(log_pi_row[a]);
    weight[a] = std::exp(log_mu_row[a] - log_pi_row[a] + q_row[a] / alpha);
  }
  std::discrete_distribution<std::size_t> draw(pi.begin(), pi.end());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double x = weight[draw(rng)];
    sum += x;
    sum_sq += x * x;
  }
  const double n = double(n_samples);
  IsEstimate out;
  out.estimate = sum / n;
  if (n_samples > 1) {
    const double var = std::max(0.0, (sum_sq - n * out.estimate * out.estimate) / (n - 1.0));
    out.std_error = std::sqrt(var / n);
  }
  return out;
}

}  // namespace rrpi
