#include "rrpi/driver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "rrpi/error.hpp"
#include "rrpi/random.hpp"
#include "rrpi/robust_dp.hpp"

namespace rrpi {

namespace {

double policy_delta(const LogPolicy& a, const LogPolicy& b) {
  double d = 0.0;
  for (std::size_t s = 0; s < a.n_states(); ++s) {
    for (std::size_t k = 0; k < a.n_actions(); ++k) d = std::max(d, std::abs(a.prob(s, k) - b.prob(s, k)));
  }
  return d;
}

OuterStep make_step(int iter, double j, double delta, int inner, const LogPolicy& pi,
                    const std::vector<RatioTriple>& tracked) {
  OuterStep st;
  st.iter = iter;
  st.j = j;
  st.policy_delta = delta;
  st.inner_iters = inner;
  const auto logs = pi.log_table().data();
  const auto [lo, hi] = std::minmax_element(logs.begin(), logs.end());
  st.min_log_prob = *lo;
  st.max_log_prob = *hi;
  for (const auto& t : tracked) st.tracked_log_ratios.push_back(pi.log_prob(t[0], t[1]) - pi.log_prob(t[0], t[2]));
  return st;
}

enum class Backup { WorstCase, RandomMember };

struct Inner {
  QTable q;
  int iterations;
};

int ablation_sweeps(const SolverConfig& config, double discount) {
  const double k = std::ceil(std::log(config.eps_inner) / std::log(discount));
  return std::clamp(static_cast<int>(k), 1, config.max_inner_iters);
}

Inner random_member_solve(const FiniteMdp& mdp, const UncertaintySet& set, const LogPolicy& mu,
                          const SolverConfig& config, QTable q, Rng& rng) {
  const int sweeps = ablation_sweeps(config, mdp.discount);
  for (int k = 0; k < sweeps; ++k) {
    q = random_member_operator(q, mdp, set, mu, config.alpha, rng, config.clip_bound);
  }
  return {std::move(q), sweeps};
}

RrpiResult run(const FiniteMdp& mdp, const UncertaintySet& set, const SolverConfig& config,
               const std::optional<LogPolicy>& pi0, const RrpiOptions& options, Backup backup,
               Rng* rng) {
  config.validate();
  require_valid(mdp);
  require_shape(mdp, set);
  LogPolicy pi = pi0 ? *pi0 : uniform_policy(mdp);
  require_shape(mdp, pi);
  for (const auto& t : options.tracked) {
    if (t[0] >= mdp.n_states || t[1] >= mdp.n_actions || t[2] >= mdp.n_actions) {
      throw InvalidInput("rrpi_solve: tracked triple out of range");
    }
  }

  RrpiResult res;
  res.config = config;
  res.trace.tracked = options.tracked;
  double j = robust_policy_value(mdp, set, pi, config).j;
  res.trace.steps.push_back(make_step(0, j, 0.0, 0, pi, options.tracked));
  if (config.retain_policies) res.trace.policies.push_back(pi);

  QTable q(mdp.n_states, mdp.n_actions);
  for (int i = 1; i <= config.max_outer_iters; ++i) {
    Inner inner;
    if (backup == Backup::WorstCase) {
      auto fp = solve_fixed_point(mdp, set, pi, config, q);  // warm start from Q_{i-1}
      inner = {std::move(fp.q), fp.iterations};
    } else {
      inner = random_member_solve(mdp, set, pi, config, q, *rng);
    }
    q = std::move(inner.q);
    LogPolicy next = boltzmann_improve(q, pi, config.alpha);
    const double j_next = robust_policy_value(mdp, set, next, config).j;

    if (backup == Backup::WorstCase && j_next < j - kMonotonicityHardTol) {
      std::ostringstream os;
      os.precision(17);
      os << "theorem violation: J decreased from " << j << " to " << j_next << " at outer step "
         << i;
      throw TheoremViolation(os.str());
    }
    res.trace.steps.push_back(
        make_step(i, j_next, policy_delta(pi, next), inner.iterations, next, options.tracked));
    pi = std::move(next);
    if (config.retain_policies) res.trace.policies.push_back(pi);

    const double dj = std::abs(j_next - j);
    j = j_next;
    if (dj < config.eps_outer) {
      res.converged = true;
      break;
    }
  }

  res.final_policy = std::move(pi);
  res.final_q = std::move(q);
  if (!options.skip_optimum) {
    res.optimal_j = robust_value_iteration(mdp, set, config).j;
    res.robust_gap = res.optimal_j - j;
  }
  return res;
}

double mean_of(const std::vector<double>& x) {
  return x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
}

double sample_std(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  double m = 0.0;
  for (double v : x) m += v - x[0];
  m /= double(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - x[0] - m) * (v - x[0] - m);
  return std::sqrt(ss / double(x.size() - 1));
}

}  // namespace

RrpiResult rrpi_solve(const FiniteMdp& mdp, const UncertaintySet& set, const SolverConfig& config,
                      const std::optional<LogPolicy>& pi0, const RrpiOptions& options) {
  return run(mdp, set, config, pi0, options, Backup::WorstCase, nullptr);
}

RrpiResult rrpi_solve_ablated(const FiniteMdp& mdp, const UncertaintySet& set,
                              const SolverConfig& config, unsigned long long seed,
                              const std::optional<LogPolicy>& pi0) {
  RrpiOptions opts;
  opts.skip_optimum = true;
  // With one member per pair the random draw is the worst-case choice.
  if (set.max_member_count() == 1) return run(mdp, set, config, pi0, opts, Backup::WorstCase, nullptr);
  Rng rng(stream_seed(seed, 0));
  return run(mdp, set, config, pi0, opts, Backup::RandomMember, &rng);
}

RatioReport ratio_divergence_report(const RrpiResult& result, const QTable& q_limit,
                                    double gap_threshold, double tol) {
  const auto& pols = result.trace.policies;
  if (pols.empty()) throw InvalidInput("ratio_divergence_report: policies were not retained");
  const double alpha = result.config.alpha;
  const std::size_t n_incr = pols.size() - 1;

  RatioReport rep;
  rep.tail_start = n_incr / 2;
  for (std::size_t s = 0; s < q_limit.n_states(); ++s) {
    for (std::size_t a = 0; a < q_limit.n_actions(); ++a) {
      for (std::size_t b = 0; b < q_limit.n_actions(); ++b) {
        const double gap = q_limit(s, a) - q_limit(s, b);
        if (a == b || !(gap > gap_threshold)) continue;
        RatioRow row;
        row.state = s;
        row.better = a;
        row.worse = b;
        row.gap = gap;
        row.expected_slope = gap / alpha;
        for (const auto& p : pols) row.log_ratios.push_back(p.log_prob(s, a) - p.log_prob(s, b));
        row.min_tail_slope = std::numeric_limits<double>::infinity();
        double sum = 0.0;
        for (std::size_t i = rep.tail_start; i < n_incr; ++i) {
          const double d = row.log_ratios[i + 1] - row.log_ratios[i];
          row.min_tail_slope = std::min(row.min_tail_slope, d);
          sum += d;
        }
        const std::size_t n_tail = n_incr - rep.tail_start;
        row.mean_tail_slope = n_tail ? sum / double(n_tail) : 0.0;
        row.passed = n_tail > 0 && row.min_tail_slope >= row.expected_slope - tol;
        rep.all_passed = rep.all_passed && row.passed;
        rep.rows.push_back(std::move(row));
      }
    }
  }
  return rep;
}

std::string AblationReport::summary() const {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(1);
  os << (percent_drop >= 0 ? "↓" : "↑") << std::abs(percent_drop) << "% (";
  if (std::isinf(std_ratio)) {
    os << "↑infx)";
  } else if (std_ratio >= 1.0) {
    os << "↑" << std_ratio << "x)";
  } else {
    os << "↓" << (std_ratio > 0 ? 1.0 / std_ratio : 0.0) << "x)";
  }
  return os.str();
}

AblationReport ablation_run(const FiniteMdp& mdp, const UncertaintySet& set,
                            const SolverConfig& config, std::size_t trials,
                            unsigned long long seed, std::size_t jobs) {
  if (trials < 1) throw InvalidInput("ablation_run: trials must be >= 1");
  AblationReport rep;

  // The worst-case loop consumes no randomness: one run serves every trial.
  RrpiOptions opts;
  opts.skip_optimum = true;
  const auto robust = rrpi_solve(mdp, set, config, std::nullopt, opts);
  const double robust_j = robust.trace.steps.back().j;
  rep.robust_j.assign(trials, robust_j);

  rep.ablated_j.assign(trials, 0.0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t t = next++; t < trials && !failed; t = next++) {
      try {
        const auto r = rrpi_solve_ablated(mdp, set, config, stream_seed(seed, t, 1));
        rep.ablated_j[t] = robust_policy_value(mdp, set, r.final_policy, config).j;
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(jobs, 1, trials);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  rep.robust_mean = mean_of(rep.robust_j);
  rep.robust_std = sample_std(rep.robust_j);
  rep.ablated_mean = mean_of(rep.ablated_j);
  rep.ablated_std = sample_std(rep.ablated_j);
  if (rep.robust_mean != 0.0) {
    rep.percent_drop = 100.0 * (rep.robust_mean - rep.ablated_mean) / std::abs(rep.robust_mean);
  }
  if (rep.robust_std > 0.0) {
    rep.std_ratio = rep.ablated_std / rep.robust_std;
  } else {
    rep.std_ratio = rep.ablated_std > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  }
  return rep;
}

}  // namespace rrpi
