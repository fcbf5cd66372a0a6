#include "rrpi/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rrpi/error.hpp"
#include "rrpi/soft_backup.hpp"

namespace rrpi {

namespace {

double row_sum(std::span<const double> row) {
  return std::accumulate(row.begin(), row.end(), 0.0);
}

bool is_distribution(std::span<const double> row, double tol) {
  for (double p : row) {
    if (!std::isfinite(p) || p < 0.0) return false;
  }
  return std::abs(row_sum(row) - 1.0) <= tol;
}

std::string describe_row_problem(std::span<const double> row) {
  for (double p : row) {
    if (!std::isfinite(p)) return "non-finite probability";
    if (p < 0.0) return "negative probability";
  }
  std::ostringstream os;
  os.precision(17);
  os << "row sums to " << row_sum(row);
  return os.str();
}

}  // namespace

Table::Table(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw InvalidInput("Table: data has " + std::to_string(data_.size()) + " entries, expected " +
                       std::to_string(rows_ * cols_));
  }
}

double sup_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("sup_distance: length mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double sup_distance(const QTable& a, const QTable& b) {
  if (a.n_states() != b.n_states() || a.n_actions() != b.n_actions()) {
    throw InvalidInput("sup_distance: shape mismatch");
  }
  return sup_distance(a.table().data(), b.table().data());
}

double FiniteMdp::reward_bound() const {
  if (r_max) return *r_max;
  double m = 0.0;
  for (double r : reward.data()) m = std::max(m, std::abs(r));
  return m;
}

// ---------------------------------------------------------------------------
// UncertaintySet

UncertaintySet::UncertaintySet(std::size_t n_states, std::size_t n_actions,
                               std::vector<std::vector<std::vector<double>>> members)
    : n_states_(n_states), n_actions_(n_actions) {
  const auto report = validate_members(n_states, n_actions, members);
  if (!report.ok()) throw InvalidInput("UncertaintySet: " + report.to_string());
  offsets_.reserve(members.size() + 1);
  offsets_.push_back(0);
  for (const auto& list : members) {
    offsets_.push_back(offsets_.back() + list.size());
    max_members_ = std::max(max_members_, list.size());
    for (const auto& row : list) probs_.insert(probs_.end(), row.begin(), row.end());
  }
}

UncertaintySet UncertaintySet::from_kernels(const std::vector<TransitionKernel>& kernels) {
  if (kernels.empty()) throw InvalidInput("UncertaintySet::from_kernels: no kernels");
  const auto S = kernels.front().n_states;
  const auto A = kernels.front().n_actions;
  std::vector<std::vector<std::vector<double>>> members(S * A);
  for (const auto& k : kernels) {
    if (k.n_states != S || k.n_actions != A || k.probs.size() != S * A * S) {
      throw InvalidInput("UncertaintySet::from_kernels: kernel shape mismatch");
    }
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        auto r = k.row(s, a);
        members[s * A + a].emplace_back(r.begin(), r.end());
      }
    }
  }
  return UncertaintySet(S, A, std::move(members));
}

UncertaintySet UncertaintySet::singleton(const TransitionKernel& kernel) {
  return from_kernels({kernel});
}

TransitionKernel UncertaintySet::kernel_of_member(std::size_t m) const {
  TransitionKernel k(n_states_, n_actions_);
  for (std::size_t s = 0; s < n_states_; ++s) {
    for (std::size_t a = 0; a < n_actions_; ++a) {
      const auto idx = std::min(m, member_count(s, a) - 1);
      auto src = member(s, a, idx);
      std::copy(src.begin(), src.end(), k.row(s, a).begin());
    }
  }
  return k;
}

// ---------------------------------------------------------------------------
// LogPolicy

LogPolicy::LogPolicy(Table log_probs) : log_probs_(std::move(log_probs)) {
  for (std::size_t s = 0; s < log_probs_.rows(); ++s) {
    double total = 0.0;
    for (double lp : log_probs_.row(s)) {
      if (!std::isfinite(lp)) {
        throw InvalidInput("LogPolicy: non-finite log-probability at state " + std::to_string(s));
      }
      total += std::exp(lp);
    }
    if (std::abs(total - 1.0) > kArithmeticTol) {
      throw InvalidInput("LogPolicy: row " + std::to_string(s) + " sums to " +
                         std::to_string(total));
    }
  }
}

LogPolicy LogPolicy::from_unnormalized(Table log_weights) {
  for (std::size_t s = 0; s < log_weights.rows(); ++s) {
    auto row = log_weights.row(s);
    const double z = logsumexp(row);
    for (double& x : row) x -= z;
  }
  return LogPolicy(std::move(log_weights));
}

LogPolicy LogPolicy::from_probs(const Table& probs) {
  Table logs(probs.rows(), probs.cols());
  for (std::size_t s = 0; s < probs.rows(); ++s) {
    for (std::size_t a = 0; a < probs.cols(); ++a) {
      if (!(probs(s, a) > 0.0)) {
        throw InvalidInput("LogPolicy::from_probs: zero or negative probability at state " +
                           std::to_string(s));
      }
      logs(s, a) = std::log(probs(s, a));
    }
  }
  return from_unnormalized(std::move(logs));
}

double LogPolicy::prob(std::size_t s, std::size_t a) const { return std::exp(log_probs_(s, a)); }

std::vector<double> LogPolicy::prob_row(std::size_t s) const {
  std::vector<double> out(n_actions());
  for (std::size_t a = 0; a < out.size(); ++a) out[a] = prob(s, a);
  return out;
}

LogPolicy soften(const DeterministicPolicy& policy, std::size_t n_actions, double floor_prob) {
  Table logs(policy.size(), n_actions, std::log(floor_prob));
  for (std::size_t s = 0; s < policy.size(); ++s) {
    if (policy[s] >= n_actions) throw InvalidInput("soften: action index out of range");
    logs(s, policy[s]) = std::log1p(-static_cast<double>(n_actions - 1) * floor_prob);
  }
  return LogPolicy::from_unnormalized(std::move(logs));
}

// ---------------------------------------------------------------------------
// SolverConfig

void SolverConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidInput("config: alpha must be > 0");
  if (!(eps_inner > 0.0)) throw InvalidInput("config: eps_inner must be > 0");
  if (!(eps_outer > 0.0)) throw InvalidInput("config: eps_outer must be > 0");
  if (max_inner_iters < 1) throw InvalidInput("config: max_inner_iters must be >= 1");
  if (max_outer_iters < 1) throw InvalidInput("config: max_outer_iters must be >= 1");
  if (clip_bound && !(*clip_bound > 0.0)) throw InvalidInput("config: clip_bound must be > 0");
}

SolverConfig SolverConfig::driver_defaults(const FiniteMdp& mdp) {
  SolverConfig c;
  double r = mdp.reward_bound();
  if (!(r > 0.0)) r = 1.0;
  c.alpha = 0.1 * r;
  c.clip_bound = r / (1.0 - mdp.discount);
  return c;
}

// ---------------------------------------------------------------------------
// Validation

std::string ValidationReport::to_string() const {
  if (ok()) return "ok";
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    const auto& v = violations[i];
    if (i) os << "; ";
    os << v.what;
    if (v.state >= 0) os << " at state " << v.state;
    if (v.action >= 0) os << " action " << v.action;
    if (v.member >= 0) os << " member " << v.member;
  }
  return os.str();
}

ValidationReport validate_mdp(const FiniteMdp& mdp) {
  ValidationReport rep;
  auto add = [&](std::string what, long s = -1, long a = -1) {
    rep.violations.push_back({std::move(what), s, a, -1});
  };
  if (mdp.n_states == 0) add("n_states must be positive");
  if (mdp.n_actions == 0) add("n_actions must be positive");
  if (!(mdp.discount > 0.0 && mdp.discount < 1.0)) add("discount out of range");
  if (mdp.reward.rows() != mdp.n_states || mdp.reward.cols() != mdp.n_actions) {
    add("reward shape mismatch");
  } else {
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      for (std::size_t a = 0; a < mdp.n_actions; ++a) {
        if (!std::isfinite(mdp.reward(s, a))) add("non-finite reward", long(s), long(a));
      }
    }
    if (mdp.r_max) {
      double observed = 0.0;
      for (double r : mdp.reward.data()) {
        if (std::isfinite(r)) observed = std::max(observed, std::abs(r));
      }
      if (!(*mdp.r_max >= observed)) add("declared r_max below max |reward|");
    }
  }
  if (mdp.initial_dist.size() != mdp.n_states) {
    add("initial_dist length mismatch");
  } else if (!is_distribution(mdp.initial_dist, kConstructionTol)) {
    add("initial_dist invalid: " + describe_row_problem(mdp.initial_dist));
  }
  return rep;
}

ValidationReport validate_mdp(const FiniteMdp& mdp, const TransitionKernel& kernel) {
  ValidationReport rep = validate_mdp(mdp);
  if (kernel.n_states != mdp.n_states || kernel.n_actions != mdp.n_actions ||
      kernel.probs.size() != mdp.n_states * mdp.n_actions * mdp.n_states) {
    rep.violations.push_back({"kernel shape mismatch", -1, -1, -1});
    return rep;
  }
  for (std::size_t s = 0; s < kernel.n_states; ++s) {
    for (std::size_t a = 0; a < kernel.n_actions; ++a) {
      auto row = kernel.row(s, a);
      if (!is_distribution(row, kConstructionTol)) {
        rep.violations.push_back(
            {"kernel row invalid: " + describe_row_problem(row), long(s), long(a), -1});
      }
    }
  }
  return rep;
}

ValidationReport validate_members(std::size_t n_states, std::size_t n_actions,
                                  const std::vector<std::vector<std::vector<double>>>& members) {
  ValidationReport rep;
  if (n_states == 0 || n_actions == 0) {
    rep.violations.push_back({"empty state or action space", -1, -1, -1});
    return rep;
  }
  if (members.size() != n_states * n_actions) {
    rep.violations.push_back({"member lists: expected " + std::to_string(n_states * n_actions) +
                                  " (state, action) pairs, got " + std::to_string(members.size()),
                              -1, -1, -1});
    return rep;
  }
  for (std::size_t p = 0; p < members.size(); ++p) {
    const long s = long(p / n_actions);
    const long a = long(p % n_actions);
    if (members[p].empty()) {
      rep.violations.push_back({"empty member list", s, a, -1});
      continue;
    }
    for (std::size_t m = 0; m < members[p].size(); ++m) {
      const auto& row = members[p][m];
      if (row.size() != n_states) {
        rep.violations.push_back({"member row length mismatch", s, a, long(m)});
      } else if (!is_distribution(row, kConstructionTol)) {
        rep.violations.push_back(
            {"member row invalid: " + describe_row_problem(row), s, a, long(m)});
      }
    }
  }
  return rep;
}

void require_valid(const FiniteMdp& mdp) {
  const auto rep = validate_mdp(mdp);
  if (!rep.ok()) throw InvalidInput("invalid MDP: " + rep.to_string());
}

void require_valid(const FiniteMdp& mdp, const TransitionKernel& kernel) {
  const auto rep = validate_mdp(mdp, kernel);
  if (!rep.ok()) throw InvalidInput("invalid MDP: " + rep.to_string());
}

void require_shape(const FiniteMdp& mdp, const UncertaintySet& set) {
  if (set.n_states() != mdp.n_states || set.n_actions() != mdp.n_actions) {
    throw InvalidInput("uncertainty set shape does not match MDP");
  }
}

void require_shape(const FiniteMdp& mdp, const LogPolicy& policy) {
  if (policy.n_states() != mdp.n_states || policy.n_actions() != mdp.n_actions) {
    throw InvalidInput("policy shape does not match MDP");
  }
}

void require_shape(const FiniteMdp& mdp, const QTable& q) {
  if (q.n_states() != mdp.n_states || q.n_actions() != mdp.n_actions) {
    throw InvalidInput("Q table shape does not match MDP");
  }
}

LogPolicy uniform_policy(const FiniteMdp& mdp) {
  const double lp = -std::log(static_cast<double>(mdp.n_actions));
  return LogPolicy(Table(mdp.n_states, mdp.n_actions, lp));
}

// ---------------------------------------------------------------------------
// Exact evaluation

VTable evaluate_policy(const FiniteMdp& mdp, const TransitionKernel& kernel,
                       const LogPolicy& policy, const SolverConfig& config) {
  require_valid(mdp, kernel);
  require_shape(mdp, policy);
  const auto S = mdp.n_states;
  const auto A = mdp.n_actions;

  // Collapse to the Markov chain under pi once; each sweep is then S x S.
  std::vector<double> r_pi(S, 0.0);
  std::vector<double> p_pi(S * S, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const double w = policy.prob(s, a);
      if (w == 0.0) continue;
      r_pi[s] += w * mdp.reward(s, a);
      auto row = kernel.row(s, a);
      for (std::size_t t = 0; t < S; ++t) p_pi[s * S + t] += w * row[t];
    }
  }

  VTable v{std::vector<double>(S, 0.0)};
  VTable next{std::vector<double>(S, 0.0)};
  double residual = 0.0;
  for (int it = 1; it <= config.max_inner_iters; ++it) {
    for (std::size_t s = 0; s < S; ++s) {
      double ev = 0.0;
      for (std::size_t t = 0; t < S; ++t) ev += p_pi[s * S + t] * v[t];
      next[s] = r_pi[s] + mdp.discount * ev;
    }
    residual = sup_distance(next.values, v.values);
    std::swap(v, next);
    if (residual < config.eps_inner) return v;
  }
  throw NonConvergence("evaluate_policy", config.max_inner_iters, residual);
}

double exact_return(const FiniteMdp& mdp, const TransitionKernel& kernel, const LogPolicy& policy,
                    const SolverConfig& config) {
  const auto v = evaluate_policy(mdp, kernel, policy, config);
  double j = 0.0;
  for (std::size_t s = 0; s < mdp.n_states; ++s) j += mdp.initial_dist[s] * v[s];
  return j;
}

}  // namespace rrpi
