#pragma once

// Core domain types for finite discounted MDPs and robust ensembles.
//
// Everything here is dense: tables are row-major std::vector<double> with
// (state, action) or (state, action, next_state) indexing.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rrpi {

/// Row-sum tolerance applied to freshly constructed distributions.
inline constexpr double kConstructionTol = 1e-12;
/// Row-sum tolerance applied to distributions produced by arithmetic.
inline constexpr double kArithmeticTol = 1e-10;

/// Dense row-major matrix of doubles.
class Table {
 public:
  Table() = default;
  Table(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Table(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  bool operator==(const Table&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Action-value table Q(s, a).
class QTable {
 public:
  QTable() = default;
  QTable(std::size_t n_states, std::size_t n_actions, double fill = 0.0)
      : values_(n_states, n_actions, fill) {}
  explicit QTable(Table values) : values_(std::move(values)) {}

  std::size_t n_states() const noexcept { return values_.rows(); }
  std::size_t n_actions() const noexcept { return values_.cols(); }

  double operator()(std::size_t s, std::size_t a) const { return values_(s, a); }
  double& operator()(std::size_t s, std::size_t a) { return values_(s, a); }
  std::span<const double> row(std::size_t s) const { return values_.row(s); }
  std::span<double> row(std::size_t s) { return values_.row(s); }

  const Table& table() const noexcept { return values_; }
  bool operator==(const QTable&) const = default;

 private:
  Table values_;
};

/// State-value table V(s).
struct VTable {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t s) const { return values[s]; }
  double& operator[](std::size_t s) { return values[s]; }
};

/// sup_{s,a} |a(s,a) - b(s,a)|. Shapes must agree.
double sup_distance(const QTable& a, const QTable& b);
double sup_distance(std::span<const double> a, std::span<const double> b);

/// S, A, r, rho0 and gamma of a finite discounted MDP. Plain data: validity is
/// checked by validate_mdp so that malformed instances can still be reported on.
struct FiniteMdp {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  Table reward;  // n_states x n_actions
  double discount = 0.9;
  std::vector<double> initial_dist;
  /// Declared bound on |r|. When absent, the observed max |r| is used.
  std::optional<double> r_max;

  double reward_bound() const;
};

/// Nominal transition kernel p(s' | s, a), stored (s, a, s') row-major.
struct TransitionKernel {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<double> probs;

  TransitionKernel() = default;
  TransitionKernel(std::size_t states, std::size_t actions)
      : n_states(states), n_actions(actions), probs(states * actions * states, 0.0) {}

  std::span<const double> row(std::size_t s, std::size_t a) const {
    return {probs.data() + (s * n_actions + a) * n_states, n_states};
  }
  std::span<double> row(std::size_t s, std::size_t a) {
    return {probs.data() + (s * n_actions + a) * n_states, n_states};
  }
};

/// sa-rectangular uncertainty set: for every (s, a) an ordered, nonempty list of
/// next-state distributions. The set is the product of the per-pair lists.
///
/// Construction validates every member row; an instance is always well formed.
class UncertaintySet {
 public:
  UncertaintySet() = default;

  /// One member list per (s, a) in row-major pair order; each member has
  /// n_states entries.
  UncertaintySet(std::size_t n_states, std::size_t n_actions,
                 std::vector<std::vector<std::vector<double>>> members);

  /// Ensemble of full kernels: member k of every pair comes from kernels[k].
  static UncertaintySet from_kernels(const std::vector<TransitionKernel>& kernels);

  /// Singleton set around a nominal kernel.
  static UncertaintySet singleton(const TransitionKernel& kernel);

  std::size_t n_states() const noexcept { return n_states_; }
  std::size_t n_actions() const noexcept { return n_actions_; }

  std::size_t member_count(std::size_t s, std::size_t a) const {
    const auto p = s * n_actions_ + a;
    return offsets_[p + 1] - offsets_[p];
  }
  std::size_t max_member_count() const noexcept { return max_members_; }
  std::size_t total_members() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }

  std::span<const double> member(std::size_t s, std::size_t a, std::size_t m) const {
    const auto idx = offsets_[s * n_actions_ + a] + m;
    return {probs_.data() + idx * n_states_, n_states_};
  }

  /// Flat index of member m of pair (s, a) among all members.
  std::size_t flat_index(std::size_t s, std::size_t a, std::size_t m) const {
    return offsets_[s * n_actions_ + a] + m;
  }

  /// Kernel made of member index min(m, count-1) at every pair.
  TransitionKernel kernel_of_member(std::size_t m) const;

  bool operator==(const UncertaintySet&) const = default;

 private:
  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  std::size_t max_members_ = 0;
  std::vector<std::size_t> offsets_;  // size n_states*n_actions + 1
  std::vector<double> probs_;
};

/// Stochastic policy pi(a | s) stored as log-probabilities with full support.
class LogPolicy {
 public:
  LogPolicy() = default;

  /// Takes normalized log-probabilities. Throws InvalidInput if any entry is
  /// non-finite or a row's exponentiated sum is off by more than kArithmeticTol.
  explicit LogPolicy(Table log_probs);

  /// Renormalizes each row by subtracting its log-sum-exp.
  static LogPolicy from_unnormalized(Table log_weights);

  /// Builds from probabilities; all entries must be strictly positive.
  static LogPolicy from_probs(const Table& probs);

  std::size_t n_states() const noexcept { return log_probs_.rows(); }
  std::size_t n_actions() const noexcept { return log_probs_.cols(); }

  double log_prob(std::size_t s, std::size_t a) const { return log_probs_(s, a); }
  double prob(std::size_t s, std::size_t a) const;
  std::span<const double> log_row(std::size_t s) const { return log_probs_.row(s); }
  std::vector<double> prob_row(std::size_t s) const;

  const Table& log_table() const noexcept { return log_probs_; }
  bool operator==(const LogPolicy&) const = default;

 private:
  Table log_probs_;
};

/// Deterministic policy as a per-state action index.
using DeterministicPolicy = std::vector<std::size_t>;

/// Full-support approximation of a deterministic policy: the chosen action gets
/// 1 - (A-1)*floor_prob.
LogPolicy soften(const DeterministicPolicy& policy, std::size_t n_actions,
                 double floor_prob = 1e-300);

struct SolverConfig {
  double alpha = 0.1;
  double eps_inner = 1e-11;
  double eps_outer = 1e-6;
  int max_inner_iters = 100000;
  int max_outer_iters = 200;
  std::optional<double> clip_bound;
  unsigned long long seed = 0;
  /// Keep every outer-loop policy in the trace (needed for ratio reports).
  bool retain_policies = false;

  /// Throws InvalidInput on any violated invariant.
  void validate() const;

  /// Driver defaults for an instance: alpha = 0.1 r_max and Q clipped at
  /// r_max / (1 - gamma). Falls back to r_max = 1 for all-zero rewards.
  static SolverConfig driver_defaults(const FiniteMdp& mdp);
};

struct Violation {
  std::string what;
  long state = -1;
  long action = -1;
  long member = -1;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  std::string to_string() const;
};

ValidationReport validate_mdp(const FiniteMdp& mdp);
ValidationReport validate_mdp(const FiniteMdp& mdp, const TransitionKernel& kernel);

/// Report for a member list before it becomes an UncertaintySet.
ValidationReport validate_members(std::size_t n_states, std::size_t n_actions,
                                  const std::vector<std::vector<std::vector<double>>>& members);

/// Throws InvalidInput carrying the report text when validation fails.
void require_valid(const FiniteMdp& mdp);
void require_valid(const FiniteMdp& mdp, const TransitionKernel& kernel);
void require_shape(const FiniteMdp& mdp, const UncertaintySet& set);
void require_shape(const FiniteMdp& mdp, const LogPolicy& policy);
void require_shape(const FiniteMdp& mdp, const QTable& q);

LogPolicy uniform_policy(const FiniteMdp& mdp);

/// Policy evaluation V = r_pi + gamma P_pi V by fixed-point iteration.
VTable evaluate_policy(const FiniteMdp& mdp, const TransitionKernel& kernel,
                       const LogPolicy& policy, const SolverConfig& config = {});

/// eta(pi, p): expected discounted return from the initial distribution.
double exact_return(const FiniteMdp& mdp, const TransitionKernel& kernel,
                    const LogPolicy& policy, const SolverConfig& config = {});

}  // namespace rrpi
