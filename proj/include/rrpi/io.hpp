#pragma once

// Wire formats.
//
// Instance JSON:
//   { "n_states": S, "n_actions": A, "discount": g,
//     "reward": [[...A...] x S], "initial_dist": [...S...],
//     "r_max": optional,
//     "kernel":  [S][A][S]                      (optional)
//     "members": [S*A][N][S], pair index s*A+a  (optional) }
//
// Dataset JSONL: one {"s": .., "a": .., "r": .., "s2": ..} object per line.
//
// CSV numbers use the shortest decimal form that round-trips to the same double.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "rrpi/core.hpp"
#include "rrpi/driver.hpp"
#include "rrpi/estimation.hpp"

namespace rrpi {

using json = nlohmann::json;

struct Instance {
  FiniteMdp mdp;
  std::optional<TransitionKernel> kernel;
  std::optional<UncertaintySet> set;

  /// The member set, or a singleton around the kernel. Throws if neither exists.
  UncertaintySet uncertainty_set() const;
};

json instance_to_json(const FiniteMdp& mdp, const TransitionKernel* kernel = nullptr,
                      const UncertaintySet* set = nullptr);
/// Throws InvalidInput on missing/ill-typed fields, unknown keys or invalid contents.
Instance instance_from_json(const json& j);

void write_instance(const std::filesystem::path& path, const FiniteMdp& mdp,
                    const TransitionKernel* kernel = nullptr, const UncertaintySet* set = nullptr);
Instance read_instance(const std::filesystem::path& path);

json set_to_json(const UncertaintySet& set);
UncertaintySet set_from_json(std::size_t n_states, std::size_t n_actions, const json& members);

/// Dimensions default to max index + 1 over the records when not given.
OfflineDataset read_dataset_jsonl(std::istream& in, std::optional<std::size_t> n_states = {},
                                  std::optional<std::size_t> n_actions = {});
OfflineDataset read_dataset_jsonl(const std::filesystem::path& path,
                                  std::optional<std::size_t> n_states = {},
                                  std::optional<std::size_t> n_actions = {});
void write_dataset_jsonl(std::ostream& out, const OfflineDataset& dataset);

/// Shortest round-trip decimal representation.
std::string format_double(double x);
/// Inverse of format_double (accepts inf/-inf/nan as written by it).
double parse_double(const std::string& s);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws InvalidInput when absent.
  std::size_t column(const std::string& name) const;
};

void write_csv(std::ostream& out, const CsvTable& table);
CsvTable read_csv(std::istream& in);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

/// state,action,disagreement,log_disagreement
CsvTable disagreement_csv(const Disagreement& d);
/// iter,residual
CsvTable residuals_csv(const std::vector<double>& residuals);
/// state,action,member,frequency (fraction of sweeps in which the member was the worst)
CsvTable member_histogram_csv(const UncertaintySet& set, const std::vector<std::size_t>& counts,
                              int sweeps);
/// iter,J,policy_delta,inner_iters
CsvTable trace_csv(const RrpiTrace& trace);
/// trial,variant,final_J
CsvTable ablation_csv(const AblationReport& report);

/// Parses iter,J,policy_delta,inner_iters back into steps (other fields zero).
std::vector<OuterStep> trace_from_csv(const CsvTable& table);

json config_to_json(const SolverConfig& config);
/// Fields absent from `j` keep their values from `base`; unknown keys are rejected.
SolverConfig config_from_json(const json& j, SolverConfig base = {});

json policy_to_json(const LogPolicy& policy);
LogPolicy policy_from_json(const json& j);
json qtable_to_json(const QTable& q);
QTable qtable_from_json(const json& j);

/// final_policy (log-probs), final_q, config, converged, iterations, final_J,
/// optimal_J, robust_gap.
json result_to_json(const RrpiResult& result);

struct ResultBundle {
  LogPolicy final_policy;
  QTable final_q;
  SolverConfig config;
  bool converged = false;
  int outer_iterations = 0;
  double final_j = 0.0;
  double optimal_j = 0.0;
  double robust_gap = 0.0;
};
ResultBundle result_from_json(const json& j);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

}  // namespace rrpi
