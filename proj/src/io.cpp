#include "rrpi/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "rrpi/error.hpp"

namespace rrpi {

namespace {

template <typename F>
auto json_guard(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string(what) + ": " + e.what());
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw InvalidInput(std::string(what) + ": expected a JSON object");
  std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!keys.count(k)) throw InvalidInput(std::string(what) + ": unknown key '" + k + "'");
  }
}

std::vector<double> number_row(const json& j, std::size_t expected, const char* what) {
  if (!j.is_array() || j.size() != expected) {
    throw InvalidInput(std::string(what) + ": expected array of length " + std::to_string(expected));
  }
  std::vector<double> out;
  out.reserve(expected);
  for (const auto& x : j) {
    if (!x.is_number()) throw InvalidInput(std::string(what) + ": non-numeric entry");
    out.push_back(x.get<double>());
  }
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

UncertaintySet Instance::uncertainty_set() const {
  if (set) return *set;
  if (kernel) return UncertaintySet::singleton(*kernel);
  throw InvalidInput("instance has neither 'members' nor 'kernel'");
}

// ---------------------------------------------------------------------------
// Instances

json set_to_json(const UncertaintySet& set) {
  json members = json::array();
  for (std::size_t s = 0; s < set.n_states(); ++s) {
    for (std::size_t a = 0; a < set.n_actions(); ++a) {
      json list = json::array();
      for (std::size_t m = 0; m < set.member_count(s, a); ++m) {
        auto row = set.member(s, a, m);
        list.push_back(std::vector<double>(row.begin(), row.end()));
      }
      members.push_back(std::move(list));
    }
  }
  return members;
}

UncertaintySet set_from_json(std::size_t n_states, std::size_t n_actions, const json& members) {
  return json_guard("members", [&] {
    if (!members.is_array() || members.size() != n_states * n_actions) {
      throw InvalidInput("members: expected " + std::to_string(n_states * n_actions) +
                         " (state, action) entries");
    }
    std::vector<std::vector<std::vector<double>>> lists;
    lists.reserve(members.size());
    for (const auto& list : members) {
      if (!list.is_array()) throw InvalidInput("members: expected array of member rows");
      auto& out = lists.emplace_back();
      for (const auto& row : list) out.push_back(number_row(row, n_states, "members"));
    }
    return UncertaintySet(n_states, n_actions, std::move(lists));
  });
}

json instance_to_json(const FiniteMdp& mdp, const TransitionKernel* kernel,
                      const UncertaintySet* set) {
  json j;
  j["n_states"] = mdp.n_states;
  j["n_actions"] = mdp.n_actions;
  j["discount"] = mdp.discount;
  json reward = json::array();
  for (std::size_t s = 0; s < mdp.reward.rows(); ++s) {
    auto r = mdp.reward.row(s);
    reward.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j["reward"] = std::move(reward);
  j["initial_dist"] = mdp.initial_dist;
  if (mdp.r_max) j["r_max"] = *mdp.r_max;
  if (kernel) {
    json k = json::array();
    for (std::size_t s = 0; s < kernel->n_states; ++s) {
      json per_state = json::array();
      for (std::size_t a = 0; a < kernel->n_actions; ++a) {
        auto row = kernel->row(s, a);
        per_state.push_back(std::vector<double>(row.begin(), row.end()));
      }
      k.push_back(std::move(per_state));
    }
    j["kernel"] = std::move(k);
  }
  if (set) j["members"] = set_to_json(*set);
  return j;
}

Instance instance_from_json(const json& j) {
  return json_guard("instance", [&] {
    reject_unknown(j, {"n_states", "n_actions", "discount", "reward", "initial_dist", "r_max",
                       "kernel", "members"},
                   "instance");
    Instance inst;
    auto& mdp = inst.mdp;
    mdp.n_states = j.at("n_states").get<std::size_t>();
    mdp.n_actions = j.at("n_actions").get<std::size_t>();
    mdp.discount = j.at("discount").get<double>();
    const auto& reward = j.at("reward");
    if (!reward.is_array() || reward.size() != mdp.n_states) {
      throw InvalidInput("reward: expected " + std::to_string(mdp.n_states) + " rows");
    }
    std::vector<double> flat;
    for (const auto& row : reward) {
      auto r = number_row(row, mdp.n_actions, "reward");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    mdp.reward = Table(mdp.n_states, mdp.n_actions, std::move(flat));
    mdp.initial_dist = number_row(j.at("initial_dist"), mdp.n_states, "initial_dist");
    if (j.contains("r_max")) mdp.r_max = j.at("r_max").get<double>();
    require_valid(mdp);

    if (j.contains("kernel")) {
      const auto& k = j.at("kernel");
      if (!k.is_array() || k.size() != mdp.n_states) throw InvalidInput("kernel: bad shape");
      TransitionKernel kernel(mdp.n_states, mdp.n_actions);
      for (std::size_t s = 0; s < mdp.n_states; ++s) {
        if (!k[s].is_array() || k[s].size() != mdp.n_actions) throw InvalidInput("kernel: bad shape");
        for (std::size_t a = 0; a < mdp.n_actions; ++a) {
          auto row = number_row(k[s][a], mdp.n_states, "kernel");
          std::copy(row.begin(), row.end(), kernel.row(s, a).begin());
        }
      }
      require_valid(mdp, kernel);
      inst.kernel = std::move(kernel);
    }
    if (j.contains("members")) inst.set = set_from_json(mdp.n_states, mdp.n_actions, j.at("members"));
    return inst;
  });
}

void write_instance(const std::filesystem::path& path, const FiniteMdp& mdp,
                    const TransitionKernel* kernel, const UncertaintySet* set) {
  write_json(path, instance_to_json(mdp, kernel, set));
}

Instance read_instance(const std::filesystem::path& path) {
  return instance_from_json(read_json(path));
}

json read_json(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidInput("'" + path.string() + "': " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// JSONL datasets

OfflineDataset read_dataset_jsonl(std::istream& in, std::optional<std::size_t> n_states,
                                  std::optional<std::size_t> n_actions) {
  OfflineDataset d;
  std::string line;
  std::size_t line_no = 0;
  std::size_t max_s = 0;
  std::size_t max_a = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json_guard("dataset", [&] {
      const auto j = json::parse(line);
      reject_unknown(j, {"s", "a", "r", "s2"}, "dataset record");
      Transition t{j.at("s").get<std::size_t>(), j.at("a").get<std::size_t>(),
                   j.at("r").get<double>(), j.at("s2").get<std::size_t>()};
      max_s = std::max({max_s, t.state, t.next_state});
      max_a = std::max(max_a, t.action);
      d.transitions.push_back(t);
      return 0;
    });
  }
  d.n_states = n_states.value_or(d.transitions.empty() ? 0 : max_s + 1);
  d.n_actions = n_actions.value_or(d.transitions.empty() ? 0 : max_a + 1);
  if (!d.transitions.empty()) d.validate();
  return d;
}

OfflineDataset read_dataset_jsonl(const std::filesystem::path& path,
                                  std::optional<std::size_t> n_states,
                                  std::optional<std::size_t> n_actions) {
  auto in = open_in(path);
  return read_dataset_jsonl(in, n_states, n_actions);
}

void write_dataset_jsonl(std::ostream& out, const OfflineDataset& dataset) {
  for (const auto& t : dataset.transitions) {
    json j;
    j["s"] = t.state;
    j["a"] = t.action;
    j["r"] = t.reward;
    j["s2"] = t.next_state;
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc{}) throw Error("format_double: conversion failed");
  return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw InvalidInput("not a number: '" + s + "'");
  }
  return x;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw InvalidInput("CSV has no column '" + name + "'");
}

namespace {

void write_line(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string to_str(std::size_t x) { return std::to_string(x); }

}  // namespace

void write_csv(std::ostream& out, const CsvTable& table) {
  write_line(out, table.header);
  for (const auto& row : table.rows) write_line(out, row);
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("CSV: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split_line(line);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != t.header.size()) throw InvalidInput("CSV: row width mismatch");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  auto out = open_out(path);
  write_csv(out, table);
  if (!out) throw IoError("write failed: '" + path.string() + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_csv(in);
}

CsvTable disagreement_csv(const Disagreement& d) {
  CsvTable t{{"state", "action", "disagreement", "log_disagreement"}, {}};
  for (std::size_t s = 0; s < d.value.rows(); ++s) {
    for (std::size_t a = 0; a < d.value.cols(); ++a) {
      t.rows.push_back({to_str(s), to_str(a), format_double(d.value(s, a)),
                        format_double(d.log_value(s, a))});
    }
  }
  return t;
}

CsvTable residuals_csv(const std::vector<double>& residuals) {
  CsvTable t{{"iter", "residual"}, {}};
  for (std::size_t k = 0; k < residuals.size(); ++k) {
    t.rows.push_back({to_str(k + 1), format_double(residuals[k])});
  }
  return t;
}

CsvTable member_histogram_csv(const UncertaintySet& set, const std::vector<std::size_t>& counts,
                              int sweeps) {
  if (counts.size() != set.total_members()) throw InvalidInput("histogram: count length mismatch");
  CsvTable t{{"state", "action", "member", "frequency"}, {}};
  for (std::size_t s = 0; s < set.n_states(); ++s) {
    for (std::size_t a = 0; a < set.n_actions(); ++a) {
      for (std::size_t m = 0; m < set.member_count(s, a); ++m) {
        const double f = sweeps > 0 ? double(counts[set.flat_index(s, a, m)]) / double(sweeps) : 0.0;
        t.rows.push_back({to_str(s), to_str(a), to_str(m), format_double(f)});
      }
    }
  }
  return t;
}

CsvTable trace_csv(const RrpiTrace& trace) {
  CsvTable t{{"iter", "J", "policy_delta", "inner_iters"}, {}};
  for (const auto& st : trace.steps) {
    t.rows.push_back({std::to_string(st.iter), format_double(st.j), format_double(st.policy_delta),
                      std::to_string(st.inner_iters)});
  }
  return t;
}

std::vector<OuterStep> trace_from_csv(const CsvTable& table) {
  const auto ci = table.column("iter");
  const auto cj = table.column("J");
  const auto cd = table.column("policy_delta");
  const auto cn = table.column("inner_iters");
  std::vector<OuterStep> steps;
  for (const auto& row : table.rows) {
    OuterStep st;
    st.iter = std::stoi(row[ci]);
    st.j = parse_double(row[cj]);
    st.policy_delta = parse_double(row[cd]);
    st.inner_iters = std::stoi(row[cn]);
    steps.push_back(std::move(st));
  }
  return steps;
}

CsvTable ablation_csv(const AblationReport& report) {
  CsvTable t{{"trial", "variant", "final_J"}, {}};
  for (std::size_t k = 0; k < report.robust_j.size(); ++k) {
    t.rows.push_back({to_str(k), "robust", format_double(report.robust_j[k])});
    t.rows.push_back({to_str(k), "ablated", format_double(report.ablated_j[k])});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Config, policies and result bundles

json config_to_json(const SolverConfig& c) {
  json j;
  j["alpha"] = c.alpha;
  j["eps_inner"] = c.eps_inner;
  j["eps_outer"] = c.eps_outer;
  j["max_inner_iters"] = c.max_inner_iters;
  j["max_outer_iters"] = c.max_outer_iters;
  j["clip_bound"] = c.clip_bound ? json(*c.clip_bound) : json(nullptr);
  j["seed"] = c.seed;
  j["retain_policies"] = c.retain_policies;
  return j;
}

SolverConfig config_from_json(const json& j, SolverConfig c) {
  return json_guard("solver config", [&] {
    reject_unknown(j, {"alpha", "eps_inner", "eps_outer", "max_inner_iters", "max_outer_iters",
                       "clip_bound", "seed", "retain_policies"},
                   "solver config");
    if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
    if (j.contains("eps_inner")) c.eps_inner = j["eps_inner"].get<double>();
    if (j.contains("eps_outer")) c.eps_outer = j["eps_outer"].get<double>();
    if (j.contains("max_inner_iters")) c.max_inner_iters = j["max_inner_iters"].get<int>();
    if (j.contains("max_outer_iters")) c.max_outer_iters = j["max_outer_iters"].get<int>();
    if (j.contains("clip_bound")) {
      c.clip_bound = j["clip_bound"].is_null() ? std::nullopt
                                               : std::optional<double>(j["clip_bound"].get<double>());
    }
    if (j.contains("seed")) c.seed = j["seed"].get<unsigned long long>();
    if (j.contains("retain_policies")) c.retain_policies = j["retain_policies"].get<bool>();
    c.validate();
    return c;
  });
}

namespace {

json table_to_json(const Table& t) {
  json rows = json::array();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    auto row = t.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Table table_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw InvalidInput(std::string(what) + ": expected a nonempty 2-D array");
  }
  const auto cols = j[0].size();
  std::vector<double> flat;
  for (const auto& row : j) {
    auto r = number_row(row, cols, what);
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return Table(j.size(), cols, std::move(flat));
}

}  // namespace

json policy_to_json(const LogPolicy& policy) { return table_to_json(policy.log_table()); }

LogPolicy policy_from_json(const json& j) {
  return json_guard("policy", [&] { return LogPolicy(table_from_json(j, "policy")); });
}

json qtable_to_json(const QTable& q) { return table_to_json(q.table()); }

QTable qtable_from_json(const json& j) {
  return json_guard("Q table", [&] { return QTable(table_from_json(j, "Q table")); });
}

json result_to_json(const RrpiResult& result) {
  json j;
  j["final_policy"] = policy_to_json(result.final_policy);
  j["final_q"] = qtable_to_json(result.final_q);
  j["config"] = config_to_json(result.config);
  j["converged"] = result.converged;
  j["outer_iterations"] = result.trace.steps.empty() ? 0 : result.trace.steps.back().iter;
  j["final_J"] = result.trace.steps.empty() ? 0.0 : result.trace.steps.back().j;
  j["optimal_J"] = result.optimal_j;
  j["robust_gap"] = result.robust_gap;
  return j;
}

ResultBundle result_from_json(const json& j) {
  return json_guard("result", [&] {
    reject_unknown(j, {"final_policy", "final_q", "config", "converged", "outer_iterations",
                       "final_J", "optimal_J", "robust_gap"},
                   "result");
    ResultBundle b;
    b.final_policy = policy_from_json(j.at("final_policy"));
    b.final_q = qtable_from_json(j.at("final_q"));
    b.config = config_from_json(j.at("config"));
    b.converged = j.at("converged").get<bool>();
    b.outer_iterations = j.at("outer_iterations").get<int>();
    b.final_j = j.at("final_J").get<double>();
    b.optimal_j = j.at("optimal_J").get<double>();
    b.robust_gap = j.at("robust_gap").get<double>();
    return b;
  });
}

}  // namespace rrpi
