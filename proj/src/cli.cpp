#include "rrpi/cli.hpp"

#include <cstdlib>
#include <ostream>
#include <vector>

#include "CLI11.hpp"
#include "rrpi/checks.hpp"
#include "rrpi/driver.hpp"
#include "rrpi/error.hpp"
#include "rrpi/robust_dp.hpp"

namespace rrpi {

namespace fs = std::filesystem;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  if (!j.is_object()) throw InvalidInput(what + ": expected a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }) ==
        allowed.end()) {
      throw InvalidInput(what + ": unknown key '" + k + "'");
    }
  }
}

GridCell cell_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidInput("gridworld: cells are [x, y] pairs");
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

std::vector<GridCell> cells_from_json(const json& j) {
  std::vector<GridCell> out;
  for (const auto& c : j) out.push_back(cell_from_json(c));
  return out;
}

GridworldSpec gridworld_from_json(const json& j) {
  reject_unknown(j, {"source", "width", "height", "slip_prob", "perturbation", "n_members",
                     "discount", "start", "goals", "goal_reward", "hazards", "hazard_reward",
                     "walls", "regions"},
                 "gridworld");
  GridworldSpec g;
  g.width = j.value("width", g.width);
  g.height = j.value("height", g.height);
  g.slip_prob = j.value("slip_prob", g.slip_prob);
  g.perturbation = j.value("perturbation", g.perturbation);
  g.n_members = j.value("n_members", g.n_members);
  g.discount = j.value("discount", g.discount);
  if (j.contains("start")) g.start = cell_from_json(j["start"]);
  if (j.contains("goals")) {
    g.goals = cells_from_json(j["goals"]);
  } else {
    g.goals = {{g.width - 1, g.height - 1}};
  }
  g.goal_reward = j.value("goal_reward", g.goal_reward);
  if (j.contains("hazards")) g.hazards = cells_from_json(j["hazards"]);
  g.hazard_reward = j.value("hazard_reward", g.hazard_reward);
  if (j.contains("walls")) g.walls = cells_from_json(j["walls"]);
  if (j.contains("regions")) {
    for (const auto& r : j["regions"]) {
      reject_unknown(r, {"lo", "hi", "perturbation"}, "gridworld region");
      g.regions.push_back({cell_from_json(r.at("lo")), cell_from_json(r.at("hi")),
                           r.at("perturbation").get<double>()});
    }
  }
  g.validate();
  return g;
}

void require_exists(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw IoError(std::string(what) + " '" + p.string() + "' does not exist");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  try {
    reject_unknown(j, {"instance", "solver", "ensemble", "dataset", "dataset_size", "out", "seed",
                       "trials", "jobs"},
                   "config");
    ExperimentConfig c;
    c.seed = j.value("seed", c.seed);
    if (j.contains("instance")) {
      const auto& inst = j["instance"];
      const auto source = inst.at("source").get<std::string>();
      if (source == "file") {
        reject_unknown(inst, {"source", "path"}, "instance");
        c.source = InstanceSource::File;
        c.instance_path = inst.at("path").get<std::string>();
      } else if (source == "random") {
        reject_unknown(inst, {"source", "n_states", "n_actions", "n_members", "branching",
                              "reward_min", "reward_max", "discount", "seed"},
                       "instance");
        c.source = InstanceSource::Random;
        auto& r = c.random;
        r.n_states = inst.value("n_states", r.n_states);
        r.n_actions = inst.value("n_actions", r.n_actions);
        r.branching = inst.value("branching", r.branching);
        r.reward_min = inst.value("reward_min", r.reward_min);
        r.reward_max = inst.value("reward_max", r.reward_max);
        r.discount = inst.value("discount", r.discount);
        if (inst.contains("seed")) r.seed = inst["seed"].get<std::uint64_t>();
        c.random_members = inst.value("n_members", c.random_members);
        r.validate();
        if (c.random_members < 1) throw InvalidInput("instance: n_members must be >= 1");
      } else if (source == "gridworld") {
        c.source = InstanceSource::Gridworld;
        c.gridworld = gridworld_from_json(inst);
      } else {
        throw InvalidInput("instance: unknown source '" + source + "'");
      }
    }
    if (j.contains("solver")) {
      c.solver = j["solver"];
      config_from_json(c.solver);  // validates keys and ranges early
    }
    if (j.contains("ensemble")) {
      const auto& e = j["ensemble"];
      reject_unknown(e, {"n_members", "method", "dirichlet_prior", "seed"}, "ensemble");
      c.ensemble.n_members = e.value("n_members", c.ensemble.n_members);
      if (e.contains("method")) c.ensemble.method = parse_ensemble_method(e["method"].get<std::string>());
      c.ensemble.dirichlet_prior = e.value("dirichlet_prior", c.ensemble.dirichlet_prior);
      if (e.contains("seed")) {
        c.ensemble.seed = e["seed"].get<std::uint64_t>();
        c.ensemble_seed_set = true;
      }
      c.ensemble.validate();
    }
    if (j.contains("dataset")) c.dataset_path = j["dataset"].get<std::string>();
    c.dataset_size = j.value("dataset_size", c.dataset_size);
    if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
    c.trials = j.value("trials", c.trials);
    c.jobs = j.value("jobs", c.jobs);
    if (c.trials < 1) throw InvalidInput("config: trials must be >= 1");
    if (c.jobs < 1) throw InvalidInput("config: jobs must be >= 1");
    if (c.source == InstanceSource::File) require_exists(c.instance_path, "instance file");
    if (!c.dataset_path.empty()) require_exists(c.dataset_path, "dataset");
    return c;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  require_exists(path, "config");
  return from_json(read_json(path));
}

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> jobs;
  std::string instance;
  std::string dataset;
  std::optional<double> alpha;
  std::optional<std::size_t> dataset_size;
  std::optional<std::size_t> members;
};

struct Loaded {
  RobustInstance instance;
  std::optional<TransitionKernel> kernel;
};

Loaded load_instance(const ExperimentConfig& c) {
  switch (c.source) {
    case InstanceSource::File: {
      auto inst = read_instance(c.instance_path);
      auto set = inst.uncertainty_set();
      return {{std::move(inst.mdp), std::move(set)}, std::move(inst.kernel)};
    }
    case InstanceSource::Random: {
      auto spec = c.random;
      auto robust = gen_random_robust(spec, c.random_members);
      auto nominal = robust.set.kernel_of_member(0);
      return {std::move(robust), std::move(nominal)};
    }
    case InstanceSource::Gridworld: {
      auto robust = gen_gridworld(c.gridworld);
      auto nominal = robust.set.kernel_of_member(c.gridworld.n_members / 2);
      return {std::move(robust), std::move(nominal)};
    }
  }
  throw InvalidInput("unknown instance source");
}

SolverConfig solver_config(const ExperimentConfig& c, const FiniteMdp& mdp, const Flags& f) {
  auto base = SolverConfig::driver_defaults(mdp);
  base.seed = c.seed;
  auto cfg = config_from_json(c.solver, base);
  if (f.alpha) {
    cfg.alpha = *f.alpha;
    cfg.validate();
  }
  return cfg;
}

ExperimentConfig resolve(const Flags& f) {
  ExperimentConfig c;
  bool random_seed_set = false;
  if (!f.config.empty()) {
    const auto j = [&] {
      require_exists(f.config, "config");
      return read_json(f.config);
    }();
    c = ExperimentConfig::from_json(j);
    random_seed_set = j.contains("instance") && j["instance"].contains("seed");
  }
  if (f.seed) c.seed = *f.seed;
  if (!random_seed_set) c.random.seed = c.seed;
  if (!c.ensemble_seed_set) c.ensemble.seed = c.seed;
  if (!f.instance.empty()) {
    c.source = InstanceSource::File;
    c.instance_path = f.instance;
    require_exists(c.instance_path, "instance file");
  }
  if (!f.dataset.empty()) {
    c.dataset_path = f.dataset;
    require_exists(c.dataset_path, "dataset");
  }
  if (f.trials) c.trials = *f.trials;
  if (f.jobs) c.jobs = *f.jobs;
  if (f.dataset_size) c.dataset_size = *f.dataset_size;
  if (f.members) c.ensemble.n_members = *f.members;
  if (c.trials < 1 || c.jobs < 1) throw InvalidInput("trials and jobs must be >= 1");
  if (!f.out.empty()) {
    c.out_dir = f.out;
  } else if (c.out_dir.empty()) {
    const char* env = std::getenv("RRPI_OUT");
    c.out_dir = env && *env ? fs::path(env) : fs::path(".");
  }
  return c;
}

json values_json(const VTable& v) { return v.values; }

int cmd_gen(const ExperimentConfig& c, std::ostream& out) {
  auto loaded = load_instance(c);
  const auto path = c.out_dir / "instance.json";
  write_instance(path, loaded.instance.mdp, loaded.kernel ? &*loaded.kernel : nullptr,
                 &loaded.instance.set);
  out << "wrote " << path.string() << '\n';
  if (c.dataset_size > 0) {
    if (!loaded.kernel) throw InvalidInput("gen: dataset sampling needs a nominal kernel");
    auto data = sample_dataset(*loaded.kernel, c.dataset_size, c.seed);
    // Rewards come from the instance definition.
    for (auto& t : data.transitions) t.reward = loaded.instance.mdp.reward(t.state, t.action);
    const auto dpath = c.out_dir / "dataset.jsonl";
    std::ofstream f(dpath, std::ios::binary);
    if (!f) throw IoError("cannot open '" + dpath.string() + "' for writing");
    write_dataset_jsonl(f, data);
    out << "wrote " << dpath.string() << '\n';
  }
  return kExitOk;
}

int cmd_solve(const ExperimentConfig& c, const Flags& f, std::ostream& out) {
  const auto loaded = load_instance(c);
  const auto& [mdp, set] = loaded.instance;
  const auto cfg = solver_config(c, mdp, f);
  const auto opt = robust_value_iteration(mdp, set, cfg);
  json j;
  j["V"] = values_json(opt.v);
  j["policy"] = opt.policy;
  j["J"] = opt.j;
  j["iterations"] = opt.iterations;
  const auto path = c.out_dir / "solve.json";
  write_json(path, j);
  out << "robust optimum J = " << format_double(opt.j) << " (" << opt.iterations
      << " sweeps); wrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_rrpi(const ExperimentConfig& c, const Flags& f, std::ostream& out) {
  const auto loaded = load_instance(c);
  const auto& [mdp, set] = loaded.instance;
  const auto cfg = solver_config(c, mdp, f);
  const auto res = rrpi_solve(mdp, set, cfg);
  write_csv(c.out_dir / "trace.csv", trace_csv(res.trace));
  write_json(c.out_dir / "result.json", result_to_json(res));

  // Cold-start solve of the final subproblem for the sweep diagnostics.
  const auto fp = solve_fixed_point(mdp, set, res.final_policy, cfg, QTable(mdp.n_states, mdp.n_actions));
  write_csv(c.out_dir / "residuals.csv", residuals_csv(fp.residuals));
  write_csv(c.out_dir / "worst_members.csv",
            member_histogram_csv(set, fp.worst_member_counts, fp.iterations));

  out << "RRPI " << (res.converged ? "converged" : "stopped") << " after "
      << res.trace.steps.back().iter << " outer steps; J = " << format_double(res.trace.steps.back().j)
      << ", robust optimum = " << format_double(res.optimal_j) << '\n';
  return kExitOk;
}

int cmd_check(const ExperimentConfig& c, const Flags& f, std::ostream& out) {
  std::vector<RobustInstance> fixtures;
  fixtures.push_back(fixture_m2());
  fixtures.push_back(fixture_two_member_chain());
  {
    auto m1 = fixture_m1();
    fixtures.push_back({m1.mdp, UncertaintySet::singleton(m1.kernel)});
  }
  {
    GridworldSpec g;
    g.width = 3;
    g.height = 3;
    g.slip_prob = 0.2;
    g.perturbation = 0.1;
    g.goals = {{2, 2}};
    g.hazards = {{1, 1}};
    fixtures.push_back(gen_gridworld(g));
  }
  if (!f.config.empty() || !f.instance.empty()) fixtures.push_back(load_instance(c).instance);

  CheckSuiteOptions opts;
  opts.seed = c.seed;
  const auto results = run_check_suite(fixtures, opts);
  CsvTable table{{"check", "trials", "violations", "worst_excess", "passed"}, {}};
  bool ok = true;
  for (const auto& r : results) {
    out << (r.passed() ? "PASS " : "FAIL ") << r.name << ": " << r.violations << " violations in "
        << r.trials << " trials (worst excess " << format_double(r.worst_excess) << ")\n";
    table.rows.push_back({r.name, std::to_string(r.trials), std::to_string(r.violations),
                          format_double(r.worst_excess), r.passed() ? "1" : "0"});
    ok = ok && r.passed();
  }
  write_csv(c.out_dir / "check.csv", table);
  return ok ? kExitOk : kExitCheckFailed;
}

int cmd_ablate(const ExperimentConfig& c, const Flags& f, std::ostream& out) {
  const auto loaded = load_instance(c);
  const auto& [mdp, set] = loaded.instance;
  const auto cfg = solver_config(c, mdp, f);
  const auto rep = ablation_run(mdp, set, cfg, c.trials, c.seed, c.jobs);
  write_csv(c.out_dir / "ablation.csv", ablation_csv(rep));
  json s;
  s["robust_mean"] = rep.robust_mean;
  s["robust_std"] = rep.robust_std;
  s["ablated_mean"] = rep.ablated_mean;
  s["ablated_std"] = rep.ablated_std;
  s["percent_drop"] = rep.percent_drop;
  s["std_ratio"] = std::isinf(rep.std_ratio) ? json("inf") : json(rep.std_ratio);
  s["summary"] = rep.summary();
  s["trials"] = c.trials;
  write_json(c.out_dir / "ablation_summary.json", s);
  out << "ablation over " << c.trials << " trials: " << rep.summary() << '\n';
  return kExitOk;
}

int cmd_estimate(const ExperimentConfig& c, std::ostream& out) {
  if (c.dataset_path.empty()) throw InvalidInput("estimate: no dataset given (--dataset)");
  std::optional<std::size_t> S;
  std::optional<std::size_t> A;
  if (c.source == InstanceSource::File) {
    const auto inst = read_instance(c.instance_path);
    S = inst.mdp.n_states;
    A = inst.mdp.n_actions;
  }
  const auto data = read_dataset_jsonl(c.dataset_path, S, A);
  const auto set = build_uncertainty_set(data, c.ensemble);
  json doc;
  doc["n_states"] = set.n_states();
  doc["n_actions"] = set.n_actions();
  doc["members"] = set_to_json(set);
  write_json(c.out_dir / "uncertainty_set.json", doc);
  write_csv(c.out_dir / "disagreement.csv", disagreement_csv(ensemble_disagreement(set)));
  out << "fit " << to_string(c.ensemble.method) << " ensemble of " << c.ensemble.n_members
      << " members from " << data.transitions.size() << " transitions\n";
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust regularized policy iteration for finite MDPs", "rrpi"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON experiment config");
    sub->add_option("--seed", flags.seed, "Override the config seed");
    sub->add_option("--out", flags.out, "Output directory (default: $RRPI_OUT or .)");
    sub->add_option("--instance", flags.instance, "Instance JSON file");
    sub->add_option("--alpha", flags.alpha, "Regularization coefficient");
  };
  auto* gen = app.add_subcommand("gen", "Emit an instance (and optionally a sampled dataset)");
  auto* solve = app.add_subcommand("solve", "Robust value iteration");
  auto* rrpi = app.add_subcommand("rrpi", "Robust regularized policy iteration");
  auto* check = app.add_subcommand("check", "Run the property suite; exit 3 on failure");
  auto* ablate = app.add_subcommand("ablate", "Worst-case vs random-member ablation");
  auto* estimate = app.add_subcommand("estimate", "Fit an ensemble from a JSONL dataset");
  for (auto* sub : {gen, solve, rrpi, check, ablate, estimate}) add_common(sub);
  gen->add_option("--dataset-size", flags.dataset_size, "Sample this many transitions");
  ablate->add_option("--trials", flags.trials, "Number of ablated trials");
  ablate->add_option("--jobs", flags.jobs, "Concurrent trials");
  estimate->add_option("--dataset", flags.dataset, "JSONL dataset");
  estimate->add_option("--members", flags.members, "Ensemble size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const auto cfg = resolve(flags);
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + cfg.out_dir.string() + "'");
    if (*gen) return cmd_gen(cfg, out);
    if (*solve) return cmd_solve(cfg, flags, out);
    if (*rrpi) return cmd_rrpi(cfg, flags, out);
    if (*check) return cmd_check(cfg, flags, out);
    if (*ablate) return cmd_ablate(cfg, flags, out);
    if (*estimate) return cmd_estimate(cfg, out);
  } catch (const TheoremViolation& e) {
    err << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace rrpi
