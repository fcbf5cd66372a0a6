#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "rrpi/checks.hpp"
#include "rrpi/cli.hpp"
#include "rrpi/driver.hpp"
#include "rrpi/error.hpp"
#include "rrpi/estimation.hpp"
#include "rrpi/generators.hpp"
#include "rrpi/io.hpp"
#include "rrpi/robust_dp.hpp"
#include "rrpi/soft_backup.hpp"

namespace py = pybind11;
using namespace rrpi;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Table to_table(const Array& a) {
  if (a.ndim() != 2) throw InvalidInput("expected a 2-D array");
  const auto r = std::size_t(a.shape(0));
  const auto c = std::size_t(a.shape(1));
  return Table(r, c, std::vector<double>(a.data(), a.data() + r * c));
}

Array from_table(const Table& t) {
  Array out(std::vector<py::ssize_t>{py::ssize_t(t.rows()), py::ssize_t(t.cols())});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

std::vector<double> to_vec(const Array& a) {
  if (a.ndim() != 1) throw InvalidInput("expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

Array from_vec(const std::vector<double>& v) {
  Array out(std::vector<py::ssize_t>{py::ssize_t(v.size())});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

QTable to_q(const Array& a) { return QTable(to_table(a)); }

LogPolicy to_policy(const Array& a) { return LogPolicy(to_table(a)); }

}  // namespace

PYBIND11_MODULE(_rrpi, m) {
  m.doc() = "Robust regularized policy iteration for finite MDPs";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<NonConvergence>(m, "NonConvergence", PyExc_RuntimeError);
  py::register_exception<TheoremViolation>(m, "TheoremViolation", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<FiniteMdp>(m, "FiniteMdp")
      .def(py::init([](const Array& reward, double discount, const Array& initial_dist,
                       std::optional<double> r_max) {
             FiniteMdp mdp;
             mdp.reward = to_table(reward);
             mdp.n_states = mdp.reward.rows();
             mdp.n_actions = mdp.reward.cols();
             mdp.discount = discount;
             mdp.initial_dist = to_vec(initial_dist);
             mdp.r_max = r_max;
             require_valid(mdp);
             return mdp;
           }),
           py::arg("reward"), py::arg("discount"), py::arg("initial_dist"), py::arg("r_max") = py::none())
      .def_readonly("n_states", &FiniteMdp::n_states)
      .def_readonly("n_actions", &FiniteMdp::n_actions)
      .def_readonly("discount", &FiniteMdp::discount)
      .def_property_readonly("reward", [](const FiniteMdp& m) { return from_table(m.reward); })
      .def_property_readonly("initial_dist", [](const FiniteMdp& m) { return from_vec(m.initial_dist); })
      .def("reward_bound", &FiniteMdp::reward_bound);

  py::class_<UncertaintySet>(m, "UncertaintySet")
      .def(py::init<std::size_t, std::size_t, std::vector<std::vector<std::vector<double>>>>(),
           py::arg("n_states"), py::arg("n_actions"), py::arg("members"),
           "members[s * n_actions + a][m] is a next-state distribution")
      .def_property_readonly("n_states", &UncertaintySet::n_states)
      .def_property_readonly("n_actions", &UncertaintySet::n_actions)
      .def("member_count", &UncertaintySet::member_count)
      .def("member", [](const UncertaintySet& s, std::size_t st, std::size_t a, std::size_t k) {
        if (st >= s.n_states() || a >= s.n_actions() || k >= s.member_count(st, a)) {
          throw py::index_error("member index out of range");
        }
        const auto row = s.member(st, a, k);
        return from_vec({row.begin(), row.end()});
      })
      .def("to_json", [](const UncertaintySet& s) { return set_to_json(s).dump(); })
      .def("__eq__", [](const UncertaintySet& a, const UncertaintySet& b) { return a == b; });

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_static("driver_defaults", &SolverConfig::driver_defaults)
      .def_readwrite("alpha", &SolverConfig::alpha)
      .def_readwrite("eps_inner", &SolverConfig::eps_inner)
      .def_readwrite("eps_outer", &SolverConfig::eps_outer)
      .def_readwrite("max_inner_iters", &SolverConfig::max_inner_iters)
      .def_readwrite("max_outer_iters", &SolverConfig::max_outer_iters)
      .def_readwrite("clip_bound", &SolverConfig::clip_bound)
      .def_readwrite("seed", &SolverConfig::seed)
      .def_readwrite("retain_policies", &SolverConfig::retain_policies)
      .def("validate", &SolverConfig::validate);

  py::class_<RobustInstance>(m, "RobustInstance")
      .def_readonly("mdp", &RobustInstance::mdp)
      .def_readonly("set", &RobustInstance::set);

  m.def("fixture_m2", &fixture_m2);
  m.def("fixture_two_member_chain", &fixture_two_member_chain);
  m.def(
      "gen_random_robust",
      [](std::size_t n_states, std::size_t n_actions, std::size_t branching, std::size_t n_members,
         double reward_min, double reward_max, double discount, std::uint64_t seed) {
        RandomMdpSpec spec{n_states, n_actions, branching, reward_min, reward_max, discount, seed};
        return gen_random_robust(spec, n_members);
      },
      py::arg("n_states") = 5, py::arg("n_actions") = 2, py::arg("branching") = 2, py::arg("n_members") = 3,
      py::arg("reward_min") = 0.0, py::arg("reward_max") = 1.0, py::arg("discount") = 0.9, py::arg("seed") = 0);
  m.def(
      "gen_gridworld",
      [](const std::string& spec_json) {
        auto inst = json::parse(spec_json);
        inst["source"] = "gridworld";
        const auto cfg = ExperimentConfig::from_json(json{{"instance", inst}});
        return gen_gridworld(cfg.gridworld);
      },
      py::arg("spec_json"), "Gridworld from a JSON object with the config file's instance keys.");
  m.def("read_instance", [](const std::filesystem::path& p) {
    auto inst = read_instance(p);
    return RobustInstance{inst.mdp, inst.uncertainty_set()};
  });

  m.def(
      "soft_value",
      [](const Array& q, const Array& log_mu, double alpha) {
        const auto r = soft_value(to_vec(q), to_vec(log_mu), alpha);
        return py::make_tuple(r.value, from_vec(r.argmax_policy_row));
      },
      py::arg("q"), py::arg("log_mu"), py::arg("alpha"), "Returns (value, Boltzmann row).");
  m.def(
      "duality_gap",
      [](const Array& q, const Array& log_mu, double alpha, const Array& candidate) {
        return duality_gap(to_vec(q), to_vec(log_mu), alpha, to_vec(candidate));
      },
      py::arg("q"), py::arg("log_mu"), py::arg("alpha"), py::arg("candidate"));
  m.def(
      "kl_divergence", [](const Array& lp, const Array& lq) { return kl_divergence(to_vec(lp), to_vec(lq)); },
      py::arg("log_p"), py::arg("log_q"));

  m.def(
      "robust_reg_operator",
      [](const Array& q, const FiniteMdp& mdp, const UncertaintySet& set, const Array& log_mu, double alpha,
         std::optional<double> clip) {
        BackupDiagnostics d;
        const auto t = robust_reg_operator(to_q(q), mdp, set, to_policy(log_mu), alpha, clip, &d);
        return py::make_tuple(from_table(t.table()), d.worst_member);
      },
      py::arg("q"), py::arg("mdp"), py::arg("set"), py::arg("log_mu"), py::arg("alpha"),
      py::arg("clip_bound") = py::none(), "Returns (T q, worst member index per (s, a)).");
  m.def(
      "solve_fixed_point",
      [](const FiniteMdp& mdp, const UncertaintySet& set, const Array& log_mu, const SolverConfig& cfg) {
        const auto r = solve_fixed_point(mdp, set, to_policy(log_mu), cfg, QTable(mdp.n_states, mdp.n_actions));
        return py::make_tuple(from_table(r.q.table()), r.iterations, from_vec(r.residuals));
      },
      py::arg("mdp"), py::arg("set"), py::arg("log_mu"), py::arg("config"),
      "Returns (Q*, iterations, residuals).");
  m.def(
      "boltzmann_improve",
      [](const Array& q, const Array& log_mu, double alpha) {
        return from_table(boltzmann_improve(to_q(q), to_policy(log_mu), alpha).log_table());
      },
      py::arg("q"), py::arg("log_mu"), py::arg("alpha"));
  m.def(
      "robust_policy_value",
      [](const FiniteMdp& mdp, const UncertaintySet& set, const Array& log_pi) {
        SolverConfig cfg;
        cfg.eps_inner = 1e-12;
        const auto r = robust_policy_value(mdp, set, to_policy(log_pi), cfg);
        return py::make_tuple(r.j, from_vec(r.v.values));
      },
      py::arg("mdp"), py::arg("set"), py::arg("log_pi"), "Returns (J, V).");
  m.def(
      "brute_force_robust_value",
      [](const FiniteMdp& mdp, const UncertaintySet& set, const Array& log_pi) {
        return brute_force_robust_value(mdp, set, to_policy(log_pi)).j;
      },
      py::arg("mdp"), py::arg("set"), py::arg("log_pi"));
  m.def(
      "robust_value_iteration",
      [](const FiniteMdp& mdp, const UncertaintySet& set) {
        SolverConfig cfg;
        cfg.eps_inner = 1e-12;
        const auto r = robust_value_iteration(mdp, set, cfg);
        return py::make_tuple(r.j, from_vec(r.v.values), r.policy);
      },
      py::arg("mdp"), py::arg("set"), "Returns (J*, V*, greedy policy).");

  m.def(
      "rrpi_solve",
      [](const FiniteMdp& mdp, const UncertaintySet& set, std::optional<SolverConfig> cfg) {
        const auto res = rrpi_solve(mdp, set, cfg ? *cfg : SolverConfig::driver_defaults(mdp));
        py::dict out;
        out["final_policy"] = from_table(res.final_policy.log_table());
        out["final_q"] = from_table(res.final_q.table());
        std::vector<double> js;
        std::vector<int> inner;
        for (const auto& s : res.trace.steps) {
          js.push_back(s.j);
          inner.push_back(s.inner_iters);
        }
        out["J"] = from_vec(js);
        out["inner_iters"] = inner;
        out["converged"] = res.converged;
        out["optimal_J"] = res.optimal_j;
        out["robust_gap"] = res.robust_gap;
        return out;
      },
      py::arg("mdp"), py::arg("set"), py::arg("config") = py::none(),
      "Runs RRPI; config defaults to SolverConfig.driver_defaults(mdp).");
  m.def(
      "ablation_run",
      [](const FiniteMdp& mdp, const UncertaintySet& set, std::size_t trials, unsigned long long seed,
         std::size_t jobs) {
        const auto r = ablation_run(mdp, set, SolverConfig::driver_defaults(mdp), trials, seed, jobs);
        py::dict out;
        out["robust_J"] = from_vec(r.robust_j);
        out["ablated_J"] = from_vec(r.ablated_j);
        out["percent_drop"] = r.percent_drop;
        out["std_ratio"] = r.std_ratio;
        out["summary"] = r.summary();
        return out;
      },
      py::arg("mdp"), py::arg("set"), py::arg("trials"), py::arg("seed") = 0, py::arg("jobs") = 1);

  m.def(
      "build_uncertainty_set",
      [](std::size_t n_states, std::size_t n_actions,
         const std::vector<std::tuple<std::size_t, std::size_t, double, std::size_t>>& transitions,
         std::size_t n_members, const std::string& method, double prior, std::uint64_t seed) {
        OfflineDataset d{n_states, n_actions, {}};
        for (const auto& [s, a, r, s2] : transitions) d.transitions.push_back({s, a, r, s2});
        EnsembleSpec spec{n_members, parse_ensemble_method(method), prior, seed};
        spec.validate();
        return build_uncertainty_set(d, spec);
      },
      py::arg("n_states"), py::arg("n_actions"), py::arg("transitions"), py::arg("n_members") = 5,
      py::arg("method") = "dirichlet", py::arg("dirichlet_prior") = 1.0, py::arg("seed") = 0,
      "transitions: iterable of (s, a, r, s2).");
  m.def("ensemble_disagreement", [](const UncertaintySet& set) {
    const auto d = ensemble_disagreement(set);
    return py::make_tuple(from_table(d.value), from_table(d.log_value));
  });

  m.def(
      "cli_main",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "rrpi");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = cli_main(int(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line interface in-process; returns (exit code, stdout, stderr).");
}
