import math
from pathlib import Path

import numpy as np
import pytest

import rrpi

FIXTURES = Path(__file__).resolve().parents[2] / "data" / "fixtures"


def uniform(n_states, n_actions):
    return np.full((n_states, n_actions), -math.log(n_actions))


def test_soft_value_closed_form():
    value, row = rrpi.soft_value(np.array([1.0, 0.0]), np.log([0.5, 0.5]), 1.0)
    assert value == pytest.approx(math.log((math.e + 1) / 2), abs=1e-15)
    assert rrpi.duality_gap(np.array([1.0, 0.0]), np.log([0.5, 0.5]), 1.0, row) == pytest.approx(0, abs=1e-12)


def test_chain_fixed_point():
    inst = rrpi.fixture_two_member_chain()
    cfg = rrpi.SolverConfig()
    cfg.eps_inner = 1e-12
    q, iters, residuals = rrpi.solve_fixed_point(inst.mdp, inst.set, np.zeros((2, 1)), cfg)
    assert q[0, 0] == pytest.approx(1 / 0.55, abs=1e-10)
    assert len(residuals) == iters


def test_rrpi_matches_robust_optimum():
    inst = rrpi.fixture_m2()
    res = rrpi.rrpi_solve(inst.mdp, inst.set)
    assert res["converged"]
    assert np.all(np.diff(res["J"]) >= -1e-8)
    assert res["J"][-1] == pytest.approx(res["optimal_J"], abs=1e-4)
    j_star, _, policy = rrpi.robust_value_iteration(inst.mdp, inst.set)
    assert j_star == pytest.approx(5.280205255792258, abs=1e-9)
    assert policy == [0, 0, 1]


def test_oracle_agreement():
    inst = rrpi.gen_random_robust(n_states=3, n_actions=2, n_members=2, seed=4)
    pi = uniform(3, 2)
    j, _ = rrpi.robust_policy_value(inst.mdp, inst.set, pi)
    assert j == pytest.approx(rrpi.brute_force_robust_value(inst.mdp, inst.set, pi), abs=1e-6)


def test_operator_and_improvement_shapes():
    inst = rrpi.fixture_m2()
    q = np.arange(6, dtype=float).reshape(3, 2)
    tq, worst = rrpi.robust_reg_operator(q, inst.mdp, inst.set, uniform(3, 2), 0.5)
    assert tq.shape == (3, 2) and len(worst) == 6
    logp = rrpi.boltzmann_improve(q, uniform(3, 2), 0.5)
    assert np.allclose(np.exp(logp).sum(axis=1), 1.0)


def test_estimation_and_disagreement():
    transitions = [(0, 0, 0.0, 1)] * 50 + [(1, 0, 0.0, 0)] * 2
    s = rrpi.build_uncertainty_set(2, 1, transitions, n_members=6, seed=3)
    again = rrpi.build_uncertainty_set(2, 1, transitions, n_members=6, seed=3)
    assert s == again
    value, log_value = rrpi.ensemble_disagreement(s)
    assert value.shape == (2, 1)
    assert value[0, 0] < value[1, 0]
    assert np.all(log_value >= math.log(1e-12))


def test_gridworld_and_ablation():
    inst = rrpi.gen_gridworld('{"width": 3, "height": 3, "perturbation": 0.05, "goals": [[2, 2]]}')
    assert inst.mdp.n_states == 10
    report = rrpi.ablation_run(inst.mdp, inst.set, trials=3, seed=1)
    assert len(report["ablated_J"]) == 3


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        rrpi.FiniteMdp(np.zeros((2, 2)), 1.0, np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        rrpi.UncertaintySet(1, 1, [[[0.5, 0.4]]])


def test_cli_in_process(tmp_path):
    code, out, _ = rrpi.cli_main(["solve", "--instance", str(FIXTURES / "chain.json"), "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "solve.json").exists()
    code, _, _ = rrpi.cli_main(["rrpi", "--config", str(tmp_path / "missing.json")])
    assert code == 2


def test_read_instance():
    inst = rrpi.read_instance(FIXTURES / "m2.json")
    assert inst.set.member_count(0, 0) == 2
