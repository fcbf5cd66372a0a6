"""Robust regularized policy iteration for finite MDPs."""

from ._rrpi import (
    FiniteMdp,
    InvalidInput,
    IoError,
    NonConvergence,
    RobustInstance,
    SolverConfig,
    TheoremViolation,
    UncertaintySet,
    ablation_run,
    boltzmann_improve,
    brute_force_robust_value,
    build_uncertainty_set,
    cli_main,
    duality_gap,
    ensemble_disagreement,
    fixture_m2,
    fixture_two_member_chain,
    gen_gridworld,
    gen_random_robust,
    kl_divergence,
    read_instance,
    robust_policy_value,
    robust_reg_operator,
    robust_value_iteration,
    rrpi_solve,
    soft_value,
    solve_fixed_point,
)

__all__ = [name for name in dir() if not name.startswith("_")]
