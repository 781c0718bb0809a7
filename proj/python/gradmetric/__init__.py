"""Riemannian metrics for prescribed gradient data, with a quantum Markov
semigroup layer for entropy gradient-structure checks."""

from gradmetric._core import (
    bkm_apply,
    bkm_inv_apply,
    brute_force_solve,
    build_metric_series,
    bump_weight,
    check_bkm_detailed_balance,
    check_gradient_structure,
    counterexample_probe,
    entropy_production,
    equation_residual,
    eval_metric_series,
    noncritical_metric,
    relative_entropy,
    solve_order_n,
    stationary_state,
    GradmetricError,
)

__all__ = [
    "bkm_apply",
    "bkm_inv_apply",
    "brute_force_solve",
    "build_metric_series",
    "bump_weight",
    "check_bkm_detailed_balance",
    "check_gradient_structure",
    "counterexample_probe",
    "entropy_production",
    "equation_residual",
    "eval_metric_series",
    "noncritical_metric",
    "relative_entropy",
    "solve_order_n",
    "stationary_state",
    "GradmetricError",
]
