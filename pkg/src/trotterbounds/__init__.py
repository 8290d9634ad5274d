"""Fermionic-seminorm Trotter error bounds for plane-wave dual Hamiltonians."""

from __future__ import annotations

from .bounds import (
    BoundReport,
    best_report,
    bound_suite,
    first_order_bound,
    general_factor_first_order,
    second_order_tvt,
    second_order_tvv,
    shc_bound,
)
from .factorization import (
    FactorizedPotential,
    cholesky_decompose,
    cosine_decompose,
    general_spectral_from_tensor,
    min_pd_shift,
    shift_chemical_potential,
    spectral_decompose,
)
from .hamiltonian import (
    CoefficientMatrices,
    SystemSpec,
    build_coulomb,
    build_external,
    build_kinetic,
    build_matrices,
    cell_volume,
    momentum_vectors,
    orbital_positions,
)
from .resources import (
    ErrorBudget,
    ResourceEstimate,
    SynthesisModel,
    estimate_resources,
    hwp_counts,
    lambda_norm,
    optimize_budget,
    qubitization_cost,
    trotter_step_cost,
)
from .seminorm import brute_force_seminorm, fock_seminorm, reduced_seminorm

__all__ = [
    "BoundReport", "CoefficientMatrices", "ErrorBudget", "FactorizedPotential",
    "ResourceEstimate", "SynthesisModel", "SystemSpec", "best_report",
    "bound_suite",
    "brute_force_seminorm", "build_coulomb", "build_external", "build_kinetic",
    "build_matrices", "cell_volume", "cholesky_decompose", "cosine_decompose",
    "estimate_resources", "first_order_bound", "fock_seminorm",
    "general_factor_first_order", "general_spectral_from_tensor", "hwp_counts",
    "lambda_norm", "min_pd_shift", "momentum_vectors", "optimize_budget",
    "orbital_positions", "qubitization_cost", "reduced_seminorm",
    "second_order_tvt", "second_order_tvv", "shc_bound", "shift_chemical_potential",
    "spectral_decompose", "trotter_step_cost",
]
