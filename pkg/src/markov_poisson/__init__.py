"""Wasserstein contraction, Poisson's equation and maximal inequalities for finite Markov chains."""
from __future__ import annotations

__version__ = "0.1.0"

from ._accel import backend
from .core import (
    Distribution,
    FiniteKernel,
    FiniteStateSpace,
    MetricSpec,
    StateFunction,
    ValidationReport,
    apply_to_distribution,
    apply_to_function,
    check_reversibility,
    is_irreducible,
    kernel_power,
    lipschitz_seminorm,
    lp_norm,
    radon_nikodym,
    stationary_distribution,
    validate_distribution,
    validate_kernel,
    validate_metric,
)
from .errors import MarkovPoissonError
from .poisson import (
    BoundCertificate,
    PoissonSolution,
    certify_lipschitz_bounds,
    solve_direct,
    solve_neumann,
)
from .simulate import (
    MaximalReport,
    Trajectory,
    decompose,
    maximal_stats,
    mc_maximal_experiment,
    sample_trajectory,
)
from .spectral import GapReport, check_gap_vs_tau, l2_gap, solve_with_lp_bound
from .transport import (
    ContractionProfile,
    coarse_diffusion,
    contraction_profile,
    eccentricity_norm,
    kantorovich_norm,
    kantorovich_potential,
    wasserstein,
    wasserstein_closed_form,
)

__all__ = [name for name in dir() if not name.startswith("_")]
