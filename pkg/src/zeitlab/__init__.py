"""Numerical lab for Zeitlin's su(N) discretization of 2-D Euler flow on the sphere."""

from .curvature import (
    curvature_convergence_sweep,
    sectional_curvature_cont,
    sectional_curvature_milnor,
    sectional_curvature_quant,
)
from .dynamics import ZeitlinState, run_zeitlin, zeitlin_step
from .harness import ConvergenceReport, RunConfig, fit_convergence_rate, run_command
from .jacobi import (
    ContinuousJacobiGenerator,
    JacobiState,
    QuantizedJacobiGenerator,
    evolve_jacobi,
    jacobi_convergence_sweep,
)
from .quantization import build_basis, embed, hbar, lie_scale, project
from .sphere import BandlimitedFunction, inv_laplacian, laplacian, poisson_bracket
from .wigner import six_j, three_j

__version__ = "0.1.0"

__all__ = [
    "BandlimitedFunction",
    "ContinuousJacobiGenerator",
    "ConvergenceReport",
    "JacobiState",
    "QuantizedJacobiGenerator",
    "RunConfig",
    "ZeitlinState",
    "build_basis",
    "curvature_convergence_sweep",
    "embed",
    "evolve_jacobi",
    "fit_convergence_rate",
    "hbar",
    "inv_laplacian",
    "jacobi_convergence_sweep",
    "laplacian",
    "lie_scale",
    "poisson_bracket",
    "project",
    "run_command",
    "run_zeitlin",
    "sectional_curvature_cont",
    "sectional_curvature_milnor",
    "sectional_curvature_quant",
    "six_j",
    "three_j",
    "zeitlin_step",
]
