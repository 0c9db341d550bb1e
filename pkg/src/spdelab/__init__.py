"""Spectral-Galerkin laboratory for stochastic parabolic evolution equations.

Simulates du + (A(t)u + F(t,u)) dt + sum_k B_k(t) u dw^k = 0 in a truncated
eigenbasis, checks that nonzero solutions never reach zero, tracks the
Rayleigh-type quotient of the corrected generator to its spectral limit,
and certifies the structural operator conditions numerically.
"""
from .basis import DimensionMismatchError, SpectralBasis, inner_h, inner_v
from .brownian import BrownianPath, GridError, sample_brownian, uniform_grid
from .integrator import (
    SCHEMES,
    BlowUpError,
    EnsembleResult,
    SchemeError,
    Trajectory,
    integrate,
    integrate_ensemble,
    strat_to_ito,
)
from .operators import (
    MatrixPath,
    OperatorFamily,
    TildeOperator,
    assemble_tilde_A,
    galerkin_compress,
    spectrum,
    sym,
)
from .systems import SystemSpec, list_systems, make_system

__version__ = "0.1.0"

__all__ = [
    "BlowUpError",
    "BrownianPath",
    "DimensionMismatchError",
    "EnsembleResult",
    "GridError",
    "MatrixPath",
    "OperatorFamily",
    "SCHEMES",
    "SchemeError",
    "SpectralBasis",
    "SystemSpec",
    "TildeOperator",
    "Trajectory",
    "assemble_tilde_A",
    "galerkin_compress",
    "inner_h",
    "inner_v",
    "integrate",
    "integrate_ensemble",
    "list_systems",
    "make_system",
    "sample_brownian",
    "spectrum",
    "strat_to_ito",
    "sym",
    "uniform_grid",
]
