"""plaplab: grid laboratory for p-Laplacian Rayleigh extremals and their limits.

The package computes least Rayleigh quotients

    lambda_{p,q} = min ||grad u||_p^p  subject to  ||u||_q = 1,  u = 0 on the boundary

on 2D lattice domains, the companion minimal gradient norms under a sup-norm
constraint, and fixed points of the local midrange (harmonious extension)
scheme for the infinity-Laplace equation.  Sweep drivers track lambda^(1/p)
and extremal shapes along exponent ladders and compare them against their
predicted large-p limits: 1/inradius when q -> infinity, the normalized
distance field in the sublinear regimes, and midrange solutions with a
plateau obstacle in the hyperdiffusive regime q/p -> infinity.
"""

from .geometry import (
    Annulus,
    BadExponent,
    BadShape,
    Disk,
    EmptyInterior,
    GridDomain,
    PointSet,
    Polygon,
    Rectangle,
    ScalarField,
    build_grid_domain,
    distance_field,
    inradius,
    lr_norm,
    max_set,
    ridge_set,
)
from .extremals import (
    EqualExponents,
    ExtremalResult,
    NonPositive,
    SolverOptions,
    SupNormResult,
    least_energy_from_extremal,
    minimize_extremal,
    pde_residual,
    sup_norm_extremal,
)
from .infinity_laplace import (
    InfLapSolution,
    NotADisk,
    ObstacleProblem,
    cone_solution,
    inf_lap_residual,
    min_eq_residual,
    solve_inf_laplace,
)

__version__ = "0.1.0"

__all__ = [
    "Annulus",
    "BadExponent",
    "BadShape",
    "Disk",
    "EmptyInterior",
    "EqualExponents",
    "ExtremalResult",
    "GridDomain",
    "InfLapSolution",
    "NonPositive",
    "NotADisk",
    "ObstacleProblem",
    "PointSet",
    "Polygon",
    "Rectangle",
    "ScalarField",
    "SolverOptions",
    "SupNormResult",
    "build_grid_domain",
    "cone_solution",
    "distance_field",
    "inf_lap_residual",
    "inradius",
    "least_energy_from_extremal",
    "lr_norm",
    "max_set",
    "min_eq_residual",
    "minimize_extremal",
    "pde_residual",
    "ridge_set",
    "solve_inf_laplace",
    "sup_norm_extremal",
]
