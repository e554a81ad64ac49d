"""Numerical laboratory for generalised interval exchange transformations.

This package provides:
- Rauzy-Veech combinatorics, intersection matrices and loop selection
- GIETs as affine parts plus monotone branch profiles
- Renormalisation along a Rauzy loop, traces and dynamical partitions
- The affine chart, the fixed IET and its hyperbolic splitting
- Distortion, C², Dη and η-Lipschitz estimate checks
- Shooting for the pre-stable space and convergence diagnostics
- Birkhoff sums, the cohomological equation and the C¹ conjugacy

Example usage:

    # The golden rotation and its renormalisation loop
    from gietlab import Permutation, RauzyLoop, fixed_aiet, renormalize
    loop = RauzyLoop.from_code(Permutation((2, 1)), "bt")
    T0 = fixed_aiet(loop)
    print(T0.lengths)          # [0.618..., 0.381...]
    RT0 = renormalize(T0, loop)

    # Perturb the branches inside the ∫η = 0 slice and follow the orbit
    from gietlab import Giet, bump, renormalization_trace
    T = Giet(T0.affine, (bump([1e-3, 0.0]), bump([0.0, -1e-3])))
    trace = renormalization_trace(T, loop, 8)
    print(trace.depth, trace.exit_reason)

    # Shadow the stable set and build the conjugacy to T0
    from gietlab import ShadowingProblem, build_system, shoot
    system = build_system(loop)
    problem = ShadowingProblem(system, s=[1e-4], n_max=10)
    result = shoot(problem)

    from gietlab.cohomology import invariant_density_and_conjugacy
    density, conjugacy = invariant_density_and_conjugacy(problem.giet(result.u_star), T0)

    # Tabular views (requires pandas)
    from gietlab.dataframes import TraceDataFrames
    print(TraceDataFrames(trace).levels)

    # The experiment pipelines
    from gietlab.lab import load_config, run_experiment
    run_experiment("E2", load_config())
"""

__version__ = "0.1.0"

from gietlab.affine import (
    AffineChart,
    Splitting,
    SpectrumReport,
    fixed_aiet,
    perron_data,
    slope_cocycle,
    spectrum,
    splitting,
)
from gietlab.combinatorics import (
    AdmissibilityReport,
    Bottom,
    IntersectionMatrix,
    Permutation,
    RauzyLoop,
    StepKind,
    Top,
    concatenate,
    enumerate_loops,
    genus_and_marked_points,
    is_admissible_fixed_point,
    rauzy_step,
    select_admissible_loop,
)
from gietlab.exceptions import (
    BoundednessError,
    BudgetError,
    CombinatoricsError,
    CohomologyError,
    ConfigError,
    DegenerateDensityError,
    DomainError,
    EstimateError,
    GietLabError,
    HypothesisError,
    MonotonicityError,
    NoShadowError,
    NotInDomainError,
    RauzyConnectionError,
    ReduciblePermutationError,
    RenormalizationError,
    RepresentationError,
    ShadowingError,
)
from gietlab.giet import Aiet, Giet, assemble, decompose, distance, nonlinearity_profile
from gietlab.monotone import MonotoneMap, bump, compose, invert, moebius
from gietlab.renorm import (
    DynamicalPartition,
    RenormTrace,
    dynamical_partition,
    orbit_eval,
    rauzy_step_giet,
    renormalization_trace,
    renormalize,
)
from gietlab.shadowing import ShadowingProblem, ShadowingResult, build_system, shoot

__all__ = [
    # Combinatorics
    "AdmissibilityReport",
    "Bottom",
    "IntersectionMatrix",
    "Permutation",
    "RauzyLoop",
    "StepKind",
    "Top",
    "concatenate",
    "enumerate_loops",
    "genus_and_marked_points",
    "is_admissible_fixed_point",
    "rauzy_step",
    "select_admissible_loop",
    # Maps
    "Aiet",
    "Giet",
    "MonotoneMap",
    "assemble",
    "bump",
    "compose",
    "decompose",
    "distance",
    "invert",
    "moebius",
    "nonlinearity_profile",
    # Renormalisation
    "DynamicalPartition",
    "RenormTrace",
    "dynamical_partition",
    "orbit_eval",
    "rauzy_step_giet",
    "renormalization_trace",
    "renormalize",
    # Affine chart
    "AffineChart",
    "SpectrumReport",
    "Splitting",
    "fixed_aiet",
    "perron_data",
    "slope_cocycle",
    "spectrum",
    "splitting",
    # Shadowing
    "ShadowingProblem",
    "ShadowingResult",
    "build_system",
    "shoot",
    # Exceptions
    "BoundednessError",
    "BudgetError",
    "CombinatoricsError",
    "CohomologyError",
    "ConfigError",
    "DegenerateDensityError",
    "DomainError",
    "EstimateError",
    "GietLabError",
    "HypothesisError",
    "MonotonicityError",
    "NoShadowError",
    "NotInDomainError",
    "RauzyConnectionError",
    "ReduciblePermutationError",
    "RenormalizationError",
    "RepresentationError",
    "ShadowingError",
]
