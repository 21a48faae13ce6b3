"""Information communities on a ring: covering Nash equilibria and content filtering."""

from .equilibrium import (
    CommunityState,
    CommunityStructure,
    GlobalParams,
    NashReport,
    build_structure,
    construct_covering,
    feasibility_check,
    max_interval_length,
    verify_nash,
)
from .geometry import Arc, arc_mid, partition_ring, torus_distance
from .kernels import KernelSpec, validate_assumption1
from .numerics import DEFAULT_NUMERICS, NumericsConfig, Tolerances

__version__ = "0.1.0"

__all__ = [
    "Arc",
    "CommunityState",
    "CommunityStructure",
    "DEFAULT_NUMERICS",
    "GlobalParams",
    "KernelSpec",
    "NashReport",
    "NumericsConfig",
    "Tolerances",
    "arc_mid",
    "build_structure",
    "construct_covering",
    "feasibility_check",
    "max_interval_length",
    "partition_ring",
    "torus_distance",
    "validate_assumption1",
    "verify_nash",
]
