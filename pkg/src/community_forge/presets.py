"""Reference parameter sets used by the CLI defaults and the test suite."""

from __future__ import annotations

from .equilibrium import GlobalParams
from .kernels import KernelSpec

CANONICAL = GlobalParams(
    L=1.0,
    c=0.05,
    E_p=1.0,
    E_q=1.0,
    f=KernelSpec("gaussian", 1.0, 0.3),
    g=KernelSpec("quadratic_bump", 0.9, 0.25),
)

INTEREST_VARIANTS = (
    KernelSpec("gaussian", 1.0, 0.1),
    KernelSpec("gaussian", 1.0, 0.3),
    KernelSpec("gaussian", 1.0, 1.0),
    KernelSpec("raised_cosine", 1.0, 1.0),
)

ABILITY_VARIANTS = (
    KernelSpec("quadratic_bump", 0.9, 0.25),
    KernelSpec("cosine_bump", 0.9, 0.25),
    KernelSpec("cosine_bump", 0.9, 0.5),
)

ARC_LENGTHS = (0.1, 0.5, 1.0)


def kernel_matrix() -> list[GlobalParams]:
    """Twelve equilibrium configurations: interest variants x ability variants."""
    return [CANONICAL.replace(f=f, g=g) for f in INTEREST_VARIANTS for g in ABILITY_VARIANTS]


def arc_matrix() -> list[tuple[KernelSpec, float]]:
    """Twelve (interest kernel, arc length) pairs for single-community checks."""
    return [(f, ell) for f in INTEREST_VARIANTS for ell in ARC_LENGTHS]
