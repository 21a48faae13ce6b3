"""Kernel families for interest (f), ability (g) and filtering (h).

Each family maps a ring distance d in [0, L] to a probability:

    gaussian        a * exp(-d^2 / (2 w^2))              full support
    raised_cosine   a * (1 + cos(pi d / L)) / 2           full support, w unused
    quadratic_bump  a * max(0, 1 - (d / w)^2)             support [0, w]
    cosine_bump     a * cos(pi d / (2 w)) for d <= w      support [0, w]

The first two are the admissible interest kernels, the bumps the admissible
ability kernels. Filters may use any family since they only need to be
nonincreasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import BoundaryError, InvalidArgumentError, KernelValidationError

FAMILIES = ("gaussian", "raised_cosine", "quadratic_bump", "cosine_bump")
FULL_SUPPORT = ("gaussian", "raised_cosine")
COMPACT_SUPPORT = ("quadratic_bump", "cosine_bump")
ROLES = ("interest_f", "ability_g", "filter_h")

VALIDATION_GRID = 1024
CONCAVITY_SLACK = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    family: str
    amplitude: float
    width: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidArgumentError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        if not (0.0 < self.amplitude <= 1.0):
            raise InvalidArgumentError(f"amplitude must lie in (0, 1], got {self.amplitude!r}")
        if not (self.width > 0.0 and math.isfinite(self.width)):
            raise InvalidArgumentError(f"width must be positive, got {self.width!r}")

    def to_dict(self) -> dict[str, Any]:
        return {"family": self.family, "amplitude": self.amplitude, "width": self.width}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "KernelSpec":
        return cls(str(data["family"]), float(data["amplitude"]), float(data["width"]))

    def support_radius(self, L: float) -> float:
        if self.family in COMPACT_SUPPORT:
            return min(self.width, L)
        return L

    def __call__(self, d, L: float):
        return kernel_eval(self, d, L)


@dataclass(frozen=True)
class SupportInfo:
    radius: float


def support_info(k: KernelSpec, L: float) -> SupportInfo:
    return SupportInfo(k.support_radius(L))


def _check_domain(d, L: float) -> np.ndarray:
    arr = np.asarray(d, dtype=float)
    # distances come out of floating point arithmetic; allow a few ulps past L
    slack = 8.0 * np.finfo(float).eps * max(L, 1.0)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > L + slack):
        raise InvalidArgumentError(f"kernel distance must lie in [0, L={L}]")
    return np.minimum(arr, L)


def _scalar(out: np.ndarray, like) -> Any:
    return float(out) if np.ndim(like) == 0 else out


def _eval_raw(k: KernelSpec, d: np.ndarray, L: float) -> np.ndarray:
    a, w = k.amplitude, k.width
    if k.family == "gaussian":
        return a * np.exp(-0.5 * (d / w) ** 2)
    if k.family == "raised_cosine":
        return 0.5 * a * (1.0 + np.cos(np.pi * d / L))
    if k.family == "quadratic_bump":
        return a * np.maximum(0.0, 1.0 - (d / w) ** 2)
    return np.where(d <= w, a * np.cos(0.5 * np.pi * np.minimum(d, w) / w), 0.0)


def kernel_eval(k: KernelSpec, d, L: float):
    """Value of the kernel at ring distance ``d`` (scalar or array)."""
    dd = _check_domain(d, L)
    return _scalar(_eval_raw(k, dd, L), d)


def kernel_eval_unchecked(k: KernelSpec, d: np.ndarray, L: float) -> np.ndarray:
    """Hot-path evaluation; caller guarantees 0 <= d <= L."""
    return _eval_raw(k, d, L)


def _check_not_on_boundary(k: KernelSpec, d: np.ndarray) -> None:
    if k.family in COMPACT_SUPPORT and np.any(d == k.width):
        raise BoundaryError(
            f"{k.family} derivative requested at its support edge d={k.width}; one-sided derivatives are not provided"
        )


def _deriv_raw(k: KernelSpec, d: np.ndarray, L: float) -> np.ndarray:
    a, w = k.amplitude, k.width
    if k.family == "gaussian":
        return -(d / w**2) * a * np.exp(-0.5 * (d / w) ** 2)
    if k.family == "raised_cosine":
        return -0.5 * a * (np.pi / L) * np.sin(np.pi * d / L)
    if k.family == "quadratic_bump":
        return np.where(d < w, -2.0 * a * d / w**2, 0.0)
    s = 0.5 * np.pi / w
    return np.where(d < w, -a * s * np.sin(s * np.minimum(d, w)), 0.0)


def _second_deriv_raw(k: KernelSpec, d: np.ndarray, L: float) -> np.ndarray:
    a, w = k.amplitude, k.width
    if k.family == "gaussian":
        return (d**2 / w**4 - 1.0 / w**2) * a * np.exp(-0.5 * (d / w) ** 2)
    if k.family == "raised_cosine":
        return -0.5 * a * (np.pi / L) ** 2 * np.cos(np.pi * d / L)
    if k.family == "quadratic_bump":
        return np.where(d < w, -2.0 * a / w**2, 0.0)
    s = 0.5 * np.pi / w
    return np.where(d < w, -a * s**2 * np.cos(s * np.minimum(d, w)), 0.0)


def kernel_deriv(k: KernelSpec, d, L: float):
    dd = _check_domain(d, L)
    _check_not_on_boundary(k, dd)
    return _scalar(_deriv_raw(k, dd, L), d)


def kernel_deriv_unchecked(k: KernelSpec, d: np.ndarray, L: float) -> np.ndarray:
    return _deriv_raw(k, d, L)


def kernel_second_deriv(k: KernelSpec, d, L: float):
    dd = _check_domain(d, L)
    _check_not_on_boundary(k, dd)
    return _scalar(_second_deriv_raw(k, dd, L), d)


@dataclass
class ValidationReport:
    role: str
    kernel: KernelSpec
    checks: dict[str, bool] = field(default_factory=dict)
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def failures(self) -> list[str]:
        return [name for name, ok in self.checks.items() if not ok]


def validate_assumption1(k: KernelSpec, role: str, L: float) -> ValidationReport:
    """Check the regularity conditions a kernel needs for the given role.

    Nothing is raised; each property is recorded as a named pass/fail entry,
    with the first offending distance stored in ``details`` when a grid check
    fails.
    """
    if role not in ROLES:
        raise InvalidArgumentError(f"unknown kernel role {role!r}; expected one of {ROLES}")
    rep = ValidationReport(role=role, kernel=k)
    radius = k.support_radius(L)
    d = np.linspace(0.0, radius, VALIDATION_GRID)
    vals = _eval_raw(k, d, L)
    diffs = np.diff(vals)

    rep.checks["range_unit_interval"] = bool(np.all(vals >= 0.0) and np.all(vals <= 1.0))

    if role == "filter_h":
        ok = diffs <= 0.0
        rep.checks["nonincreasing"] = bool(np.all(ok))
        if not rep.checks["nonincreasing"]:
            rep.details["nonincreasing_first_failure"] = float(d[1:][~ok][0])
        return rep

    # underflowed tails (values exactly 0 on both sides) carry no information
    live = (vals[:-1] > 0.0) | (vals[1:] > 0.0)
    strict = (diffs < 0.0) | ~live
    rep.checks["strictly_decreasing"] = bool(np.all(strict))
    if not rep.checks["strictly_decreasing"]:
        rep.details["strictly_decreasing_first_failure"] = float(d[1:][~strict][0])

    if role == "interest_f":
        rep.checks["family_full_support"] = k.family in FULL_SUPPORT
        rep.checks["twice_differentiable"] = k.family in FULL_SUPPORT
        return rep

    rep.checks["amplitude_below_one"] = k.amplitude < 1.0
    rep.checks["twice_differentiable_on_support"] = True
    interior = d[1:-1]
    second = _second_deriv_raw(k, interior, L)
    concave = second <= CONCAVITY_SLACK
    rep.checks["concave_on_support"] = bool(np.all(concave))
    if not rep.checks["concave_on_support"]:
        rep.details["concave_first_failure"] = float(interior[~concave][0])
    return rep


def require_role(k: KernelSpec, role: str, L: float) -> None:
    rep = validate_assumption1(k, role, L)
    if not rep.passed:
        raise KernelValidationError(
            f"{k.family} kernel is not admissible as {role}: failed {', '.join(rep.failures())}"
        )
