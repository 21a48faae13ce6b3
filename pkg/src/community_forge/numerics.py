"""Shared numerical machinery and the single home of every tolerance knob."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .errors import InvalidArgumentError

THREADS_ENV = "COMMUNITY_FORGE_THREADS"

MIN_RING_GRID = 64
MIN_Y_GRID = 128

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Tolerances:
    golden_rel: float = 1e-10
    concavity: float = 1e-12
    symmetry: float = 1e-6
    supply_symmetry: float = 1e-4
    monotone: float = 1e-12
    balance: float = 1e-6
    balance_integrity: float = 1e-3
    singular_jacobian: float = 1e-8
    nash: float = 1e-4
    bisection: float = 1e-10


@dataclass(frozen=True)
class NumericsConfig:
    ring_grid_n: int = 512
    y_grid_n: int = 256
    quadrature_order: int = 64
    utility_panels: int = 8
    nash_search_grid: int = 257
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if self.ring_grid_n < MIN_RING_GRID:
            raise InvalidArgumentError(f"ring_grid_n must be >= {MIN_RING_GRID}")
        if self.y_grid_n < MIN_Y_GRID:
            raise InvalidArgumentError(f"y_grid_n must be >= {MIN_Y_GRID}")
        if self.quadrature_order < 2:
            raise InvalidArgumentError("quadrature_order must be >= 2")
        if self.utility_panels < 1 or self.nash_search_grid < 3:
            raise InvalidArgumentError("utility_panels >= 1 and nash_search_grid >= 3 required")
        for name, value in asdict(self.tolerances).items():
            if not value > 0:
                raise InvalidArgumentError(f"tolerance {name} must be positive")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> "NumericsConfig":
        data = dict(data or {})
        tol = Tolerances(**data.pop("tolerances", {}))
        return cls(tolerances=tol, **data)


DEFAULT_NUMERICS = NumericsConfig()


@dataclass
class GridFunction:
    """Samples of a real function on ring coordinates ``x``."""

    x: np.ndarray
    values: np.ndarray
    step: float
    support: tuple[float, float] | None = None

    def __len__(self) -> int:
        return len(self.x)

    def argmax_coord(self) -> float:
        return float(self.x[int(np.argmax(self.values))])


@dataclass
class PropertyReport:
    checks: dict[str, bool] = field(default_factory=dict)
    metrics: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def failures(self) -> list[str]:
        return [k for k, ok in self.checks.items() if not ok]


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def panel_nodes(lo: np.ndarray, hi: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Map the Gauss-Legendre rule onto panels [lo, hi] (broadcast over leading axes).

    Returns nodes and weights with a trailing axis of length ``order``.
    Zero-width panels get zero weight, so callers may pad with them.
    """
    t, w = gauss_legendre(order)
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    half = 0.5 * (hi - lo)
    return lo + half * (t + 1.0), half * w


def composite_gauss_legendre(func: Callable[[np.ndarray], np.ndarray], breakpoints: Sequence[float], order: int) -> float:
    """Integrate ``func`` over [b0, bn] with one GL panel per breakpoint gap."""
    b = np.asarray(breakpoints, dtype=float)
    x, w = panel_nodes(b[:-1], b[1:], order)
    return float(np.sum(func(x) * w))


def trapezoid_weights(n: int, length: float) -> np.ndarray:
    w = np.full(n, length / (n - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def golden_section_max(
    obj: Callable[[np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    rel_tol: float = 1e-10,
) -> np.ndarray:
    """Vectorised golden-section search for the maximiser of unimodal objectives.

    ``obj`` receives an array of abscissae (one per bracket) and returns the
    objective values elementwise. Every bracket shrinks until it is below
    ``rel_tol`` times its initial width.
    """
    a = np.array(lo, dtype=float, copy=True)
    b = np.array(hi, dtype=float, copy=True)
    width = b - a
    if np.all(width <= 0.0):
        return 0.5 * (a + b)
    n_iter = int(math.ceil(math.log(rel_tol) / math.log(INV_PHI))) + 1
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc = obj(c)
    fd = obj(d)
    for _ in range(n_iter):
        left = fc >= fd  # keep [a, d]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - INV_PHI * (b - a)
        new_d = a + INV_PHI * (b - a)
        # reuse the surviving interior point, evaluate the other once
        probe = np.where(left, new_c, new_d)
        fp = obj(probe)
        c, d, fc, fd = (
            np.where(left, new_c, d),
            np.where(left, c, new_d),
            np.where(left, fp, fd),
            np.where(left, fc, fp),
        )
    return 0.5 * (a + b)


def bisect_decreasing_root(
    func: Callable[[np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    iterations: int = 60,
) -> np.ndarray:
    """Vectorised bisection for a root of a decreasing function, func(lo) >= 0 >= func(hi)."""
    a = np.array(lo, dtype=float, copy=True)
    b = np.array(hi, dtype=float, copy=True)
    for _ in range(iterations):
        m = 0.5 * (a + b)
        pos = func(m) > 0.0
        a = np.where(pos, m, a)
        b = np.where(pos, b, m)
    return 0.5 * (a + b)


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise InvalidArgumentError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return min(8, os.cpu_count() or 1)


def parallel_map(fn: Callable[[Any], Any], items: Iterable[Any]) -> list[Any]:
    """Order-preserving map; results do not depend on scheduling."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
