"""The ring of content types [-L, L) with its torus metric, arcs and partitions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError


def canonicalize(x, L: float):
    """Map a coordinate (scalar or array) onto the half-open ring [-L, L)."""
    out = np.mod(np.asarray(x, dtype=float) + L, 2.0 * L) - L
    # np.mod can return exactly 2L for tiny negative inputs
    out = np.where(out >= L, out - 2.0 * L, out)
    if np.ndim(out) == 0:
        return float(out)
    return out


def signed_offset(x, origin, L: float):
    """Signed shortest displacement from ``origin`` to ``x``, in [-L, L)."""
    return canonicalize(np.asarray(x, dtype=float) - origin, L)


def torus_distance(x, y, L: float):
    """min(|x - y|, 2L - |x - y|); accepts scalars or broadcastable arrays."""
    if not L > 0 or not math.isfinite(L):
        raise InvalidArgumentError(f"ring half-length must be positive and finite, got {L!r}")
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(ya))):
        raise InvalidArgumentError("torus_distance received a non-finite coordinate")
    diff = np.mod(np.abs(xa - ya), 2.0 * L)
    d = np.minimum(diff, 2.0 * L - diff)
    if d.ndim == 0:
        return float(d)
    return d


@dataclass(frozen=True)
class Arc:
    """Arc of the ring stored as (start, length); may cross the -L/L seam."""

    start: float
    length: float
    L: float

    def __post_init__(self):
        if not self.L > 0:
            raise InvalidArgumentError(f"L must be positive, got {self.L!r}")
        if not (0.0 < self.length <= 2.0 * self.L * (1.0 + 1e-12)):
            raise InvalidArgumentError(
                f"arc length must lie in (0, 2L], got {self.length!r} with L={self.L!r}"
            )
        if not math.isfinite(self.start):
            raise InvalidArgumentError("arc start must be finite")
        object.__setattr__(self, "start", canonicalize(self.start, self.L))

    @property
    def end(self) -> float:
        return canonicalize(self.start + self.length, self.L)

    @property
    def mid(self) -> float:
        return arc_mid(self)

    @property
    def half_length(self) -> float:
        return 0.5 * self.length

    def local(self, x):
        """Offset of ``x`` measured forward from the arc start, in [0, 2L)."""
        return np.mod(np.asarray(x, dtype=float) - self.start, 2.0 * self.L)

    def contains(self, x):
        """Half-open membership test [start, start + length), seam aware."""
        if self.length >= 2.0 * self.L:
            return np.ones(np.shape(x), dtype=bool) if np.ndim(x) else True
        xc = canonicalize(x, self.L)
        stop = self.start + self.length
        # compare against stored endpoints so that adjacent arcs tile exactly
        if stop <= self.L:
            inside = (xc >= self.start) & (xc < stop)
        else:
            inside = (xc >= self.start) | (xc < stop - 2.0 * self.L)
        return bool(inside) if np.ndim(inside) == 0 else inside

    def points(self, n: int):
        """``n`` equispaced points covering the closed arc, both ends included."""
        t = np.linspace(0.0, self.length, n)
        return canonicalize(self.start + t, self.L), t

    def rotated(self, shift: float) -> "Arc":
        return Arc(self.start + shift, self.length, self.L)


def arc_mid(a: Arc) -> float:
    return canonicalize(a.start + 0.5 * a.length, a.L)


def partition_ring(K: int, L: float) -> list[Arc]:
    """K equal arcs tiling the ring, arc k starting at -L + k * 2L/K."""
    if not isinstance(K, (int, np.integer)) or K < 1:
        raise InvalidArgumentError(f"K must be a positive integer, got {K!r}")
    width = 2.0 * L / K
    bounds = -L + np.arange(K + 1) * width
    bounds[-1] = L
    arcs = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        length = hi - lo
        # nudge by ulps until start + length reproduces the next boundary
        while lo + length > hi:
            length = np.nextafter(length, 0.0)
        while lo + length < hi:
            length = np.nextafter(length, np.inf)
        arcs.append(Arc(float(lo), float(length), L))
    return arcs
