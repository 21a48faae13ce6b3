"""Demand function of an interval community whose members all read at rate E_p.

    P(x) = E_p * integral over the arc of f(||x - y||) dy

The integrand is only piecewise smooth in y: the torus distance has kinks at
y = x and at the point antipodal to x. Every evaluation splits the arc at
those two points and applies a Gauss-Legendre rule on each smooth piece.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from . import kernels
from .errors import InvalidArgumentError
from .export import write_csv
from .geometry import Arc, arc_mid, canonicalize, signed_offset, torus_distance
from .kernels import KernelSpec
from .numerics import DEFAULT_NUMERICS, GridFunction, NumericsConfig, PropertyReport, panel_nodes


def _periodic_distance(s: np.ndarray, L: float) -> np.ndarray:
    r = np.mod(np.abs(s), 2.0 * L)
    return np.minimum(r, 2.0 * L - r)


def demand_values(arc: Arc, E_p: float, f: KernelSpec, x, order: int = DEFAULT_NUMERICS.quadrature_order) -> np.ndarray:
    """Vectorised quadrature path; no admissibility checks."""
    L = arc.L
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = arc.local(x)
    ell = arc.length
    k1 = np.clip(u, 0.0, ell)
    k2 = np.clip(np.mod(u + L, 2.0 * L), 0.0, ell)
    b = np.stack([np.zeros_like(u), np.minimum(k1, k2), np.maximum(k1, k2), np.full_like(u, ell)], axis=-1)
    t, w = panel_nodes(b[..., :-1], b[..., 1:], order)
    d = _periodic_distance(t - u[:, None, None], L)
    vals = kernels.kernel_eval_unchecked(f, d, L)
    return E_p * np.sum(vals * w, axis=(-2, -1))


def demand_slope(arc: Arc, E_p: float, f: KernelSpec, x) -> np.ndarray:
    """dP/dx = E_p * (f(||x - start||) - f(||x - end||)), exact."""
    L = arc.L
    x = np.asarray(x, dtype=float)
    da = torus_distance(x, arc.start, L)
    db = torus_distance(x, arc.start + arc.length, L)
    return E_p * (kernels.kernel_eval_unchecked(f, np.asarray(da), L) - kernels.kernel_eval_unchecked(f, np.asarray(db), L))


def demand_gaussian_closed_form(arc: Arc, E_p: float, f: KernelSpec, x) -> np.ndarray:
    """Error-function antiderivative of the gaussian demand, used as a cross-check."""
    if f.family != "gaussian":
        raise InvalidArgumentError("closed form exists only for the gaussian family")
    L, w, a = arc.L, f.width, f.amplitude
    scale = w * math.sqrt(math.pi / 2.0)
    root2w = w * math.sqrt(2.0)
    period = 2.0 * scale * erf(L / root2w)

    def antiderivative(s):
        k = np.floor((s + L) / (2.0 * L))
        r = s - 2.0 * L * k
        return k * period + scale * erf(r / root2w)

    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = arc.local(x)
    return E_p * a * (antiderivative(arc.length - u) - antiderivative(-u))


def demand_at(arc: Arc, E_p: float, f: KernelSpec, x, numerics: NumericsConfig = DEFAULT_NUMERICS):
    """Demand at one point or an array of points."""
    kernels.require_role(f, "interest_f", arc.L)
    if not E_p > 0:
        raise InvalidArgumentError("E_p must be positive")
    vals = demand_values(arc, E_p, f, x, numerics.quadrature_order)
    return float(vals[0]) if np.ndim(x) == 0 else vals


@dataclass
class DemandProfile:
    arc: Arc
    E_p: float
    f: KernelSpec
    values: GridFunction
    quadrature_order: int
    _table: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False, compare=False)

    @property
    def mid(self) -> float:
        return arc_mid(self.arc)

    @property
    def L(self) -> float:
        return self.arc.L

    def at(self, x) -> np.ndarray:
        return demand_values(self.arc, self.E_p, self.f, x, self.quadrature_order)

    def slope(self, x) -> np.ndarray:
        return demand_slope(self.arc, self.E_p, self.f, x)

    def approx(self, x, n: int = 4096) -> np.ndarray:
        """Periodic linear interpolation of P from an n-point ring table (for coarse scans)."""
        L = self.L
        if self._table is None or len(self._table[0]) != n + 1:
            grid = ring_grid(n, L)
            vals = self.at(grid)
            self._table = (np.append(grid, L), np.append(vals, vals[0]))
        xs, vals = self._table
        return np.interp(canonicalize(np.asarray(x, dtype=float), L), xs, vals)

    def to_csv(self, path) -> None:
        write_csv(path, ["x", "P(x)"], zip(self.values.x, self.values.values))


def ring_grid(n: int, L: float) -> np.ndarray:
    return -L + np.arange(n) * (2.0 * L / n)


def demand_profile(
    arc: Arc,
    E_p: float,
    f: KernelSpec,
    grid_n: int | None = None,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> DemandProfile:
    grid_n = numerics.ring_grid_n if grid_n is None else grid_n
    if grid_n < 64:
        raise InvalidArgumentError(f"grid_n must be >= 64, got {grid_n}")
    kernels.require_role(f, "interest_f", arc.L)
    if not E_p > 0:
        raise InvalidArgumentError("E_p must be positive")
    x = ring_grid(grid_n, arc.L)
    vals = demand_values(arc, E_p, f, x, numerics.quadrature_order)
    grid = GridFunction(x=x, values=vals, step=2.0 * arc.L / grid_n, support=(-arc.L, arc.L))
    return DemandProfile(arc=arc, E_p=E_p, f=f, values=grid, quadrature_order=numerics.quadrature_order)


def demand_properties_check(profile: DemandProfile, numerics: NumericsConfig = DEFAULT_NUMERICS) -> PropertyReport:
    """Symmetry about the arc midpoint, strict concavity inside the arc, unimodality."""
    tol = numerics.tolerances
    rep = PropertyReport()
    arc, L = profile.arc, profile.L
    mid = profile.mid
    x, P = profile.values.x, profile.values.values
    step = profile.values.step
    pmax = float(np.max(np.abs(P))) or 1.0

    deltas = np.arange(1, len(x) // 2) * step
    left = profile.at(canonicalize(mid - deltas, L))
    right = profile.at(canonicalize(mid + deltas, L))
    sym = float(np.max(np.abs(left - right)))
    rep.metrics["symmetry_residual"] = sym
    rep.metrics["symmetry_residual_rel"] = sym / pmax
    rep.checks["symmetric"] = sym <= tol.symmetry * pmax

    # grid points strictly inside the arc, ordered along it
    off = arc.local(x)
    inside = (off > 0.0) & (off < arc.length)
    order = np.argsort(off[inside])
    Pin = P[inside][order]
    if len(Pin) >= 3:
        d2 = (Pin[:-2] - 2.0 * Pin[1:-1] + Pin[2:]) / pmax
        rep.metrics["max_scaled_second_difference"] = float(np.max(d2))
        rep.checks["strictly_concave_on_arc"] = bool(np.all(d2 < -tol.concavity))
    else:
        rep.metrics["max_scaled_second_difference"] = float("nan")
        rep.checks["strictly_concave_on_arc"] = False

    s = signed_offset(x, mid, L)
    order = np.argsort(s)
    s_sorted, P_sorted = s[order], P[order]
    dP = np.diff(P_sorted)
    slack = tol.monotone * pmax
    up = s_sorted[1:] <= 0.0
    rep.checks["increasing_before_mid"] = bool(np.all(dP[up] >= -slack))
    rep.checks["decreasing_after_mid"] = bool(np.all(dP[~up & (s_sorted[:-1] >= 0.0)] <= slack))

    arg = float(x[int(np.argmax(P))])
    rep.metrics["argmax_distance_to_mid"] = torus_distance(arg, mid, L)
    rep.checks["argmax_at_mid"] = rep.metrics["argmax_distance_to_mid"] <= step * (1.0 + 1e-9)
    return rep
