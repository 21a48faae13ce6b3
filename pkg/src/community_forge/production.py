"""Optimal content type of each producer and the community production map.

A producer at y puts its whole rate on the single type maximising
q(x|y) * P(x). For y inside the community that maximiser sits between y and
the arc midpoint, where the objective is strictly concave, so a bracketed
golden-section search finds it. Golden section cannot resolve a smooth
maximum below ~sqrt(eps) relative precision, so the result is polished by
bisection on the exact derivative inside a tiny window around it.

All positions are handled as signed offsets from the arc midpoint; a rate
concentrated on one type is carried as the pair (x_star, gate_rate) and never
materialised as a function.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .demand import DemandProfile
from .errors import InvalidArgumentError
from .export import write_csv
from .geometry import Arc, canonicalize, signed_offset
from .kernels import KernelSpec
from .numerics import (
    DEFAULT_NUMERICS,
    NumericsConfig,
    PropertyReport,
    bisect_decreasing_root,
    golden_section_max,
    trapezoid_weights,
)


@dataclass
class ProductionTarget:
    y: float
    x_star: float
    objective: float
    gate_rate: float | None = None


def _objective(profile: DemandProfile, g: KernelSpec, x_off: np.ndarray, y_off: np.ndarray) -> np.ndarray:
    L = profile.L
    d = np.minimum(np.abs(x_off - y_off), L)
    return kernels.kernel_eval_unchecked(g, d, L) * profile.at(canonicalize(profile.mid + x_off, L))


def _objective_slope(profile: DemandProfile, g: KernelSpec, x_off: np.ndarray, y_off: np.ndarray) -> np.ndarray:
    L = profile.L
    diff = x_off - y_off
    d = np.minimum(np.abs(diff), L)
    x = canonicalize(profile.mid + x_off, L)
    gv = kernels.kernel_eval_unchecked(g, d, L)
    gd = kernels.kernel_deriv_unchecked(g, d, L)
    return gd * np.sign(diff) * profile.at(x) + gv * profile.slope(x)


def optimal_offsets(
    y_off: np.ndarray,
    profile: DemandProfile,
    g: KernelSpec,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> tuple[np.ndarray, np.ndarray]:
    """Maximisers (as midpoint offsets) and objective values for agents at ``y_off``."""
    y_off = np.atleast_1d(np.asarray(y_off, dtype=float))
    r = g.support_radius(profile.L)
    lo = np.maximum(np.minimum(y_off, 0.0), y_off - r)
    hi = np.minimum(np.maximum(y_off, 0.0), y_off + r)
    width = hi - lo
    live = width > 0.0

    x = y_off.copy()
    if np.any(live):
        yl, lol, hil = y_off[live], lo[live], hi[live]
        xg = golden_section_max(lambda s: _objective(profile, g, s, yl), lol, hil, numerics.tolerances.golden_rel)
        delta = 1e-6 * (hil - lol)
        wlo = np.maximum(lol, xg - delta)
        whi = np.minimum(hil, xg + delta)
        slope_lo = _objective_slope(profile, g, wlo, yl)
        slope_hi = _objective_slope(profile, g, whi, yl)
        bracketed = (slope_lo > 0.0) & (slope_hi < 0.0)
        # narrow brackets (agents near mid) can leave the root outside the window
        wide = ~bracketed
        if np.any(wide):
            s_lo = _objective_slope(profile, g, lol[wide], yl[wide])
            s_hi = _objective_slope(profile, g, hil[wide], yl[wide])
            ok = (s_lo > 0.0) & (s_hi < 0.0)
            idx = np.flatnonzero(wide)[ok]
            wlo[idx], whi[idx] = lol[idx], hil[idx]
            bracketed[idx] = True
        if np.any(bracketed):
            yb = yl[bracketed]
            xg[bracketed] = bisect_decreasing_root(
                lambda s: _objective_slope(profile, g, s, yb), wlo[bracketed], whi[bracketed]
            )
        x[live] = xg

    obj = _objective(profile, g, x, y_off)
    # flat objectives: prefer the bracket end at y itself
    at_y = _objective(profile, g, y_off, y_off)
    keep_y = at_y >= obj
    x = np.where(keep_y, y_off, x)
    obj = np.where(keep_y, at_y, obj)
    return x, obj


def best_content_type(
    y: float,
    profile: DemandProfile,
    g: KernelSpec,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> ProductionTarget:
    """Ungated optimal content type for a producer inside the community arc."""
    arc = profile.arc
    y_off = float(signed_offset(y, profile.mid, profile.L))
    if abs(y_off) > arc.half_length * (1.0 + 1e-12):
        raise InvalidArgumentError(f"agent {y} lies outside the community arc")
    x_off, obj = optimal_offsets(np.array([y_off]), profile, g, numerics)
    return ProductionTarget(
        y=canonicalize(y, profile.L),
        x_star=canonicalize(profile.mid + x_off[0], profile.L),
        objective=float(obj[0]),
    )


def production_gate(target: ProductionTarget, alpha_C: float, c: float, E_q: float) -> ProductionTarget:
    """Open the gate (rate E_q) iff producing pays at least the readers' cost."""
    rate = E_q if target.objective - alpha_C * c >= 0.0 else 0.0
    return ProductionTarget(target.y, target.x_star, target.objective, rate)


def max_objective_anywhere(
    y: np.ndarray,
    profile: DemandProfile,
    g: KernelSpec,
    grid_n: int = DEFAULT_NUMERICS.nash_search_grid,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> tuple[np.ndarray, np.ndarray]:
    """max_x q(x|y) P(x) for agents anywhere on the ring.

    Outside the community the concavity bracket is not available, so the
    support window of q(.|y) is scanned on a dense grid (against a tabulated P)
    and the best cell pair is refined by golden section on the exact P.
    """
    L = profile.L
    y = np.atleast_1d(np.asarray(y, dtype=float))
    y_off = signed_offset(y, profile.mid, L)
    r = g.support_radius(L)
    s = np.linspace(-r, r, grid_n)
    # coarse scan on a tabulated P, then exact evaluation of the chosen cells
    q_scan = kernels.kernel_eval_unchecked(g, np.abs(s), L)
    vals = q_scan[None, :] * profile.approx(profile.mid + y_off[:, None] + s[None, :])
    best = np.argmax(vals, axis=1)
    cell = s[1] - s[0]
    lo = y_off + s[best] - cell
    hi = y_off + s[best] + cell
    lo = np.maximum(lo, y_off - r)
    hi = np.minimum(hi, y_off + r)
    xr = golden_section_max(lambda t: _objective(profile, g, t, y_off), lo, hi, numerics.tolerances.golden_rel)
    refined = _objective(profile, g, xr, y_off)
    coarse = _objective(profile, g, y_off + s[best], y_off)
    use = refined >= coarse
    x_best = np.where(use, xr, y_off + s[best])
    return canonicalize(profile.mid + x_best, L), np.where(use, refined, coarse)


@dataclass
class ProductionMap:
    arc: Arc
    mid: float
    y: np.ndarray
    y_off: np.ndarray
    x_star: np.ndarray
    x_off: np.ndarray
    objective: np.ndarray
    gate_rate: np.ndarray
    q_star: np.ndarray
    P_star: np.ndarray
    E_q: float
    alpha_C: float
    c: float
    weights: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def L(self) -> float:
        return self.arc.L

    @property
    def step(self) -> float:
        return self.arc.length / (self.n - 1)

    @property
    def gated(self) -> np.ndarray:
        return self.gate_rate > 0.0

    @property
    def fully_gated(self) -> bool:
        return bool(np.all(self.gated))

    @property
    def production_feasible(self) -> bool:
        return self.fully_gated

    @property
    def targets(self) -> list[ProductionTarget]:
        return [
            ProductionTarget(float(a), float(b), float(c), float(d))
            for a, b, c, d in zip(self.y, self.x_star, self.objective, self.gate_rate)
        ]

    def support_offsets(self) -> tuple[float, float]:
        """Offsets of the image interval of gated agents (empty -> (nan, nan))."""
        xs = self.x_off[self.gated]
        if xs.size == 0:
            return float("nan"), float("nan")
        return float(np.min(xs)), float(np.max(xs))

    def to_csv(self, path) -> None:
        write_csv(path, ["y", "x_star", "objective", "gate_rate"], zip(self.y, self.x_star, self.objective, self.gate_rate))


def production_map(
    arc: Arc,
    profile: DemandProfile,
    g: KernelSpec,
    E_q: float,
    alpha_C: float,
    c: float,
    y_grid_n: int | None = None,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> ProductionMap:
    n = numerics.y_grid_n if y_grid_n is None else y_grid_n
    if n < 128:
        raise InvalidArgumentError(f"y_grid_n must be >= 128, got {n}")
    kernels.require_role(g, "ability_g", arc.L)
    L = arc.L
    y, t = arc.points(n)
    y_off = t - 0.5 * arc.length
    x_off, obj = optimal_offsets(y_off, profile, g, numerics)
    gate = np.where(obj - alpha_C * c >= 0.0, E_q, 0.0)
    x_star = canonicalize(profile.mid + x_off, L)
    q = kernels.kernel_eval_unchecked(g, np.minimum(np.abs(x_off - y_off), L), L)
    P = profile.at(x_star)
    return ProductionMap(
        arc=arc,
        mid=profile.mid,
        y=y,
        y_off=y_off,
        x_star=x_star,
        x_off=x_off,
        objective=obj,
        gate_rate=gate,
        q_star=q,
        P_star=P,
        E_q=E_q,
        alpha_C=alpha_C,
        c=c,
        weights=trapezoid_weights(n, arc.length),
    )


def production_map_report(pm: ProductionMap, numerics: NumericsConfig = DEFAULT_NUMERICS) -> PropertyReport:
    """Between-ness, monotonicity, distance shrink and antisymmetry of y -> x*."""
    rep = PropertyReport()
    y, x = pm.y_off, pm.x_off
    scale = max(pm.arc.length, 1e-300)
    eps = 1e-12 * scale
    lo = np.minimum(y, 0.0) - eps
    hi = np.maximum(y, 0.0) + eps
    rep.checks["between_y_and_mid"] = bool(np.all((x >= lo) & (x <= hi)))
    dx = np.diff(x)
    rep.metrics["min_step_increase"] = float(np.min(dx))
    rep.checks["strictly_increasing"] = bool(np.all(dx > 0.0))
    dist = np.abs(y - x)
    left = y <= 0.0
    right = y >= 0.0
    # farther from mid -> strictly larger shift, on each half
    rep.checks["shift_grows_left"] = bool(np.all(np.diff(dist[left]) < 0.0))
    rep.checks["shift_grows_right"] = bool(np.all(np.diff(dist[right]) > 0.0))
    anti = float(np.max(np.abs(x + x[::-1])))
    rep.metrics["antisymmetry_residual"] = anti
    rep.checks["antisymmetric"] = anti <= 1e-6
    jumps = float(np.max(np.abs(dx))) if dx.size else 0.0
    rep.metrics["max_step"] = jumps
    rep.checks["continuous"] = jumps <= 2.0 * pm.step
    rep.checks["fully_gated"] = pm.fully_gated
    return rep
