"""Equilibrium supply Q*(x) in weak form and as an explicit pushforward density.

With every producer concentrated on one type,

    integral Q*(x) phi(x) dx = integral over the arc of gate(z) q(x*_z|z) phi(x*_z) dz,

which is the form every utility computation uses. The density exists for
property checks and export: because z -> x*_z is strictly monotone over the
whole arc, each type in the image has exactly one producer z(x), and

    Q*(x) = gate(z) q(x|z) / |dx*/dz|   at z = z(x).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InversionError
from .export import write_csv
from .geometry import Arc, canonicalize
from .numerics import DEFAULT_NUMERICS, GridFunction, NumericsConfig, PropertyReport
from .production import ProductionMap


def supply_weak_integral(pm: ProductionMap, phi: Callable[[np.ndarray], np.ndarray]) -> float:
    """integral Q*(x) phi(x) dx by change of variables through the concentrated rates."""
    vals = np.asarray(phi(pm.x_star), dtype=float)
    return float(np.sum(pm.weights * pm.gate_rate * pm.q_star * vals))


def total_supply_mass(pm: ProductionMap) -> float:
    return supply_weak_integral(pm, lambda x: np.ones_like(x))


@dataclass
class SupplyRepresentation:
    map: ProductionMap
    support: Arc | None
    density: GridFunction | None
    x_off: np.ndarray | None = None
    flagged: np.ndarray | None = None

    def to_csv(self, path) -> None:
        d = self.density
        write_csv(path, ["x", "Q_star(x)", "flagged"], zip(d.x, d.values, self.flagged))


def supply_density(pm: ProductionMap, x_grid_n: int | None = None, numerics: NumericsConfig = DEFAULT_NUMERICS) -> SupplyRepresentation:
    n = numerics.y_grid_n if x_grid_n is None else x_grid_n
    eps = numerics.tolerances.singular_jacobian
    gated = pm.gated
    if np.count_nonzero(gated) < 3:
        raise InversionError("fewer than three producing agents; no density to invert")
    y, x = pm.y_off[gated], pm.x_off[gated]
    rate, q = pm.gate_rate[gated], pm.q_star[gated]
    dx = np.diff(x)
    if np.all(dx < 0.0):
        y, x, rate, q = y[::-1], x[::-1], rate[::-1], q[::-1]
    elif not np.all(dx > 0.0):
        raise InversionError("production map is not monotone over the producing agents")
    jac = np.abs(np.gradient(x, y, edge_order=2))
    node_flag = jac < eps
    node_density = rate * q / np.maximum(jac, eps)

    xs = np.linspace(x[0], x[-1], n)
    dens = np.interp(xs, x, node_density)
    # a grid cell is flagged when either bracketing node is singular
    cell = np.clip(np.searchsorted(x, xs, side="right") - 1, 0, len(x) - 2)
    flagged = node_flag[cell] | node_flag[cell + 1]

    L = pm.L
    length = x[-1] - x[0]
    support = Arc(pm.mid + x[0], length, L) if length > 0 else None
    grid = GridFunction(x=canonicalize(pm.mid + xs, L), values=dens, step=length / (n - 1), support=(x[0], x[-1]))
    return SupplyRepresentation(map=pm, support=support, density=grid, x_off=xs, flagged=flagged)


def density_integral(rep: SupplyRepresentation, phi: Callable[[np.ndarray], np.ndarray]) -> float:
    d = rep.density
    return float(np.trapezoid(d.values * np.asarray(phi(d.x), dtype=float), rep.x_off))


def supply_properties_check(rep: SupplyRepresentation, numerics: NumericsConfig = DEFAULT_NUMERICS) -> PropertyReport:
    tol = numerics.tolerances
    out = PropertyReport()
    pm, d = rep.map, rep.density
    xs, vals = rep.x_off, d.values
    vmax = float(np.max(vals)) or 1.0

    # reflected abscissae can overshoot the support end by an ulp
    mirrored = np.interp(np.clip(-xs, xs[0], xs[-1]), xs, vals)
    sym = float(np.max(np.abs(vals - mirrored)))
    out.metrics["symmetry_residual_rel"] = sym / vmax
    out.checks["symmetric"] = sym <= tol.supply_symmetry * vmax

    ok = ~rep.flagged
    usable = ok[:-2] & ok[1:-1] & ok[2:]
    d2 = (vals[:-2] - 2.0 * vals[1:-1] + vals[2:]) / vmax
    out.metrics["max_scaled_second_difference"] = float(np.max(d2[usable])) if np.any(usable) else float("nan")
    out.metrics["flagged_cells"] = float(np.count_nonzero(rep.flagged))
    out.checks["concave_on_support"] = bool(np.all(d2[usable] <= tol.concavity))

    half = pm.arc.half_length * (1.0 + 1e-12)
    out.checks["support_inside_arc"] = bool(xs[0] >= -half and xs[-1] <= half)

    arg = float(xs[int(np.argmax(vals))])
    out.metrics["argmax_distance_to_mid"] = abs(arg)
    out.checks["argmax_at_mid"] = abs(arg) <= d.step * (1.0 + 1e-9)

    y, x = pm.y_off, pm.x_off
    eps = 1e-12 * pm.arc.length
    between = np.all((x >= np.minimum(y, 0.0) - eps) & (x <= np.maximum(y, 0.0) + eps))
    out.checks["monotone_shift_toward_mid"] = bool(between and np.all(np.diff(x) > 0.0))
    return out


def support_endpoints(rep: SupplyRepresentation) -> tuple[float, float]:
    """Canonical coordinates of the support ends."""
    lo, hi = rep.density.support  # offsets from mid
    L = rep.map.L
    return canonicalize(rep.map.mid + lo, L), canonicalize(rep.map.mid + hi, L)

