"""Consumption and production utility rates of an interval community.

Reader at y:    U_d(y) = E_p * ( integral Q*(x) p(x|y) dx - c * beta_C )
Producer at y:  U_s(y) = gate(y) * ( q(x*_y|y) P(x*_y) - alpha_C * c )

Summed over the community both give  integral P Q* dx - alpha_C * beta_C * c.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .demand import DemandProfile
from .errors import IntegrityError, InvalidArgumentError
from .export import write_csv
from .geometry import Arc, canonicalize, torus_distance
from .kernels import KernelSpec
from .numerics import DEFAULT_NUMERICS, GridFunction, NumericsConfig, PropertyReport, panel_nodes
from .production import ProductionMap, ProductionTarget
from .supply import supply_weak_integral


def supply_measure(pm: ProductionMap) -> float:
    """beta_C: total production rate of the community."""
    return float(np.sum(pm.weights * pm.gate_rate))


def consumption_utility(y, pm: ProductionMap, f: KernelSpec, E_p: float, c: float):
    """U_d at one or many reader positions (weak form over the producer grid)."""
    L = pm.L
    ya = np.atleast_1d(np.asarray(y, dtype=float))
    d = torus_distance(pm.x_star[None, :], ya[:, None], L)
    p = kernels.kernel_eval_unchecked(f, np.asarray(d), L)
    w = pm.weights * pm.gate_rate
    reward = p @ (w * pm.q_star)
    out = E_p * (reward - c * np.sum(w))
    return float(out[0]) if np.ndim(y) == 0 else out


def production_utility(y, target: ProductionTarget, alpha_C: float, c: float) -> float:
    if target.gate_rate is None:
        raise InvalidArgumentError("production target has not been gated")
    if not target.gate_rate:
        return 0.0
    return float(target.gate_rate * (target.objective - alpha_C * c))


def production_utilities(pm: ProductionMap) -> np.ndarray:
    return pm.gate_rate * (pm.objective - pm.alpha_C * pm.c)


@dataclass
class UtilityProfile:
    arc: Arc
    u_d: GridFunction
    u_s: GridFunction
    total_d: float
    total_s: float
    total_formula: float
    closed_gates: int = 0

    def to_csv(self, path) -> None:
        write_csv(path, ["y", "U_d", "U_s"], zip(self.u_d.x, self.u_d.values, self.u_s.values))


def utility_balance(
    pm: ProductionMap,
    demand: DemandProfile,
    f: KernelSpec,
    E_p: float,
    c: float,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> tuple[float, float, float]:
    """(total_d, total_s, integral P Q* - alpha beta c) for a fully gated community.

    The reader total integrates U_d over the arc with a composite Gauss-Legendre
    rule, independently of the producer grid that the other two share.
    """
    if not pm.fully_gated:
        raise InvalidArgumentError("utility balance is defined for fully gated communities only")
    arc = pm.arc
    edges = np.linspace(0.0, arc.length, numerics.utility_panels + 1)
    t, w = panel_nodes(edges[:-1], edges[1:], numerics.quadrature_order)
    y = canonicalize(arc.start + t.ravel(), arc.L)
    total_d = float(np.sum(consumption_utility(y, pm, f, E_p, c) * w.ravel()))

    total_s = float(np.sum(pm.weights * production_utilities(pm)))

    beta_C = supply_measure(pm)
    formula = supply_weak_integral(pm, demand.at) - pm.alpha_C * beta_C * c

    scale = max(abs(total_d), abs(total_s), abs(formula))
    if scale > 0.0:
        worst = max(abs(total_d - total_s), abs(total_d - formula), abs(total_s - formula)) / scale
        if worst > numerics.tolerances.balance_integrity:
            raise IntegrityError(
                f"utility totals disagree by {worst:.3e} relative (d={total_d}, s={total_s}, formula={formula})"
            )
    return total_d, total_s, formula


def utility_profile(
    pm: ProductionMap,
    demand: DemandProfile,
    f: KernelSpec,
    E_p: float,
    c: float,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> UtilityProfile:
    step = pm.step
    u_d = consumption_utility(pm.y, pm, f, E_p, c)
    u_s = production_utilities(pm)
    closed = int(np.count_nonzero(~pm.gated))
    if closed == 0:
        total_d, total_s, formula = utility_balance(pm, demand, f, E_p, c, numerics)
    else:
        total_d = float(np.sum(pm.weights * u_d))
        total_s = float(np.sum(pm.weights * u_s))
        formula = float("nan")
    return UtilityProfile(
        arc=pm.arc,
        u_d=GridFunction(pm.y, u_d, step),
        u_s=GridFunction(pm.y, u_s, step),
        total_d=total_d,
        total_s=total_s,
        total_formula=formula,
        closed_gates=closed,
    )


def _monotone_toward_mid(dist: np.ndarray, vals: np.ndarray, slack: float) -> tuple[bool, float]:
    """u(y) >= u(y') whenever y is strictly closer to mid than y' (pairwise)."""
    order = np.argsort(dist, kind="stable")
    ds, vs = dist[order], vals[order]
    # running minimum over strictly closer agents must dominate every farther agent
    worst = 0.0
    closer_min = np.inf
    i = 0
    n = len(ds)
    while i < n:
        j = i
        while j + 1 < n and ds[j + 1] - ds[i] <= 1e-12 * max(ds[-1], 1.0):
            j += 1
        group = vs[i : j + 1]
        if np.isfinite(closer_min):
            worst = max(worst, float(np.max(group)) - closer_min)
        closer_min = min(closer_min, float(np.min(group)))
        i = j + 1
    return worst <= slack, worst


def utility_peak_check(profile: UtilityProfile, numerics: NumericsConfig = DEFAULT_NUMERICS) -> PropertyReport:
    rep = PropertyReport()
    arc = profile.arc
    L = arc.L
    mid = arc.mid
    step = profile.u_d.step
    dist = np.asarray(torus_distance(profile.u_d.x, mid, L))
    for name, gf in (("u_d", profile.u_d), ("u_s", profile.u_s)):
        arg = gf.argmax_coord()
        gap = torus_distance(arg, mid, L)
        rep.metrics[f"{name}_argmax_distance"] = gap
        rep.checks[f"{name}_peak_at_mid"] = gap <= step * (1.0 + 1e-9)
        scale = float(np.max(np.abs(gf.values))) or 1.0
        ok, worst = _monotone_toward_mid(dist, gf.values, 1e-10 * scale)
        rep.metrics[f"{name}_order_violation"] = worst
        rep.checks[f"{name}_monotone_toward_mid"] = ok
        sym = float(np.max(np.abs(gf.values - gf.values[::-1]))) / scale
        rep.metrics[f"{name}_symmetry_residual_rel"] = sym
        rep.checks[f"{name}_symmetric"] = sym <= 1e-5
    return rep
