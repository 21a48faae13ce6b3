"""Content filtering inside an equilibrium community.

A filter passes item x with probability r(x). Applied to the whole
community's production it turns the total utility rate into

    sum over producers z of  gate(z) * r(x*_z) * (q(x*_z|z) P(x*_z) - alpha_C c),

evaluated on the producer grid exactly like the unfiltered total. Two
schemes are covered: one central filter (kernel or threshold), and expert
routing, where content first goes through the agent sitting at x*_z, who
forwards it with probability q(x*_z|z) f(0).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Literal

import numpy as np

from . import kernels
from .equilibrium import CommunityState, GlobalParams
from .errors import InvalidArgumentError
from .export import write_csv
from .geometry import canonicalize, torus_distance
from .kernels import KernelSpec
from .numerics import DEFAULT_NUMERICS, NumericsConfig
from .production import ProductionTarget


@dataclass(frozen=True)
class FilterSpec:
    """Kernel filter r(x) = h(|x - center|) or threshold filter on p(x|center).

    A threshold filter passes x iff f(|x - center|) > t. With ``inclusive`` the
    comparison is >=; the two differ only on the level set, which has measure
    zero but carries a grid node at each support edge.
    """

    kind: Literal["kernel", "threshold"]
    center: float
    L: float
    h: KernelSpec | None = None
    t: float | None = None
    f: KernelSpec | None = None
    inclusive: bool = False
    degenerate: bool = False

    def __post_init__(self):
        if self.kind == "kernel":
            if self.h is None:
                raise InvalidArgumentError("kernel filter needs h")
            if self.h.amplitude > 1.0:
                raise InvalidArgumentError("filter kernel must take values in [0, 1]")
            kernels.require_role(self.h, "filter_h", self.L)
        elif self.kind == "threshold":
            if self.t is None or self.f is None:
                raise InvalidArgumentError("threshold filter needs t and f")
            f0 = kernels.kernel_eval(self.f, 0.0, self.L)
            if not 0.0 <= self.t <= f0:
                raise InvalidArgumentError(f"threshold {self.t} outside [0, f(0)={f0}]")
        else:
            raise InvalidArgumentError(f"unknown filter kind {self.kind!r}")

    def pass_rate(self, x) -> np.ndarray:
        d = np.asarray(torus_distance(np.asarray(x, dtype=float), self.center, self.L))
        if self.kind == "kernel":
            return kernels.kernel_eval_unchecked(self.h, d, self.L)
        p = kernels.kernel_eval_unchecked(self.f, d, self.L)
        return ((p >= self.t) if self.inclusive else (p > self.t)).astype(float)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind, "center": self.center}
        if self.kind == "kernel":
            out["h"] = self.h.to_dict()
        else:
            out.update(t=self.t, inclusive=self.inclusive, degenerate=self.degenerate)
        return out


def kernel_filter(h: KernelSpec, center: float, L: float) -> FilterSpec:
    return FilterSpec("kernel", canonicalize(center, L), L, h=h)


def threshold_filter(t: float, center: float, f: KernelSpec, L: float, inclusive: bool = False) -> FilterSpec:
    return FilterSpec("threshold", canonicalize(center, L), L, t=t, f=f, inclusive=inclusive)


def filtered_total_utility(community: CommunityState, filt: FilterSpec | Callable[[np.ndarray], np.ndarray]) -> float:
    """Total utility rate of the community with its output passed through ``filt``.

    ``filt`` may also be any callable giving pass probabilities at canonical x.
    """
    pm = community.production
    r = filt.pass_rate(pm.x_star) if isinstance(filt, FilterSpec) else np.asarray(filt(pm.x_star), dtype=float)
    margin = pm.q_star * pm.P_star - pm.alpha_C * pm.c
    return float(np.sum(pm.weights * pm.gate_rate * r * margin))


def filter_agent_scores(
    community: CommunityState, h: KernelSpec, y_grid_n: int | None = None, numerics: NumericsConfig = DEFAULT_NUMERICS
) -> tuple[np.ndarray, np.ndarray]:
    """Filtered total for a kernel filter centred at each point of an arc grid."""
    n = numerics.y_grid_n + 1 if y_grid_n is None else y_grid_n
    if n < 3:
        raise InvalidArgumentError("y_grid_n must be >= 3")
    L = community.arc.L
    kernels.require_role(h, "filter_h", L)
    if h.amplitude > 1.0:
        raise InvalidArgumentError("filter kernel must take values in [0, 1]")
    pm = community.production
    centers, _ = community.arc.points(n)
    d = np.asarray(torus_distance(pm.x_star[None, :], centers[:, None], L))
    r = kernels.kernel_eval_unchecked(h, d, L)
    margin = pm.weights * pm.gate_rate * (pm.q_star * pm.P_star - pm.alpha_C * pm.c)
    return centers, r @ margin


def optimal_filter_agent(
    community: CommunityState,
    h: KernelSpec,
    y_grid_n: int | None = None,
    numerics: NumericsConfig = DEFAULT_NUMERICS,
) -> float:
    """Best place in the community for a single kernel filter.

    Ties (within 1e-12 relative) go to the candidate closest to the midpoint.
    The default grid has an odd number of points so the midpoint is on it.
    """
    centers, scores = filter_agent_scores(community, h, y_grid_n, numerics)
    best = float(np.max(scores))
    near = scores >= best - 1e-12 * max(abs(best), 1e-300)
    dist = np.asarray(torus_distance(centers, community.mid, community.arc.L))
    idx = np.flatnonzero(near)
    return float(centers[idx[np.argmin(dist[idx])]])


def make_threshold_filter(community: CommunityState, f: KernelSpec) -> FilterSpec:
    """Central threshold filter at the lowest interest level found on the supply support.

    p(.|mid) decreases away from the midpoint and the support is symmetric,
    so that level is f at the support half-width. The filter is inclusive so
    that grid nodes at the support edges are kept (see FilterSpec).
    """
    pm = community.production
    L = community.arc.L
    lo, hi = pm.support_offsets()
    if not np.isfinite(lo):
        return FilterSpec("threshold", community.mid, L, t=0.0, f=f, inclusive=True, degenerate=True)
    half = max(-lo, hi)
    t0 = float(kernels.kernel_eval(f, min(half, L), L))
    return FilterSpec("threshold", community.mid, L, t=t0, f=f, inclusive=True)


@dataclass(frozen=True)
class ExpertBenefit:
    gain: float
    condition_defined: bool


def expert_gain_values(q, P, alpha_c: float, f0: float, E_q: float) -> np.ndarray:
    """E_q * (q f(0) (P - alpha c) - (q P - alpha c))."""
    q = np.asarray(q, dtype=float)
    P = np.asarray(P, dtype=float)
    return E_q * (q * f0 * (P - alpha_c) - (q * P - alpha_c))


def expert_condition_bound(q, P, alpha_c: float) -> np.ndarray:
    """Level f(0) must exceed for routing to pay: 1 - (1-q)/q * alpha c / (P - alpha c)."""
    q = np.asarray(q, dtype=float)
    P = np.asarray(P, dtype=float)
    return 1.0 - (1.0 - q) / q * alpha_c / (P - alpha_c)


def expert_benefit(target: ProductionTarget, community: CommunityState, params: GlobalParams) -> ExpertBenefit:
    """Gain from routing producer ``target``'s output through the expert at its content type."""
    if not target.gate_rate:
        raise InvalidArgumentError("expert routing applies to producers with an open gate")
    L = params.L
    q = float(kernels.kernel_eval(params.g, torus_distance(target.x_star, target.y, L), L))
    P = float(community.demand.at(target.x_star)[0])
    alpha_c = community.alpha_C * params.c
    f0 = float(kernels.kernel_eval(params.f, 0.0, L))
    gain = float(expert_gain_values(q, P, alpha_c, f0, params.E_q))
    return ExpertBenefit(gain=gain, condition_defined=P > alpha_c)


@dataclass
class ExpertPlan:
    y: np.ndarray
    gain: np.ndarray
    P_at_xstar: np.ndarray
    q_at_xstar: np.ndarray
    benefiting: np.ndarray
    t_C: float
    delta_total: float
    baseline_total: float
    threshold_violations: int

    @property
    def benefiting_fraction(self) -> float:
        return float(np.mean(self.benefiting)) if self.benefiting.size else 0.0

    @property
    def benefiting_indices(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.benefiting)]

    def to_dict(self) -> dict[str, Any]:
        return {
            "t_C": self.t_C,
            "delta_total": self.delta_total,
            "benefiting_fraction": self.benefiting_fraction,
            "baseline_total": self.baseline_total,
            "threshold_violations": self.threshold_violations,
        }

    def to_csv(self, path) -> None:
        write_csv(path, ["y", "gain", "P_at_xstar", "q_at_xstar"], zip(self.y, self.gain, self.P_at_xstar, self.q_at_xstar))


def _threshold_violations(q: np.ndarray, P: np.ndarray, benefit: np.ndarray, rel: float = 1e-12) -> int:
    """Pairs where a benefiting producer is dominated in (q, P) by a non-benefiting one.

    The gain falls in both q and P, so an agent with no larger q and no larger
    P than a benefiting agent must benefit too.
    """
    if not np.any(benefit) or np.all(benefit):
        return 0
    qb, Pb = q[benefit], P[benefit]
    qn, Pn = q[~benefit], P[~benefit]
    sq = rel * max(float(np.max(np.abs(q))), 1.0)
    sp = rel * max(float(np.max(np.abs(P))), 1.0)
    dominated = (qn[:, None] <= qb[None, :] + sq) & (Pn[:, None] <= Pb[None, :] + sp)
    return int(np.count_nonzero(np.any(dominated, axis=1)))


def expert_routing_plan(community: CommunityState, params: GlobalParams) -> ExpertPlan:
    pm = community.production
    L = params.L
    f0 = float(kernels.kernel_eval(params.f, 0.0, L))
    gated = pm.gated
    raw = expert_gain_values(pm.q_star, pm.P_star, pm.alpha_C * params.c, f0, params.E_q)
    gain = np.where(gated, raw, 0.0)
    benefit = gated & (gain > 0.0)
    t_C = float(np.max(pm.P_star[benefit])) if np.any(benefit) else float("nan")
    delta = float(np.sum(pm.weights[benefit] * gain[benefit]))
    baseline = float(np.sum(pm.weights * pm.gate_rate * (pm.q_star * pm.P_star - pm.alpha_C * pm.c)))
    return ExpertPlan(
        y=pm.y,
        gain=gain,
        P_at_xstar=pm.P_star,
        q_at_xstar=pm.q_star,
        benefiting=benefit,
        t_C=t_C,
        delta_total=delta,
        baseline_total=baseline,
        threshold_violations=_threshold_violations(pm.q_star[gated], pm.P_star[gated], benefit[gated]),
    )
