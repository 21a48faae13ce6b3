"""Covering Nash equilibria: construction, the community-length bound and verification."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np
from scipy.stats import qmc

from . import kernels
from .demand import DemandProfile, demand_profile
from .errors import ConstructionError, InvalidArgumentError
from .geometry import Arc, canonicalize, partition_ring, signed_offset
from .kernels import KernelSpec
from .numerics import DEFAULT_NUMERICS, GridFunction, NumericsConfig, composite_gauss_legendre, parallel_map
from .production import ProductionMap, max_objective_anywhere, optimal_offsets, production_map
from .supply import SupplyRepresentation, supply_density
from .utility import UtilityProfile, consumption_utility, utility_profile

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GlobalParams:
    L: float
    c: float
    E_p: float
    E_q: float
    f: KernelSpec
    g: KernelSpec

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise InvalidArgumentError("L must be positive")
        if not self.c >= 0:
            raise InvalidArgumentError("processing cost c must be >= 0")
        if not (self.E_p > 0 and self.E_q > 0):
            raise InvalidArgumentError("rate budgets E_p and E_q must be positive")

    @property
    def peak_margin(self) -> float:
        """f(0) g(0) - c; construction needs it positive."""
        return self.f.amplitude * self.g.amplitude - self.c

    def to_dict(self) -> dict[str, Any]:
        return {
            "L": self.L,
            "c": self.c,
            "E_p": self.E_p,
            "E_q": self.E_q,
            "f": self.f.to_dict(),
            "g": self.g.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "GlobalParams":
        return cls(
            L=float(d["L"]),
            c=float(d["c"]),
            E_p=float(d["E_p"]),
            E_q=float(d["E_q"]),
            f=KernelSpec.from_dict(d["f"]),
            g=KernelSpec.from_dict(d["g"]),
        )

    def replace(self, **changes) -> "GlobalParams":
        data = {k: getattr(self, k) for k in ("L", "c", "E_p", "E_q", "f", "g")}
        data.update(changes)
        return GlobalParams(**data)


@dataclass
class CommunityState:
    arc: Arc
    alpha_C: float
    demand: DemandProfile
    production: ProductionMap
    utility: UtilityProfile
    _supply: SupplyRepresentation | None = field(default=None, repr=False)

    @property
    def mid(self) -> float:
        return self.arc.mid

    @property
    def beta_C(self) -> float:
        return float(np.sum(self.production.weights * self.production.gate_rate))

    @property
    def total_utility(self) -> float:
        return self.utility.total_s

    def supply(self, numerics: NumericsConfig = DEFAULT_NUMERICS) -> SupplyRepresentation:
        if self._supply is None:
            self._supply = supply_density(self.production, numerics=numerics)
        return self._supply


@dataclass
class CommunityStructure:
    params: GlobalParams
    communities: list[CommunityState]
    numerics: NumericsConfig = DEFAULT_NUMERICS

    @property
    def K(self) -> int:
        return len(self.communities)

    @property
    def arcs(self) -> list[Arc]:
        return [c.arc for c in self.communities]

    @property
    def arc_lengths(self) -> np.ndarray:
        return np.array([c.arc.length for c in self.communities])

    @property
    def equal_arcs(self) -> bool:
        lengths = self.arc_lengths
        return bool(np.all(np.abs(lengths - lengths[0]) <= 1e-12 * lengths[0]))

    @property
    def covers_ring(self) -> bool:
        return abs(float(np.sum(self.arc_lengths)) - 2.0 * self.params.L) <= 1e-9 * self.params.L

    @property
    def fully_gated(self) -> bool:
        return all(c.production.fully_gated for c in self.communities)

    def home_index(self, y) -> np.ndarray:
        """Index of the arc containing each y (half-open arcs; seam-aware)."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        home = np.full(y.shape, -1, dtype=int)
        for k, comm in enumerate(self.communities):
            inside = np.atleast_1d(comm.arc.contains(y)) & (home < 0)
            home[inside] = k
        if np.any(home < 0):
            raise InvalidArgumentError("structure does not cover every sampled agent")
        return home


def max_interval_length(params: GlobalParams, tol: float = 1e-10, order: int = 64) -> float:
    """Largest l in [0, L] with integral_0^l (g(0) f(x) - c) dx >= 0."""
    L, c, f = params.L, params.c, params.f
    g0 = params.g.amplitude
    if g0 * f.amplitude <= c:
        return 0.0

    def integrand(x):
        return g0 * kernels.kernel_eval_unchecked(f, x, L) - c

    def F(l: float) -> float:
        return composite_gauss_legendre(integrand, [0.0, l], order) if l > 0 else 0.0

    if F(L) >= 0.0:
        return L
    # integrand is decreasing: F rises up to its root x0 and falls after it
    lo, hi = 0.0, L
    while hi - lo > tol:
        m = 0.5 * (lo + hi)
        if integrand(np.array(m)) > 0:
            lo = m
        else:
            hi = m
    lo, hi = lo, L
    while hi - lo > tol:
        m = 0.5 * (lo + hi)
        if F(m) >= 0.0:
            lo = m
        else:
            hi = m
    return lo


def _pair_margin(params: GlobalParams, arc_length: float) -> float:
    d = min(2.0 * arc_length, params.L)  # ring distances never exceed L
    f = kernels.kernel_eval(params.f, d, params.L)
    g = kernels.kernel_eval(params.g, d, params.L)
    return f * g - params.c


def feasibility_check(arc_length: float, params: GlobalParams, warn: bool = True) -> bool:
    """f(2l) g(2l) - c > 0: every reader/producer pair in the arc gains."""
    if not arc_length > 0:
        raise InvalidArgumentError("arc_length must be positive")
    if warn and params.g.support_radius(params.L) > arc_length:
        log.warning(
            "ability support radius %.4g exceeds arc length %.4g; the producer-support premise of the "
            "feasibility argument does not hold, verify the equilibrium directly",
            params.g.support_radius(params.L),
            arc_length,
        )
    return _pair_margin(params, arc_length) > 0.0


def max_feasible_length(params: GlobalParams, tol: float = 1e-12) -> float:
    """sup of feasible arc lengths, returned on the feasible side of the bisection."""
    if params.peak_margin <= 0:
        return 0.0
    L = params.L
    if _pair_margin(params, L) > 0:
        return L
    lo, hi = 0.0, L
    while hi - lo > tol * L:
        m = 0.5 * (lo + hi)
        if _pair_margin(params, m) > 0:
            lo = m
        else:
            hi = m
    return lo


def build_community(arc: Arc, params: GlobalParams, numerics: NumericsConfig = DEFAULT_NUMERICS) -> CommunityState:
    alpha_C = params.E_p * arc.length
    dem = demand_profile(arc, params.E_p, params.f, numerics=numerics)
    pm = production_map(arc, dem, params.g, params.E_q, alpha_C, params.c, numerics=numerics)
    up = utility_profile(pm, dem, params.f, params.E_p, params.c, numerics)
    return CommunityState(arc=arc, alpha_C=alpha_C, demand=dem, production=pm, utility=up)


def _same_length(a: Arc, b: Arc) -> bool:
    return a.L == b.L and abs(a.length - b.length) <= 1e-12 * b.length


def translate_community(
    state: CommunityState, arc: Arc, params: GlobalParams, numerics: NumericsConfig = DEFAULT_NUMERICS
) -> CommunityState:
    """The community on ``arc`` obtained by rotating ``state`` (same arc length).

    Everything is rotation invariant in midpoint-offset coordinates, so only
    canonical positions move; the demand grid is re-sampled at the new place.
    """
    if not _same_length(arc, state.arc):
        raise InvalidArgumentError("translation needs an arc of the same length on the same ring")
    L = arc.L
    mid = arc.mid
    dem = demand_profile(arc, params.E_p, params.f, numerics=numerics)
    pm = replace(
        state.production,
        arc=arc,
        mid=mid,
        y=canonicalize(arc.start + (state.production.y_off + 0.5 * arc.length), L),
        x_star=canonicalize(mid + state.production.x_off, L),
    )
    up = state.utility
    u_d = GridFunction(pm.y, up.u_d.values, up.u_d.step, up.u_d.support)
    u_s = GridFunction(pm.y, up.u_s.values, up.u_s.step, up.u_s.support)
    up = replace(up, arc=arc, u_d=u_d, u_s=u_s)
    return CommunityState(arc=arc, alpha_C=state.alpha_C, demand=dem, production=pm, utility=up)


def build_structure(
    params: GlobalParams, arcs: list[Arc], numerics: NumericsConfig = DEFAULT_NUMERICS
) -> CommunityStructure:
    """Communities on arbitrary arcs, with every reader at rate E_p and gated producers.

    One community is solved per distinct arc length; the others are rotations of it.
    """
    reps: list[Arc] = []
    key = []
    for a in arcs:
        match = next((i for i, r in enumerate(reps) if _same_length(r, a)), None)
        if match is None:
            reps.append(a)
            match = len(reps) - 1
        key.append(match)
    solved = parallel_map(lambda a: build_community(a, params, numerics), reps)
    comms = [
        solved[k] if solved[k].arc == a else translate_community(solved[k], a, params, numerics)
        for a, k in zip(arcs, key)
    ]
    return CommunityStructure(params=params, communities=comms, numerics=numerics)


def _diagnosis(params: GlobalParams) -> dict[str, float]:
    return {
        "f0_g0": params.f.amplitude * params.g.amplitude,
        "c": params.c,
        "peak_margin": params.peak_margin,
        "max_interval_length": max_interval_length(params),
    }


def covering_count(params: GlobalParams) -> int:
    """Fewest equal arcs whose length is still feasible."""
    delta0 = max_feasible_length(params)
    if delta0 <= 0:
        raise ConstructionError("no feasible community length", _diagnosis(params))
    K = math.ceil(2.0 * params.L / delta0)
    if 2.0 * params.L / K > delta0:  # guard against ceil rounding down at exact ratios
        K += 1
    return K


def construct_covering(
    params: GlobalParams, K: int | None = None, numerics: NumericsConfig = DEFAULT_NUMERICS
) -> CommunityStructure:
    """Equal-arc covering equilibrium; arcs always start at -L."""
    if params.peak_margin <= 0:
        raise ConstructionError(
            f"f(0)g(0) = {params.f.amplitude * params.g.amplitude:g} does not exceed c = {params.c:g}; "
            "no community length is sustainable",
            _diagnosis(params),
        )
    kernels.require_role(params.f, "interest_f", params.L)
    kernels.require_role(params.g, "ability_g", params.L)
    if K is None:
        K = covering_count(params)
    elif K < 1:
        raise InvalidArgumentError("K must be >= 1")
    structure = build_structure(params, partition_ring(K, params.L), numerics)
    closed = [k for k, c in enumerate(structure.communities) if not c.production.fully_gated]
    if closed:
        raise ConstructionError(
            f"{len(closed)} of {K} communities have producers whose gate stays closed at arc length {2 * params.L / K:g}",
            {**_diagnosis(params), "K": K},
        )
    return structure


@dataclass
class NashReport:
    max_consumption_gain: float
    max_production_gain: float
    worst_agent: float
    passed: bool
    n_agents: int
    tol: float
    seed: int
    max_relative_gain: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "max_consumption_gain": self.max_consumption_gain,
            "max_production_gain": self.max_production_gain,
            "worst_agent": self.worst_agent,
            "pass": self.passed,
            "n_agents": self.n_agents,
            "tol": self.tol,
            "seed": self.seed,
            "max_relative_gain": self.max_relative_gain,
        }


def sample_agents(n: int, L: float, seed: int) -> np.ndarray:
    """Scrambled Halton points on the ring; deterministic given the seed."""
    u = qmc.Halton(d=1, scramble=True, seed=seed).random(n)[:, 0]
    return -L + 2.0 * L * u


def deviation_values(structure: CommunityStructure, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-unit-rate consumption and production values of every agent in every community."""
    params, numerics = structure.params, structure.numerics
    cons = np.empty((len(y), structure.K))
    prod = np.empty((len(y), structure.K))
    for j, comm in enumerate(structure.communities):
        pm = comm.production
        cons[:, j] = consumption_utility(y, pm, params.f, 1.0, params.c)
        inside = np.atleast_1d(comm.arc.contains(y))
        vals = np.empty(len(y))
        if np.any(inside):
            y_off = signed_offset(y[inside], comm.mid, params.L)
            _, obj = optimal_offsets(y_off, comm.demand, params.g, numerics)
            vals[inside] = obj
        if np.any(~inside):
            _, obj = max_objective_anywhere(y[~inside], comm.demand, params.g, numerics.nash_search_grid, numerics)
            vals[~inside] = obj
        prod[:, j] = vals - comm.alpha_C * params.c
    return cons, prod


def verify_nash(
    structure: CommunityStructure, n_agents: int = 200, tol: float = 1e-4, seed: int = 0
) -> NashReport:
    """Best-response check for sampled agents.

    An agent's alternatives are every community in the structure plus
    abstaining (value 0); the gain is the best alternative minus the value of
    its home community, per unit of rate.
    """
    L = structure.params.L
    y = sample_agents(n_agents, L, seed)
    home = structure.home_index(y)
    cons, prod = deviation_values(structure, y)
    rows = np.arange(len(y))
    cons_home, prod_home = cons[rows, home], prod[rows, home]
    cons_gain = np.maximum(cons.max(axis=1), 0.0) - cons_home
    prod_gain = np.maximum(prod.max(axis=1), 0.0) - prod_home
    rel = np.maximum(cons_gain / (1.0 + np.abs(cons_home)), prod_gain / (1.0 + np.abs(prod_home)))
    worst = int(np.argmax(rel))
    return NashReport(
        max_consumption_gain=float(cons_gain.max()),
        max_production_gain=float(prod_gain.max()),
        worst_agent=float(y[worst]),
        passed=bool(np.all(rel <= tol)),
        n_agents=n_agents,
        tol=tol,
        seed=seed,
        max_relative_gain=float(rel.max()),
    )
