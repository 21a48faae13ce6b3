import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import demand_gaussian_erf, demand_midpoint

from community_forge.demand import (
    demand_at,
    demand_gaussian_closed_form,
    demand_profile,
    demand_properties_check,
    demand_slope,
    demand_values,
)
from community_forge.errors import InvalidArgumentError, KernelValidationError
from community_forge.geometry import Arc
from community_forge.kernels import KernelSpec
from community_forge.presets import arc_matrix

F = KernelSpec("gaussian", 1.0, 0.3)
ARC = Arc(-0.5, 1.0, 1.0)

# midpoint rule with 1e6 cells at x = 0, 0.3 on Arc(-0.5, 1.0), gaussian w=0.3
MIDPOINT_GOLDEN = (0.68011289, 0.5592366)


def test_demand_matches_midpoint_oracle():
    got = demand_at(ARC, 1.0, F, np.array([0.0, 0.3]))
    assert got == pytest.approx(MIDPOINT_GOLDEN, rel=1e-7)
    live = demand_midpoint(-0.5, 1.0, 1.0, 1.0, ("gaussian", 1.0, 0.3), [0.0, 0.3, -0.9, 0.77])
    assert demand_at(ARC, 1.0, F, np.array([0.0, 0.3, -0.9, 0.77])) == pytest.approx(live, rel=1e-9)


def test_quadrature_agrees_with_erf_routes():
    x = np.linspace(-0.5, 0.5, 41)
    quad = demand_at(ARC, 1.0, F, x)
    assert np.max(np.abs(quad - demand_gaussian_erf(-0.5, 1.0, 1.0, 1.0, 1.0, 0.3, x))) < 1e-13
    # library closed form also handles the wrapped images
    xx = np.linspace(-1.0, 0.99, 101)
    assert np.max(np.abs(demand_at(ARC, 1.0, F, xx) - demand_gaussian_closed_form(ARC, 1.0, F, xx))) < 1e-13


@pytest.mark.parametrize("f", [KernelSpec("raised_cosine", 1.0, 1.0), KernelSpec("gaussian", 1.0, 1.0)])
def test_other_kernels_against_midpoint(f):
    arc = Arc(0.7, 0.6, 1.0)  # crosses the seam
    x = np.array([0.7, 1.0 - 1e-9, -0.9, 0.0, 0.5])
    oracle = demand_midpoint(0.7, 0.6, 1.0, 2.0, (f.family, f.amplitude, f.width), x)
    assert demand_at(arc, 2.0, f, x) == pytest.approx(oracle, rel=1e-8)


def test_linear_in_rate():
    x = np.linspace(-1, 0.9, 9)
    assert demand_at(ARC, 3.0, F, x) == pytest.approx(3.0 * demand_at(ARC, 1.0, F, x), rel=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.floats(-1, 1), st.floats(0.05, 1.9), st.floats(-1, 1))
def test_rotation_invariance(start, length, shift):
    a = Arc(start, length, 1.0)
    x = np.linspace(-1, 0.99, 7)
    base = demand_values(a, 1.0, F, x)
    moved = demand_values(a.rotated(shift), 1.0, F, x + shift)
    assert np.max(np.abs(base - moved)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(-1, 1), st.floats(0.05, 1.9), st.floats(0, 1))
def test_symmetric_about_mid(start, length, delta):
    a = Arc(start, length, 1.0)
    left, right = demand_values(a, 1.0, F, np.array([a.mid - delta, a.mid + delta]))
    assert left == pytest.approx(right, rel=1e-11, abs=1e-14)


def test_slope_matches_finite_difference():
    x = np.linspace(-0.45, 0.45, 25)
    h = 1e-6
    fd = (demand_at(ARC, 1.0, F, x + h) - demand_at(ARC, 1.0, F, x - h)) / (2 * h)
    assert np.allclose(demand_slope(ARC, 1.0, F, x), fd, atol=1e-8)


def test_full_ring_demand_is_constant():
    vals = demand_at(Arc(-1.0, 2.0, 1.0), 1.0, F, np.linspace(-1, 0.99, 17))
    assert np.ptp(vals) < 1e-13


def test_rejects_bad_inputs():
    with pytest.raises(KernelValidationError):
        demand_at(ARC, 1.0, KernelSpec("quadratic_bump", 0.9, 0.25), 0.0)
    with pytest.raises(InvalidArgumentError):
        demand_profile(ARC, 0.0, F)
    with pytest.raises(InvalidArgumentError):
        demand_profile(ARC, 1.0, F, grid_n=32)


def test_profile_csv(tmp_path):
    prof = demand_profile(ARC, 1.0, F, grid_n=64)
    prof.to_csv(tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "x,P(x)"
    assert len(lines) == 65


@pytest.mark.parametrize("f, ell", arc_matrix(), ids=lambda v: getattr(v, "family", v))
def test_properties_across_matrix(f, ell):
    rep = demand_properties_check(demand_profile(Arc(-ell / 2, ell, 1.0), 1.0, f))
    assert rep.passed, rep.failures()
    assert rep.metrics["symmetry_residual_rel"] < 1e-6
