import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from community_forge import kernels
from community_forge.errors import BoundaryError, InvalidArgumentError, KernelValidationError
from community_forge.kernels import KernelSpec, validate_assumption1

ALL = [
    KernelSpec("gaussian", 1.0, 0.3),
    KernelSpec("raised_cosine", 0.8, 1.0),
    KernelSpec("quadratic_bump", 0.9, 0.25),
    KernelSpec("cosine_bump", 0.9, 0.5),
]


def test_values_at_known_points():
    L = 1.0
    assert kernels.kernel_eval(KernelSpec("gaussian", 1.0, 0.3), 0.3, L) == pytest.approx(np.exp(-0.5))
    assert kernels.kernel_eval(KernelSpec("raised_cosine", 1.0, 1.0), 1.0, L) == pytest.approx(0.0, abs=1e-16)
    assert kernels.kernel_eval(KernelSpec("quadratic_bump", 0.9, 0.25), 0.125, L) == pytest.approx(0.9 * 0.75)
    assert kernels.kernel_eval(KernelSpec("cosine_bump", 0.9, 0.5), 0.25, L) == pytest.approx(0.9 * np.cos(np.pi / 4))
    assert kernels.kernel_eval(KernelSpec("quadratic_bump", 0.9, 0.25), 0.6, L) == 0.0


@pytest.mark.parametrize("k", ALL, ids=lambda k: k.family)
def test_peak_equals_amplitude(k):
    assert kernels.kernel_eval(k, 0.0, 1.0) == pytest.approx(k.amplitude)


@pytest.mark.parametrize("k", ALL, ids=lambda k: k.family)
def test_first_derivative_matches_central_difference(k):
    d = np.linspace(0.01, k.support_radius(1.0) - 0.01, 50)
    h = 1e-6
    fd = (kernels.kernel_eval(k, d + h, 1.0) - kernels.kernel_eval(k, d - h, 1.0)) / (2 * h)
    assert np.allclose(kernels.kernel_deriv(k, d, 1.0), fd, atol=1e-7)


@pytest.mark.parametrize("k", ALL, ids=lambda k: k.family)
def test_second_derivative_matches_central_difference(k):
    d = np.linspace(0.01, k.support_radius(1.0) - 0.01, 50)
    h = 1e-5
    fd = (kernels.kernel_deriv(k, d + h, 1.0) - kernels.kernel_deriv(k, d - h, 1.0)) / (2 * h)
    assert np.allclose(kernels.kernel_second_deriv(k, d, 1.0), fd, atol=1e-6)


def test_derivative_at_bump_edge_is_an_error():
    with pytest.raises(BoundaryError):
        kernels.kernel_deriv(KernelSpec("quadratic_bump", 0.9, 0.25), 0.25, 1.0)
    with pytest.raises(BoundaryError):
        kernels.kernel_second_deriv(KernelSpec("cosine_bump", 0.9, 0.25), np.array([0.1, 0.25]), 1.0)


def test_distance_outside_domain_rejected():
    with pytest.raises(InvalidArgumentError):
        kernels.kernel_eval(ALL[0], -0.1, 1.0)
    with pytest.raises(InvalidArgumentError):
        kernels.kernel_eval(ALL[0], 1.5, 1.0)


@pytest.mark.parametrize(
    "family, amp, width",
    [("triangle", 1.0, 0.3), ("gaussian", 0.0, 0.3), ("gaussian", 1.2, 0.3), ("gaussian", 1.0, 0.0)],
)
def test_spec_validation(family, amp, width):
    with pytest.raises(InvalidArgumentError):
        KernelSpec(family, amp, width)


def test_spec_roundtrip():
    k = KernelSpec("cosine_bump", 0.9, 0.5)
    assert KernelSpec.from_dict(k.to_dict()) == k


@pytest.mark.parametrize("k", [KernelSpec("gaussian", 1.0, 0.1), KernelSpec("gaussian", 1.0, 1.0), KernelSpec("raised_cosine", 1.0, 1.0)])
def test_admissible_interest_kernels(k):
    assert validate_assumption1(k, "interest_f", 1.0).passed


@pytest.mark.parametrize("k", [KernelSpec("quadratic_bump", 0.9, 0.25), KernelSpec("cosine_bump", 0.9, 0.5)])
def test_admissible_ability_kernels(k):
    assert validate_assumption1(k, "ability_g", 1.0).passed


def test_bump_is_not_an_interest_kernel():
    rep = validate_assumption1(KernelSpec("quadratic_bump", 0.9, 0.25), "interest_f", 1.0)
    assert not rep.passed
    assert "family_full_support" in rep.failures()


def test_gaussian_ability_fails_concavity_near_width():
    rep = validate_assumption1(KernelSpec("gaussian", 0.9, 0.3), "ability_g", 1.0)
    assert rep.failures() == ["concave_on_support"]
    # gaussian curvature changes sign at d = w
    assert rep.details["concave_first_failure"] == pytest.approx(0.3, abs=2.0 / 1024)


def test_ability_needs_amplitude_below_one():
    rep = validate_assumption1(KernelSpec("quadratic_bump", 1.0, 0.25), "ability_g", 1.0)
    assert rep.failures() == ["amplitude_below_one"]


@pytest.mark.parametrize("k", ALL, ids=lambda k: k.family)
def test_every_family_is_a_filter(k):
    assert validate_assumption1(k, "filter_h", 1.0).passed


def test_require_role_raises():
    with pytest.raises(KernelValidationError):
        kernels.require_role(KernelSpec("gaussian", 0.9, 0.3), "ability_g", 1.0)
    with pytest.raises(InvalidArgumentError):
        validate_assumption1(ALL[0], "mystery", 1.0)


@given(st.sampled_from(ALL), st.floats(0, 1), st.floats(0, 1))
def test_nonincreasing_in_distance(k, a, b):
    lo, hi = min(a, b), max(a, b)
    assert kernels.kernel_eval(k, hi, 1.0) <= kernels.kernel_eval(k, lo, 1.0)
