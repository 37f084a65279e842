import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frontlab import reaction as rx
from frontlab.reaction import (ChiParams, ReactionError, chi, chi_dz, cubic_balanced, family_1d,
                               family_multidir, integral_quad, integral_sign, kink, kink_inverse,
                               membership_SL, rescale, stack)

P = ChiParams()


# ---------------------------------------------------------------- closed forms

@pytest.mark.parametrize("u, expected", [(0.0, 0.0), (0.5, 0.0), (0.25, -3 / 64), (1.0, 0.0)])
def test_cubic_values(u, expected):
    assert cubic_balanced(u) == pytest.approx(expected, abs=1e-15)


def test_cubic_derivative_matches_finite_difference():
    u = np.linspace(-0.2, 1.2, 57)
    h = 1e-6
    fd = (cubic_balanced(u + h) - cubic_balanced(u - h)) / (2 * h)
    assert np.allclose(rx.cubic_balanced_du(u), fd, atol=1e-9)


def test_kink_normalisation_and_limits():
    assert kink(0.0) == 0.5
    assert kink(-60.0) == pytest.approx(1.0, abs=1e-15)
    assert kink(60.0) == pytest.approx(0.0, abs=1e-15)
    x = np.linspace(-30, 30, 1001)
    assert np.all(np.diff(kink(x)) < 0)


def test_kink_ode_residual_with_sixth_order_differences():
    # independent oracle: sixth-order central second difference of the closed form
    x = np.linspace(-20, 20, 801)
    h = 1e-2
    c = [1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90]
    d2 = sum(ck * kink(x + (k - 3) * h) for k, ck in enumerate(c)) / h ** 2
    assert np.max(np.abs(d2 + cubic_balanced(kink(x)))) < 1e-10
    assert np.max(np.abs(rx.kink_second(x) + cubic_balanced(kink(x)))) < 1e-15


def test_kink_inverse():
    assert kink_inverse(0.25) == pytest.approx(np.sqrt(2) * np.log(3), rel=1e-14)
    assert kink_inverse(0.25) == pytest.approx(1.5537, abs=1e-4)
    u = np.concatenate([np.geomspace(1e-6 + 1e-12, 0.5, 200), 1 - np.geomspace(1e-6 + 1e-12, 0.5, 200)])
    assert np.max(np.abs(kink(kink_inverse(u)) - u)) < 1e-12
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ReactionError):
            kink_inverse(bad)


def test_delta0_legality():
    d = rx.DELTA0
    assert rx.DELTA0_MAX == pytest.approx((3 - np.sqrt(6)) / 6)
    band = np.concatenate([np.linspace(-d, d, 201), np.linspace(1 - d, 1 + d, 201)])
    assert np.max(rx.cubic_balanced_du(band)) <= -0.25
    # just outside the legal bound the constraint fails
    assert rx.cubic_balanced_du(rx.DELTA0_MAX + 1e-3) > -0.25


# ---------------------------------------------------------------- bump

def test_chi_examples():
    z = np.linspace(-3, 3, 101)
    assert np.all(chi(z, rx.DELTA0 / 2) == 0)
    assert chi(kink_inverse(0.5), 0.5) == pytest.approx(0.0, abs=1e-30)
    assert chi(kink_inverse(0.5) + 0.5, 0.5) == pytest.approx(1.0, abs=1e-15)


def test_chi_params_validation():
    with pytest.raises(ReactionError):
        ChiParams(period=0.0)
    with pytest.raises(ReactionError):
        ChiParams(delta0=0.25)
    with pytest.raises(ReactionError):
        ChiParams(profile="gauss")


@given(st.floats(-50, 50), st.floats(0.001, 0.999), st.integers(-5, 5))
def test_chi_range_and_periodicity(z, u, k):
    v = chi(z, u)
    assert 0.0 <= v <= 1.0
    assert chi(z + k, u) == pytest.approx(v, abs=1e-10)


def test_chi_positive_on_required_set():
    d = rx.DELTA0
    u = np.linspace(2 * d, 1 - 2 * d, 50)
    th = np.linspace(0.01, 0.99, 50)
    U, T = np.meshgrid(u, th)
    assert np.all(chi(kink_inverse(U) + T, U) > 0)


def test_chi_c1_at_boundary_of_E():
    # d/dz chi vanishes on the kink graph (theta = 0)
    u = np.linspace(0.15, 0.85, 15)
    z0 = kink_inverse(u)
    for h in (1e-3, 5e-4):
        fd = (chi(z0 + h, u) - chi(z0 - h, u)) / (2 * h)
        assert np.max(np.abs(fd)) < 10 * h
    assert np.max(np.abs(chi_dz(z0, u))) < 1e-12


def test_chi_derivatives_match_finite_differences():
    rng = np.random.default_rng(1)
    z = rng.uniform(-2, 2, 400)
    u = rng.uniform(0.0, 1.0, 400)
    h = 1e-6
    fd_u = (chi(z, u + h) - chi(z, u - h)) / (2 * h)
    fd_z = (chi(z + h, u) - chi(z - h, u)) / (2 * h)
    assert np.allclose(rx.chi_du(z, u), fd_u, atol=1e-5)
    assert np.allclose(chi_dz(z, u), fd_z, atol=1e-5)


# ---------------------------------------------------------------- 1-D family

def test_family_rejects_bad_parameters():
    with pytest.raises(ReactionError):
        family_1d(0.0, 0.0)
    with pytest.raises(ReactionError):
        family_1d(1.5)


def test_family_homogeneous_near_levels():
    r = family_1d(0.0)
    x = np.linspace(-3, 3, 61)
    for u in np.concatenate([np.linspace(0, rx.DELTA0, 6), np.linspace(1 - rx.DELTA0, 1, 6)]):
        assert np.allclose(r(x, u), cubic_balanced(u), atol=1e-16)


@pytest.mark.parametrize("tau", [0.0, 0.5, 1.0])
def test_family_levels_and_gamma(tau):
    r = family_1d(tau)
    x = np.linspace(0, 1, 50)
    for p in r.levels:
        assert np.all(r(x, p) == 0)
        assert np.allclose(r.du(x, np.full_like(x, p)), r.gamma)
    assert r.gamma == -0.5 and r.period == (1.0,)


@settings(max_examples=60)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(-10, 10), st.floats(0, 1), st.integers(-4, 4))
def test_family_monotone_in_tau_and_periodic(t1, t2, x, u, k):
    lo, hi = sorted((t1, t2))
    assert family_1d(hi)(x, u) - family_1d(lo)(x, u) >= 0
    r = family_1d(t1)
    assert abs(r(x + k, u) - r(x, u)) < 1e-12


def test_family_derivative_matches_finite_difference():
    r = family_1d(0.3, 0.2)
    rng = np.random.default_rng(2)
    x, u = rng.uniform(-1, 1, 300), rng.uniform(0, 1, 300)
    h = 1e-6
    assert np.allclose(r.du(x, u), (r(x, u + h) - r(x, u - h)) / (2 * h), atol=1e-6)


def test_kink_is_exact_stationary_state_at_tau_zero():
    r = family_1d(0.0)
    x = np.linspace(-8, 8, 2001)
    assert np.max(np.abs(rx.kink_second(x) + r(x, kink(x)))) < 1e-15


# ---------------------------------------------------------------- integrals

def test_integral_sign_examples():
    assert integral_sign(rx.cubic())[0] == "zero"
    assert integral_sign(family_1d(0.0))[0] == "positive"
    assert integral_sign(family_1d(0.5))[0] == "positive"
    assert integral_sign(rx.flip(family_1d(0.5)))[0] == "negative"


@pytest.mark.parametrize("tau", [0.0, 0.5])
def test_integral_against_adaptive_quadrature(tau):
    r = family_1d(tau)
    val = integral_sign(r)[1]
    assert val == pytest.approx(integral_quad(r), rel=1e-6)
    # the homogeneous part integrates to zero, so the value is sigma (1 + tau) * int chi
    assert val > 0


# ---------------------------------------------------------------- lattice directions

def test_membership_examples():
    assert membership_SL((1.0, 0.0), (1.0, 1.0)) == pytest.approx(1.0)
    s = 1 / np.sqrt(2)
    assert membership_SL((s, s), (1.0, 1.0)) == pytest.approx(s)
    assert membership_SL((np.cos(1.0), np.sin(1.0)), (1.0, 1.0)) is None
    assert membership_SL((0.6, 0.8), (1.0, 1.0)) == pytest.approx(0.2)
    with pytest.raises(ReactionError):
        membership_SL((1.0, 1.0), (1.0, 1.0))


def test_transverse_period():
    assert rx.transverse_period((1.0, 0.0), (1.0, 1.0)) == pytest.approx(1.0)
    assert rx.transverse_period((0.6, 0.8), (1.0, 1.0)) == pytest.approx(5.0)


# ---------------------------------------------------------------- multi-direction family

AXES = [(1.0, 0.0), (0.0, 1.0)]


def test_multidir_homogeneous_at_zero_tau():
    r = family_multidir((0.0, 0.0), 0.1, AXES)
    rng = np.random.default_rng(3)
    x = rng.uniform(-3, 3, (200, 2))
    u = rng.uniform(0, 1, 200)
    assert np.array_equal(r(x, u), cubic_balanced(u))


def test_multidir_single_term():
    r = family_multidir((1.0, 0.0), 0.1, AXES)
    rng = np.random.default_rng(4)
    x = rng.uniform(-3, 3, (200, 2))
    u = rng.uniform(0, 1, 200)
    assert np.allclose(r(x, u) - cubic_balanced(u), 0.1 * chi(x[:, 1], u), atol=1e-15)


def test_multidir_periodicity_and_derivative():
    s = 1 / np.sqrt(2)
    r = family_multidir((0.7, 0.4, 0.2), 0.1, [(1.0, 0.0), (0.0, 1.0), (0.6, 0.8)])
    rng = np.random.default_rng(5)
    x = rng.uniform(-3, 3, (300, 2))
    u = rng.uniform(0, 1, 300)
    for shift in ((1.0, 0.0), (0.0, 1.0)):
        assert np.max(np.abs(r(x + np.array(shift), u) - r(x, u))) < 1e-12
    h = 1e-6
    assert np.allclose(r.du(x, u), (r(x, u + h) - r(x, u - h)) / (2 * h), atol=1e-6)
    assert r.period == (1.0, 1.0)
    del s


def test_multidir_rejects_irrational_direction():
    with pytest.raises(ReactionError):
        family_multidir((1.0, 1.0), 0.1, [(1.0, 0.0), (np.cos(1.0), np.sin(1.0))])


@settings(max_examples=40)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_multidir_monotone_in_each_tau(a, b, u):
    x = np.array([[0.3, 0.7], [0.1, -2.2], [5.5, 0.25]])
    lo = family_multidir((min(a, b), 0.5), 0.1, AXES)
    hi = family_multidir((max(a, b), 0.5), 0.1, AXES)
    assert np.all(hi(x, u) - lo(x, u) >= 0)


# ---------------------------------------------------------------- stacking and rescaling

def test_stack_single_is_identity():
    f = family_1d(0.2)
    assert stack([f]) is f


def test_stack_continuity_and_slope_at_interior_levels():
    g = stack([family_1d(0.3), rx.reflect(family_1d(0.6)), family_1d(1.0)])
    assert g.levels == (0.0, 1.0, 2.0, 3.0)
    x = np.linspace(0, 1, 37)
    h = 1e-7
    for p in (1.0, 2.0):
        assert np.max(np.abs(g(x, p - 1e-12))) < 1e-12
        assert np.max(np.abs(g(x, p + 1e-12))) < 1e-12
        left = (g(x, p) - g(x, p - h)) / h
        right = (g(x, p + h) - g(x, p)) / h
        assert np.allclose(left, g.gamma, atol=1e-6)
        assert np.allclose(right, g.gamma, atol=1e-6)


def test_stack_maps_components_to_intervals():
    f1, f2 = family_1d(0.1), family_1d(0.9)
    g = stack([f1, f2])
    x = np.linspace(0, 1, 21)
    assert np.allclose(g(x, 1.3), f1(x, 0.3))   # top interval (1, 2] holds component 1
    assert np.allclose(g(x, 0.3), f2(x, 0.3))
    assert np.allclose(g(x, -0.2), -0.5 * -0.2)
    assert np.allclose(g(x, 2.1), -0.5 * 0.1)


def test_stack_rejects_mismatch():
    with pytest.raises(ReactionError):
        stack([family_1d(0.2), rescale(family_1d(0.2), 2.0)])
    with pytest.raises(ReactionError):
        stack([])


def test_rescale():
    f = family_1d(0.4)
    assert rescale(f, 1.0) is f
    g = rescale(f, 2.0)
    assert g.period == (0.5,)
    assert g.gamma == pytest.approx(4 * f.gamma)
    x = np.linspace(-1, 1, 41)
    assert np.allclose(g(x, 0.4), 4 * f(2 * x, 0.4))
    with pytest.raises(ReactionError):
        rescale(f, 0.0)


def test_reflect_and_flip():
    f = family_1d(0.2)
    x = np.linspace(-1, 1, 41)
    assert np.allclose(rx.reflect(f)(x, 0.4), f(-x, 0.4))
    assert np.allclose(rx.flip(f)(x, 0.4), -f(x, 0.6))
