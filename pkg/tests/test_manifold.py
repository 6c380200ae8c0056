import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covhyp import manifold as mf
from covhyp.errors import DivisionByZero, DomainError, InvalidParameter, UnsupportedRepresentation
from covhyp.kinematics import RepSpec


def test_exponential_values():
    d = mf.exponential_entropy(2.0, 0.5)
    assert d.sigma(0.5) == pytest.approx(2.0 * np.e)
    assert d.sigma_prime(0.5) == pytest.approx(4.0 * np.e)
    assert d.sigma_second(0.5) == pytest.approx(8.0 * np.e)
    assert d.ratio(3.0) == pytest.approx(0.5)


def test_homographic_values():
    d = mf.homographic_entropy(1.0, 1.0)
    assert d.sigma(1.0) == -0.5
    assert d.sigma_prime(1.0) == -0.25
    assert d.sigma_second(1.0) == 0.25
    assert d.check_convex(0.01, 10.0)


@pytest.mark.parametrize("make", [mf.exponential_entropy, mf.homographic_entropy])
@settings(max_examples=50, deadline=None)
@given(r=st.floats(0.05, 3.0))
def test_derivatives_match_finite_differences(make, r):
    d = make(1.3, 0.8)
    h = 1e-6
    assert (d.sigma(r + h) - d.sigma(r - h)) / (2 * h) == pytest.approx(d.sigma_prime(r), rel=1e-7)
    assert (d.sigma_prime(r + h) - d.sigma_prime(r - h)) / (2 * h) == pytest.approx(
        d.sigma_second(r), rel=1e-7)


@settings(max_examples=50, deadline=None)
@given(r=st.floats(0.05, 3.0))
def test_zeta0_is_derivative_of_ratio(r):
    d = mf.homographic_entropy(1.0, 0.7)
    h = 1e-6
    fd = (d.ratio(r + h) - d.ratio(r - h)) / (2 * h)
    assert mf.zeta0(d, r) == pytest.approx(fd, rel=1e-7)


def test_zeta0_exponential_is_zero():
    assert mf.zeta0(mf.exponential_entropy(), 0.3) == pytest.approx(0.0, abs=1e-15)


def test_sigma_star_and_pressure_closed_forms():
    d = mf.exponential_entropy(1.0, 1.0)
    # sigma* = sigma (rho0 - rho*) / rho*, p0 = a c (rho0 - rho*) for eps~ = -1
    assert mf.sigma_star(d, 1.5) == pytest.approx(np.exp(1.5) * 0.5)
    assert mf.pressure(d, RepSpec(-1, 2.0), 3.0, 1.5) == pytest.approx(6.0 * 0.5)
    h = mf.homographic_entropy(1.0, 1.0)
    # p0 = a c rho0^2 / rho* for eps~ = +1
    assert mf.pressure(h, RepSpec(1, 2.0), 3.0, 0.4) == pytest.approx(6.0 * 0.16)


def test_pressure_defines_rest_constraint():
    d = mf.homographic_entropy(1.0, 1.0)
    r, c = RepSpec(1, 1.7), 0.9
    rho0 = np.linspace(0.01, 3, 50)
    p0 = mf.pressure(d, r, c, rho0)
    loop = c * mf.sigma_star(d, rho0) + d.sigma_prime(rho0) * (r.epsilon_tilde / r.a) * p0
    assert np.max(np.abs(loop)) < 1e-12


def test_errors():
    d = mf.homographic_entropy()
    with pytest.raises(DomainError):
        mf.sigma_star(d, -0.1)
    with pytest.raises(UnsupportedRepresentation):
        mf.pressure(d, RepSpec(0), 1.0, 0.3)
    with pytest.raises(InvalidParameter):
        mf.exponential_entropy(0.0, 1.0)
    flat = mf.EntropyDatum(lambda r: r * 0 + 1.0, lambda r: r * 0.0, lambda r: r * 0.0)
    with pytest.raises(DivisionByZero):
        mf.zeta0(flat, 1.0)


def test_thermo_point():
    tp = mf.thermo_point(mf.exponential_entropy(), RepSpec(-1), 1.0, 1.2)
    assert tp.p0 == pytest.approx(0.2)
    assert tp.zeta0 == pytest.approx(0.0, abs=1e-15)
