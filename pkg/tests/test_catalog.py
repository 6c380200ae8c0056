import numpy as np
import pytest

from covhyp import catalog
from covhyp.errors import InvalidParameter

PARAMS = dict(rho_star=1.7, sigma_bar=0.6, a=1.3, c=2.1)


def states(sys_, rng, n=1000):
    return sys_.lift(*sys_.sample_fibers(rng, n))


def test_names_and_descriptors():
    assert catalog.NAMES == ("circular-elliptic", "lorentz-hyperbolic", "galileo-hyperbolic",
                             "galileo-elliptic")
    flags = {(catalog.describe(n).epsilon, catalog.describe(n).epsilon_tilde) for n in catalog.NAMES}
    assert flags == {(-1, -1), (1, 1), (0, 1), (0, -1)}
    with pytest.raises(InvalidParameter):
        catalog.build("bargmann")
    with pytest.raises(InvalidParameter):
        catalog.describe("bargmann")


@pytest.mark.parametrize("name", catalog.NAMES)
@pytest.mark.parametrize("bad", ["rho_star", "sigma_bar", "a", "c"])
def test_invalid_parameters(name, bad):
    with pytest.raises(InvalidParameter):
        catalog.build(name, **{**PARAMS, bad: -1.0})


def test_galileo_eps_tilde_checked():
    with pytest.raises(InvalidParameter):
        catalog.galileo(eps_tilde=0)


def test_circular_closed_forms(rng):
    s = catalog.build("circular-elliptic", **PARAMS)
    rho, J = states(s, rng)
    f1, f2 = s.flux((rho, J))
    _, rho0 = s.fiber((rho, J))
    p0 = PARAMS["a"] * PARAMS["c"] * (rho0 - PARAMS["rho_star"])
    np.testing.assert_allclose(f1, PARAMS["c"] / PARAMS["a"] * J, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(f2, s.velocity((rho, J)) * J + p0, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(s.pressure((rho, J)), p0, rtol=1e-10, atol=1e-12)


def test_circular_entropy_at_rest():
    s = catalog.build("circular-elliptic", **PARAMS)
    assert s.entropy((0.9, 0.0)) == pytest.approx(PARAMS["sigma_bar"] * np.exp(0.9 / PARAMS["rho_star"]))


def test_lorentz_closed_forms(rng):
    s = catalog.build("lorentz-hyperbolic", **PARAMS)
    rho, J = states(s, rng)
    f1, f2 = s.flux((rho, J))
    u = s.velocity((rho, J))
    _, rho0 = s.fiber((rho, J))
    rs = PARAMS["rho_star"]
    np.testing.assert_allclose(f1, (rho + rho0**2 / rs) * u, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(f2, u * J + PARAMS["a"] * PARAMS["c"] * rho0**2 / rs, rtol=1e-10, atol=1e-12)
    # the linear variant of the first flux is not what the construction produces
    assert np.max(np.abs(f1 - (rho + rho0 / rs) * u)) > 1e-3


def test_lorentz_bracket_ends(rng):
    s = catalog.build("lorentz-hyperbolic", **PARAMS)
    J = rng.uniform(-0.4, 0.4, 200)
    rs, a = PARAMS["rho_star"], PARAMS["a"]
    np.testing.assert_allclose(s._rest_density(np.float64(0.0), J), np.abs(J) / a, rtol=1e-15)
    assert np.all(s._rest_density(np.float64(rs / 2), J) >= rs / 2)


def test_galileo_velocity_is_linear(rng):
    for name in ("galileo-hyperbolic", "galileo-elliptic"):
        s = catalog.build(name, **PARAMS)
        rho, J = states(s, rng, 300)
        theta, _ = s.fiber((rho, J))
        np.testing.assert_allclose(s.velocity((rho, J)), PARAMS["c"] * theta, rtol=1e-15)


def test_galileo_examples():
    gh = catalog.galileo(eps_tilde=1)
    ge = catalog.galileo(eps_tilde=-1)
    assert gh.project_state((1.0, 0.0)) == (0.0, 1.0)
    assert gh.project_state((2.0, 1.0)).theta == pytest.approx(np.arctanh(0.5))
    assert ge.project_state((1.0, 1.0)).theta == pytest.approx(np.pi / 4)


def test_validity_margins():
    c = catalog.build("circular-elliptic")
    assert not c.admissible((1.0, 0.5))
    assert c.admissible((1.0, 0.5 - 1e-6))
    l = catalog.build("lorentz-hyperbolic")
    assert not l.admissible((0.5, 0.0))
    assert not l.admissible((0.2, 0.2))
    assert l.admissible((0.2, 0.19))
    g = catalog.build("galileo-elliptic")
    assert not g.admissible((0.0, 0.3))
    assert g.admissible((1e-3, 5.0))


def test_sampling_stays_inside(system, rng):
    for shrink in (0.05, 0.0):
        fp = system.sample_fibers(rng, 2000, shrink=shrink) if shrink else system.sample_fibers(rng, 2000)
        assert np.all(system.admissible(system.lift(*fp)))
