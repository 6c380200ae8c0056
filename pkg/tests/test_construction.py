"""Fiber maps, entropy, entropy variables, fluxes and diagnostics.

Frozen reference numbers come from tests/oracles/derive_values.py (50-digit
mpmath evaluation of the closed forms, independent of the package).
"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covhyp import catalog, construction as cs, kinematics as kin, manifold as mf
from covhyp.errors import NoConvergence, OutsideValidity, UnsupportedCombination
from covhyp.verify import entropy_hessian, lift_jacobian_fd

LORENTZ_LIFT = (0.4227002641147673466, 0.11501065122478834239)
LORENTZ_04_02 = {
    "theta": 0.42111989507361961433,
    "rho0": 0.32042530724017859436,
    "u": 0.39787346379910702818,
    "eta": -0.26450577348296249696,
    "eta_star": 0.064187154904069830579,
    "alpha": -0.62516478584115538311,
    "beta": 0.24873647878784743433,
    "p0": 0.10267237751996284873,
    "f1": 0.2,
    "f2": 0.18224707027978425436,
    "g1": 0.04085061448035718873,
    "g2": 0.10267237751996284873,
}
CIRCULAR_G = (-0.1154700538379251529, 0.2)


@pytest.fixture
def circ():
    return catalog.build("circular-elliptic")


@pytest.fixture
def lor():
    return catalog.build("lorentz-hyperbolic")


# -- lift / project -----------------------------------------------------------


def test_lift_at_zero_is_rest_state(system):
    assert system.lift_state((0.0, 0.7)) == (0.7, 0.0)


def test_circular_lift_closed_form(circ):
    theta = np.linspace(-0.7, 0.7, 11)
    _, J = circ.lift(theta, 1.3)
    np.testing.assert_allclose(J, np.sin(theta) * np.cos(theta), rtol=1e-14, atol=1e-16)


def test_lorentz_lift_oracle(lor):
    rho, J = lor.lift_state((0.2, 0.4))
    assert rho == pytest.approx(LORENTZ_LIFT[0], rel=1e-14)
    assert J == pytest.approx(LORENTZ_LIFT[1], rel=1e-14)


def test_project_rest_state(system):
    assert system.project_state((0.3, 0.0)) == (0.0, 0.3)


def test_circular_projection_at_psi_one():
    # |Psi| = 1 is the boundary; the closed form still gives theta = pi/4
    circ = catalog.build("circular-elliptic")
    theta, rho0 = circ.projector(np.float64(0.7), np.float64(0.5))
    assert theta == pytest.approx(np.pi / 4, rel=1e-15)
    assert rho0 == pytest.approx(1.2, rel=1e-15)
    with pytest.raises(OutsideValidity):
        circ.project_state((0.7, 0.5))


def test_circular_projection_matches_sqrt_form(circ, rng):
    rho, J = rng.uniform(-1, 3, 200), rng.uniform(-0.49, 0.49, 200)
    _, rho0 = circ.fiber((rho, J))
    psi = 2 * J
    np.testing.assert_allclose(rho0, rho + 0.5 * (1 - np.sqrt(1 - psi**2)), rtol=1e-13, atol=1e-15)


def test_lorentz_projection_oracle(lor):
    theta, rho0 = lor.project_state((0.4, 0.2))
    assert rho0 == pytest.approx(LORENTZ_04_02["rho0"], rel=1e-13)
    assert theta == pytest.approx(LORENTZ_04_02["theta"], rel=1e-13)


def test_round_trip_1000(system, rng):
    fp = system.sample_fibers(rng, 1000)
    rho, J = system.lift(*fp)
    rho2, J2 = system.lift(*system.fiber((rho, J)))
    err = np.hypot(rho2 - rho, J2 - J) / np.maximum(1, np.hypot(rho, J))
    assert err.max() < 1e-10


@settings(max_examples=60, deadline=None)
@given(name=st.sampled_from(catalog.NAMES), u=st.floats(0.0, 1.0), v=st.floats(-1.0, 1.0))
def test_round_trip_property(name, u, v):
    sys_ = catalog.build(name)
    lo, hi = sys_._rho0_interval(0.05)
    rho0 = lo + (hi - lo) * u
    theta = float(sys_.fiber_box(rho0)) * v
    w = sys_.lift_state((theta, rho0))
    assert sys_.lift_state(sys_.project_state(w)) == pytest.approx(w, rel=1e-10, abs=1e-12)


def test_galileo_projection_closed_forms():
    gh, ge = catalog.build("galileo-hyperbolic"), catalog.build("galileo-elliptic")
    assert gh.project_state((2.0, 1.0)).theta == pytest.approx(np.arctanh(0.5), rel=1e-15)
    theta, _ = ge.project_state((1.0, 1.0))
    assert theta == pytest.approx(np.pi / 4, rel=1e-15)
    assert ge.velocity((1.0, 1.0)) == pytest.approx(np.pi / 4, rel=1e-15)
    with pytest.raises(OutsideValidity):
        gh.project_state((1.0, 1.0))


def test_unmatched_without_closed_form_is_unsupported():
    sys_ = cs.CovariantSystem(kin.GroupSpec(1), kin.RepSpec(-1), mf.exponential_entropy(),
                              projection="root-solve")
    rho, J = sys_.lift(0.1, 0.5)  # the general lift still works
    assert np.isfinite(rho) and np.isfinite(J)
    with pytest.raises(UnsupportedCombination):
        sys_.project_state((float(rho), float(J)))


def test_bisection_residual_and_cap():
    root = cs.bisect_increasing(lambda x: x**3, 0.125, 0.0, 1.0)
    assert abs(root**3 - 0.125) <= 1e-13
    with pytest.raises(NoConvergence):
        cs.bisect_increasing(lambda x: np.floor(x), 0.5, 0.0, 2.0)


def test_lorentz_projection_residual(lor, rng):
    fp = lor.sample_fibers(rng, 1000)
    rho, J = lor.lift(*fp)
    _, rho0 = lor.fiber((rho, J))
    assert np.max(np.abs(lor.rest_density_residual(rho0, rho, J)) / np.maximum(1, rho)) <= 1e-13


def test_lorentz_rest_density_bracket(lor, rng):
    J = rng.uniform(-0.24, 0.24, 500)
    assert np.max(np.abs(lor._rest_density(np.float64(0.0), J) - np.abs(J))) < 1e-16
    assert np.all(lor._rest_density(np.float64(0.5), J) >= 0.5)


def test_lorentz_bounds(lor):
    with pytest.raises(OutsideValidity):
        lor.project_state((0.6, 0.0))
    with pytest.raises(OutsideValidity):
        lor.project_state((0.3, 0.31))


# -- entropy and derived quantities ----------------------------------------------


def test_lorentz_fields_oracle(lor):
    v = lor.evaluate((np.float64(0.4), np.float64(0.2)))
    for key, ref in LORENTZ_04_02.items():
        assert float(v[key]) == pytest.approx(ref, rel=1e-12, abs=1e-15), key


def test_entropy_at_rest(system):
    assert system.entropy((0.3, 0.0)) == pytest.approx(float(system.datum.sigma(0.3)), rel=1e-15)
    assert system.velocity((0.3, 0.0)) == 0.0
    assert system.dual_entropy((0.3, 0.0)) == pytest.approx(mf.sigma_star(system.datum, 0.3), rel=1e-15)
    assert system.flux((0.3, 0.0)) == pytest.approx((0.0, system.pressure((0.3, 0.0))), abs=1e-15)
    alpha, beta = system.entropy_variables((0.3, 0.0))
    assert alpha == pytest.approx(float(system.datum.sigma_prime(0.3)))
    assert beta == 0.0


def test_circular_entropy_closed_form(circ, rng):
    rho, J = rng.uniform(0, 2, 300), rng.uniform(-0.49, 0.49, 300)
    r = np.sqrt(1 - (2 * J) ** 2)
    ref = np.sqrt(0.5 * (1 + r)) * np.exp(rho + 0.5 * (1 - r))
    np.testing.assert_allclose(circ.entropy((rho, J)), ref, rtol=1e-13)
    u = np.sign(J) * np.sqrt((1 - r) / (1 + r))
    # the reference loses digits in 1 - r at small |J|, hence the looser bound
    np.testing.assert_allclose(circ.velocity((rho, J)), u, rtol=1e-10, atol=1e-15)


def test_lorentz_entropy_closed_form(lor, rng):
    fp = lor.sample_fibers(rng, 300)
    rho, J = lor.lift(*fp)
    _, rho0 = lor.fiber((rho, J))
    phi = 2 * J / (rho0 * (rho0 + 1))
    ref = np.sqrt(0.5 * (1 + np.sqrt(1 + phi**2))) * (-rho0 / (rho0 + 1))
    np.testing.assert_allclose(lor.entropy((rho, J)), ref, rtol=1e-12)


def test_gradient_matches_finite_differences(system, rng):
    fp = system.sample_fibers(rng, 500)
    rho, J = system.lift(*fp)
    alpha, beta = system.entropy_variables((rho, J))
    h_r, h_j = 1e-6 * (1 + np.abs(rho)), 1e-6 * (1 + np.abs(J))
    g_r = (system.entropy((rho + h_r, J)) - system.entropy((rho - h_r, J))) / (2 * h_r)
    g_j = (system.entropy((rho, J + h_j)) - system.entropy((rho, J - h_j))) / (2 * h_j)
    assert np.max(np.hypot(alpha - g_r, beta - g_j) / np.hypot(alpha, beta)) < 1e-6


def test_entropy_variables_reconstruct_rest(system, rng):
    fp = system.sample_fibers(rng, 300)
    alpha, beta = system.entropy_variables(system.lift(*fp))
    phi = np.stack([alpha, beta], -1)
    back = np.einsum("ni,nij->nj", phi, kin.rep_matrix(system.rep, fp[0]))
    np.testing.assert_allclose(back[:, 0], system.datum.sigma_prime(fp[1]), rtol=1e-10)
    assert np.max(np.abs(back[:, 1])) < 1e-10


def test_legendre_identities(system, rng):
    fp = system.sample_fibers(rng, 500)
    rho, J = system.lift(*fp)
    alpha, beta = system.entropy_variables((rho, J))
    eta, eta_star = system.entropy((rho, J)), system.dual_entropy((rho, J))
    assert np.max(np.abs(eta_star - (alpha * rho + beta * J - eta)) / np.maximum(1, np.abs(eta_star))) < 1e-10
    C, _ = kin.trig(system.eps, fp[0])
    assert np.max(np.abs(eta_star - C * mf.sigma_star(system.datum, fp[1]))) < 1e-10


def test_circular_thermo_flux_oracle(circ):
    w = circ.lift_state((np.pi / 6, 1.2))
    g1, g2 = circ.thermo_flux(w)
    assert g1 == pytest.approx(CIRCULAR_G[0], rel=1e-13)
    assert g2 == pytest.approx(CIRCULAR_G[1], rel=1e-13)
    f = np.array(circ.flux(w))
    u = circ.velocity(w)
    np.testing.assert_allclose(f - u * np.array(w), [g1, g2], rtol=1e-12)


def test_orthogonality_same_frame(system, rng):
    # states sharing the frame theta but with different rest densities
    rho0_b = np.mean(system._rho0_interval(0.05))
    fp = system.sample_fibers(rng, 300)
    box = system.fiber_box(np.array([rho0_b]))[0]
    theta = np.clip(fp[0], -box, box)
    alpha, beta = system.entropy_variables(system.lift(theta, fp[1]))
    g1, g2 = system.thermo_flux(system.lift(theta, np.full_like(theta, rho0_b)))
    assert np.max(np.abs(alpha * g1 + beta * g2)) < 1e-10


def test_orthogonality_fails_across_frames(circ):
    # phi(W) . g(W~) vanishes only when W and W~ share the frame theta
    alpha, beta = circ.entropy_variables(circ.lift_state((0.3, 1.0)))
    g1, g2 = circ.thermo_flux(circ.lift_state((-0.2, 0.8)))
    assert abs(alpha * g1 + beta * g2) > 0.1


def test_flux_closed_forms_at_rest(system):
    assert system.flux((0.3, 0.0))[0] == 0.0


# -- Jacobian and Hessian -----------------------------------------------------


def test_delta_at_zero(system):
    if system.matched:
        q = float(system.datum.ratio(0.3))
        assert system.jacobian_delta((0.0, 0.3)) == pytest.approx(-system.a * q, rel=1e-15)
    else:
        # Galileo: d(rho, J)/d(theta, rho0) = [[0, 1], [a rho0, 0]] at theta = 0
        assert system.jacobian_delta((0.0, 0.3)) == pytest.approx(-system.a * 0.3, rel=1e-15)


def test_circular_delta_exponential(circ):
    assert circ.jacobian_delta((0.0, 0.5)) == pytest.approx(-1.0)
    theta = 0.3
    assert circ.jacobian_delta((theta, 0.5)) == pytest.approx(-np.cos(2 * theta), rel=1e-14)


def test_delta_matches_finite_differences(system, rng):
    fp = system.sample_fibers(rng, 500)
    delta = system.jacobian_delta(fp)
    assert np.max(np.abs(delta - lift_jacobian_fd(system, fp)) / np.abs(delta)) < 1e-5


def test_partials_determinant_matches_delta(system, rng):
    fp = system.sample_fibers(rng, 300)
    np.testing.assert_allclose(kin.det(system.partials(fp)), system.jacobian_delta(fp), rtol=1e-12)


def test_convexity_at_zero(system):
    d = system.datum
    s, sp, spp = (float(f(0.3)) for f in (d.sigma, d.sigma_prime, d.sigma_second))
    det_h, d2 = system.convexity_diagnostics((0.0, 0.3))
    assert d2 == pytest.approx(spp, rel=1e-14)
    if system.matched:
        assert det_h == pytest.approx(-(system.eps / system.a**2) * sp**2 * spp / s, rel=1e-14)


def test_hessian_matches_finite_differences(system, rng):
    fp = system.sample_fibers(rng, 500)
    rho, J = system.lift(*fp)
    det_h, d2 = system.convexity_diagnostics(fp)
    h_rr, h_rj, h_jj = entropy_hessian(system, (rho, J))
    assert np.max(np.abs(det_h - (h_rr * h_jj - h_rj**2)) / np.abs(det_h)) < 1e-4
    assert np.max(np.abs(d2 - h_rr) / np.abs(d2)) < 1e-4


def test_convexity_on_grid(system):
    det_h, d2 = system.convexity_diagnostics(system.fiber_grid(100))
    assert np.all(det_h > 0) and np.all(d2 > 0)


# -- compatibility, hyperbolicity, covariance ---------------------------------------


def test_compatibility_zero_direction(system):
    assert cs.compatibility_residual(system, (0.3, 0.0), (0.0, 0.0)) == 0.0


def test_compatibility_200_pairs(system, rng):
    fp = system.sample_fibers(rng, 200)
    w = system.lift(*fp)
    phase = rng.uniform(0, 2 * np.pi, 200)
    dw = (np.cos(phase), np.sin(phase))
    assert np.max(np.abs(cs.compatibility_residual(system, w, dw))) < 1e-5
    assert np.max(np.abs(cs.entropy_flux_residual(system, w, dw))) < 1e-5


def test_hyperbolicity_grid(system):
    fp = system.fiber_grid(100)
    m = cs.flux_jacobian(system, system.lift(*fp))
    lm, lp = cs.eigenvalues(m)
    assert np.all(lp > lm)


def test_eigenvalues_symmetric_at_rest(system):
    lm, lp = cs.eigenvalues(cs.flux_jacobian(system, (0.3, 0.0)))
    assert lm == pytest.approx(-lp, rel=1e-8)


def test_lorentz_subluminal(lor, rng):
    fp = lor.sample_fibers(rng, 500)
    lm, lp = cs.eigenvalues(cs.flux_jacobian(lor, lor.lift(*fp)))
    assert np.all(np.abs(lm) < lor.c) and np.all(np.abs(lp) < lor.c)


def test_eigenvalues_complex_detected():
    from covhyp.errors import ComplexEigenvalues
    with pytest.raises(ComplexEigenvalues):
        cs.eigenvalues(np.array([[0.0, 1.0], [-1.0, 0.0]]))


def test_covariance_identity_transform(system):
    assert cs.covariance_residual(system, (0.3, 0.0), 0.0) == (0.0, 0.0)


@pytest.mark.parametrize("name", ["lorentz-hyperbolic", "circular-elliptic"])
def test_covariance_in_domain(name, rng):
    sys_ = catalog.build(name)
    fp = sys_.sample_fibers(rng, 500)
    tg = rng.uniform(-0.5, 0.5, 500)
    keep = sys_.in_chart(fp[0] + tg, fp[1]) & sys_.admissible(
        cs.transport(sys_, sys_.lift(*fp), tg)[0])
    w = sys_.lift(fp[0][keep], fp[1][keep])
    r_state, r_ent = cs.covariance_residual(sys_, w, tg[keep])
    assert keep.sum() > 100
    assert np.max(r_state) < 1e-9 and np.max(r_ent) < 1e-9


def test_circular_transport_beyond_chart_is_outside_validity(circ):
    w = circ.lift_state((0.6, 1.0))
    with pytest.raises(OutsideValidity):
        cs.covariance_residual(circ, w, 0.3)


def test_transport_matches_group_shift(system, rng):
    fp = system.sample_fibers(rng, 50)
    fp = cs.FiberPoint(0.5 * fp[0], fp[1])
    w_new, _, _ = cs.transport(system, system.lift(*fp), 0.05)
    rho, J = system.lift(fp[0] + 0.05, fp[1])
    np.testing.assert_allclose(w_new.rho, rho, rtol=1e-12)
    np.testing.assert_allclose(w_new.J, J, rtol=1e-12, atol=1e-14)
