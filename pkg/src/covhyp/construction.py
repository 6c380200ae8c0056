"""Covariant 2x2 systems built from rest data and a group action.

A state ``W = (rho, J)`` is the group transport of a rest state
``W0 = (rho0, 0)`` by the parameter ``theta`` (its *fiber point*):

    (f(W), W) = G_theta (Y_theta g0, Y_theta W0),     g0 = (0, p0)
    (eta u, eta) = G_theta (0, sigma(rho0))

so that ``eta = C sigma(rho0)``, ``u = c S / C`` and the flux splits as
``f = u W + g`` with ``g = Y_theta g0 / C``.  All evaluation methods accept
scalars or numpy arrays of states; scalars come back as floats.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import kinematics as kin
from .errors import (
    ComplexEigenvalues,
    NoConvergence,
    OutsideValidity,
    SingularJacobian,
    UnsupportedCombination,
    UnsupportedRepresentation,
)
from .kinematics import GroupSpec, RepSpec
from .manifold import EntropyDatum

__all__ = [
    "State",
    "FiberPoint",
    "EntropyVariables",
    "CovariantSystem",
    "bisect_increasing",
    "flux_jacobian",
    "eigenvalues",
    "spectral_radius",
    "compatibility_residual",
    "entropy_flux_residual",
    "transport",
    "covariance_residual",
    "GRAD_STEP",
    "HESS_STEP",
]

GRAD_STEP = 1e-6
HESS_STEP = 1e-5
MAX_BISECTIONS = 200
PROJECTION_RTOL = 1e-13
SINGULAR_TOL = 1e-12


class State(NamedTuple):
    rho: object
    J: object


class FiberPoint(NamedTuple):
    theta: object
    rho0: object


class EntropyVariables(NamedTuple):
    alpha: object
    beta: object


def _out(x):
    return x if np.ndim(x) else float(x)


def bisect_increasing(F, target, lo, hi, max_iter=MAX_BISECTIONS, rtol=PROJECTION_RTOL):
    """Vectorised bisection for ``F(x) = target`` with ``F`` increasing on ``[lo, hi]``.

    Iterates until the bracket collapses to neighbouring floats, then checks
    ``|F(x) - target| <= rtol * max(1, |target|)``.
    """
    target = np.asarray(target, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        below = F(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 2.0 * np.spacing(np.maximum(np.abs(lo), np.abs(hi)))):
            break
    root = 0.5 * (lo + hi)
    resid = np.abs(F(root) - target)
    if np.any(~(resid <= rtol * np.maximum(1.0, np.abs(target)))):
        raise NoConvergence(f"bisection residual {np.nanmax(resid):.3e} above tolerance")
    return root


@dataclass(frozen=True)
class CovariantSystem:
    """Group, representation and rest entropy, plus a projection strategy.

    ``projector(rho, J) -> (theta, rho0)`` implements the closed-form
    strategy; the root-solve strategy needs ``eps == eps~`` and a bracket
    ``rho0_bracket`` on which the rest-density equation is monotone.
    ``validity(rho, J)`` returns a boolean mask of admissible states.
    ``rho0_range`` and ``theta_bound(rho0)`` describe a fiber box whose lift
    lies inside the validity domain; they drive sampling.  ``chart(theta,
    rho0)`` masks the fiber points the projection can return; it matters when
    two fiber points lift to the same state (circular groups).
    """

    group: GroupSpec
    rep: RepSpec
    datum: EntropyDatum
    projection: str = "root-solve"
    name: str = "custom"
    validity: Optional[Callable] = None
    validity_text: str = ""
    projector: Optional[Callable] = None
    rho0_bracket: Optional[tuple] = None
    rho0_range: Optional[tuple] = None
    theta_bound: Optional[Callable] = None
    chart: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.rep.epsilon_tilde == 0:
            raise UnsupportedRepresentation("the nilpotent representation has no pressure")
        if self.projection not in ("closed-form", "root-solve"):
            raise ValueError(f"unknown projection strategy {self.projection!r}")

    @property
    def eps(self):
        return self.group.epsilon

    @property
    def eps_t(self):
        return self.rep.epsilon_tilde

    @property
    def a(self):
        return self.rep.a

    @property
    def c(self):
        return self.group.c

    @property
    def matched(self):
        """True when group and representation flags coincide (eps = eps~ = +-1)."""
        return self.eps == self.eps_t

    def _trig(self, theta):
        C, S = kin.trig(self.eps, theta)
        Ct, St = kin.trig(self.eps_t, theta)
        return C, S, Ct, St

    # -- fiber <-> state ---------------------------------------------------

    def lift(self, theta, rho0):
        """Conserved ``(rho, J)`` arrays of the fiber point ``(theta, rho0)``."""
        theta = np.asarray(theta, dtype=float)
        rho0 = self.datum.check(rho0)
        q = self.datum.ratio(rho0)
        C, S, Ct, St = self._trig(theta)
        e, et, a = self.eps, self.eps_t, self.a
        if self.matched:
            rho = rho0 + e * S**2 * q
            J = a * S * C * q
        else:
            rho = (C * Ct - e * S * St) * rho0 + e * S * St * q
            J = a * ((C * St - e * et * S * Ct) * rho0 + e * et * S * Ct * q)
        return rho, J

    def lift_state(self, fp) -> State:
        rho, J = self.lift(*fp)
        return State(_out(rho), _out(J))

    def admissible(self, w):
        rho, J = (np.asarray(x, dtype=float) for x in w)
        if self.validity is None:
            return np.isfinite(rho) & np.isfinite(J)
        return np.asarray(self.validity(rho, J), dtype=bool)

    def check_state(self, w):
        rho, J = (np.asarray(x, dtype=float) for x in w)
        ok = self.admissible((rho, J))
        if not np.all(ok):
            idx = np.flatnonzero(~np.broadcast_to(ok, rho.shape).ravel())[0] if rho.ndim else 0
            r, j = float(np.ravel(rho)[idx]), float(np.ravel(J)[idx])
            raise OutsideValidity(
                f"state (rho={r!r}, J={j!r}) outside the {self.name} validity domain"
                + (f" ({self.validity_text})" if self.validity_text else "")
            )
        return rho, J

    def in_chart(self, theta, rho0):
        """Mask of fiber points that :meth:`fiber` would recover from their lift."""
        theta = np.asarray(theta, dtype=float)
        rho0 = np.asarray(rho0, dtype=float)
        ok = self.datum.contains(rho0) & np.isfinite(theta)
        if self.chart is not None:
            ok = ok & np.asarray(self.chart(theta, rho0), dtype=bool)
        return ok

    def rest_density_residual(self, rho0, rho, J):
        """``F(rho0) - rho`` for the rest-density equation of matched systems."""
        return self._rest_density(rho0, J) - rho

    def _rest_density(self, rho0, J):
        # rho = rho0 + eps S^2 q with sinh(2t) or sin(2t) = 2J/(a q), written to
        # stay finite as q -> 0.
        q = self.datum.ratio(rho0)
        b = 2.0 * np.asarray(J, dtype=float) / self.a
        sgn = np.where(q < 0, -1.0, 1.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            return rho0 + self.eps * 0.5 * b**2 * sgn / (np.abs(q) + np.sqrt(q**2 + self.eps * b**2))

    def _theta_from_rest(self, rho0, J):
        q = self.datum.ratio(rho0)
        with np.errstate(divide="ignore", invalid="ignore"):
            phi = np.where(np.asarray(J) == 0, 0.0, 2.0 * np.asarray(J, dtype=float) / (self.a * q))
        if self.eps == kin.LORENTZ:
            return 0.5 * np.arcsinh(phi)
        return 0.5 * np.arcsin(phi)

    def fiber(self, w):
        """Array version of :meth:`project_state`: ``(theta, rho0)`` arrays."""
        rho, J = self.check_state(w)
        if self.projector is not None and self.projection == "closed-form":
            theta, rho0 = self.projector(rho, J)
            return np.asarray(theta, dtype=float), np.asarray(rho0, dtype=float)
        if not self.matched or self.rho0_bracket is None:
            raise UnsupportedCombination(
                f"no projection for eps={self.eps}, eps~={self.eps_t} without a closed form"
            )
        lo, hi = self.rho0_bracket
        if np.any(self._rest_density(np.float64(lo), J) > rho) or np.any(
            self._rest_density(np.float64(hi), J) < rho
        ):
            raise OutsideValidity("rest-density equation has no root in the bracket")
        rho0 = bisect_increasing(lambda r: self._rest_density(r, J), rho, lo, hi)
        rho0 = np.where(J == 0, rho, rho0)
        return self._theta_from_rest(rho0, J), rho0

    def project_state(self, w) -> FiberPoint:
        theta, rho0 = self.fiber(w)
        return FiberPoint(_out(theta), _out(rho0))

    # -- fiber-level quantities ---------------------------------------------

    def _entropy_at(self, theta, rho0):
        C, _ = kin.trig(self.eps, theta)
        return C * self.datum.sigma(rho0)

    def _velocity_at(self, theta):
        return np.asarray(kin.velocity_of_theta(self.group, theta))

    def _pressure_at(self, rho0):
        sp = self.datum.sigma_prime(rho0)
        s_star = rho0 * sp - self.datum.sigma(rho0)
        return -(self.a * self.c / self.eps_t) * s_star / sp

    def _thermo_flux_at(self, theta, rho0):
        C, _, Ct, St = self._trig(theta)
        p0 = self._pressure_at(rho0)
        return (self.eps_t / self.a) * St * p0 / C, Ct * p0 / C

    def _entropy_variables_at(self, theta, rho0):
        _, _, Ct, St = self._trig(theta)
        sp = self.datum.sigma_prime(rho0)
        return Ct * sp, -(self.eps_t / self.a) * St * sp

    def partials(self, fp):
        """``[[drho/dtheta, drho/drho0], [dJ/dtheta, dJ/drho0]]`` at a fiber point."""
        theta = np.asarray(fp[0], dtype=float)
        rho0 = self.datum.check(fp[1])
        q = self.datum.ratio(rho0)
        z0 = 1.0 - self.datum.sigma(rho0) * self.datum.sigma_second(rho0) / self.datum.sigma_prime(rho0) ** 2
        C, S, Ct, St = self._trig(theta)
        e, et, a = self.eps, self.eps_t, self.a
        rho_t = (et - e) * C * St * rho0 + e * (C * St + S * Ct) * q
        rho_r = (C * Ct - e * S * St) + e * S * St * z0
        J_t = a * ((e * S * St + C * Ct - e * et * C * Ct - e * et**2 * S * St) * rho0
                   + e * et * (C * Ct + et * S * St) * q)
        J_r = a * ((C * St - e * et * S * Ct) + e * et * S * Ct * z0)
        return np.stack([np.stack([rho_t, rho_r], -1), np.stack([J_t, J_r], -1)], -2)

    def jacobian_delta(self, fp):
        """Determinant ``d(rho, J) / d(theta, rho0)``."""
        theta = np.asarray(fp[0], dtype=float)
        rho0 = self.datum.check(fp[1])
        d = self.datum
        q = d.ratio(rho0)
        z0 = 1.0 - d.sigma(rho0) * d.sigma_second(rho0) / d.sigma_prime(rho0) ** 2
        C, S = kin.trig(self.eps, theta)
        e, et, a = self.eps, self.eps_t, self.a
        if self.matched:
            small_delta = e * S**2 * z0 - (C**2 + e * S**2)
            return _out(a * small_delta * q)
        if e * e == 1:
            s_star = rho0 * d.sigma_prime(rho0) - d.sigma(rho0)
            return _out(a * ((e * et - 1) * C**2 * s_star / d.sigma_prime(rho0)
                             + q * (et * S**2 * z0 - (C**2 + et * S**2))))
        # The closed form above needs eps^2 = 1; Galileo falls back to the partials.
        return _out(kin.det(self.partials((theta, rho0))))

    def convexity_diagnostics(self, fp):
        """``(det d2eta, d2eta/drho2)``; both positive where ``eta`` is strictly convex."""
        theta = np.asarray(fp[0], dtype=float)
        rho0 = self.datum.check(fp[1])
        d = self.datum
        s, sp, spp = d.sigma(rho0), d.sigma_prime(rho0), d.sigma_second(rho0)
        C, S, Ct, St = self._trig(theta)
        e, et, a = self.eps, self.eps_t, self.a
        if self.matched:
            z0 = 1.0 - s * spp / sp**2
            small_delta = e * S**2 * z0 - (C**2 + e * S**2)
            if np.any(np.abs(small_delta) < SINGULAR_TOL):
                raise SingularJacobian("delta vanishes")
            det_h = (e / a**2) * sp**2 * (spp / s) / small_delta
            d2rho = (C / small_delta) * (e * S**2 * z0 * sp**2 / s - (C**2 + e * S**2) * spp)
            return _out(det_h), _out(d2rho)
        P = self.partials((theta, rho0))
        delta = kin.det(P)
        if np.any(np.abs(delta) < SINGULAR_TOL):
            raise SingularJacobian("Jacobian determinant vanishes")
        det_h = (et / a) * sp * spp / delta
        dtheta_drho = P[..., 1, 1] / delta
        drho0_drho = -P[..., 1, 0] / delta
        d2rho = et * St * sp * dtheta_drho + Ct * spp * drho0_drho
        return _out(det_h), _out(d2rho)

    # -- state-level quantities ----------------------------------------------

    def entropy(self, w):
        return _out(self._entropy_at(*self.fiber(w)))

    def velocity(self, w):
        theta, _ = self.fiber(w)
        return _out(self._velocity_at(theta))

    def dual_entropy(self, w):
        theta, rho0 = self.fiber(w)
        C, _ = kin.trig(self.eps, theta)
        return _out(C * (rho0 * self.datum.sigma_prime(rho0) - self.datum.sigma(rho0)))

    def pressure(self, w):
        _, rho0 = self.fiber(w)
        return _out(self._pressure_at(rho0))

    def entropy_variables(self, w) -> EntropyVariables:
        theta, rho0 = self.fiber(w)
        if np.any(np.abs(self.jacobian_delta((theta, rho0))) < SINGULAR_TOL):
            raise SingularJacobian("fiber map is singular at this state")
        alpha, beta = self._entropy_variables_at(theta, rho0)
        return EntropyVariables(_out(alpha), _out(beta))

    def thermo_flux(self, w):
        g1, g2 = self._thermo_flux_at(*self.fiber(w))
        return _out(g1), _out(g2)

    def flux(self, w):
        rho, J = (np.asarray(x, dtype=float) for x in w)
        theta, rho0 = self.fiber((rho, J))
        u = self._velocity_at(theta)
        g1, g2 = self._thermo_flux_at(theta, rho0)
        return _out(u * rho + g1), _out(u * J + g2)

    def entropy_flux(self, w):
        theta, rho0 = self.fiber(w)
        return _out(self._entropy_at(theta, rho0) * self._velocity_at(theta))

    def evaluate(self, w):
        """Every field of a state in one projection; used by the CLI and solver."""
        rho, J = (np.asarray(x, dtype=float) for x in w)
        theta, rho0 = self.fiber((rho, J))
        C, _ = kin.trig(self.eps, theta)
        u = self._velocity_at(theta)
        eta = self._entropy_at(theta, rho0)
        g1, g2 = self._thermo_flux_at(theta, rho0)
        alpha, beta = self._entropy_variables_at(theta, rho0)
        sp = self.datum.sigma_prime(rho0)
        return {
            "theta": theta,
            "rho0": rho0,
            "u": u,
            "eta": eta,
            "eta_star": C * (rho0 * sp - self.datum.sigma(rho0)),
            "alpha": alpha,
            "beta": beta,
            "p0": self._pressure_at(rho0),
            "f1": u * rho + g1,
            "f2": u * J + g2,
            "g1": g1,
            "g2": g2,
        }

    # -- sampling -------------------------------------------------------------

    def fiber_box(self, rho0, shrink=0.05):
        """Largest admissible ``|theta|`` (shrunk) for each ``rho0``."""
        if self.theta_bound is None:
            raise UnsupportedCombination(f"{self.name} declares no fiber box")
        return (1.0 - shrink) * np.asarray(self.theta_bound(np.asarray(rho0, dtype=float)))

    def _rho0_interval(self, shrink):
        lo, hi = self.rho0_range
        pad = 0.5 * shrink * (hi - lo)
        return lo + pad, hi - pad

    def sample_fibers(self, rng, n, shrink=0.05) -> FiberPoint:
        """Uniform fiber points whose lifts are admissible (no rejection needed)."""
        lo, hi = self._rho0_interval(shrink)
        rho0 = lo + (hi - lo) * rng.random(n)
        theta = self.fiber_box(rho0, shrink) * (2.0 * rng.random(n) - 1.0)
        return FiberPoint(theta, rho0)

    def fiber_grid(self, n, shrink=0.05) -> FiberPoint:
        lo, hi = self._rho0_interval(shrink)
        r, s = np.meshgrid(np.linspace(lo, hi, n), np.linspace(-1.0, 1.0, n), indexing="ij")
        return FiberPoint((self.fiber_box(r, shrink) * s).ravel(), r.ravel())


# -- diagnostics built on the public surface ------------------------------------


def _steps(x, rel):
    return rel * (1.0 + np.abs(np.asarray(x, dtype=float)))


def _inside_step(sys, rho, J, h, axis, max_halvings=40):
    """Halve ``h`` until both stencil points along ``axis`` are admissible."""
    h = np.array(np.broadcast_to(h, np.shape(rho)), dtype=float)
    for _ in range(max_halvings):
        shift = (h, 0.0) if axis == 0 else (0.0, h)
        ok = sys.admissible((rho + shift[0], J + shift[1])) & sys.admissible(
            (rho - shift[0], J - shift[1]))
        if np.all(ok):
            break
        h = np.where(ok, h, 0.5 * h)
    return h


def flux_jacobian(sys: CovariantSystem, w, rel_step=GRAD_STEP):
    """Central-difference ``df/dW`` with shape ``(..., 2, 2)``.

    The step is ``rel_step (1 + |x|)``, halved where a stencil point would
    leave the validity domain.
    """
    rho, J = (np.asarray(x, dtype=float) for x in w)
    hr = _inside_step(sys, rho, J, _steps(rho, rel_step), 0)
    hj = _inside_step(sys, rho, J, _steps(J, rel_step), 1)
    fp = np.stack(sys.flux((rho + hr, J)), -1)
    fm = np.stack(sys.flux((rho - hr, J)), -1)
    gp = np.stack(sys.flux((rho, J + hj)), -1)
    gm = np.stack(sys.flux((rho, J - hj)), -1)
    d_rho = (fp - fm) / (2.0 * hr)[..., None]
    d_J = (gp - gm) / (2.0 * hj)[..., None]
    return np.stack([d_rho, d_J], -1)


def _discriminant(m):
    m = np.asarray(m, dtype=float)
    half_gap = 0.5 * (m[..., 0, 0] - m[..., 1, 1])
    return half_gap**2 + m[..., 0, 1] * m[..., 1, 0]


def eigenvalues(m):
    """Real eigenvalues ``(lambda_minus, lambda_plus)`` of 2x2 matrices."""
    m = np.asarray(m, dtype=float)
    disc = _discriminant(m)
    if np.any(disc < 0):
        raise ComplexEigenvalues(f"discriminant {np.min(disc):.3e} < 0: hyperbolicity lost")
    mean = 0.5 * (m[..., 0, 0] + m[..., 1, 1])
    root = np.sqrt(disc)
    return _out(mean - root), _out(mean + root)


def spectral_radius(sys: CovariantSystem, w):
    lm, lp = eigenvalues(flux_jacobian(sys, w))
    return np.maximum(np.abs(lm), np.abs(lp))


def _directional(fn, w, dw, rel_step):
    rho, J = (np.asarray(x, dtype=float) for x in w)
    dr, dj = (np.asarray(x, dtype=float) for x in dw)
    h = rel_step * (1.0 + np.maximum(np.abs(rho), np.abs(J)))
    plus = fn((rho + h * dr, J + h * dj))
    minus = fn((rho - h * dr, J - h * dj))
    if isinstance(plus, tuple):
        return tuple((np.asarray(p) - np.asarray(m)) / (2.0 * h) for p, m in zip(plus, minus))
    return (np.asarray(plus) - np.asarray(minus)) / (2.0 * h)


def compatibility_residual(sys: CovariantSystem, w, dw, rel_step=GRAD_STEP):
    """``phi . dg[dw] + eta* du[dw]`` with central differences along ``dw``."""
    alpha, beta = sys.entropy_variables(w)
    eta_star = sys.dual_entropy(w)
    dg1, dg2 = _directional(sys.thermo_flux, w, dw, rel_step)
    du = _directional(sys.velocity, w, dw, rel_step)
    return _out(alpha * dg1 + beta * dg2 + eta_star * du)


def entropy_flux_residual(sys: CovariantSystem, w, dw, rel_step=GRAD_STEP):
    """``dzeta[dw] - phi . df[dw]`` with ``zeta = eta u``."""
    alpha, beta = sys.entropy_variables(w)
    dzeta = _directional(sys.entropy_flux, w, dw, rel_step)
    df1, df2 = _directional(sys.flux, w, dw, rel_step)
    return _out(dzeta - alpha * df1 - beta * df2)


def transport(sys: CovariantSystem, w, theta_g):
    """Apply ``G_theta_g`` and ``Y_theta_g`` to a state.

    Returns ``(W', f_target, entropy_target)`` where ``W'`` is the transported
    state, ``f_target`` the flux it must carry and ``entropy_target`` the
    pair ``(eta u, eta)`` it must carry.
    """
    rho, J = (np.asarray(x, dtype=float) for x in w)
    G = kin.group_matrix(sys.group, theta_g)
    Y = kin.rep_matrix(sys.rep, theta_g)
    f = np.stack(sys.flux((rho, J)), -1)
    W = np.stack([rho, J], -1)
    Yf = np.einsum("...ij,...j->...i", Y, f)
    YW = np.einsum("...ij,...j->...i", Y, W)
    W_new = G[..., 1, 0, None] * Yf + G[..., 1, 1, None] * YW
    f_target = G[..., 0, 0, None] * Yf + G[..., 0, 1, None] * YW
    eta = np.asarray(sys.entropy((rho, J)))
    zeta = eta * np.asarray(sys.velocity((rho, J)))
    ent_target = np.stack([G[..., 0, 0] * zeta + G[..., 0, 1] * eta,
                           G[..., 1, 0] * zeta + G[..., 1, 1] * eta], -1)
    return State(W_new[..., 0], W_new[..., 1]), f_target, ent_target


def covariance_residual(sys: CovariantSystem, w, theta_g):
    """``(r_state, r_entropy)``: flux and entropy mismatch after transport.

    Residuals are Euclidean norms scaled by ``max(1, |target|)``. Raises
    :class:`OutsideValidity` when the transported state leaves the domain or
    when the transported fiber point ``(theta + theta_g, rho0)`` leaves the
    projection chart (the state then belongs to another fiber point).
    """
    theta, rho0 = sys.fiber(w)
    if not np.all(sys.in_chart(theta + np.asarray(theta_g, dtype=float), rho0)):
        raise OutsideValidity(f"transport by theta_g leaves the {sys.name} fiber chart")
    w_new, f_target, ent_target = transport(sys, w, theta_g)
    sys.check_state(w_new)
    f_new = np.stack(sys.flux(w_new), -1)
    eta_new = np.asarray(sys.entropy(w_new))
    ent_new = np.stack([eta_new * np.asarray(sys.velocity(w_new)), eta_new], -1)
    r_state = np.linalg.norm(f_new - f_target, axis=-1) / np.maximum(
        1.0, np.linalg.norm(f_target, axis=-1))
    r_ent = np.linalg.norm(ent_new - ent_target, axis=-1) / np.maximum(
        1.0, np.linalg.norm(ent_target, axis=-1))
    return _out(r_state), _out(r_ent)
