"""Concrete covariant systems.

* ``circular-elliptic``  : circular group, elliptic representation, exponential rest entropy
* ``lorentz-hyperbolic`` : Lorentz group, hyperbolic representation, homographic rest entropy
* ``galileo-hyperbolic`` : Galileo group, hyperbolic representation, homographic rest entropy
* ``galileo-elliptic``   : Galileo group, elliptic representation, exponential rest entropy

Validity predicates keep a margin of ``MARGIN`` (relative to ``rho_star``)
away from every boundary; boundary states are rejected.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .construction import CovariantSystem
from .errors import InvalidParameter
from .kinematics import CIRCULAR, GALILEO, LORENTZ, GroupSpec, RepSpec
from .manifold import exponential_entropy, homographic_entropy

__all__ = [
    "MARGIN",
    "SystemDescriptor",
    "circular_elliptic",
    "lorentz_hyperbolic",
    "galileo",
    "build",
    "describe",
    "NAMES",
]

MARGIN = 1e-9


@dataclass(frozen=True)
class SystemDescriptor:
    name: str
    epsilon: int
    epsilon_tilde: int
    entropy: str
    validity: str


_DESCRIPTORS = {
    "circular-elliptic": SystemDescriptor(
        "circular-elliptic", CIRCULAR, CIRCULAR, "exponential",
        "|Psi| < 1 with Psi = 2 J / (a rho_star); equivalently |theta| < pi/4"),
    "lorentz-hyperbolic": SystemDescriptor(
        "lorentz-hyperbolic", LORENTZ, LORENTZ, "homographic",
        "|J|/a < rho < rho_star/2"),
    "galileo-hyperbolic": SystemDescriptor(
        "galileo-hyperbolic", GALILEO, LORENTZ, "homographic", "|J|/a < rho"),
    "galileo-elliptic": SystemDescriptor(
        "galileo-elliptic", GALILEO, CIRCULAR, "exponential", "rho > 0"),
}
NAMES = tuple(_DESCRIPTORS)


def _check_params(**params):
    for key, value in params.items():
        if not (np.isfinite(value) and value > 0):
            raise InvalidParameter(f"{key} must be strictly positive, got {value!r}")
    return dict(params)


def circular_elliptic(rho_star=1.0, sigma_bar=1.0, a=1.0, c=1.0) -> CovariantSystem:
    params = _check_params(rho_star=rho_star, sigma_bar=sigma_bar, a=a, c=c)
    tol = MARGIN

    def validity(rho, J):
        psi = 2.0 * J / (a * rho_star)
        return np.isfinite(rho) & (np.abs(psi) <= 1.0 - tol)

    def projector(rho, J):
        psi = 2.0 * J / (a * rho_star)
        theta = 0.5 * np.arcsin(psi)
        return theta, rho + np.sin(theta) ** 2 * rho_star

    return CovariantSystem(
        group=GroupSpec(CIRCULAR, c),
        rep=RepSpec(CIRCULAR, a),
        datum=exponential_entropy(sigma_bar, rho_star),
        projection="closed-form",
        name="circular-elliptic",
        validity=validity,
        validity_text=_DESCRIPTORS["circular-elliptic"].validity,
        projector=projector,
        rho0_bracket=None,
        rho0_range=(0.0, 2.0 * rho_star),
        theta_bound=lambda r0: np.full_like(r0, np.pi / 4),
        chart=lambda theta, r0: np.abs(theta) <= np.pi / 4 - MARGIN,
        params=params,
    )


def lorentz_hyperbolic(rho_star=1.0, sigma_bar=1.0, a=1.0, c=1.0) -> CovariantSystem:
    params = _check_params(rho_star=rho_star, sigma_bar=sigma_bar, a=a, c=c)
    tol = MARGIN * rho_star
    datum = homographic_entropy(sigma_bar, rho_star)

    def validity(rho, J):
        return (rho - np.abs(J) / a > tol) & (0.5 * rho_star - rho > tol)

    def theta_bound(r0):
        # largest |theta| keeping rho = r0 + sinh^2(theta) q(r0) <= rho_star / 2
        q = datum.ratio(r0)
        return np.arcsinh(np.sqrt(np.maximum(0.5 * rho_star - r0, 0.0) / q))

    return CovariantSystem(
        group=GroupSpec(LORENTZ, c),
        rep=RepSpec(LORENTZ, a),
        datum=datum,
        projection="root-solve",
        name="lorentz-hyperbolic",
        validity=validity,
        validity_text=_DESCRIPTORS["lorentz-hyperbolic"].validity,
        rho0_bracket=(0.0, 0.5 * rho_star),
        rho0_range=(0.0, 0.5 * rho_star),
        theta_bound=theta_bound,
        params=params,
    )


def galileo(rho_star=1.0, sigma_bar=1.0, a=1.0, eps_tilde=1, c=1.0) -> CovariantSystem:
    """Galileo-covariant system; ``eps_tilde`` picks the representation.

    The hyperbolic representation pairs with the homographic rest entropy
    (``sigma' < 0``), the elliptic one with the exponential entropy
    (``sigma' > 0``); those are the pairings that make ``eta`` convex.
    """
    params = _check_params(rho_star=rho_star, sigma_bar=sigma_bar, a=a, c=c)
    tol = MARGIN * rho_star
    if eps_tilde == LORENTZ:
        name, datum = "galileo-hyperbolic", homographic_entropy(sigma_bar, rho_star)

        def validity(rho, J):
            return rho - np.abs(J) / a > tol

        def projector(rho, J):
            theta = np.arctanh(J / (a * rho))
            return theta, np.sqrt((rho - J / a) * (rho + J / a))

        def theta_bound(r0):
            return np.full_like(r0, 1.5)
    elif eps_tilde == CIRCULAR:
        name, datum = "galileo-elliptic", exponential_entropy(sigma_bar, rho_star)

        def validity(rho, J):
            return (rho > tol) & np.isfinite(J)

        def projector(rho, J):
            return np.arctan(J / (a * rho)), np.hypot(rho, J / a)

        def theta_bound(r0):
            return np.full_like(r0, 0.5 * np.pi)
    else:
        raise InvalidParameter(f"eps_tilde must be +1 or -1 for Galileo systems, got {eps_tilde!r}")

    return CovariantSystem(
        group=GroupSpec(GALILEO, c),
        rep=RepSpec(eps_tilde, a),
        datum=datum,
        projection="closed-form",
        name=name,
        validity=validity,
        validity_text=_DESCRIPTORS[name].validity,
        projector=projector,
        rho0_range=(0.1 * rho_star, 2.0 * rho_star),
        theta_bound=theta_bound,
        params=params,
    )


def build(name, rho_star=1.0, sigma_bar=1.0, a=1.0, c=1.0) -> CovariantSystem:
    """Construct a catalog system from its descriptor name."""
    if name == "circular-elliptic":
        return circular_elliptic(rho_star, sigma_bar, a, c)
    if name == "lorentz-hyperbolic":
        return lorentz_hyperbolic(rho_star, sigma_bar, a, c)
    if name == "galileo-hyperbolic":
        return galileo(rho_star, sigma_bar, a, LORENTZ, c)
    if name == "galileo-elliptic":
        return galileo(rho_star, sigma_bar, a, CIRCULAR, c)
    raise InvalidParameter(f"unknown system {name!r}; choose from {', '.join(NAMES)}")


def describe(name) -> SystemDescriptor:
    try:
        return _DESCRIPTORS[name]
    except KeyError:
        raise InvalidParameter(f"unknown system {name!r}") from None
