"""Thermodynamic data on the rest (null-velocity) line ``W0 = (rho0, 0)``.

An :class:`EntropyDatum` carries the rest entropy ``sigma(rho0)`` together
with its first two analytic derivatives. Everything the covariant
construction needs at rest derives from it: the dual ``sigma*``, the
sensitivity ``zeta0 = d(sigma/sigma')/drho0`` and the pressure ``p0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DivisionByZero, DomainError, InvalidParameter, UnsupportedRepresentation
from .kinematics import RepSpec

__all__ = [
    "EntropyDatum",
    "ThermoPoint",
    "exponential_entropy",
    "homographic_entropy",
    "sigma_star",
    "zeta0",
    "pressure",
    "thermo_point",
]


@dataclass(frozen=True)
class EntropyDatum:
    """Rest entropy with analytic derivatives on an open interval ``domain``.

    ``sigma``, ``sigma_prime`` and ``sigma_second`` must accept numpy arrays.
    Convexity (``sigma_second > 0``) and ``sigma_prime != 0`` are the caller's
    responsibility for custom data; see :func:`check_convex`.
    """

    sigma: Callable
    sigma_prime: Callable
    sigma_second: Callable
    domain: tuple = (-np.inf, np.inf)
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def contains(self, rho0):
        lo, hi = self.domain
        rho0 = np.asarray(rho0, dtype=float)
        return (rho0 > lo) & (rho0 < hi)

    def check(self, rho0):
        rho0 = np.asarray(rho0, dtype=float)
        bad = ~self.contains(rho0)
        if np.any(bad):
            first = rho0[bad].flat[0] if rho0.ndim else float(rho0)
            raise DomainError(f"rho0={first!r} outside the {self.name} domain {self.domain}")
        return rho0

    def ratio(self, rho0):
        """``sigma / sigma'``, evaluated without a domain check."""
        sp = self.sigma_prime(rho0)
        if np.any(sp == 0):
            raise DivisionByZero("sigma' vanishes")
        return self.sigma(rho0) / sp

    def check_convex(self, lo, hi, n=200):
        """Sample ``sigma''`` and ``sigma'`` on ``[lo, hi]``; return True when usable."""
        x = np.linspace(lo, hi, n)
        return bool(np.all(self.sigma_second(x) > 0) and np.all(self.sigma_prime(x) != 0))


@dataclass(frozen=True)
class ThermoPoint:
    rho0: float
    sigma_star: float
    zeta0: float
    p0: float


def exponential_entropy(sigma_bar=1.0, rho_star=1.0) -> EntropyDatum:
    """``sigma = sigma_bar * exp(rho0 / rho_star)``; ``sigma/sigma'`` is constant."""
    if not (sigma_bar > 0 and rho_star > 0):
        raise InvalidParameter("sigma_bar and rho_star must be strictly positive")

    def sigma(r):
        return sigma_bar * np.exp(np.asarray(r, dtype=float) / rho_star)

    return EntropyDatum(
        sigma=sigma,
        sigma_prime=lambda r: sigma(r) / rho_star,
        sigma_second=lambda r: sigma(r) / rho_star**2,
        domain=(-np.inf, np.inf),
        name="exponential",
        params={"sigma_bar": sigma_bar, "rho_star": rho_star},
    )


def homographic_entropy(sigma_bar=1.0, rho_star=1.0) -> EntropyDatum:
    """``sigma = -sigma_bar * rho0 / (rho0 + rho_star)`` on ``rho0 > 0``; negative and convex."""
    if not (sigma_bar > 0 and rho_star > 0):
        raise InvalidParameter("sigma_bar and rho_star must be strictly positive")

    def sigma(r):
        r = np.asarray(r, dtype=float)
        return -sigma_bar * r / (r + rho_star)

    def sigma_prime(r):
        r = np.asarray(r, dtype=float)
        return -sigma_bar * rho_star / (r + rho_star) ** 2

    def sigma_second(r):
        r = np.asarray(r, dtype=float)
        return 2.0 * sigma_bar * rho_star / (r + rho_star) ** 3

    return EntropyDatum(
        sigma=sigma,
        sigma_prime=sigma_prime,
        sigma_second=sigma_second,
        domain=(0.0, np.inf),
        name="homographic",
        params={"sigma_bar": sigma_bar, "rho_star": rho_star},
    )


def _out(x):
    return x if np.ndim(x) else float(x)


def sigma_star(d: EntropyDatum, rho0):
    """Dual rest entropy ``rho0 * sigma'(rho0) - sigma(rho0)``."""
    rho0 = d.check(rho0)
    return _out(rho0 * d.sigma_prime(rho0) - d.sigma(rho0))


def zeta0(d: EntropyDatum, rho0):
    """``d/drho0 (sigma / sigma') = 1 - sigma sigma'' / sigma'**2``."""
    rho0 = d.check(rho0)
    sp = d.sigma_prime(rho0)
    if np.any(sp == 0):
        raise DivisionByZero("sigma' vanishes")
    return _out(1.0 - d.sigma(rho0) * d.sigma_second(rho0) / sp**2)


def pressure(d: EntropyDatum, r: RepSpec, c, rho0):
    """Rest pressure solving ``sigma* + (eps~ / (a c)) sigma' p0 = 0``."""
    if r.epsilon_tilde == 0:
        raise UnsupportedRepresentation("pressure is undetermined for the nilpotent representation")
    rho0 = d.check(rho0)
    sp = d.sigma_prime(rho0)
    if np.any(sp == 0):
        raise DivisionByZero("sigma' vanishes")
    s_star = rho0 * sp - d.sigma(rho0)
    return _out(-(r.a * c / r.epsilon_tilde) * s_star / sp)


def thermo_point(d: EntropyDatum, r: RepSpec, c, rho0) -> ThermoPoint:
    return ThermoPoint(
        rho0=float(rho0),
        sigma_star=sigma_star(d, rho0),
        zeta0=zeta0(d, rho0),
        p0=pressure(d, r, c, rho0),
    )
