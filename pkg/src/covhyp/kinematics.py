"""One-parameter space-time groups and their 2x2 state-space representations.

Both families share the same algebraic shape. A flag ``eps`` selects the trig
pair ``(C, S)``:

* ``eps = 0``  : Galileo / nilpotent, ``C = 1``, ``S = theta``
* ``eps = +1`` : Lorentz / hyperbolic, ``C = cosh``, ``S = sinh``
* ``eps = -1`` : circular / elliptic, ``C = cos``, ``S = sin``

so that ``C**2 - eps * S**2 == 1``, ``dS/dtheta = C`` and
``dC/dtheta = eps * S``.

Matrices are plain numpy arrays of shape ``(..., 2, 2)``, row-major.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFrame, InvalidParameter, OutOfRange

__all__ = [
    "GroupSpec",
    "RepSpec",
    "GALILEO",
    "LORENTZ",
    "CIRCULAR",
    "trig",
    "group_matrix",
    "rep_matrix",
    "compose",
    "compose_rep",
    "derivative_at_zero",
    "derivative_at_zero_rep",
    "velocity_of_theta",
    "theta_of_velocity",
    "det",
]

GALILEO, LORENTZ, CIRCULAR = 0, 1, -1
_FLAGS = (GALILEO, LORENTZ, CIRCULAR)


def _check_flag(flag):
    if flag not in _FLAGS:
        raise InvalidParameter(f"group flag must be one of -1, 0, 1, got {flag!r}")


@dataclass(frozen=True)
class GroupSpec:
    """Space-time group ``G_theta = [[C, c S], [(eps/c) S, C]]``."""

    epsilon: int
    c: float = 1.0

    def __post_init__(self):
        _check_flag(self.epsilon)
        if not self.c > 0:
            raise InvalidParameter(f"velocity scale c must be > 0, got {self.c!r}")

    @property
    def name(self):
        return {GALILEO: "galileo", LORENTZ: "lorentz", CIRCULAR: "circular"}[self.epsilon]


@dataclass(frozen=True)
class RepSpec:
    """State-space representation ``Y_theta = [[C~, (eps~/a) S~], [a S~, C~]]``."""

    epsilon_tilde: int
    a: float = 1.0

    def __post_init__(self):
        _check_flag(self.epsilon_tilde)
        if not self.a > 0:
            raise InvalidParameter(f"state-space scale a must be > 0, got {self.a!r}")


def trig(flag, theta):
    """Return the trig pair ``(C, S)`` of the family selected by ``flag``."""
    _check_flag(flag)
    theta = np.asarray(theta, dtype=float)
    if flag == GALILEO:
        return np.ones_like(theta), theta.copy()
    if flag == LORENTZ:
        return np.cosh(theta), np.sinh(theta)
    return np.cos(theta), np.sin(theta)


def _mat(a11, a12, a21, a22):
    a11, a12, a21, a22 = np.broadcast_arrays(a11, a12, a21, a22)
    return np.stack([np.stack([a11, a12], axis=-1), np.stack([a21, a22], axis=-1)], axis=-2)


def group_matrix(g: GroupSpec, theta):
    C, S = trig(g.epsilon, theta)
    return _mat(C, g.c * S, (g.epsilon / g.c) * S, C)


def rep_matrix(r: RepSpec, theta):
    C, S = trig(r.epsilon_tilde, theta)
    return _mat(C, (r.epsilon_tilde / r.a) * S, r.a * S, C)


def compose(g: GroupSpec, theta1, theta2):
    """Matrix product ``G_theta1 @ G_theta2`` (equals ``G_{theta1 + theta2}``)."""
    return group_matrix(g, theta1) @ group_matrix(g, theta2)


def compose_rep(r: RepSpec, theta1, theta2):
    return rep_matrix(r, theta1) @ rep_matrix(r, theta2)


def derivative_at_zero(g: GroupSpec):
    return np.array([[0.0, g.c], [g.epsilon / g.c, 0.0]])


def derivative_at_zero_rep(r: RepSpec):
    return np.array([[0.0, r.epsilon_tilde / r.a], [r.a, 0.0]])


def det(m):
    m = np.asarray(m)
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def velocity_of_theta(g: GroupSpec, theta):
    """Entropy velocity ``u = c S / C`` of the frame reached by ``theta``."""
    C, S = trig(g.epsilon, theta)
    if np.any(np.abs(C) < 1e-12):
        raise DegenerateFrame(f"C_theta vanishes for the {g.name} group at theta={theta!r}")
    u = g.c * S / C
    return u if u.ndim else float(u)


def theta_of_velocity(g: GroupSpec, u):
    u = np.asarray(u, dtype=float)
    ratio = u / g.c
    if g.epsilon == GALILEO:
        theta = ratio
    elif g.epsilon == LORENTZ:
        if np.any(np.abs(ratio) >= 1.0):
            raise OutOfRange(f"|u| must be < c={g.c} for the Lorentz group, got {u!r}")
        theta = np.arctanh(ratio)
    else:
        theta = np.arctan(ratio)
    return theta if theta.ndim else float(theta)
