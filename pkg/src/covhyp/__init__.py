"""Group-covariant 2x2 hyperbolic conservation laws.

Build a system from a one-parameter space-time group, a state-space
representation and a rest entropy, then evaluate its flux, entropy, entropy
variables and convexity diagnostics at any admissible state::

    >>> from covhyp import catalog
    >>> sys = catalog.build("circular-elliptic")
    >>> round(sys.flux((1.0, 0.2))[0], 12)
    0.2
"""
from . import catalog, cli, construction, kinematics, manifold, solver, verify
from .catalog import NAMES, build
from .construction import CovariantSystem, EntropyVariables, FiberPoint, State
from .errors import *  # noqa: F401,F403
from .kinematics import GroupSpec, RepSpec
from .manifold import EntropyDatum

__version__ = "0.1.0"

__all__ = [
    "catalog",
    "cli",
    "construction",
    "kinematics",
    "manifold",
    "solver",
    "verify",
    "NAMES",
    "build",
    "CovariantSystem",
    "EntropyVariables",
    "FiberPoint",
    "State",
    "GroupSpec",
    "RepSpec",
    "EntropyDatum",
]
