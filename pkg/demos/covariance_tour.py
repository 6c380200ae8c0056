"""
Moving a state along its group orbit
====================================

Every admissible state of a catalog system is a rest state carried along by
a one-parameter group. This script picks one state on the Lorentz system,
splits it into its fiber coordinates, transports it, and checks that flux,
entropy and entropy flux transform together. It ends on the circular system,
where transport only stays meaningful inside the fiber chart.

Run with ``python demos/covariance_tour.py``.
"""

# %%
# Fiber coordinates of one state
# ------------------------------
# ``fiber`` returns the group parameter ``theta`` and the rest density
# ``rho0``. ``lift`` goes back. On the Lorentz system the rest density is
# found by bisection, so the round trip is accurate to a few ulps.
import numpy as np

from covhyp import catalog
from covhyp.construction import covariance_residual, transport
from covhyp.errors import OutsideValidity

lorentz = catalog.build("lorentz-hyperbolic")
w = (0.4, 0.2)
theta, rho0 = lorentz.project_state(w)
print(f"state {w} -> theta={theta:.12f}, rho0={rho0:.12f}")
print("lift back:", tuple(float(x) for x in lorentz.lift(theta, rho0)))

# %%
# Everything the pipeline derives
# -------------------------------
# ``evaluate`` returns the entropy, entropy velocity, pressure, entropy
# variables and flux in one dictionary.
for key, value in lorentz.evaluate(w).items():
    print(f"  {key:>9s} = {float(value): .15g}")

# %%
# Transport by a group element
# ----------------------------
# ``transport`` applies the space-time matrix and the state representation
# for a shift ``theta_g``. The transported state must carry the transported
# flux, which ``covariance_residual`` measures. A shift that pushes the state
# past ``rho < rho_star / 2`` is rejected.
for theta_g in (-0.3, 0.05, 0.15, 0.4):
    try:
        r_state, r_entropy = covariance_residual(lorentz, w, theta_g)
    except OutsideValidity as exc:
        print(f"theta_g={theta_g:+.2f}: {exc}")
        continue
    w_new, _, _ = transport(lorentz, w, theta_g)
    th_new, _ = lorentz.project_state(w_new)
    print(f"theta_g={theta_g:+.2f}: new theta={th_new:.6f} (expected {theta + theta_g:.6f}), "
          f"residuals {r_state:.1e} / {r_entropy:.1e}")

# %%
# The circular chart
# ------------------
# On the circular system the fiber parameter lives in ``|theta| < pi/4``.
# Transport that would push it past that bound is reported as leaving the
# domain instead of silently landing on the mirror fiber point.
circular = catalog.build("circular-elliptic")
w = (1.0, 0.3)
theta, _ = circular.project_state(w)
for theta_g in np.linspace(0.0, 0.6, 4):
    try:
        r_state, _ = covariance_residual(circular, w, theta_g)
        print(f"theta + theta_g = {theta + theta_g:.3f}: residual {r_state:.1e}")
    except OutsideValidity as exc:
        print(f"theta + theta_g = {theta + theta_g:.3f}: {exc}")
