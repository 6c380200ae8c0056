"""
Randomised identity checks and a planted fault
==============================================

``verify.run_suite`` samples admissible states and checks the identities the
construction is built on: the lift round trip, entropy variables against a
finite-difference gradient, the Jacobian and Hessian formulas, the
compatibility relation, and group covariance. A corrupted flux shows which
checks notice the damage.

Run with ``python demos/verify_report.py``.
"""

# %%
# A clean report
# --------------
# Each row gives the sample count, the worst residual and its tolerance.
# The same seed always produces the same report.
from covhyp import catalog, verify

system = catalog.build("circular-elliptic")
report = verify.run_suite(system, seed=42, n_samples=500)
print(report.to_text())

# %%
# Notes attached to a report
# --------------------------
# Some findings are not pass/fail. The Lorentz report records which form of
# its first flux component the pipeline reproduces.
lorentz_report = verify.run_suite(catalog.build("lorentz-hyperbolic"), seed=42, n_samples=200)
for key, value in lorentz_report.notes.items():
    print(f"{key}: {value}")

# %%
# Planting a fault
# ----------------
# Scaling the first flux component by 1 % breaks the link between flux and
# entropy. Compatibility and covariance fail, while checks that never touch
# the flux still pass.
broken = verify.corrupt_flux(system, 1.01)
faulty = verify.run_suite(broken, seed=42, n_samples=500)
print("failed checks:", ", ".join(faulty.failed()))
print("overall:", "PASS" if faulty.passed else "FAIL")
