"""
The well-mixed system
=====================

Without space the model is a planar ODE.  Its zero state is unstable exactly
when the principal eigenvalue ``lambda_A`` of the linearization is positive,
and then a unique coexistence state attracts every nontrivial orbit.
"""

import numpy as np

from hybridspread import OdeParams, equilibrium, integrate
from hybridspread.ode import lambda_A, lyapunov_K, lyapunov_value, stability_certificate

p = OdeParams(r_u=2.0, r_v=1.0, kappa_u=1.0, kappa_v=1.0, mu_u=0.5, mu_v=0.5)
print("lambda_A =", lambda_A(p)[0])
eq = equilibrium(p)
print(f"equilibrium u* = {eq.u:.10f}, v* = {eq.v:.10f}")
print("residual:", np.max(np.abs(p.rhs(eq.u, eq.v))))
print("certificate:", stability_certificate(eq.jac))

K = lyapunov_K(p, eq)
tr = integrate(p, 0.01, 3.0, 40.0)
F = lyapunov_value(K, eq, tr.u, tr.v)
print(f"\nLyapunov weight K = {K:.4f}; F^K from {F[0]:.4f} to {F[-1]:.2e}, "
      f"largest step increase {np.diff(F).max():.1e}")

# here both cross terms of the quadratic form are negative and no weight is
# certified, yet F^1 still decreases along orbits
gap = OdeParams(r_u=-0.248, r_v=0.842, kappa_u=1.118, kappa_v=0.491, mu_u=1.035, mu_v=0.782)
eq = equilibrium(gap)
print("\nuncertified case: lyapunov_K ->", lyapunov_K(gap, eq))
for u0, v0 in [(0.05, 4.0), (3.0, 0.1), (2.0, 2.0)]:
    tr = integrate(gap, u0, v0, 40.0)
    print(f"  from ({u0}, {v0}): max step of F^1 = {np.diff(lyapunov_value(1.0, eq, tr.u, tr.v)).max():.1e}")
