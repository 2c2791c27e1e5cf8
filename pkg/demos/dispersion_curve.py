"""
The dispersion curve of a periodic scalar equation
==================================================

For ``u_t = (sigma u_x)_x + q u_x + a u`` with 1-periodic coefficients the
principal eigenvalue ``k(lam)`` of the exponentially twisted operator decides
everything: its value at 0 says whether periodic data survive, its maximum
whether compact data survive, and the two Legendre-type minimizations of
``-k(+-lam)/lam`` give the rightward and leftward spreading speeds.
"""

import numpy as np

from hybridspread import k_curve, lambda1_infinity, min_speed_left, min_speed_right, scalar_spec

sigma = lambda x: 1 + 0.4 * np.sin(2 * np.pi * x)
a = lambda x: 1 + 0.5 * np.cos(2 * np.pi * x)
q = lambda x: 0.4 + 0.3 * np.cos(2 * np.pi * x)
spec = scalar_spec(sigma, a, q, kappa=1.0, label="drifting")

# k is concave; a drift tilts it so the curve is no longer even
kc = k_curve(spec, -3, 3, 13)
for lam, k in zip(kc.lambdas, kc.values):
    print(f"lam = {lam:+.1f}   k = {k:+.5f}")
print("max of midpoint average minus k (<= 0 means concave):", kc.concavity_defects().max())

l1 = lambda1_infinity(spec)
print(f"\nperiodic eigenvalue k(0)    = {l1.lambda1_per:.6f}")
print(f"generalized eigenvalue max k = {l1.value:.6f} at lam = {l1.argmax:.4f}")
print("Dirichlet values on (-R, R):", np.round(l1.dirichlet_tail, 5))

cr, lr = min_speed_right(spec)
cl, ll = min_speed_left(spec)
print(f"\nc_right = {cr:.6f} (lam* = {lr:.4f})")
print(f"c_left  = {cl:.6f} (lam* = {ll:.4f})")
# a positive mean drift pushes mass to the left, so the left front wins
