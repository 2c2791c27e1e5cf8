"""
Rapid oscillations and the harmonic mean
========================================

Diffusion that jumps between 1 and 4 on the two halves of each cell behaves,
when the cell shrinks to size ``eps``, like the constant harmonic mean
``1.6``.  The reaction averages arithmetically, so with ``a = 1`` the limit
speed is ``2 sqrt(1.6)``.
"""

import numpy as np

from hybridspread import homogenized_speed, load_corpus
from hybridspread.homogexp import epsilon_speed_sweep

spec = load_corpus("piecewise_homog").spec
print(f"homogenized speed {homogenized_speed(spec):.10f}  vs  2 sqrt(1.6) = {2 * np.sqrt(1.6):.10f}")

tab = epsilon_speed_sweep(spec, [1 / 2, 1 / 4, 1 / 8, 1 / 16, 1 / 32])
for eps, c, err in zip(tab.params, tab.values, tab.errors):
    print(f"eps = {eps:8.5f}   c*_eps = {c:.8f}   error = {err:.2e}")
# the error drops roughly fourfold per halving of eps
print("ratios:", np.round(tab.errors[:-1] / tab.errors[1:], 2))
