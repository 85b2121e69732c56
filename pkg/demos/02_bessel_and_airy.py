"""
Bessel functions near the turning point
=======================================

T^(1/3) J_[2T + xi T^(1/3)](2T) approaches Ai(xi). The integer part makes
the approach jittery; comparing at the lattice point actually used is smooth.
"""

import math

from flatpng import specfun

for T in (100, 400, 1600):
    n = math.floor(2 * T)
    print(T, T ** (1 / 3) * specfun.bessel_j(n, 2.0 * T), specfun.airy(0.0), specfun.bessel_airy_limit_gap(T, 0.0))

print("identity residuals at z = 8:", specfun.bessel_identity_residuals(8.0))
