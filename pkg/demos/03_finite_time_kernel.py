"""
The finite-time kernel, two ways
================================

The Bessel-sum kernel and the matrix-inverse kernel are computed
independently and agree to rounding. Edge scaling brings them to the GOE
kernel.
"""

import numpy as np

from flatpng import kernels

T = 4.0
print("Bessel route:\n", kernels.kernel_bessel(6, 9, T))
print("matrix route:\n", kernels.kernel_matrix(6, 9, T))
print("|AB - 1| =", kernels.MatrixRouteState(T).ab_residual())

for Tt in (50.0, 200.0, 800.0):
    G, _ = kernels.edge_kernel(-1.0, 0.5, Tt)
    print(f"T~={Tt:5.0f}  G12 edge = {G[0, 1]:.5f}")
print("GOE limit G12 =", kernels.goe_kernel(-1.0, 0.5)[0, 1])
print("rho1 at 0:", kernels.rho1_goe(0.0))
