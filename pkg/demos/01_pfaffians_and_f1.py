"""
Pfaffians and the GOE Tracy-Widom distribution
==============================================

A Pfaffian squares to the determinant. The same linear algebra, applied to a
quadrature sample of the GOE matrix kernel, gives F1.
"""

import numpy as np

from flatpng import kernels, skewlinalg

rng = np.random.default_rng(0)
a = rng.normal(size=(6, 6))
A = np.triu(a, 1) - np.triu(a, 1).T
print("Pf(A)^2 =", skewlinalg.pfaffian(A) ** 2, " det(A) =", np.linalg.det(A))

# F1 from the Fredholm determinant, by two routes
for s in (-3.0, -1.0, 0.0, 1.0):
    print(f"F1({s:+.1f}) = {kernels.f1_cdf(s):.10f}   series: {kernels.f1_cdf(s, route='series'):.10f}")
