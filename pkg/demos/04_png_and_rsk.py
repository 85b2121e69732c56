"""
Poisson points, PNG heights and RSK
===================================

Sorting nucleations by t + x and inserting t - x gives a Young shape; its
rows are the heights of the multilayer PNG at the origin. Adding mirror
images doubles every row.
"""

from flatpng import png_sim as ps

print(ps.rsk_tableaux([2, 4, 5, 1, 6, 3]))

c = ps.sample_poisson("triangle", 2.0, 3.0, seed=1)
ens = ps.rsk_shape(c)
print(len(c), "points, shape", ens.shape)
print("heights h_0, h_-1, ...:", ens.heights(6))
print("annihilation cascade: ", ps.multilayer_cascade(c)[:6])
print("symmetrized shape:", ps.rsk_shape(ps.symmetrize(c)).shape)
print(ps.dump_config(c).splitlines()[0])
