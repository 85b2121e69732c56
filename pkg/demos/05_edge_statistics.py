"""
Edge statistics of the flat PNG
===============================

A small Monte-Carlo run at T = 50 and a comparison of the rescaled top line
with F1. Increase ``samples`` for the desk-scale run.
"""

import numpy as np

from flatpng import harness

cfg = harness.ExperimentConfig(T=50.0, samples=400, seed=2)
stats = harness.run_simulation(cfg)
print("mean xi0 * 2^(2/3):", np.mean(stats.top) * 2 ** (2 / 3), "(F1 mean -1.2065)")
print("KS:", stats.ks_f1(), " continuity-corrected:", stats.ks_f1(midpoint=True))
for row in harness.compare(stats):
    print(f"{row.label:<24} m={row.m}  {row.empirical:.3f} +- {row.stderr:.3f}  vs {row.prediction:.3f}")
