"""
A small simulation study
========================

Repeats the three-shift design many times and scores each method by its
distance to the true configuration. Twenty replicates keep this quick;
the command ``climshift simstudy`` runs the full hundred.
"""
# %%
import numpy as np

from climshift import simulation_study

res = simulation_study(replicates=20, seed=1, shift=1.0)
means = res.mean_distance()
right_m = res.fraction_m(3)
for method in means:
    print(f"{method:7s} mean distance {means[method]:.3f}   "
          f"m_hat=3 in {right_m[method]:.0%}   median m_hat {np.median(res.m_hat[method]):.0f}")
