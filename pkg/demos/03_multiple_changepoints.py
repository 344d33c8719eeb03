"""
Several changepoints: binary segmentation vs penalized likelihood
=================================================================

Three unit shifts in alternating directions on 500 points. Binary
segmentation applies the single-changepoint test recursively; the
penalized likelihood approach scores whole configurations and searches
them with a genetic algorithm.
"""
# %%
from climshift import Objective, binary_segmentation, config_distance, fig5_spec, ga_search, simulate

ts, truth = simulate(fig5_spec(shift=1.0, seed=10))
print("true changepoints:", truth.taus)

# %%
bs = binary_segmentation(ts, "constant", p=1)
print("binary segmentation:", bs.config.taus,
      f"distance {config_distance(bs.config, truth).value:.3f}")

# %%
# The three penalties differ mainly in how they charge for short segments.
for pen in ("bic", "mbic", "mdl"):
    fit = ga_search(ts, pen, "constant", p=0, seed=1)
    print(f"{pen:5s}", fit.config.taus, f"objective {fit.objective:.2f}",
          f"distance {config_distance(fit.config, truth).value:.3f}")

# %%
# The objective is an ordinary function of the changepoint tuple, so any
# candidate can be scored directly.
bic = Objective(ts, "bic")
print("BIC of truth:", round(bic(truth.taus), 2), " BIC of no change:", round(bic(()), 2))
