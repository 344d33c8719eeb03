"""
Case studies on real records
============================

Central England temperature, Arctic September sea ice and Atlanta annual
temperature. The files are not shipped; ``climshift fetch --dataset cet``
(and ``seaice``) download them into the cache, and the Atlanta series is
placed there by hand. Missing files are reported and skipped.
"""
# %%
from climshift import DatasetNotFound, amoc_pipeline, binary_segmentation, ga_search, load, preset


def show(name, run):
    try:
        run()
    except DatasetNotFound as exc:
        print(f"[{name}] skipped: {exc}")


def cet():
    ts = load(preset("cet"))
    for kind, p in (("constant", 0), ("constant", 1), ("trend", 1)):
        r = amoc_pipeline(ts, kind, p)
        print(f"[cet] {kind} AR({p}): {r.statistic:.3f}, p={r.p_value:.3f}, year {r.changepoint_label}")


def seaice():
    ts = load(preset("seaice"))
    flat = ga_search(ts, "bic", "constant", 1, seed=1)
    sloped = ga_search(ts, "bic", "trend", 1, seed=1)
    print("[seaice] constant mean:", flat.config.labels(ts))
    print("[seaice] linear trend:", sloped.config.labels(ts), f"slope {sloped.mean_model.beta1:.4f}")


def atlanta():
    ts = load(preset("atlanta"))
    print("[atlanta] binary segmentation:", binary_segmentation(ts, "constant", 1).config.labels(ts))
    print("[atlanta] BIC:", ga_search(ts, "bic", "constant", 1, seed=1).config.labels(ts))


show("cet", cet)
show("seaice", seaice)
show("atlanta", atlanta)
