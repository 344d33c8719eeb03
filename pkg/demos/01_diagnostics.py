"""
Seasonal diagnostics
====================

Before any changepoint test, look at the series: per-season means and
standard deviations, the autocorrelation of the standardized series, and
whether the residuals look Gaussian. Here a synthetic monthly record plays
the role of a station series, and a second correlated record plays the
reference station.
"""
# %%
import numpy as np

from climshift import TimeSeries, acf, difference, normality_test, seasonal_stats, standardize

rng = np.random.default_rng(2)
years = 40
cycle = 10 + 8 * np.sin(2 * np.pi * (np.arange(12) - 3) / 12)
regional = np.zeros(12 * years)
for t in range(1, regional.size):  # shared weather, AR(1) at lag one month
    regional[t] = 0.6 * regional[t - 1] + rng.normal()
target = TimeSeries(np.tile(cycle, years) + regional + rng.normal(0, 0.5, 12 * years),
                    period=12, label="target", start_year=1980)
reference = TimeSeries(np.tile(cycle, years) + regional + rng.normal(0, 0.5, 12 * years),
                       period=12, label="reference", start_year=1980)

# %%
# Seasonal means and standard deviations use d - 1 in the variance, where
# d is the number of complete years.
stats = seasonal_stats(target)
print("monthly means:", np.round(stats.means, 2))
print("monthly sds:  ", np.round(stats.std_devs, 2))

# %%
# The standardized series is strongly autocorrelated: the white-noise band
# is 1.96 / sqrt(N), and the early lags sit far outside it.
z = standardize(target, stats)
r = acf(z, 12)
print("acf lags 1-6:", np.round(r.correlations[1:7], 3), "band:", round(r.white_noise_band, 3))

# %%
# Subtracting a reference removes the shared weather but not all of the
# correlation in general; here the remainder is close to white.
diff = difference(target, reference)
rd = acf(standardize(diff, seasonal_stats(diff)), 12)
print("target - reference, lags outside band:", int(rd.outside_band().sum()), "of 12")

# %%
# Shapiro-Wilk on the standardized differences.
w, p = normality_test(standardize(diff, seasonal_stats(diff)).values)
print(f"Shapiro-Wilk W={w:.4f}, p={p:.3f}")
