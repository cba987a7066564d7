"""Small numeric helpers: compensated sums, fits, bootstrap resampling."""

import numpy as np


class KahanAccumulator:
    """Compensated (Kahan) summation of a scalar stream."""

    def __init__(self):
        self.total = 0.0
        self._comp = 0.0

    def add(self, value):
        y = float(value) - self._comp
        t = self.total + y
        self._comp = (t - self.total) - y
        self.total = t
        return self.total


def kahan_sum(values):
    """Compensated sum of a 1-D array, returned as a float."""
    acc = KahanAccumulator()
    for v in np.asarray(values, dtype=float).ravel():
        acc.add(v)
    return acc.total


class KahanArray:
    """Compensated summation of a stream of same-shaped arrays."""

    def __init__(self, shape):
        self.total = np.zeros(shape)
        self._comp = np.zeros(shape)

    def add(self, values):
        y = np.asarray(values, dtype=float) - self._comp
        t = self.total + y
        self._comp = (t - self.total) - y
        self.total = t
        return self.total


def ols_line(x, y):
    """Least-squares fit y ~ a + b*x; returns (a, b)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xm = x.mean()
    ym = y.mean()
    dx = x - xm
    denom = float(dx @ dx)
    if denom == 0.0:
        raise ValueError("degenerate abscissa for line fit")
    b = float(dx @ (y - ym)) / denom
    a = ym - b * xm
    return a, b


def block_bootstrap_slope(x, y, n_boot, rng, block=None):
    """Bootstrap the OLS slope by resampling residuals in moving blocks.

    Returns the array of resampled slopes.  Block length defaults to
    ceil(sqrt(n)), which is adequate for the mildly correlated residuals
    these fits see.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    a, b = ols_line(x, y)
    resid = y - (a + b * x)
    if block is None:
        block = max(1, int(np.ceil(np.sqrt(n))))
    n_blocks = int(np.ceil(n / block))
    starts_max = n - block
    slopes = np.empty(n_boot)
    for i in range(n_boot):
        starts = rng.integers(0, starts_max + 1, size=n_blocks)
        idx = (starts[:, None] + np.arange(block)[None, :]).ravel()[:n]
        y_star = (a + b * x) + resid[idx]
        slopes[i] = ols_line(x, y_star)[1]
    return slopes


def bootstrap_mean_ci(samples, n_boot, rng, level=0.95):
    """Percentile bootstrap CI for the mean of a 1-D sample."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    means = np.empty(n_boot)
    for i in range(n_boot):
        means[i] = samples[rng.integers(0, n, size=n)].mean()
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def batch_means_se(samples, n_batches=20):
    """Standard error of the mean via batch means (for correlated series)."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    n_batches = min(n_batches, n)
    if n_batches < 2:
        raise ValueError("too few samples for batch means")
    size = n // n_batches
    trimmed = samples[: n_batches * size].reshape(n_batches, size)
    bm = trimmed.mean(axis=1)
    return float(bm.std(ddof=1) / np.sqrt(n_batches))
