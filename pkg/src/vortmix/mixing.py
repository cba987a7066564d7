"""Same-noise coupling and stationary-regime statistics.

Feeding one noise realization to two copies of the dynamics started
from different states makes the copies contract toward each other: the
band modes receive identical increments, so their difference obeys the
high-mode contraction mechanism plus the band drift difference, and
the full-state distance decays exponentially until it hits floating
point resolution and the copies coalesce bitwise.  couple() measures
that decay; the fitted rate is the observable mixing rate of the
discretized dynamics.

stationary_sample() and correlation_decay() provide the complementary
statistics: draws from the long-run regime of a single path, and the
autocovariance time scale that calibrates error bars for time
averages.
"""

from dataclasses import dataclass

import numpy as np

from .forcing import sample_increment
from .integrator import ExponentialStepper, steps_per_unit
from .spectral import VorticityField, l2sq_array
from .util import batch_means_se, block_bootstrap_slope, ols_line


@dataclass
class CouplingReport:
    """Distance decay of two same-noise copies, with an exponential fit."""

    times: np.ndarray
    d_full: np.ndarray
    d_band: np.ndarray
    d_high: np.ndarray
    coalesce_time: float | None
    fit_rate: float
    fit_intercept: float
    rate_ci_low: float
    rate_ci_high: float
    fit_window: tuple

    @property
    def contracting(self):
        return self.fit_rate < 0 and self.rate_ci_high < 0


def couple(field1, field2, fspec, t_final, dt, rng, n_boot=500):
    """Drive two states with one noise stream and track their distance.

    Distances (full, band part, off-band part) are recorded at unit
    times.  The exponential rate is fitted on the second half of the
    resolvable decay range: instants where the distance still exceeds
    1e-13 of its initial value, before coalescence flattens the series.
    The fit reports a moving-block bootstrap interval for the slope of
    log distance against time.
    """
    grid = field1.grid
    if field2.grid != grid or fspec.grid != grid:
        raise ValueError("fields and forcing must share one grid")
    n_units = round(float(t_final))
    if not np.isclose(n_units, t_final, rtol=0, atol=1e-12) or n_units < 1:
        raise ValueError("t_final must be a positive integer")
    per = steps_per_unit(dt)
    stepper = ExponentialStepper(grid, dt)
    low = grid.low_mask

    w = np.stack([field1.coeffs, field2.coeffs])
    times = np.arange(n_units + 1, dtype=np.float64)
    d_full = np.empty(n_units + 1)
    d_band = np.empty(n_units + 1)
    d_high = np.empty(n_units + 1)

    def record(i):
        diff = w[0] - w[1]
        d_full[i] = np.sqrt(l2sq_array(diff))
        d_band[i] = np.sqrt(l2sq_array(np.where(low, diff, 0)))
        d_high[i] = np.sqrt(l2sq_array(np.where(low, 0, diff)))

    record(0)
    coalesce = None
    for n in range(n_units):
        if coalesce is None:
            for _ in range(per):
                db = sample_increment(fspec, dt, rng)
                w = stepper.advance(w, db)
            if not np.all(np.isfinite(w.view(np.float64))):
                raise FloatingPointError(f"coupled pair blew up before t={n + 1}")
            if np.array_equal(w[0], w[1]):
                coalesce = float(n + 1)
        else:
            # copies are bitwise equal; advance one and mirror it
            for _ in range(per):
                db = sample_increment(fspec, dt, rng)
                w[0] = stepper.advance(w[0], db)
            w[1] = w[0]
        record(n + 1)

    floor = 1e-13 * d_full[0] if d_full[0] > 0 else 0.0
    resolvable = np.flatnonzero(d_full > floor)
    if resolvable.size >= 4:
        m = resolvable[-1]
        i0 = max(1, m // 2)
        window = np.arange(i0, m + 1)
    else:
        window = resolvable if resolvable.size else np.arange(1)
    x = times[window]
    y = np.log(np.maximum(d_full[window], 1e-300))
    if len(window) >= 2:
        intercept, rate = ols_line(x, y)
    else:
        # nothing resolvable to fit (e.g. the copies started identical)
        intercept, rate = float(y[0]), 0.0
    if len(window) >= 4:
        slopes = block_bootstrap_slope(x, y, n_boot=n_boot, rng=rng)
        lo, hi = np.quantile(slopes, [0.025, 0.975])
    else:
        lo = hi = rate
    return CouplingReport(
        times=times,
        d_full=d_full,
        d_band=d_band,
        d_high=d_high,
        coalesce_time=coalesce,
        fit_rate=float(rate),
        fit_intercept=float(intercept),
        rate_ci_low=float(lo),
        rate_ci_high=float(hi),
        fit_window=(int(window[0]), int(window[-1])),
    )


def stationary_sample(field0, fspec, n_samples, dt, rng, burn_in=20, gap=5):
    """Near-stationary snapshots from one long run.

    Discards burn_in units, then keeps the state every gap units.
    Returns an array (n_samples, n_modes).
    """
    grid = field0.grid
    per = steps_per_unit(dt)
    stepper = ExponentialStepper(grid, dt)
    w = field0.coeffs.copy()
    for _ in range(burn_in * per):
        w = stepper.advance(w, sample_increment(fspec, dt, rng))
    out = np.empty((n_samples, grid.n_modes), dtype=np.complex128)
    for i in range(n_samples):
        for _ in range(gap * per):
            w = stepper.advance(w, sample_increment(fspec, dt, rng))
        if not np.all(np.isfinite(w.view(np.float64))):
            raise FloatingPointError("stationary run blew up")
        out[i] = w
    return out


def correlation_decay(series, max_lag=None):
    """Autocovariance of a unit-time series with an exponential fit.

    Fits log autocovariance against lag over the initial stretch where
    the autocovariance stays above 5% of the variance, and reports the
    batch-means standard error of the series mean alongside.
    """
    x = np.asarray(series, dtype=float)
    n = len(x)
    if n < 8:
        raise ValueError("series too short for a correlation fit")
    if max_lag is None:
        max_lag = n // 4
    xc = x - x.mean()
    acov = np.array([np.dot(xc[: n - k], xc[k:]) / (n - k) for k in range(max_lag + 1)])
    positive = acov > 0.05 * acov[0]
    m = int(np.argmin(positive)) if not positive.all() else len(positive)
    m = max(m, 3)
    lags = np.arange(m, dtype=float)
    _, slope = ols_line(lags, np.log(np.maximum(acov[:m], 1e-300)))
    return {
        "acov": acov,
        "fit_lags": int(m),
        "rate": float(slope),
        "mean": float(x.mean()),
        "se_batch": float(batch_means_se(x)),
    }
