"""Pathwise balance accounting and ensemble tail diagnostics.

The enstrophy balance for the forced dynamics reads, over [0, t],

    (1/2)||omega(t)||^2 - (1/2)||omega(0)||^2
        + int_0^t ||grad omega||^2
        = (R/2) t + sum_i (omega(t_i), db_i) + err(dt)

with R the signed-lattice noise injection total: each signed mode
contributes gamma_k / 2 of drift under the complex-mode covariance
convention, and the signed sum of gamma is R.  The discretization error
err has mean of order dt and pathwise scatter of order sqrt(t dt), which
is what the calibration in the balance checks is sized against.

The interval functional

    D_n = (1/2) max_{[n, n+1]} ||omega||^2 + int_n^{n+1} ||grad omega||^2

controls both the exponential moment of the state and, summed over
blocks, the accumulated gradient factor in the high-mode contraction
exponent, so its tail behavior is what the tail checks probe.
"""

from dataclasses import dataclass

import numpy as np

from .integrator import ExponentialStepper, martingale_inner, steps_per_unit
from .seeding import derive_rng
from .spectral import h1sq_array, l2sq_array
from .util import bootstrap_mean_ci, ols_line


def compute_dn(traj):
    """Interval functionals D_n of a simulated trajectory, one per unit."""
    return traj.unit_dn.copy()


def balance_residuals(traj, fspec):
    """Balance defect at each unit time, one value per unit.

    residual[n] vanishes in the mean up to O(dt) and has per-path
    scatter O(sqrt(t dt)); a systematic offset flags a covariance or
    drift bookkeeping error.
    """
    if fspec.grid != traj.grid:
        raise ValueError("forcing spec grid does not match trajectory grid")
    r_total = fspec.total_r
    l2sq_0 = l2sq_array(traj.states[0])
    n = np.arange(1, len(traj.unit_dn) + 1)
    return (
        0.5 * traj.unit_l2sq
        - 0.5 * l2sq_0
        + traj.h1_integral[1:]
        - 0.5 * r_total * n
        - np.cumsum(traj.unit_mart)
    )


@dataclass
class DiagnosticSeries:
    """Unit-time summary of one trajectory, ready for tabular export."""

    times: np.ndarray
    enstrophy: np.ndarray      # (1/2) ||omega(n)||^2
    h1_integral: np.ndarray    # int_0^n ||grad omega||^2
    dn: np.ndarray             # D_{n-1} over [n-1, n]
    sup_enstrophy: np.ndarray  # (1/2) sup over [n-1, n] of ||omega||^2
    martingale: np.ndarray     # cumulative noise pairing to time n
    residual: np.ndarray       # balance defect at time n

    def rows(self):
        header = [
            "t",
            "enstrophy",
            "h1_integral",
            "d_interval",
            "sup_enstrophy",
            "martingale",
            "balance_residual",
        ]
        body = [
            [
                f"{self.times[i]:.6f}",
                f"{self.enstrophy[i]:.12e}",
                f"{self.h1_integral[i]:.12e}",
                f"{self.dn[i]:.12e}",
                f"{self.sup_enstrophy[i]:.12e}",
                f"{self.martingale[i]:.12e}",
                f"{self.residual[i]:.12e}",
            ]
            for i in range(len(self.times))
        ]
        return header, body


def diagnostic_series(traj, fspec):
    """Per-unit-time diagnostics of a trajectory under its forcing."""
    res = balance_residuals(traj, fspec)
    return DiagnosticSeries(
        times=traj.unit_times.copy(),
        enstrophy=0.5 * traj.unit_l2sq,
        h1_integral=traj.h1_integral[1:].copy(),
        dn=traj.unit_dn.copy(),
        sup_enstrophy=traj.unit_sup.copy(),
        martingale=np.cumsum(traj.unit_mart),
        residual=res,
    )


# -- batched ensembles -----------------------------------------------------


def ensemble_unit_stats(
    field0,
    fspec,
    t_final,
    dt,
    master_seed,
    n_members,
    component="ensemble",
    member_chunk=2000,
    time_chunk=250,
):
    """Advance n_members independent copies and keep unit reductions.

    Every member starts from field0 and consumes its own derived noise
    stream (master_seed, component, member index), drawn in time order,
    so results do not depend on the chunk sizes used here.  Returns a
    dict of arrays:

        l2sq      (n_members, n_units + 1)   ||omega||^2 at unit times
        dn        (n_members, n_units)       interval functionals
        mart      (n_members, n_units)       per-unit noise pairing
        h1_unit   (n_members, n_units)       per-unit gradient integral
    """
    grid = field0.grid
    if fspec.grid != grid:
        raise ValueError("forcing spec grid does not match field grid")
    n_units = round(float(t_final))
    if not np.isclose(n_units, t_final, rtol=0, atol=1e-12) or n_units < 1:
        raise ValueError("t_final must be a positive integer")
    per = steps_per_unit(dt)
    stepper = ExponentialStepper(grid, dt)
    scale = np.sqrt(fspec.gamma_low * dt / 2.0)

    l2sq = np.empty((n_members, n_units + 1))
    dn = np.empty((n_members, n_units))
    mart = np.empty((n_members, n_units))
    h1_unit = np.empty((n_members, n_units))

    for start in range(0, n_members, member_chunk):
        stop = min(start + member_chunk, n_members)
        m = stop - start
        rngs = [derive_rng(master_seed, component, i) for i in range(start, stop)]
        w = np.broadcast_to(field0.coeffs, (m, grid.n_modes)).copy()
        l2sq[start:stop, 0] = l2sq_array(w)
        for n in range(n_units):
            peak = l2sq_array(w)
            h1_acc = np.zeros(m)
            mart_acc = np.zeros(m)
            done = 0
            while done < per:
                tc = min(time_chunk, per - done)
                z = np.stack([r.standard_normal((tc, grid.n_low, 2)) for r in rngs])
                db_block = scale * (z[..., 0] + 1j * z[..., 1])
                for j in range(tc):
                    db = db_block[:, j]
                    h1_acc += h1sq_array(grid, w) * dt
                    mart_acc += martingale_inner(grid, w, db)
                    w = stepper.advance(w, db)
                    np.maximum(peak, l2sq_array(w), out=peak)
                done += tc
            if not np.all(np.isfinite(w.view(np.float64))):
                raise FloatingPointError(f"ensemble member blew up in unit {n}")
            l2sq[start:stop, n + 1] = l2sq_array(w)
            dn[start:stop, n] = 0.5 * peak + h1_acc
            mart[start:stop, n] = mart_acc
            h1_unit[start:stop, n] = h1_acc

    return {
        "l2sq": l2sq,
        "dn": dn,
        "mart": mart,
        "h1_unit": h1_unit,
        "unit_times": np.arange(n_units + 1, dtype=np.float64),
        "dt": float(dt),
    }


def ensemble_balance_residuals(stats, fspec, l2sq_0):
    """Balance defect per member at each unit time from ensemble stats."""
    n_units = stats["dn"].shape[1]
    n = np.arange(1, n_units + 1)
    return (
        0.5 * stats["l2sq"][:, 1:]
        - 0.5 * l2sq_0
        + np.cumsum(stats["h1_unit"], axis=1)
        - 0.5 * fspec.total_r * n
        - np.cumsum(stats["mart"], axis=1)
    )


# -- tail and moment checks ------------------------------------------------


def exp_moment_check(l2sq_t, r_total, t, l2sq_0, n_boot=2000, rng=None):
    """Exponential-moment bound at one time from ensemble samples.

    Checks  mean exp(||omega(t)||^2 / 4R)  <=  3 exp(e^{-t} ||omega(0)||^2 / 4R)
    and reports the empirical mean with a bootstrap interval.
    """
    x = np.exp(np.asarray(l2sq_t, dtype=float) / (4.0 * r_total))
    bound = 3.0 * np.exp(np.exp(-t) * l2sq_0 / (4.0 * r_total))
    estimate = float(x.mean())
    if rng is None:
        rng = np.random.default_rng(0)
    lo, hi = bootstrap_mean_ci(x, n_boot=n_boot, rng=rng)
    return {
        "estimate": estimate,
        "ci_low": float(lo),
        "ci_high": float(hi),
        "bound": float(bound),
        "ok": bool(estimate <= bound),
        "ok_ci": bool(lo <= bound),
        "t": float(t),
        "n": int(len(x)),
    }


def tail_probability_check(l2sq_t, r_total, t, l2sq_0, d_values):
    """Pointwise tail bound P(||omega(t)||^2 >= D) <= 3 e^{-D/4R} e^{e^{-t}||omega0||^2/4R}."""
    x = np.asarray(l2sq_t, dtype=float)
    pref = 3.0 * np.exp(np.exp(-t) * l2sq_0 / (4.0 * r_total))
    rows = []
    for d in np.atleast_1d(d_values):
        freq = float((x >= d).mean())
        bound = float(pref * np.exp(-d / (4.0 * r_total)))
        rows.append(
            {"d": float(d), "freq": freq, "bound": min(bound, 1.0), "ok": freq <= min(bound, 1.0)}
        )
    return rows


def tail_sum_check(
    dn,
    r_total,
    levels=(0.5, 0.25, 0.1, 0.05, 0.02, 0.01),
    n_boot=2000,
    rng=None,
):
    """Exponential tail of block sums of D_n.

    dn is (n_members, n_units); the statistic per member is
    sum_n D_n / (R * n_units), the accumulated interval functional in
    injection units.  The survival probability at the empirical
    quantile levels is regressed (log) against the quantile location;
    exponential tails give a negative slope whose bootstrap interval
    should exclude zero from above.
    """
    dn = np.asarray(dn, dtype=float)
    if dn.ndim != 2:
        raise ValueError("dn must be (n_members, n_units)")
    n_units = dn.shape[1]
    sums = dn.sum(axis=1) / (r_total * n_units)
    levels = np.asarray(sorted(levels, reverse=True), dtype=float)
    beta = np.quantile(sums, 1.0 - levels)
    log_p = np.log(levels)
    _, slope = ols_line(beta, log_p)
    if rng is None:
        rng = np.random.default_rng(0)
    slopes = np.empty(n_boot)
    n = len(sums)
    for b in range(n_boot):
        redraw = sums[rng.integers(0, n, size=n)]
        bb = np.quantile(redraw, 1.0 - levels)
        if bb[-1] - bb[0] <= 0:
            slopes[b] = 0.0
            continue
        _, slopes[b] = ols_line(bb, log_p)
    lo, hi = np.quantile(slopes, [0.025, 0.975])
    return {
        "beta": beta,
        "survival": levels,
        "slope": float(slope),
        "slope_ci_low": float(lo),
        "slope_ci_high": float(hi),
        "ok": bool(slope < 0 and hi < 0),
        "n_members": int(len(sums)),
    }


def hitting_time_quantiles(l2sq, threshold, qs=(0.5, 0.9)):
    """Unit-time quantiles of the first time ||omega||^2 drops below threshold.

    l2sq is (n_members, n_units + 1) at unit times; members that never
    cross contribute +inf.
    """
    x = np.asarray(l2sq, dtype=float)
    below = x <= threshold
    hit = np.where(below.any(axis=1), below.argmax(axis=1), -1)
    times = np.where(hit >= 0, hit.astype(float), np.inf)
    # order statistics, not interpolation: a quantile next to an infinite
    # entry must come out infinite, not nan
    return {float(q): float(np.quantile(times, q, method="inverted_cdf")) for q in qs}
