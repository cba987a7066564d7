"""Change of measure between the forced band path and driftless noise.

The reference law of the band path is the driftless random walk with
the forcing covariance, s_{i+1} = s_i + db_i: pure Wiener increments,
no drift of any kind.  The log density of the dynamics with respect to
that reference along a path with steps i = 0..n-1 is the left-point
discretization of the classical exponent,

    W = sum_i (f_i, gamma^{-1} ds_i)  -  (dt/2) sum_i (f_i, gamma^{-1} f_i)

with f_i = P F(omega(t_i)) the full band drift at the left endpoint of
step i (linear part included) and ds_i = s_{i+1} - s_i the raw path
increment.  Two exact finite-dt facts make this testable without limits:

* Because f_i depends only on the path up to t_i and ds_i is a centred
  Gaussian under the reference, each step integrates exactly, so
  E[exp W] = 1 under reference sampling at any dt.
* Tilting the reference by exp(W) turns ds_i ~ N(0, gamma dt) into
  ds_i ~ N(f_i dt, gamma dt), i.e. the reweighted paths follow the
  left-point Euler scheme of the band dynamics.  Reweighted
  expectations therefore agree with direct forward simulation up to
  the O(dt) difference between that scheme and the exponential
  integrator, which the cross-validation test holds under its
  statistical tolerance.
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import _evaluator_for
from .forcing import gamma_inv_inner_low, sample_increment
from .integrator import ExponentialStepper
from .reduction import SPath, _check_high
from .spectral import VorticityField
from .util import KahanAccumulator, KahanArray


@dataclass
class GirsanovLog:
    """Decomposed log density of a band path under the forced law."""

    log_weight: float
    pairing_term: float
    quadratic_term: float
    n_steps: int

    @property
    def weight(self):
        return float(np.exp(self.log_weight))


def _band_drift_low(grid, evaluator, w):
    """f = P F(w) restricted to the band slots, batched."""
    b = evaluator.apply(w)
    low = grid.low_mask
    return b[..., low] - grid.ksq[low] * w[..., low]


def reference_increments(spath):
    """Raw band-path increments ds_i = s_{i+1} - s_i.

    For a path generated by the driftless reference recursion these
    recover the sampled noise up to rounding; for any other path they
    are simply the increments the density formula pairs against.
    """
    return spath.values[1:] - spath.values[:-1]


def log_density(spath, l0, fspec, increments=None, clip=None):
    """Log density W of a band path, solving the high modes alongside.

    l0 is the initial high state (full coefficients, zero on the band).
    increments overrides the reference noise increments (n_steps, n_low)
    when the exact sampled values are available; otherwise they are
    reconstructed from the path.  clip, if given, clamps the returned
    log weight to [-clip, clip] (the decomposed terms are left raw).
    """
    grid = spath.grid
    if fspec.grid != grid:
        raise ValueError("forcing spec grid does not match path grid")
    arr = _check_high(grid, l0)
    if arr.ndim != 1:
        raise ValueError("log_density takes a single initial high state")
    dt = spath.dt
    n = spath.n_steps
    if increments is None:
        increments = reference_increments(spath)
    increments = np.asarray(increments)
    if increments.shape != (n, grid.n_low):
        raise ValueError("increments must be (n_steps, n_low)")

    stepper = ExponentialStepper(grid, dt)
    evaluator = _evaluator_for(grid)
    low = grid.low_mask

    pairing = KahanAccumulator()
    quad = KahanAccumulator()
    w = arr.copy()
    for i in range(n):
        w[low] = spath.values[i]
        f_low = _band_drift_low(grid, evaluator, w)
        pairing.add(gamma_inv_inner_low(fspec, f_low, increments[i]))
        quad.add(gamma_inv_inner_low(fspec, f_low, f_low))
        w = stepper.advance(w)
        w[low] = 0.0
    log_w = pairing.total - 0.5 * dt * quad.total
    if clip is not None:
        log_w = float(np.clip(log_w, -clip, clip))
    return GirsanovLog(
        log_weight=log_w,
        pairing_term=pairing.total,
        quadratic_term=quad.total,
        n_steps=n,
    )


def reference_s_path(fspec, s0_low, t_final, dt, rng):
    """Sample the driftless band reference; returns (SPath, increments).

    The path is the plain random walk s' = s + db with db drawn from
    the forcing covariance, so exp(log_density) over this path has unit
    mean.
    """
    grid = fspec.grid
    s0 = np.asarray(s0_low, dtype=np.complex128)
    if s0.shape != (grid.n_low,):
        raise ValueError("s0_low must be a band coefficient vector")
    n = round(t_final / dt)
    if not np.isclose(n * dt, t_final, rtol=1e-9, atol=0.0) or n < 1:
        raise ValueError("t_final must be a positive multiple of dt")
    db = sample_increment(fspec, dt, rng, size=n)
    values = np.empty((n + 1, grid.n_low), dtype=np.complex128)
    values[0] = s0
    values[1:] = s0 + np.cumsum(db, axis=0)
    return (
        SPath(grid=grid, dt=dt, times=np.arange(n + 1) * dt, values=values),
        db,
    )


def reweighted_expectation(
    fspec,
    initial,
    t_final,
    dt,
    func,
    n_paths,
    rng,
    chunk=512,
):
    """E_forced[func] by reweighting driftless band samples.

    initial is the full starting state (a VorticityField or coefficient
    array); its band part seeds the reference paths, its off-band part
    seeds the high-mode solve.  func maps a batch of final full states
    (m, n_modes) to a batch of scalars.  Returns a dict with the
    estimate, the unweighted reference estimate, the effective sample
    size, the weight moments, and the per-path log weights.

    Noise is consumed from the shared rng in member blocks of size
    chunk; reruns with the same generator state and the same chunk are
    bitwise reproducible.
    """
    if isinstance(initial, VorticityField):
        coeffs0 = initial.coeffs
        grid = initial.grid
    else:
        coeffs0 = np.asarray(initial, dtype=np.complex128)
        grid = fspec.grid
    if fspec.grid != grid:
        raise ValueError("forcing spec grid does not match initial state grid")
    low = grid.low_mask
    s0 = coeffs0[low].copy()
    l0 = np.where(low, 0.0 + 0.0j, coeffs0)

    n = round(t_final / dt)
    if not np.isclose(n * dt, t_final, rtol=1e-9, atol=0.0) or n < 1:
        raise ValueError("t_final must be a positive multiple of dt")

    stepper = ExponentialStepper(grid, dt)
    evaluator = _evaluator_for(grid)

    log_weights = np.empty(n_paths)
    values = np.empty(n_paths)
    done = 0
    while done < n_paths:
        m = min(chunk, n_paths - done)
        db = sample_increment(fspec, dt, rng, size=(m, n))
        w = np.broadcast_to(coeffs0, (m, grid.n_modes)).copy()
        pairing = KahanArray(m)
        quad = KahanArray(m)
        s = np.broadcast_to(s0, (m, grid.n_low)).copy()
        for i in range(n):
            f_low = _band_drift_low(grid, evaluator, w)
            pairing.add(gamma_inv_inner_low(fspec, f_low, db[:, i]))
            quad.add(gamma_inv_inner_low(fspec, f_low, f_low))
            w = stepper.advance(w)
            s = s + db[:, i]
            w[:, low] = s
        log_weights[done : done + m] = pairing.total - 0.5 * dt * quad.total
        values[done : done + m] = np.asarray(func(w), dtype=float)
        done += m

    weights = np.exp(log_weights)
    mean_w = float(weights.mean())
    ess = float(weights.sum() ** 2 / np.square(weights).sum())
    return {
        "estimate": float((weights * values).mean()),
        "reference_estimate": float(values.mean()),
        "mean_weight": mean_w,
        "se_weight": float(weights.std(ddof=1) / np.sqrt(n_paths)),
        "ess": ess,
        "n_paths": int(n_paths),
        "low_ess": bool(ess < 0.01 * n_paths),
        "log_weights": log_weights,
    }
