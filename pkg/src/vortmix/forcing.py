"""Forcing-band noise covariance and its inner products.

The noise is a complex Brownian increment per stored low mode, with the
conjugate increment implied at -k.  The covariance convention, fixed
here once and verified statistically by the sampler tests and the
change-of-measure normalization test, is

    E |db_k|^2 = gamma_k * dt      (complex-mode weighting)

so the real and imaginary parts of a stored increment each carry
variance gamma_k * dt / 2.  With this convention the physical-space
noise variance is t * R / (2pi)^2 with R the signed-lattice total of
gamma, the enstrophy injection rate of the running quadratic variation
is R per unit time, and the gamma-inverse inner product below is the
exact exponent weight in the path reweighting formulas.
"""

from dataclasses import dataclass

import numpy as np

from .spectral import SpectralGrid


def _seq_sum(values):
    total = 0.0
    for v in values:
        total += float(v)
    return total


@dataclass
class ForcingSpec:
    """Covariance gamma over the stored low modes of a grid.

    gamma_low is aligned with the grid's low modes in canonical order
    and must be strictly positive everywhere in the band: the forcing
    must act on every low mode for the low-mode marginal to be
    equivalent to its reference Wiener measure.
    """

    grid: SpectralGrid
    gamma_low: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma_low, dtype=np.float64)
        if g.shape != (self.grid.n_low,):
            raise ValueError(
                f"gamma shape {g.shape} != ({self.grid.n_low},) for {self.grid}"
            )
        if not np.all(g > 0):
            raise ValueError("gamma must be strictly positive on the forcing band")
        object.__setattr__(self, "gamma_low", g)

    @property
    def low_indices(self):
        return np.flatnonzero(self.grid.low_mask)

    @property
    def total_r(self):
        """R: sum of gamma over the full signed lattice."""
        return 2.0 * _seq_sum(self.gamma_low)

    @property
    def rho(self):
        """Minimum of gamma over the band."""
        return float(self.gamma_low.min())

    @property
    def kappa(self):
        """Band-to-injection ratio kappa with N = kappa * R."""
        return self.grid.n_force / self.total_r

    def gamma_full(self):
        """gamma as a full-lattice-aligned array (zero off the band)."""
        out = np.zeros(self.grid.n_modes)
        out[self.low_indices] = self.gamma_low
        return out


def uniform_spec(grid, total_r=1.0):
    """Uniform covariance over the band with signed-lattice total R.

    Every signed low mode carries total_r / (2 * n_low); the last stored
    value absorbs the division rounding so that ForcingSpec.total_r
    reproduces total_r exactly.
    """
    if total_r <= 0:
        raise ValueError("total_r must be positive")
    n = grid.n_low
    per = total_r / (2 * n)
    gamma = np.full(n, per)
    if n > 1:
        gamma[-1] = total_r / 2.0 - _seq_sum(gamma[:-1])
    else:
        gamma[0] = total_r / 2.0
    return ForcingSpec(grid, gamma)


def spec_from_file(path, grid):
    """Load a covariance override: lines of "k1 k2 gamma".

    Every line must name a canonical stored low mode of the grid; every
    low mode must be covered exactly once; gamma must be positive.
    Blank lines and lines starting with '#' are skipped.
    """
    gamma = np.full(grid.n_low, np.nan)
    low_idx = {int(i): j for j, i in enumerate(np.flatnonzero(grid.low_mask))}
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{ln}: expected 'k1 k2 gamma', got {text!r}")
            try:
                k1, k2 = int(parts[0]), int(parts[1])
                value = float(parts[2])
            except ValueError as exc:
                raise ValueError(f"{path}:{ln}: malformed entry {text!r}") from exc
            try:
                mode = grid.mode_index(k1, k2)
            except KeyError:
                raise ValueError(
                    f"{path}:{ln}: ({k1},{k2}) is not a canonical stored mode"
                ) from None
            if not grid.low_mask[mode]:
                raise ValueError(f"{path}:{ln}: ({k1},{k2}) lies outside the band")
            slot = low_idx[mode]
            if not np.isnan(gamma[slot]):
                raise ValueError(f"{path}:{ln}: duplicate entry for ({k1},{k2})")
            if value <= 0:
                raise ValueError(f"{path}:{ln}: gamma must be positive")
            gamma[slot] = value
    if np.isnan(gamma).any():
        missing = np.flatnonzero(grid.low_mask)[np.isnan(gamma)]
        pairs = [(int(grid.k1[i]), int(grid.k2[i])) for i in missing]
        raise ValueError(f"{path}: band modes without gamma: {pairs}")
    return ForcingSpec(grid, gamma)


def sample_increment(spec, dt, rng, size=None):
    """Draw Brownian increments over [0, dt] for the stored low modes.

    Returns a complex array of shape (n_low,) or size + (n_low,).  Per
    stored mode, Re and Im are independent N(0, gamma_k dt / 2), i.e.
    E|db_k|^2 = gamma_k dt; the increment at -k is the conjugate.
    """
    shape = (spec.grid.n_low, 2) if size is None else tuple(np.atleast_1d(size)) + (
        spec.grid.n_low,
        2,
    )
    z = rng.standard_normal(shape)
    scale = np.sqrt(spec.gamma_low * dt / 2.0)
    return scale * (z[..., 0] + 1j * z[..., 1])


def gamma_inv_inner(spec, f, g):
    """Signed-lattice inner product (f, gamma^{-1} g) over the band.

    f and g are full-mode coefficient arrays (leading batch axes
    allowed) supported on the band; any nonzero high-mode entry is an
    error.  Returns the real part, which is the whole value for
    conjugate-symmetric arguments:

        (f, gamma^{-1} g) = sum_{|k|^2 <= N} conj(f_k) g_k / gamma_k
                          = 2 sum_{stored low k} Re(conj(f_k) g_k) / gamma_k
    """
    f = np.asarray(f)
    g = np.asarray(g)
    grid = spec.grid
    for name, arr in (("f", f), ("g", g)):
        if arr.shape[-1] != grid.n_modes:
            raise ValueError(f"{name} is not a full-mode coefficient array")
        if np.any(arr[..., grid.high_mask] != 0):
            raise ValueError(f"{name} has support outside the forcing band")
    idx = spec.low_indices
    fl = f[..., idx]
    gl = g[..., idx]
    inner = (fl.real * gl.real + fl.imag * gl.imag) / spec.gamma_low
    return 2.0 * inner.sum(axis=-1)


def gamma_inv_inner_low(spec, f_low, g_low):
    """gamma_inv_inner on band-only arrays (..., n_low), no support check."""
    inner = (f_low.real * g_low.real + f_low.imag * g_low.imag) / spec.gamma_low
    return 2.0 * inner.sum(axis=-1)
