"""Spectral representation of zero-mean real fields on the 2-pi torus.

A field is stored by its Fourier coefficients on the canonical half
lattice: wavevectors k = (k1, k2) with k1 > 0, or k1 == 0 and k2 > 0,
listed in lexicographic (k1, k2) order.  The coefficient at -k is the
complex conjugate of the stored coefficient at k and is never stored,
and the zero mode vanishes identically, so reality and zero mean hold
by construction.  Norms are plain coefficient sums over the full signed
lattice, so every stored mode counts twice:

    l2_norm_sq(w)     = sum_k |w_k|^2        (both signs)
    h1_seminorm_sq(w) = sum_k |k|^2 |w_k|^2  (both signs)

With the coefficient normalization used throughout (the 1/2pi-integral
transform), these equal the L2 norm and the Dirichlet integral of the
physical field, which the Parseval test pins down.
"""

import struct
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

_VORT1_MAGIC = b"VORT1\x00\x00\x00"


class SpectralGrid:
    """Finite Fourier lattice |k1|, |k2| <= kmax with a forcing band.

    Parameters
    ----------
    kmax : int
        Lattice truncation; retained modes have |k1|, |k2| <= kmax.
    n_force : int
        Forcing-band threshold N.  Modes with |k|^2 <= N are "low"
        (ties are low), the rest are "high".

    The grid precomputes the canonical mode list, the low/high masks,
    and the index plans that place half-lattice coefficients into a
    zero-padded half-spectrum array of shape (pad, pad // 2 + 1) for
    dealiased products.  The padded size satisfies pad >= 3*kmax + 1 so
    quadratic convolutions of retained modes are exact.
    """

    def __init__(self, kmax, n_force):
        kmax = int(kmax)
        n_force = int(n_force)
        if kmax < 1:
            raise ValueError("kmax must be >= 1")
        if n_force < 1:
            raise ValueError("n_force must be >= 1")
        if n_force > 2 * kmax * kmax:
            raise ValueError("forcing band exceeds the lattice")
        self.kmax = kmax
        self.n_force = n_force

        k1_list = []
        k2_list = []
        for k2 in range(1, kmax + 1):
            k1_list.append(0)
            k2_list.append(k2)
        for k1 in range(1, kmax + 1):
            for k2 in range(-kmax, kmax + 1):
                k1_list.append(k1)
                k2_list.append(k2)
        self.k1 = np.array(k1_list, dtype=np.int64)
        self.k2 = np.array(k2_list, dtype=np.int64)
        order = np.lexsort((self.k2, self.k1))
        self.k1 = self.k1[order]
        self.k2 = self.k2[order]
        self.ksq = (self.k1 * self.k1 + self.k2 * self.k2).astype(np.float64)
        self.n_modes = self.k1.size
        self.low_mask = self.ksq <= n_force
        self.high_mask = ~self.low_mask
        self.n_low = int(self.low_mask.sum())
        if self.n_low == 0:
            raise ValueError("forcing band contains no modes")
        self._index = {
            (int(a), int(b)): i for i, (a, b) in enumerate(zip(self.k1, self.k2))
        }

        # Padded half-spectrum plan for exact quadratic convolution.
        self.pad = sfft.next_fast_len(3 * kmax + 1)
        self.pad_half = self.pad // 2 + 1
        self._build_fft_plan()

    def _build_fft_plan(self):
        m = self.pad
        mh = self.pad_half
        flat = lambda r, c: r * mh + c

        dir_src, dir_tgt = [], []
        conj_src, conj_tgt = [], []
        gpos_src, gpos_tgt = [], []
        gneg_src, gneg_tgt = [], []
        for i in range(self.n_modes):
            a, b = int(self.k1[i]), int(self.k2[i])
            if b > 0:
                dir_src.append(i)
                dir_tgt.append(flat(a % m, b))
            elif b < 0:
                conj_src.append(i)
                conj_tgt.append(flat((-a) % m, -b))
            else:
                dir_src.append(i)
                dir_tgt.append(flat(a % m, 0))
                conj_src.append(i)
                conj_tgt.append(flat((-a) % m, 0))
            if b >= 0:
                gpos_src.append(i)
                gpos_tgt.append(flat(a % m, b))
            else:
                gneg_src.append(i)
                gneg_tgt.append(flat((-a) % m, -b))
        as_idx = lambda x: np.array(x, dtype=np.intp)
        self._scatter_direct = (as_idx(dir_src), as_idx(dir_tgt))
        self._scatter_conj = (as_idx(conj_src), as_idx(conj_tgt))
        self._gather_pos = (as_idx(gpos_src), as_idx(gpos_tgt))
        self._gather_neg = (as_idx(gneg_src), as_idx(gneg_tgt))

    # -- identity ----------------------------------------------------------

    def __eq__(self, other):
        return (
            isinstance(other, SpectralGrid)
            and self.kmax == other.kmax
            and self.n_force == other.n_force
        )

    def __hash__(self):
        return hash((self.kmax, self.n_force))

    def __repr__(self):
        return f"SpectralGrid(kmax={self.kmax}, n_force={self.n_force})"

    def mode_index(self, k1, k2):
        """Index of stored mode (k1, k2); KeyError if not canonical."""
        return self._index[(int(k1), int(k2))]

    # -- layout conversions ------------------------------------------------

    def to_rfft(self, coeffs, out=None):
        """Scatter half-lattice coefficients into the padded half-spectrum.

        coeffs may carry leading batch axes; the result has shape
        batch + (pad, pad_half).
        """
        coeffs = np.asarray(coeffs)
        batch = coeffs.shape[:-1]
        if out is None:
            out = np.zeros(batch + (self.pad * self.pad_half,), dtype=np.complex128)
        else:
            out = out.reshape(batch + (self.pad * self.pad_half,))
            out[...] = 0.0
        src, tgt = self._scatter_direct
        out[..., tgt] = coeffs[..., src]
        src, tgt = self._scatter_conj
        out[..., tgt] = np.conj(coeffs[..., src])
        return out.reshape(batch + (self.pad, self.pad_half))

    def from_rfft(self, spec):
        """Gather half-lattice coefficients back out of a half-spectrum."""
        spec = np.asarray(spec)
        batch = spec.shape[:-2]
        flat = spec.reshape(batch + (self.pad * self.pad_half,))
        out = np.empty(batch + (self.n_modes,), dtype=np.complex128)
        src, tgt = self._gather_pos
        out[..., src] = flat[..., tgt]
        src, tgt = self._gather_neg
        out[..., src] = np.conj(flat[..., tgt])
        return out

    def to_full(self, coeffs):
        """Dense signed-lattice array indexed [k1 + kmax, k2 + kmax]."""
        coeffs = np.asarray(coeffs)
        n = 2 * self.kmax + 1
        full = np.zeros(coeffs.shape[:-1] + (n, n), dtype=np.complex128)
        r = self.k1 + self.kmax
        c = self.k2 + self.kmax
        full[..., r, c] = coeffs
        full[..., 2 * self.kmax - r, 2 * self.kmax - c] = np.conj(coeffs)
        return full

    def from_full(self, full):
        """Inverse of to_full (reads the canonical half only)."""
        full = np.asarray(full)
        return full[..., self.k1 + self.kmax, self.k2 + self.kmax]


@dataclass
class VorticityField:
    """Zero-mean real vorticity field, stored spectrally.

    coeffs is a 1-D complex array over the grid's canonical half lattice.
    """

    grid: SpectralGrid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.n_modes,):
            raise ValueError(
                f"coeffs shape {c.shape} != ({self.grid.n_modes},) for {self.grid}"
            )
        object.__setattr__(self, "coeffs", c)

    def copy(self):
        return VorticityField(self.grid, self.coeffs.copy())


@dataclass
class VelocitySpectrum:
    """Velocity components on the same half lattice as the vorticity."""

    grid: SpectralGrid
    u1: np.ndarray
    u2: np.ndarray


def zero_field(grid):
    return VorticityField(grid, np.zeros(grid.n_modes, dtype=np.complex128))


def project_low(field):
    """Forcing-band part s = P w (modes with |k|^2 <= N; ties are low)."""
    out = np.where(field.grid.low_mask, field.coeffs, 0.0 + 0.0j)
    return VorticityField(field.grid, out)


def project_high(field):
    """Complementary part l = (1 - P) w (modes with |k|^2 > N)."""
    out = np.where(field.grid.high_mask, field.coeffs, 0.0 + 0.0j)
    return VorticityField(field.grid, out)


def velocity_from_vorticity(field):
    """Velocity spectrum u_k = i(-k2, k1) |k|^-2 w_k.

    Incompressibility k . u_k = 0 holds exactly, and the velocity L2
    norm is sum_k |k|^-2 |w_k|^2 over the signed lattice.
    """
    g = field.grid
    w = field.coeffs
    u1 = -1j * g.k2 * w / g.ksq
    u2 = 1j * g.k1 * w / g.ksq
    return VelocitySpectrum(g, u1, u2)


def l2sq_array(coeffs, where=None):
    """Signed-lattice sum |w_k|^2 for stacked coefficient arrays."""
    mag = np.abs(np.asarray(coeffs)) ** 2
    if where is not None:
        mag = mag * where
    return 2.0 * mag.sum(axis=-1)


def h1sq_array(grid, coeffs, where=None):
    """Signed-lattice sum |k|^2 |w_k|^2 for stacked coefficient arrays."""
    mag = np.abs(np.asarray(coeffs)) ** 2 * grid.ksq
    if where is not None:
        mag = mag * where
    return 2.0 * mag.sum(axis=-1)


def l2_norm_sq(field):
    """Squared L2 norm: plain coefficient sum over the signed lattice."""
    return float(l2sq_array(field.coeffs))


def h1_seminorm_sq(field):
    """Squared H1 seminorm (Dirichlet integral) over the signed lattice."""
    return float(h1sq_array(field.grid, field.coeffs))


def physical_samples(field):
    """Real samples of sum_k w_k e^{i k.x} on the padded collocation grid.

    This is the synthesis the dealiased product pipeline uses.  The
    analysis-convention physical field is (1/2pi) times the spatially
    reflected version of this array; for quadratures of even powers the
    reflection is irrelevant.
    """
    g = field.grid
    spec = g.to_rfft(field.coeffs)
    return sfft.irfft2(spec, s=(g.pad, g.pad)) * (g.pad * g.pad)


def sample_gaussian_field(grid, amplitude, rng, decay=0.0):
    """Independent complex Gaussian coefficients per stored mode.

    Each stored mode k gets E|w_k|^2 = (amplitude * exp(-decay*|k|^2))^2,
    so with decay = 0 the expected l2_norm_sq is amplitude^2 times the
    number of signed modes (2 * grid.n_modes).
    """
    scale = amplitude * np.exp(-decay * grid.ksq)
    z = rng.standard_normal((grid.n_modes, 2))
    coeffs = scale * (z[:, 0] + 1j * z[:, 1]) / np.sqrt(2.0)
    return VorticityField(grid, coeffs)


# -- snapshot format -------------------------------------------------------


def write_snapshot(path, field):
    """Write a field in the VORT1 binary snapshot format.

    Layout: 8-byte magic "VORT1" (zero padded), little-endian u32 kmax,
    u32 n_force, then for each half-lattice mode in lexicographic
    (k1, k2) order two little-endian f64 values (re, im).
    """
    g = field.grid
    payload = np.empty((g.n_modes, 2), dtype="<f8")
    payload[:, 0] = field.coeffs.real
    payload[:, 1] = field.coeffs.imag
    with open(path, "wb") as fh:
        fh.write(_VORT1_MAGIC)
        fh.write(struct.pack("<II", g.kmax, g.n_force))
        fh.write(payload.tobytes())


def read_snapshot(path, grid=None):
    """Read a VORT1 snapshot; validates magic, header, and payload size."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 16 or raw[:8] != _VORT1_MAGIC:
        raise ValueError(f"{path}: not a VORT1 snapshot")
    kmax, n_force = struct.unpack("<II", raw[8:16])
    g = SpectralGrid(kmax, n_force)
    if grid is not None and grid != g:
        raise ValueError(f"{path}: snapshot grid {g} does not match {grid}")
    expect = 16 + 16 * g.n_modes
    if len(raw) != expect:
        raise ValueError(f"{path}: payload size {len(raw)} != {expect}")
    payload = np.frombuffer(raw[16:], dtype="<f8").reshape(g.n_modes, 2)
    return VorticityField(g, payload[:, 0] + 1j * payload[:, 1])
