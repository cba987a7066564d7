"""utests for the forcing band: covariance specs, files, increments, pairings."""

import numpy as np
import pytest

from vortmix.forcing import (
    ForcingSpec,
    gamma_inv_inner,
    gamma_inv_inner_low,
    sample_increment,
    spec_from_file,
    uniform_spec,
)
from vortmix.spectral import SpectralGrid

_grids = {}


def get_grid(kmax=4, n_force=2):
    if (kmax, n_force) not in _grids:
        _grids[(kmax, n_force)] = SpectralGrid(kmax, n_force)
    return _grids[(kmax, n_force)]


def write_cov(tmp_path, text, name="cov.txt"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


# -- spec construction -----------------------------------------------------


def test_uniform_spec_total_is_exact():
    g = get_grid(4, 2)
    for r in (1.0, 0.3, 7.0, 1.0 / 3.0):
        spec = uniform_spec(g, r)
        assert spec.total_r == r  # compensated construction, no rounding slack
        assert np.all(spec.gamma_low > 0)
    with pytest.raises(ValueError):
        uniform_spec(g, 0.0)
    with pytest.raises(ValueError):
        uniform_spec(g, -1.0)


def test_spec_validation():
    g = get_grid(4, 2)
    with pytest.raises(ValueError):
        ForcingSpec(g, np.ones(3))  # band has 4 stored modes
    with pytest.raises(ValueError, match="strictly positive"):
        ForcingSpec(g, np.array([1.0, 1.0, 0.0, 1.0]))


def test_spec_derived_quantities():
    g = get_grid(4, 2)
    gamma = np.array([0.1, 0.2, 0.3, 0.4])
    spec = ForcingSpec(g, gamma)
    assert spec.total_r == 2.0
    assert spec.rho == 0.1
    assert spec.kappa == g.n_force / 2.0
    full = spec.gamma_full()
    assert np.array_equal(full[g.low_mask], gamma)
    assert np.all(full[g.high_mask] == 0.0)
    assert np.array_equal(spec.low_indices, np.flatnonzero(g.low_mask))


# -- covariance files ------------------------------------------------------


def test_spec_from_file_good(tmp_path):
    g = get_grid(4, 2)
    # band modes of (kmax=4, N=2): (0,1), (1,-1), (1,0), (1,1)
    p = write_cov(
        tmp_path,
        "# per-mode gamma\n"
        "1 0 0.25\n"
        "\n"
        "0 1 0.125\n"
        "1 1 0.0625\n"
        "1 -1 0.0625\n",
    )
    spec = spec_from_file(p, g)
    assert spec.total_r == 2 * (0.25 + 0.125 + 0.0625 + 0.0625)
    assert spec.gamma_low[list(spec.low_indices).index(g.mode_index(1, 0))] == 0.25


@pytest.mark.parametrize(
    "body, message",
    [
        ("0 1 0.1\n1 0 0.1\n1 1 0.1\n", "band modes without gamma"),
        ("0 1 0.1\n0 1 0.2\n1 0 0.1\n1 -1 0.1\n1 1 0.1\n", "duplicate entry"),
        ("0 -1 0.1\n", "not a canonical stored mode"),
        ("2 2 0.1\n", "outside the band"),
        ("0 1 zebra\n", "malformed entry"),
        ("0 1\n", "expected 'k1 k2 gamma'"),
        ("0 1 -0.5\n", "gamma must be positive"),
    ],
)
def test_spec_from_file_errors(tmp_path, body, message):
    g = get_grid(4, 2)
    p = write_cov(tmp_path, body)
    with pytest.raises(ValueError, match=message):
        spec_from_file(p, g)


def test_spec_from_file_errors_carry_line_numbers(tmp_path):
    g = get_grid(4, 2)
    p = write_cov(tmp_path, "0 1 0.1\n# fine\n9 9 0.1\n")
    with pytest.raises(ValueError, match=r"cov\.txt:3"):
        spec_from_file(p, g)


# -- increments ------------------------------------------------------------


def test_increment_shapes():
    spec = uniform_spec(get_grid(4, 2), 1.0)
    rng = np.random.default_rng(0)
    one = sample_increment(spec, 0.01, rng)
    assert one.shape == (4,) and one.dtype == np.complex128
    batch = sample_increment(spec, 0.01, rng, size=7)
    assert batch.shape == (7, 4)
    grid2 = sample_increment(spec, 0.01, rng, size=(3, 5))
    assert grid2.shape == (3, 5, 4)


def test_increment_determinism():
    spec = uniform_spec(get_grid(4, 2), 1.0)
    a = sample_increment(spec, 0.01, np.random.default_rng(33), size=10)
    b = sample_increment(spec, 0.01, np.random.default_rng(33), size=10)
    assert np.array_equal(a, b)


def test_increment_variance_matches_gamma():
    g = get_grid(4, 2)
    gamma = np.array([0.05, 0.1, 0.2, 0.15])
    spec = ForcingSpec(g, gamma)
    dt = 0.02
    rng = np.random.default_rng(91)
    db = sample_increment(spec, dt, rng, size=20000)
    # complex-mode convention: E|db_k|^2 = gamma_k dt, split evenly
    assert np.max(np.abs(np.mean(np.abs(db) ** 2, axis=0) / (gamma * dt) - 1.0)) < 0.05
    assert np.max(np.abs(np.var(db.real, axis=0) / (gamma * dt / 2) - 1.0)) < 0.07
    assert np.max(np.abs(np.mean(db.real, axis=0))) < 4 * np.sqrt(gamma.max() * dt / 20000)


# -- weighted inner products ----------------------------------------------


def test_gamma_inv_inner_matches_brute():
    g = get_grid(4, 2)
    gamma = np.array([0.3, 0.7, 0.4, 0.9])
    spec = ForcingSpec(g, gamma)
    rng = np.random.default_rng(17)
    f = np.zeros(g.n_modes, dtype=np.complex128)
    h = np.zeros(g.n_modes, dtype=np.complex128)
    idx = spec.low_indices
    f[idx] = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    h[idx] = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    brute = 2.0 * sum(
        (np.conj(f[i]) * h[i]).real / gamma[j] for j, i in enumerate(idx)
    )
    assert abs(gamma_inv_inner(spec, f, h) - brute) < 1e-13 * abs(brute)
    assert abs(gamma_inv_inner_low(spec, f[idx], h[idx]) - brute) < 1e-13 * abs(brute)


def test_gamma_inv_inner_rejects_high_support():
    g = get_grid(4, 2)
    spec = uniform_spec(g, 1.0)
    f = np.zeros(g.n_modes, dtype=np.complex128)
    f[g.mode_index(3, 3)] = 1.0
    ok = np.zeros(g.n_modes, dtype=np.complex128)
    with pytest.raises(ValueError, match="outside the forcing band"):
        gamma_inv_inner(spec, f, ok)
    with pytest.raises(ValueError, match="outside the forcing band"):
        gamma_inv_inner(spec, ok, f)
    with pytest.raises(ValueError, match="full-mode"):
        gamma_inv_inner(spec, np.zeros(3, dtype=np.complex128), ok)


def test_gamma_inv_inner_batched():
    g = get_grid(4, 2)
    spec = uniform_spec(g, 2.0)
    rng = np.random.default_rng(29)
    f = np.zeros((6, g.n_modes), dtype=np.complex128)
    f[:, spec.low_indices] = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
    out = gamma_inv_inner(spec, f, f)
    assert out.shape == (6,)
    for i in range(6):
        assert np.isclose(out[i], gamma_inv_inner(spec, f[i], f[i]), rtol=1e-14)
    assert np.all(out > 0)
