"""utests for seed derivation and the numeric helpers."""

import numpy as np
import pytest

from vortmix.seeding import derive_rng, derive_seed
from vortmix.util import (
    KahanAccumulator,
    KahanArray,
    batch_means_se,
    block_bootstrap_slope,
    bootstrap_mean_ci,
    kahan_sum,
    ols_line,
)


# -- seeding ---------------------------------------------------------------


def test_derive_seed_is_stable_and_labelled():
    assert derive_seed(7, "ensemble", 0) == derive_seed(7, "ensemble", 0)
    assert derive_seed(7, "ensemble", 0) != derive_seed(7, "ensemble", 1)
    assert derive_seed(7, "ensemble", 0) != derive_seed(7, "coupling", 0)
    assert derive_seed(7, "ensemble", 0) != derive_seed(8, "ensemble", 0)
    # labels are part of the tag, not just their hash-joined concatenation
    assert derive_seed(7, "a:b", 0) != derive_seed(7, "a", 0)


def test_derive_rng_streams_are_independent_and_reproducible():
    a = derive_rng(11, "x").standard_normal(8)
    b = derive_rng(11, "x").standard_normal(8)
    c = derive_rng(11, "y").standard_normal(8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


# -- compensated summation -------------------------------------------------


def test_kahan_beats_naive_on_adversarial_stream():
    # 1 followed by many tiny terms that a naive float sum drops entirely
    values = np.concatenate([[1.0], np.full(10_000, 1e-16)])
    naive = 0.0
    for v in values:
        naive += v
    exact = 1.0 + 1e-12
    assert abs(kahan_sum(values) - exact) < 1e-15
    assert abs(naive - exact) > 1e-13  # the failure mode being compensated


def test_kahan_accumulator_running_total():
    acc = KahanAccumulator()
    for v in (0.1, 0.2, 0.3):
        out = acc.add(v)
    assert out == acc.total
    assert abs(acc.total - 0.6) < 1e-15


def test_kahan_array():
    acc = KahanArray(3)
    for _ in range(10_000):
        acc.add([1e-16, 1e-16, 1.0])
    assert np.allclose(acc.total[:2], 1e-12, rtol=1e-12)
    assert acc.total[2] == 10_000.0


# -- fits and resampling ---------------------------------------------------


def test_ols_line_exact_on_a_line():
    x = np.array([0.0, 1.0, 2.0, 5.0])
    a, b = ols_line(x, 3.0 - 2.0 * x)
    assert abs(a - 3.0) < 1e-12
    assert abs(b + 2.0) < 1e-12
    with pytest.raises(ValueError, match="degenerate"):
        ols_line(np.ones(4), np.arange(4.0))


def test_block_bootstrap_slope_centers_on_the_fit():
    rng = np.random.default_rng(5)
    x = np.arange(40.0)
    y = 1.0 - 0.7 * x + 0.1 * rng.standard_normal(40)
    slopes = block_bootstrap_slope(x, y, 400, np.random.default_rng(6))
    assert slopes.shape == (400,)
    assert abs(np.median(slopes) + 0.7) < 0.05
    assert slopes.std() < 0.05


def test_bootstrap_mean_ci_covers_the_mean():
    rng = np.random.default_rng(7)
    samples = rng.standard_normal(2000) + 4.0
    lo, hi = bootstrap_mean_ci(samples, 500, np.random.default_rng(8))
    assert lo < samples.mean() < hi
    assert lo < 4.0 < hi
    assert hi - lo < 0.2


def test_batch_means_se():
    rng = np.random.default_rng(9)
    x = rng.standard_normal(2000)
    se = batch_means_se(x)
    # iid series: batch means SE agrees with the plain SE within noise
    assert abs(se - x.std(ddof=1) / np.sqrt(2000)) < 0.02
    # short series still split into at least two batches
    assert batch_means_se(np.ones(3), n_batches=4) == 0.0
    with pytest.raises(ValueError, match="too few"):
        batch_means_se(np.ones(1))
    with pytest.raises(ValueError, match="too few"):
        batch_means_se(np.array([]))
