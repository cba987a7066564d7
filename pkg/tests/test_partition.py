"""utests for interval classification, split locality, and the dyadic bumps.

Hand-worked classification facts used below (T = 2 throughout, so a
single unit takes the short threshold beta*T/2 = beta and longer
intervals take beta*length):

* levels [8,0,0,0], beta=100: the spike alone is heavy (256 > 100), the
  pair (0,2) is heavy (257 > 200), nothing reaches block 1 -> exactly
  one large block.
* levels [0,3,0,0], beta=100, beta'=2: nothing is heavy, but the last
  unit of block 0 carries 8 > beta'*T = 4 -> block 0 is flagged large.
* levels [0,1,3,0], beta=4, beta'=2: (1,3) is heavy (10 > 8) and its
  closure covers both blocks -> one merged large component, while the
  two pieces of the split at 2 classify small / large.
"""

import itertools

import numpy as np
import pytest

from vortmix.partition import (
    PartitionParams,
    beta_of,
    classify,
    gamma_of,
    phi,
    read_kvector,
    read_partition,
    verify_concatenation,
    verify_small_large,
    write_kvector,
    write_partition,
)

P42 = PartitionParams(t_block=2, beta=4.0, beta_prime=2.0)
P100 = PartitionParams(t_block=2, beta=100.0, beta_prime=2.0)
PFLAG = PartitionParams(t_block=2, beta=100.0, beta_prime=1.0)


def labels(part):
    return [c[2] for c in part.components]


# -- parameters and thresholds ---------------------------------------------


def test_params_validation():
    with pytest.raises(ValueError):
        PartitionParams(t_block=0, beta=4.0, beta_prime=2.0)
    with pytest.raises(ValueError):
        PartitionParams(t_block=2.5, beta=4.0, beta_prime=2.0)
    with pytest.raises(ValueError):
        PartitionParams(t_block=2, beta=4.0, beta_prime=4.0)
    with pytest.raises(ValueError):
        PartitionParams(t_block=2, beta=4.0, beta_prime=0.0)


def test_beta_of_branches():
    p = PartitionParams(t_block=4, beta=2.0, beta_prime=1.0)
    assert beta_of(p, 1) == 4.0   # short branch: beta * T / 2
    assert beta_of(p, 2) == 4.0   # boundary 2|L| = T stays on the short branch
    assert beta_of(p, 3) == 6.0   # long branch: beta * |L|
    assert beta_of(p, 4) == 8.0
    with pytest.raises(ValueError):
        beta_of(p, 0)


def test_gamma_of():
    kv = [0, 1, 3, 2]
    assert gamma_of(kv, 0, 4) == 1 + 2 + 8 + 4
    assert gamma_of(kv, 1, 3) == 2 + 8
    assert gamma_of(kv, 2, 3) == 8
    with pytest.raises(ValueError):
        gamma_of(kv, 2, 2)
    with pytest.raises(ValueError):
        gamma_of(kv, 0, 5)


def test_level_vector_validation():
    with pytest.raises(ValueError, match="nonnegative"):
        classify([0, -1], P42)
    with pytest.raises(ValueError, match="integers"):
        classify([0.5, 1.0], P42)
    with pytest.raises(ValueError, match="exact comparison range"):
        classify([60, 0], P42)
    with pytest.raises(ValueError, match="nonempty"):
        classify([], P42)
    with pytest.raises(ValueError, match="multiple of t_block"):
        classify([0, 0, 0], P42)
    # integral floats are accepted
    assert labels(classify(np.array([0.0, 0.0]), P42)) == ["small"]


# -- classification hand cases ---------------------------------------------


def test_all_zero_is_all_small():
    part = classify(np.zeros(8, dtype=int), P42)
    assert part.components == [
        (0, 2, "small"), (2, 4, "small"), (4, 6, "small"), (6, 8, "small")
    ]
    assert not part.block_large.any()
    assert part.n_blocks == 4
    assert part.small_components() == part.components
    assert part.large_components() == []


def test_isolated_spike_is_one_large_block():
    part = classify([8, 0, 0, 0], P100)
    assert part.components == [(0, 2, "large"), (2, 4, "small")]
    assert part.block_large.tolist() == [True, False]


def test_boundary_unit_flags_its_block():
    # 2^3 = 8 exceeds beta' T = 4 on the last unit of block 0; no
    # interval is heavy at beta = 100
    part = classify([0, 3, 0, 0], P100)
    assert part.components == [(0, 2, "large"), (2, 4, "small")]
    # the same level on a non-final unit does nothing
    quiet = classify([3, 0, 0, 0], P100)
    assert labels(quiet) == ["small", "small"]


def test_adjacent_large_blocks_merge():
    part = classify([0, 3, 0, 3], P100)
    assert part.components == [(0, 4, "large")]
    assert part.block_large.tolist() == [True, True]


def test_heavy_closure_spans_blocks():
    part = classify([0, 1, 3, 0], P42)
    assert part.components == [(0, 4, "large")]


def test_classification_tiling_and_separation():
    rng = np.random.default_rng(123)
    for trial in range(300):
        T = int(rng.choice([2, 4]))
        nb = int(rng.integers(1, 7))
        kv = rng.integers(0, 7, size=nb * T)
        part = classify(kv, P42 if T == 2 else PartitionParams(4, 4.0, 2.0))
        comps = part.components
        # tiling: contiguous, exact cover of [0, t)
        assert comps[0][0] == 0 and comps[-1][1] == kv.size
        for (a, b, lab), (a2, b2, lab2) in zip(comps, comps[1:]):
            assert b == a2
            # separation: maximal runs leave no two adjacent large pieces
            assert not (lab == "large" and lab2 == "large")
        for a, b, lab in comps:
            assert (b - a) % T == 0
            if lab == "small":
                assert b - a == T


def test_raising_a_level_never_shrinks_the_large_set():
    rng = np.random.default_rng(321)
    p = PartitionParams(2, 10.0, 1.0)
    for trial in range(200):
        kv = rng.integers(0, 5, size=8)
        before = classify(kv, p).block_large
        bumped = kv.copy()
        bumped[rng.integers(0, 8)] += 1
        after = classify(bumped, p).block_large
        assert np.all(after[before])  # coverage only grows


# -- per-component structure ----------------------------------------------


def test_verify_small_large_hand_case():
    out = verify_small_large([0, 1, 3, 0], P42)
    assert out["ok"]
    recs = out["components"]
    assert len(recs) == 1 and recs[0]["label"] == "large"
    assert recs[0]["cover_ok"] and recs[0]["quarter_ok"]
    assert recs[0]["closure_blocks"] == 2


def test_verify_small_large_randomized():
    rng = np.random.default_rng(777)
    param_pool = [
        PartitionParams(2, 4.0, 2.0),
        PartitionParams(2, 100.0, 1.0),
        PartitionParams(4, 6.0, 0.5),
    ]
    for trial in range(500):
        p = param_pool[trial % len(param_pool)]
        nb = int(rng.integers(1, 1 + 24 // p.t_block))
        kv = rng.integers(0, 7, size=nb * p.t_block)
        out = verify_small_large(kv, p)
        assert out["ok"], (kv.tolist(), p)
        for rec in out["components"]:
            if rec["label"] == "small":
                assert rec["gamma"] <= p.beta * p.t_block
            else:
                assert rec["cover_ok"]


# -- split locality --------------------------------------------------------


def test_concatenation_straddling_heavy_interval():
    chk = verify_concatenation([0, 1, 3, 0], [2], P42)
    assert chk.admissible          # small piece next to large piece
    assert not chk.junction_quiet  # (1,3) is heavy across the junction
    assert not chk.pieces_match    # global merges what the pieces cannot
    assert chk.ok                  # and those two facts agree
    j = chk.junctions[0]
    assert j["position"] == 2
    assert j["heavy_straddler"] is not None


def test_concatenation_quiet_case_matches():
    chk = verify_concatenation([0, 0, 0, 0], [2], P42)
    assert chk.admissible and chk.junction_quiet and chk.pieces_match and chk.ok


def test_concatenation_abutting_large_is_inadmissible():
    # both pieces classify large via the boundary flag; globally they
    # merge into one component, which no piecewise concatenation can
    # produce, so the split is scoped out rather than failed
    chk = verify_concatenation([0, 3, 0, 3], [2], PFLAG)
    assert not chk.admissible
    assert chk.junction_quiet
    assert not chk.pieces_match
    assert chk.ok


def test_concatenation_precondition_single_component_pieces():
    with pytest.raises(ValueError, match="single"):
        verify_concatenation([5, 0, 0, 0, 0, 0, 0, 0], [4], P42)


def test_concatenation_split_validation():
    with pytest.raises(ValueError, match="interior multiples"):
        verify_concatenation([0, 0, 0, 0], [1], P42)
    with pytest.raises(ValueError, match="interior multiples"):
        verify_concatenation([0, 0, 0, 0], [4], P42)
    with pytest.raises(ValueError, match="duplicate"):
        verify_concatenation([0, 0, 0, 0, 0, 0], [2, 2], P42)


def test_concatenation_exhaustive_small_scan():
    # every level vector in {0..3}^4, split in the middle: the locality
    # equivalence must hold whenever the split is admissible
    seen_mismatch = seen_inadmissible = 0
    for kv in itertools.product(range(4), repeat=4):
        chk = verify_concatenation(list(kv), [2], P42)
        assert chk.ok, kv
        if chk.admissible:
            assert chk.pieces_match == chk.junction_quiet, kv
        else:
            seen_inadmissible += 1
        if not chk.pieces_match:
            seen_mismatch += 1
    assert seen_mismatch > 0
    assert seen_inadmissible > 0


# -- dyadic partition of unity --------------------------------------------


def test_phi_sums_to_one():
    rng = np.random.default_rng(55)
    scale = 1.0
    x = rng.uniform(0.0, 2.0**10 * scale, size=10_000)
    total = sum(phi(x, k, scale) for k in range(13))
    assert np.max(np.abs(total - 1.0)) <= 1e-12


def test_phi_at_most_two_active():
    rng = np.random.default_rng(56)
    x = rng.uniform(0.0, 2.0**8, size=2000)
    values = np.stack([phi(x, k, 1.0) for k in range(11)])
    assert np.all((values > 0).sum(axis=0) <= 2)
    assert np.all(values >= 0.0)
    assert np.all(values <= 1.0)


def test_phi_supports():
    s = 0.5
    x = np.linspace(0.0, 40.0, 4001)
    p0 = phi(x, 0, s)
    assert np.all(p0[x <= 2 * s] == 1.0)
    assert np.all(p0[x >= 4 * s] == 0.0)
    for k in (1, 2, 3):
        pk = phi(x, k, s)
        assert np.all(pk[x <= 2**k * s] == 0.0)
        assert np.all(pk[x >= 2 ** (k + 2) * s] == 0.0)
        inside = (x > 2**k * s * 1.5) & (x < 2 ** (k + 1) * s * 1.5)
        assert np.all(pk[inside] > 0.0)


def test_phi_validation():
    with pytest.raises(ValueError):
        phi(1.0, -1, 1.0)
    with pytest.raises(ValueError):
        phi(1.0, 0.5, 1.0)
    with pytest.raises(ValueError):
        phi(1.0, 0, 0.0)


# -- file io ---------------------------------------------------------------


def test_kvector_roundtrip(tmp_path):
    p = tmp_path / "kv.txt"
    kv = np.array([0, 3, 1, 4], dtype=np.int64)
    write_kvector(p, kv)
    assert np.array_equal(read_kvector(p), kv)


def test_kvector_read_layouts(tmp_path):
    p = tmp_path / "kv.txt"
    p.write_text("0 1  # trailing comment\n\n2\n 3 4\n", encoding="utf-8")
    assert np.array_equal(read_kvector(p), [0, 1, 2, 3, 4])
    p.write_text("0 one 2\n", encoding="utf-8")
    with pytest.raises(ValueError, match="non-integer"):
        read_kvector(p)
    p.write_text("# nothing\n", encoding="utf-8")
    with pytest.raises(ValueError, match="no levels"):
        read_kvector(p)


def test_partition_roundtrip(tmp_path):
    part = classify([0, 1, 3, 0, 0, 0], P42)
    p = tmp_path / "part.txt"
    write_partition(p, part)
    assert read_partition(p) == part.components


def test_partition_read_validation(tmp_path):
    p = tmp_path / "part.txt"
    p.write_text("0 2 medium\n", encoding="utf-8")
    with pytest.raises(ValueError, match="expected 'start end label'"):
        read_partition(p)
    p.write_text("0 2\n", encoding="utf-8")
    with pytest.raises(ValueError, match="expected 'start end label'"):
        read_partition(p)
