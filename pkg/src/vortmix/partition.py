"""Interval bookkeeping for dyadic activity records.

A run of t unit time intervals carries a vector of dyadic levels
k_1..k_t >= 0; the weight of an interval L = (a, b] of units is

    gamma_L = sum_{n in L} 2^{k_n}

and its threshold is

    beta(L) = beta * |L|      if 2 |L| > T,
              beta * T / 2    otherwise,

with T the block length (the time axis splits into blocks of T units)
and beta > beta' > 0 fixed parameters.  An interval is *heavy* when
gamma_L > beta(L); a block is *flagged* when the level of its last
unit alone exceeds beta' T.  The classification covers every heavy
interval by the smallest union of blocks containing it, adds the
flagged blocks, and takes maximal runs of covered blocks as the large
components; every remaining block is its own small component.

The two verifiers check the structural facts the classification is
used for: per-component weight bounds (small components are quiet,
large components carry at least a quarter of their nominal weight on
heavy closures), and locality (classification commutes with splitting
the time axis at block boundaries, exactly when no heavy interval
straddles a junction).  The locality check requires every piece to
classify into a single component, and the equivalence is asserted only
for admissible splits, where the per-piece classifications do not abut
large components across a junction; abutting large components merge
globally but cannot merge piecewise, so such splits are outside the
equivalence and are reported as inadmissible instead.
"""

from dataclasses import dataclass

import numpy as np

# gamma values are compared against float thresholds, so they must be
# exactly representable in a double
_GAMMA_LIMIT = 2**53


def _validate_kvector(kvec):
    kv = np.asarray(kvec)
    if kv.ndim != 1 or kv.size == 0:
        raise ValueError("level vector must be a nonempty 1-D array")
    if not np.issubdtype(kv.dtype, np.integer):
        if not np.all(kv == np.floor(kv)):
            raise ValueError("levels must be integers")
    kv = kv.astype(np.int64)
    if np.any(kv < 0):
        raise ValueError("levels must be nonnegative")
    if kv.size * 2 ** int(kv.max()) >= _GAMMA_LIMIT:
        raise ValueError("level vector weight exceeds the exact comparison range")
    return kv


@dataclass(frozen=True)
class PartitionParams:
    """Block length and weight thresholds for the classification."""

    t_block: int
    beta: float
    beta_prime: float

    def __post_init__(self):
        if int(self.t_block) != self.t_block or self.t_block < 1:
            raise ValueError("t_block must be a positive integer")
        if not 0 < self.beta_prime < self.beta:
            raise ValueError("need 0 < beta_prime < beta")


def beta_of(params, length):
    """Threshold beta(L) for an interval of the given unit length."""
    if length < 1:
        raise ValueError("interval length must be positive")
    if 2 * length > params.t_block:
        return params.beta * length
    return params.beta * params.t_block / 2.0


def gamma_of(kvec, a, b):
    """Weight of the unit interval (a, b], as an int."""
    kv = _validate_kvector(kvec)
    if not 0 <= a < b <= kv.size:
        raise ValueError("interval out of range")
    return int((2 ** kv[a:b]).sum())


@dataclass
class IntervalPartition:
    """Classification of the time axis into large and small components.

    components is a list of (start, end, label) in unit coordinates
    with label "large" or "small"; large components are maximal runs of
    covered blocks, small components are single blocks.
    """

    t: int
    t_block: int
    block_large: np.ndarray
    components: list

    def __eq__(self, other):
        return (
            isinstance(other, IntervalPartition)
            and self.t == other.t
            and self.t_block == other.t_block
            and self.components == other.components
        )

    @property
    def n_blocks(self):
        return self.t // self.t_block

    def large_components(self):
        return [c for c in self.components if c[2] == "large"]

    def small_components(self):
        return [c for c in self.components if c[2] == "small"]


def _heavy_intervals(kv, params):
    """All heavy intervals (a, b) of a level vector, as index arrays."""
    t = kv.size
    pow2 = 2 ** kv
    prefix = np.concatenate([[0], np.cumsum(pow2)])
    a_idx, b_idx = np.triu_indices(t + 1, k=1)
    gam = (prefix[b_idx] - prefix[a_idx]).astype(np.float64)
    ln = b_idx - a_idx
    thresh = np.where(
        2 * ln > params.t_block,
        params.beta * ln,
        params.beta * params.t_block / 2.0,
    )
    heavy = gam > thresh
    return a_idx[heavy], b_idx[heavy]


def _flagged_blocks(kv, params):
    nb = kv.size // params.t_block
    last = kv[np.arange(1, nb + 1) * params.t_block - 1]
    return (2.0**last) > params.beta_prime * params.t_block


def classify(kvec, params):
    """Large/small classification of the blocks of a level vector."""
    kv = _validate_kvector(kvec)
    T = params.t_block
    if kv.size % T != 0:
        raise ValueError("vector length must be a multiple of t_block")
    nb = kv.size // T

    a_idx, b_idx = _heavy_intervals(kv, params)
    cover = np.zeros(nb + 1, dtype=np.int64)
    if a_idx.size:
        lo = a_idx // T
        hi = -(-b_idx // T)
        np.add.at(cover, lo, 1)
        np.add.at(cover, hi, -1)
    covered = np.cumsum(cover[:nb]) > 0
    block_large = covered | _flagged_blocks(kv, params)

    components = []
    b = 0
    while b < nb:
        if block_large[b]:
            b2 = b
            while b2 + 1 < nb and block_large[b2 + 1]:
                b2 += 1
            components.append((b * T, (b2 + 1) * T, "large"))
            b = b2 + 1
        else:
            components.append((b * T, (b + 1) * T, "small"))
            b += 1
    return IntervalPartition(
        t=kv.size, t_block=T, block_large=block_large, components=components
    )


def verify_small_large(kvec, params):
    """Per-component weight structure of a classification.

    Small components: total weight at most beta T and last-unit weight
    at most beta' T.  Large components: every block is covered by a
    heavy closure or flagged, and the union of heavy closures (when
    nonempty) carries weight above a quarter of beta times its length.
    Returns a dict with overall ok and per-component records.
    """
    kv = _validate_kvector(kvec)
    part = classify(kv, params)
    T = params.t_block
    pow2 = 2 ** kv
    prefix = np.concatenate([[0], np.cumsum(pow2)])
    a_idx, b_idx = _heavy_intervals(kv, params)
    flagged = _flagged_blocks(kv, params)

    records = []
    ok = True
    for a, b, label in part.components:
        if label == "small":
            gamma = float(prefix[b] - prefix[a])
            c1 = gamma <= params.beta * T
            c2 = float(pow2[b - 1]) <= params.beta_prime * T
            records.append(
                {
                    "interval": (a, b),
                    "label": label,
                    "gamma": gamma,
                    "weight_ok": bool(c1),
                    "flag_ok": bool(c2),
                }
            )
            ok = ok and c1 and c2
        else:
            lo_b, hi_b = a // T, b // T
            inside = (a_idx >= a) & (b_idx <= b)
            closure = np.zeros(part.n_blocks, dtype=bool)
            for ai, bi in zip(a_idx[inside], b_idx[inside]):
                closure[ai // T : -(-bi // T)] = True
            flag_here = flagged.copy()
            flag_here[:lo_b] = False
            flag_here[hi_b:] = False
            cover_ok = bool(np.all(closure[lo_b:hi_b] | flag_here[lo_b:hi_b]))
            n_closure = int(closure.sum())
            if n_closure:
                blocks = np.flatnonzero(closure)
                gamma_jp = float(
                    sum(prefix[(bb + 1) * T] - prefix[bb * T] for bb in blocks)
                )
                quarter_ok = gamma_jp > 0.25 * params.beta * n_closure * T
            else:
                gamma_jp = 0.0
                quarter_ok = True
            records.append(
                {
                    "interval": (a, b),
                    "label": label,
                    "cover_ok": cover_ok,
                    "closure_blocks": n_closure,
                    "gamma_closure": gamma_jp,
                    "quarter_ok": bool(quarter_ok),
                }
            )
            ok = ok and cover_ok and quarter_ok
    return {"ok": ok, "components": records}


@dataclass
class ConcatenationCheck:
    """Outcome of the split-locality verification."""

    admissible: bool
    junction_quiet: bool       # no heavy interval straddles any junction
    pieces_match: bool         # concatenated piecewise classification == global
    ok: bool
    junctions: list


def verify_concatenation(kvec, splits, params):
    """Locality of the classification under splitting at block boundaries.

    splits is a list of unit positions (multiples of t_block, strictly
    inside the range).  Every piece must classify into exactly one
    component (single blocks always do); a piece that splits further is
    a precondition violation and raises ValueError.  For admissible
    splits the global classification equals the concatenation of the
    per-piece ones exactly when no straddling interval within two
    adjacent pieces is heavy; the check reports that equivalence.  A
    split is inadmissible when two pieces would abut large components
    across a junction, which merges globally but cannot piecewise.
    """
    kv = _validate_kvector(kvec)
    T = params.t_block
    t = kv.size
    splits = sorted(int(s) for s in splits)
    if any(s % T or not 0 < s < t for s in splits):
        raise ValueError("splits must be interior multiples of t_block")
    if len(set(splits)) != len(splits):
        raise ValueError("duplicate split positions")

    edges = [0] + splits + [t]
    global_part = classify(kv, params)
    piece_parts = []
    concat = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        p = classify(kv[lo:hi], params)
        if len(p.components) != 1:
            raise ValueError(
                f"piece over units [{lo}, {hi}) classifies into "
                f"{len(p.components)} components; pieces must be single "
                "components (split at every block boundary)"
            )
        piece_parts.append(p)
        concat.extend((a + lo, b + lo, lab) for a, b, lab in p.components)

    pieces_match = concat == global_part.components

    pow2 = 2 ** kv
    prefix = np.concatenate([[0], np.cumsum(pow2)])
    junctions = []
    quiet_all = True
    admissible = True
    for i, tau in enumerate(splits):
        lo = edges[i]
        hi = edges[i + 2]
        quiet = True
        worst = None
        for a in range(lo, tau):
            for b in range(tau + 1, hi + 1):
                gamma = float(prefix[b] - prefix[a])
                if gamma > beta_of(params, b - a):
                    quiet = False
                    worst = (a, b, gamma)
                    break
            if not quiet:
                break
        left_large = piece_parts[i].components[-1][2] == "large"
        right_large = piece_parts[i + 1].components[0][2] == "large"
        adm = not (left_large and right_large)
        junctions.append(
            {
                "position": tau,
                "quiet": quiet,
                "admissible": adm,
                "heavy_straddler": worst,
            }
        )
        quiet_all = quiet_all and quiet
        admissible = admissible and adm

    ok = (not admissible) or (pieces_match == quiet_all)
    return ConcatenationCheck(
        admissible=admissible,
        junction_quiet=quiet_all,
        pieces_match=pieces_match,
        ok=ok,
        junctions=junctions,
    )


# -- dyadic partition of unity --------------------------------------------


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def _up(x, k, scale):
    edge = (2.0**k) * scale
    return _smoothstep((np.asarray(x, dtype=float) - edge) / edge)


def phi(x, k, scale):
    """Dyadic bump k of a partition of unity on [0, inf).

    phi(x, 0, s) falls from 1 to 0 across [2s, 4s]; for k >= 1,
    phi(x, k, s) is supported on (2^k s, 2^{k+2} s).  At every x the
    bumps sum to 1 with at most two of them nonzero.
    """
    if k < 0 or int(k) != k:
        raise ValueError("k must be a nonnegative integer")
    if scale <= 0:
        raise ValueError("scale must be positive")
    if k == 0:
        return 1.0 - _up(x, 1, scale)
    return _up(x, k, scale) - _up(x, k + 1, scale)


# -- file io ---------------------------------------------------------------


def read_kvector(path):
    """Level vector from whitespace-separated integers (any line layout)."""
    tokens = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            text = line.split("#", 1)[0]
            tokens.extend(text.split())
    if not tokens:
        raise ValueError(f"{path}: no levels found")
    try:
        kv = np.array([int(tok) for tok in tokens], dtype=np.int64)
    except ValueError as exc:
        raise ValueError(f"{path}: non-integer level entry") from exc
    return _validate_kvector(kv)


def write_kvector(path, kvec):
    kv = _validate_kvector(kvec)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(" ".join(str(int(v)) for v in kv))
        fh.write("\n")


def write_partition(path, partition):
    """Component list as 'start end label' lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for a, b, label in partition.components:
            fh.write(f"{a} {b} {label}\n")


def read_partition(path):
    comps = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 3 or parts[2] not in ("large", "small"):
                raise ValueError(f"{path}:{ln}: expected 'start end label'")
            comps.append((int(parts[0]), int(parts[1]), parts[2]))
    return comps
