"""Deterministic derivation of random streams.

Every random draw in the package descends from one integer master seed.
A component stream is obtained by hashing the string
``"{master_seed}:{component}:{index}"`` with SHA-256 and seeding a PCG64
generator from the first 16 bytes of the digest.  A stream therefore
depends only on its label, never on scheduling order, chunking, or
worker count, which is what makes reruns byte-identical.
"""

import hashlib

import numpy as np


def derive_seed(master_seed, component, index=0):
    """Return the derived integer seed for (master_seed, component, index)."""
    tag = f"{int(master_seed)}:{component}:{int(index)}".encode()
    digest = hashlib.sha256(tag).digest()
    return int.from_bytes(digest[:16], "little")


def derive_rng(master_seed, component, index=0):
    """Return a fresh PCG64 generator for (master_seed, component, index)."""
    return np.random.Generator(np.random.PCG64(derive_seed(master_seed, component, index)))
