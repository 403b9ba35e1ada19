"""Deterministic seed derivation.

One master seed drives the whole pipeline.  Per-stage seeds are derived by
hashing the master seed together with a stable text label, so adding or
reordering stages never perturbs the streams of the others.
"""

import hashlib

import numpy as np


def derive_seed(master_seed: int, label: str) -> int:
    """Derive a 64-bit child seed from a master seed and a stage label."""
    digest = hashlib.sha256(f"{master_seed}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_rng(master_seed: int, label: str) -> np.random.Generator:
    """A fresh generator seeded from (master_seed, label)."""
    return np.random.default_rng(derive_seed(master_seed, label))
