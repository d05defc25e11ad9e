"""Seeded random number generation for reproducible experiments."""

import hashlib

import numpy as np


def derive_seed(master_seed: int, *path) -> int:
    """Child seed = 64-bit BLAKE2b of the master seed and a path label.

    ``derive_seed(7, "swiss", 4, "rep", 0, "agent", 3)`` is stable across
    platforms and Python versions; distinct paths give independent seeds.
    """
    label = "/".join(str(part) for part in (master_seed, *path))
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for a seed."""
    return np.random.Generator(np.random.PCG64(seed))


def child_rng(master_seed: int, *path) -> np.random.Generator:
    """Generator seeded from derive_seed(master_seed, *path)."""
    return make_rng(derive_seed(master_seed, *path))
