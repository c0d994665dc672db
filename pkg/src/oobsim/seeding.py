"""Deterministic derivation of per-stream random seeds.

Monte-Carlo loops draw from child generators keyed by (master seed, stream
label, draw index), so parallel and serial evaluation orders see identical
randomness.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def child_seed(master: int, label: str, index: int = 0) -> int:
    """Pure 64-bit child seed for stream `label`, draw `index`."""
    payload = f"{master & _MASK64:016x}|{label}|{index}".encode()
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def child_rng(master: int, label: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(child_seed(master, label, index))
