"""Stable 64-bit hashing shared by fingerprints and pattern canonicalization.

Built on BLAKE2b so values never depend on PYTHONHASHSEED, platform word
size or process state. Inputs are sequences of (possibly negative) ints.
"""

from __future__ import annotations

import hashlib


def stable_hash64(*values: int) -> int:
    """Hash a tuple of ints to an unsigned 64-bit value, deterministically."""
    h = hashlib.blake2b(digest_size=8)
    for v in values:
        h.update(int(v).to_bytes(16, "little", signed=True))
    return int.from_bytes(h.digest(), "little")


def combine_sorted(seed: int, pairs: list[tuple[int, ...]]) -> int:
    """Hash a seed together with an order-independent collection of tuples."""
    flat: list[int] = [seed]
    for item in sorted(pairs):
        flat.extend(item)
    return stable_hash64(*flat)
