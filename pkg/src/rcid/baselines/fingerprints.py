"""Hashed circular fingerprints for whole-molecule similarity."""

from __future__ import annotations

from dataclasses import dataclass

from ..hashing import combine_sorted, stable_hash64
from ..molgraph import BOND_ORDERS, MolGraph


class WidthMismatch(ValueError):
    """Tanimoto between fingerprints of different widths."""


@dataclass(frozen=True)
class Fingerprint:
    """Fixed-width bit vector stored as the set of raised bit positions."""

    bits: frozenset[int]
    nbits: int
    radius: int


def ecfp_fingerprint(g: MolGraph, radius: int = 2, nbits: int = 2048) -> Fingerprint:
    """Fold iterated neighborhood hashes of every atom into a bit vector.

    Round 0 hashes each atom's local record (element, degree, charge,
    aromaticity, hydrogen count). Each later round rehashes an atom with
    the sorted (bond order, neighbor hash) pairs around it, so the code
    of an atom after round r covers its radius-r ball. Every round's
    codes are folded modulo ``nbits``.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if nbits < 1:
        raise ValueError("nbits must be >= 1")
    codes = [
        stable_hash64(a.element, g.degree(i), a.formal_charge, int(a.aromatic), g.h_count(i))
        for i, a in enumerate(g.atoms)
    ]
    bits = {c % nbits for c in codes}
    for _ in range(radius):
        codes = [
            combine_sorted(
                codes[v],
                [(BOND_ORDERS.index(g.bonds[b].order), codes[u]) for u, b in g.incident(v)],
            )
            for v in range(len(g.atoms))
        ]
        bits.update(c % nbits for c in codes)
    return Fingerprint(frozenset(bits), nbits, radius)


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    """|a AND b| / |a OR b|, taken as 0.0 when both vectors are empty."""
    if a.nbits != b.nbits:
        raise WidthMismatch(f"fingerprint widths differ: {a.nbits} vs {b.nbits}")
    union = len(a.bits | b.bits)
    if union == 0:
        return 0.0
    return len(a.bits & b.bits) / union
