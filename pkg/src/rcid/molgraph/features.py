"""Fixed-width one-hot feature vectors for atoms and bonds.

Atom vector, 135 wide:
    atomic number (100) | total degree incl. H (6) | explicit valence (6) |
    implicit valence (6) | hybridization (5) | hydrogen count (5) |
    formal charge (5) | aromatic flag (1) | in-ring flag (1)

Bond vector, 15 wide:
    bond order (4) | conjugated flag (1) | in-ring flag (1) |
    stereo tag (6) | direction tag (3)

Categorical values outside their block map to the last index of the block.
Hybridization is a lightweight heuristic: aromatic atoms are sp2; a triple
bond or two doubles gives sp; a single double gives sp2; everything else is
sp3, except hypervalent P/S which get sp3d / sp3d2 by total degree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import BOND_ORDERS, Bond, MolGraph

ATOM_FEATURE_SIZE = 135
BOND_FEATURE_SIZE = 15

_HYBRID = ("sp", "sp2", "sp3", "sp3d", "sp3d2")
_ORDER_INDEX = {order: i for i, order in enumerate(BOND_ORDERS)}


@dataclass(frozen=True)
class FeatureEncoding:
    """Per-atom and per-bond feature matrices, row i = entity i."""

    atom_features: np.ndarray  # (n, 135) float64
    bond_features: np.ndarray  # (m, 15) float64


def _one_hot(vec: np.ndarray, offset: int, index: int, width: int) -> int:
    """Set a one-hot block; out-of-range indices clamp to the last slot."""
    if index < 0 or index >= width:
        index = width - 1
    vec[offset + index] = 1.0
    return offset + width


def hybridization(g: MolGraph, i: int) -> str:
    atom = g.atoms[i]
    total_degree = g.degree(i) + g.h_count(i)
    if atom.element in (15, 16) and total_degree >= 5:
        return "sp3d2" if total_degree >= 6 else "sp3d"
    if atom.aromatic:
        return "sp2"
    doubles = triples = 0
    for _, bi in g.incident(i):
        order = g.bonds[bi].order
        if order == "double":
            doubles += 1
        elif order == "triple":
            triples += 1
    if triples >= 1 or doubles >= 2:
        return "sp"
    if doubles == 1:
        return "sp2"
    return "sp3"


def is_conjugated(g: MolGraph, bond: Bond) -> bool:
    """A bond is conjugated when both endpoints are aromatic, sp or sp2."""

    def pi_capable(i: int) -> bool:
        return g.atoms[i].aromatic or hybridization(g, i) in ("sp", "sp2")

    return pi_capable(bond.a) and pi_capable(bond.b)


def atom_feature_vector(g: MolGraph, i: int) -> np.ndarray:
    atom = g.atoms[i]
    vec = np.zeros(ATOM_FEATURE_SIZE, dtype=np.float64)
    h = g.h_count(i)
    explicit_valence = round(g.bond_order_sum(i)) + (atom.explicit_h or 0)
    implicit_valence = 0 if atom.explicit_h is not None else h

    pos = _one_hot(vec, 0, atom.element - 1, 100)
    pos = _one_hot(vec, pos, g.degree(i) + h, 6)
    pos = _one_hot(vec, pos, explicit_valence, 6)
    pos = _one_hot(vec, pos, implicit_valence, 6)
    pos = _one_hot(vec, pos, _HYBRID.index(hybridization(g, i)), 5)
    pos = _one_hot(vec, pos, h, 5)
    pos = _one_hot(vec, pos, atom.formal_charge + 2, 5)
    vec[pos] = 1.0 if atom.aromatic else 0.0
    vec[pos + 1] = 1.0 if g.atom_in_ring(i) else 0.0
    return vec


def bond_feature_vector(g: MolGraph, idx: int) -> np.ndarray:
    bond = g.bonds[idx]
    vec = np.zeros(BOND_FEATURE_SIZE, dtype=np.float64)
    pos = _one_hot(vec, 0, _ORDER_INDEX[bond.order], 4)
    vec[pos] = 1.0 if is_conjugated(g, bond) else 0.0
    vec[pos + 1] = 1.0 if g.bond_in_ring(idx) else 0.0
    pos = _one_hot(vec, pos + 2, bond.stereo, 6)
    _one_hot(vec, pos, bond.direction, 3)
    return vec


def featurize(g: MolGraph) -> FeatureEncoding:
    """Encode a graph; the result is cached on the graph instance."""
    cached = g._feature_cache
    if cached is not None:
        return cached
    n, m = len(g), g.num_bonds
    atom_features = np.zeros((n, ATOM_FEATURE_SIZE), dtype=np.float64)
    for i in range(n):
        atom_features[i] = atom_feature_vector(g, i)
    bond_features = np.zeros((m, BOND_FEATURE_SIZE), dtype=np.float64)
    for idx in range(m):
        bond_features[idx] = bond_feature_vector(g, idx)
    enc = FeatureEncoding(atom_features, bond_features)
    g._feature_cache = enc
    return enc
