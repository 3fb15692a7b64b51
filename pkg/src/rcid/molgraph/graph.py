"""Molecular graph data model plus subgraph and frontier utilities.

Graphs are simple (no self bonds, no duplicate bonds) and undirected.
Node ids are dense ints in insertion order. Ring membership is derived
once at construction via bridge detection; hydrogen counts follow a
fixed standard-valence rule unless an explicit count is attached to
the atom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

BOND_ORDERS = ("single", "double", "triple", "aromatic")

BOND_VALENCE = {"single": 1.0, "double": 2.0, "triple": 3.0, "aromatic": 1.5}

# Lowest standard valence per atomic number, used for implicit hydrogens.
STANDARD_VALENCE = {5: 3, 6: 4, 7: 3, 8: 2, 9: 1, 15: 3, 16: 2, 17: 1, 35: 1, 53: 1}

# Symbols for atomic numbers 1..100, index z-1.
PERIODIC_SYMBOLS = (
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne",
    "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn",
    "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr",
    "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn",
    "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
    "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb",
    "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg",
    "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th",
    "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm",
)

ATOMIC_NUMBER = {sym: z for z, sym in enumerate(PERIODIC_SYMBOLS, start=1)}


class InvalidNodeId(ValueError):
    """A node id is outside the graph."""


class EmptySelection(ValueError):
    """An operation that needs at least one selected node got none."""


@dataclass(frozen=True)
class Atom:
    """One heavy atom. ``explicit_h`` of None means hydrogens are implicit."""

    element: int
    formal_charge: int = 0
    aromatic: bool = False
    explicit_h: int | None = None

    def __post_init__(self) -> None:
        if self.element < 1:
            raise ValueError(f"atomic number must be >= 1, got {self.element}")
        if self.explicit_h is not None and self.explicit_h < 0:
            raise ValueError("explicit hydrogen count must be >= 0")


@dataclass(frozen=True)
class Bond:
    """Undirected bond between atom ids ``a`` and ``b`` (stored once)."""

    a: int
    b: int
    order: str = "single"
    stereo: int = 0
    direction: int = 0  # 0 none, 1 up, 2 down

    def __post_init__(self) -> None:
        if self.order not in BOND_ORDERS:
            raise ValueError(f"unknown bond order {self.order!r}")
        if self.a == self.b:
            raise ValueError("self bonds are not allowed")


class MolGraph:
    """Immutable molecular graph with cached derived attributes."""

    def __init__(self, atoms: list[Atom] | tuple[Atom, ...], bonds: list[Bond] | tuple[Bond, ...]):
        self.atoms: tuple[Atom, ...] = tuple(atoms)
        n = len(self.atoms)
        seen: set[tuple[int, int]] = set()
        norm: list[Bond] = []
        for bond in bonds:
            if not (0 <= bond.a < n and 0 <= bond.b < n):
                raise InvalidNodeId(f"bond ({bond.a},{bond.b}) references missing atom")
            key = (min(bond.a, bond.b), max(bond.a, bond.b))
            if key in seen:
                raise ValueError(f"duplicate bond between atoms {key[0]} and {key[1]}")
            seen.add(key)
            norm.append(bond)
        self.bonds: tuple[Bond, ...] = tuple(norm)

        adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for idx, bond in enumerate(self.bonds):
            adj[bond.a].append((bond.b, idx))
            adj[bond.b].append((bond.a, idx))
        self._adj: tuple[tuple[tuple[int, int], ...], ...] = tuple(
            tuple(sorted(entries)) for entries in adj
        )
        self._bond_lookup = {
            (min(b.a, b.b), max(b.a, b.b)): i for i, b in enumerate(self.bonds)
        }
        self._bond_in_ring = self._find_ring_bonds()
        self._atom_in_ring = tuple(
            any(self._bond_in_ring[bi] for _, bi in self._adj[i]) for i in range(n)
        )
        self._h_counts = tuple(self._hydrogen_count(i) for i in range(n))
        self._feature_cache = None  # filled lazily by featurize()

    # -- basic accessors -------------------------------------------------

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def num_bonds(self) -> int:
        return len(self.bonds)

    def neighbors(self, i: int) -> tuple[int, ...]:
        self._check_node(i)
        return tuple(nbr for nbr, _ in self._adj[i])

    def incident(self, i: int) -> tuple[tuple[int, int], ...]:
        """(neighbor, bond index) pairs of node ``i``, sorted by neighbor."""
        self._check_node(i)
        return self._adj[i]

    def degree(self, i: int) -> int:
        self._check_node(i)
        return len(self._adj[i])

    def bond_between(self, i: int, j: int) -> Bond | None:
        idx = self._bond_lookup.get((min(i, j), max(i, j)))
        return None if idx is None else self.bonds[idx]

    def bond_index(self, i: int, j: int) -> int | None:
        return self._bond_lookup.get((min(i, j), max(i, j)))

    def h_count(self, i: int) -> int:
        self._check_node(i)
        return self._h_counts[i]

    def atom_in_ring(self, i: int) -> bool:
        self._check_node(i)
        return self._atom_in_ring[i]

    def bond_in_ring(self, idx: int) -> bool:
        return self._bond_in_ring[idx]

    def bond_order_sum(self, i: int) -> float:
        self._check_node(i)
        return sum(BOND_VALENCE[self.bonds[bi].order] for _, bi in self._adj[i])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MolGraph):
            return NotImplemented
        return self.atoms == other.atoms and self.bonds == other.bonds

    def __repr__(self) -> str:
        return f"MolGraph(n={len(self.atoms)}, m={len(self.bonds)})"

    # -- derived attributes ----------------------------------------------

    def _check_node(self, i: int) -> None:
        if not (0 <= i < len(self.atoms)):
            raise InvalidNodeId(f"node {i} not in graph of size {len(self.atoms)}")

    def _hydrogen_count(self, i: int) -> int:
        atom = self.atoms[i]
        if atom.explicit_h is not None:
            return atom.explicit_h
        valence = STANDARD_VALENCE.get(atom.element)
        if valence is None:
            return 0
        free = valence - self.bond_order_sum(i)
        return max(0, math.floor(free + 1e-9))

    def _find_ring_bonds(self) -> tuple[bool, ...]:
        """A bond is in a ring exactly when it is not a bridge."""
        n = len(self.atoms)
        m = len(self.bonds)
        disc = [-1] * n
        low = [0] * n
        is_bridge = [False] * m
        timer = 0
        for root in range(n):
            if disc[root] != -1:
                continue
            # Iterative DFS; stack entries are (node, incoming bond, iterator pos).
            stack = [(root, -1, 0)]
            disc[root] = low[root] = timer
            timer += 1
            while stack:
                node, in_bond, pos = stack.pop()
                entries = self._adj[node]
                if pos < len(entries):
                    stack.append((node, in_bond, pos + 1))
                    nbr, bidx = entries[pos]
                    if bidx == in_bond:
                        continue
                    if disc[nbr] == -1:
                        disc[nbr] = low[nbr] = timer
                        timer += 1
                        stack.append((nbr, bidx, 0))
                    else:
                        low[node] = min(low[node], disc[nbr])
                else:
                    if in_bond != -1:
                        bond = self.bonds[in_bond]
                        parent = bond.a if bond.b == node else bond.b
                        low[parent] = min(low[parent], low[node])
                        if low[node] > disc[parent]:
                            is_bridge[in_bond] = True
        return tuple(not b for b in is_bridge)


# -- subgraph and frontier utilities --------------------------------------


def _check_subset(g: MolGraph, nodes) -> frozenset[int]:
    subset = frozenset(nodes)
    for v in subset:
        if not (0 <= v < len(g)):
            raise InvalidNodeId(f"node {v} not in graph of size {len(g)}")
    return subset


def one_hop_frontier(g: MolGraph, selected) -> frozenset[int]:
    """Unselected nodes adjacent to at least one selected node."""
    subset = _check_subset(g, selected)
    if not subset:
        raise EmptySelection("frontier of an empty selection is undefined")
    out: set[int] = set()
    for v in subset:
        out.update(g.neighbors(v))
    return frozenset(out - subset)


def is_connected_subset(g: MolGraph, nodes) -> bool:
    """True when the node-induced subgraph is connected and non-empty."""
    subset = _check_subset(g, nodes)
    if not subset:
        return False
    start = next(iter(subset))
    seen = {start}
    queue = [start]
    while queue:
        v = queue.pop()
        for nbr in g.neighbors(v):
            if nbr in subset and nbr not in seen:
                seen.add(nbr)
                queue.append(nbr)
    return len(seen) == len(subset)


def subset_component_count(g: MolGraph, nodes) -> int:
    """Number of connected components of the node-induced subgraph."""
    subset = set(_check_subset(g, nodes))
    count = 0
    while subset:
        count += 1
        start = min(subset)
        queue = [start]
        subset.discard(start)
        while queue:
            v = queue.pop()
            for nbr in g.neighbors(v):
                if nbr in subset:
                    subset.discard(nbr)
                    queue.append(nbr)
    return count


def induced_edge_count(g: MolGraph, nodes) -> int:
    subset = _check_subset(g, nodes)
    return sum(1 for b in g.bonds if b.a in subset and b.b in subset)


def induced_subgraph(g: MolGraph, nodes) -> tuple[MolGraph, tuple[int, ...]]:
    """Node-induced subgraph plus the original id of each new node.

    New node i corresponds to original node ``mapping[i]``; original ids
    are taken in ascending order so the result is deterministic.
    """
    subset = _check_subset(g, nodes)
    mapping = tuple(sorted(subset))
    new_id = {old: new for new, old in enumerate(mapping)}
    atoms = [g.atoms[old] for old in mapping]
    bonds = [
        Bond(new_id[b.a], new_id[b.b], b.order, b.stereo, b.direction)
        for b in g.bonds
        if b.a in subset and b.b in subset
    ]
    return MolGraph(atoms, bonds), mapping
