"""Canonical fingerprints for labeled reaction-center subgraphs.

Two label node sets count as the same pattern when their induced
subgraphs are isomorphic as labeled graphs (element and aromatic flag on
nodes, bond order on edges). Identity is approximated by iterative
neighborhood hashing refined for as many rounds as there are nodes,
which separates everything at the sizes that occur here; hash collisions
between genuinely different patterns are possible in principle.
"""

from __future__ import annotations

from ..hashing import combine_sorted, stable_hash64
from ..molgraph import BOND_ORDERS, MolGraph, induced_subgraph


def _initial_color(graph: MolGraph, v: int) -> int:
    a = graph.atoms[v]
    return stable_hash64(a.element, int(a.aromatic), a.formal_charge)


def pattern_key(graph: MolGraph, nodes) -> int:
    """Isomorphism-invariant fingerprint of the induced subgraph."""
    sub, _ = induced_subgraph(graph, frozenset(nodes))
    order_code = {name: i for i, name in enumerate(BOND_ORDERS)}
    edge_label: dict[tuple[int, int], int] = {}
    for b in sub.bonds:
        edge_label[(b.a, b.b)] = order_code[b.order]
        edge_label[(b.b, b.a)] = order_code[b.order]

    colors = [_initial_color(sub, v) for v in range(len(sub))]
    for _ in range(max(1, len(sub))):
        colors = [
            combine_sorted(
                colors[v],
                [(edge_label[(v, u)], colors[u]) for u in sub.neighbors(v)],
            )
            for v in range(len(sub))
        ]
    return combine_sorted(
        stable_hash64(len(sub), len(sub.bonds)), [(0, c) for c in colors]
    )


def pattern_set(samples) -> set[int]:
    """Fingerprints of every sample's label subgraph."""
    return {pattern_key(s.graph, s.label) for s in samples}
