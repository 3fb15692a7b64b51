"""Node-induced subgraph matching by label-aware backtracking."""

from __future__ import annotations

from ..molgraph import MolGraph


class MatchExplosion(RuntimeError):
    """More embeddings than the enumeration guard allows."""


def _label(g: MolGraph, i: int) -> tuple[int, bool]:
    return (g.atoms[i].element, g.atoms[i].aromatic)


def subgraph_match(
    pattern: MolGraph, target: MolGraph, limit: int = 10_000
) -> list[tuple[int, ...]]:
    """All injective node maps that embed ``pattern`` into ``target``.

    A map must preserve element and aromaticity and be induced: pattern
    nodes i, j share a bond of order o exactly when their images do.
    Result tuples list the image of each pattern node in pattern order
    and are emitted in lexicographic order of that tuple. Raises
    MatchExplosion once more than ``limit`` embeddings exist.
    """
    if not pattern.atoms:
        raise ValueError("pattern must have at least one node")
    n_target = len(target.atoms)
    matches: list[tuple[int, ...]] = []
    image: list[int] = []
    used = [False] * n_target

    def feasible(v: int, t: int) -> bool:
        if _label(pattern, v) != _label(target, t):
            return False
        for u in range(len(image)):
            pb = pattern.bond_between(u, v)
            tb = target.bond_between(image[u], t)
            if (pb is None) != (tb is None):
                return False
            if pb is not None and pb.order != tb.order:
                return False
        return True

    def extend() -> None:
        v = len(image)
        if v == len(pattern.atoms):
            if len(matches) >= limit:
                raise MatchExplosion(f"more than {limit} embeddings")
            matches.append(tuple(image))
            return
        for t in range(n_target):
            if used[t] or not feasible(v, t):
                continue
            used[t] = True
            image.append(t)
            extend()
            image.pop()
            used[t] = False

    extend()
    return matches
