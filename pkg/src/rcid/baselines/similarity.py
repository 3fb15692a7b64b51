"""Retrieval baseline: nearest fingerprints, then pattern placement.

Training products are ranked by Tanimoto similarity to the query and
their reaction-center patterns are matched back into the query graph,
one prediction per neighbor. A pattern with several possible placements
contributes one placement drawn uniformly at random, so accuracy is
averaged over repeats by the caller.
"""

from __future__ import annotations

import numpy as np

from ..molgraph import MolGraph, Sample, induced_subgraph
from .fingerprints import Fingerprint, ecfp_fingerprint, tanimoto
from .matching import MatchExplosion, subgraph_match


class SimilarityBaseline:
    def __init__(self, trainset: list[Sample], radius: int = 2, nbits: int = 2048):
        if not trainset:
            raise ValueError("trainset must be non-empty")
        self.radius = radius
        self.nbits = nbits
        self._fingerprints: list[Fingerprint] = []
        self._patterns: list[MolGraph] = []
        for s in trainset:
            self._fingerprints.append(ecfp_fingerprint(s.graph, radius, nbits))
            self._patterns.append(induced_subgraph(s.graph, s.label)[0])

    def rank_neighbors(self, query: MolGraph) -> np.ndarray:
        """Training indices sorted by similarity, ties in training order."""
        fp = ecfp_fingerprint(query, self.radius, self.nbits)
        sims = np.asarray([tanimoto(fp, f) for f in self._fingerprints])
        return np.argsort(-sims, kind="stable")

    def predict_repeats(
        self,
        query: MolGraph,
        kmax: int,
        repeats: int,
        rng: np.random.Generator,
    ) -> list[list[frozenset[int]]]:
        """One ranked prediction list per repeat.

        Each walk visits neighbors in similarity order. A neighbor whose
        pattern has no placement in the query is skipped; one with a
        unique placement contributes it; ambiguous ones contribute a
        uniform random placement. The walk stops at ``kmax`` predictions.
        """
        if kmax < 1 or repeats < 1:
            raise ValueError("kmax and repeats must be >= 1")
        order = self.rank_neighbors(query)
        placements: dict[int, list[frozenset[int]]] = {}

        def placements_for(idx: int) -> list[frozenset[int]]:
            if idx not in placements:
                try:
                    maps = subgraph_match(self._patterns[idx], query)
                except MatchExplosion:
                    maps = []
                placements[idx] = sorted({frozenset(m) for m in maps}, key=sorted)
            return placements[idx]

        out: list[list[frozenset[int]]] = []
        for _ in range(repeats):
            ranked: list[frozenset[int]] = []
            for idx in order:
                if len(ranked) == kmax:
                    break
                options = placements_for(int(idx))
                if not options:
                    continue
                if len(options) == 1:
                    ranked.append(options[0])
                else:
                    ranked.append(options[int(rng.integers(len(options)))])
            out.append(ranked)
        return out


def sim_predict(
    query: MolGraph,
    trainset: list[Sample],
    kmax: int,
    repeats: int,
    rng: np.random.Generator,
) -> list[list[frozenset[int]]]:
    """Per-repeat ranked node sets for one query against a training set."""
    return SimilarityBaseline(trainset).predict_repeats(query, kmax, repeats, rng)
