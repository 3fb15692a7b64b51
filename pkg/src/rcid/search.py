"""Beam-search inference over node sets, plus an exhaustive oracle.

The beam is level synchronous. Each alive hypothesis proposes its top-k
actions by Q value; stop actions move the hypothesis into a persistent
completed pool scored by Q(state, stop), node actions compete for the k
alive slots of the next level. Since Q depends only on the node set,
candidates that reach the same set are merged keeping the higher score.
The search ends when nothing is alive (sets grow strictly, so at the
latest when a hypothesis covers the whole graph), and the answer is the
completed pool's top k.

Ties anywhere break toward smaller node sets, then lexicographic ids,
which keeps rankings deterministic and lets a saturating beam reproduce
the exhaustive oracle exactly.

Scoring evaluates one (set, action) row per call. Batched BLAS matmuls
are not bitwise row-stable across batch shapes, so ranking from batched
scores would depend on how candidates happened to be grouped; per-row
evaluation makes every score a pure function of the row. The graph
encoding itself is computed once per search and reused.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

import numpy as np

from .agent import QueryRow, q_values
from .encoder import EncoderConfig, encode_batch
from .env import STOP, EmptyGraph, RCState, legal_actions
from .molgraph import MolGraph
from .nn import ParameterStore, no_grad


class SizeExplosion(RuntimeError):
    """Connected-subset enumeration exceeded its configured bound."""


@dataclass(frozen=True)
class ScoredSet:
    """A predicted node set with the score that ranked it."""

    nodes: frozenset[int]
    score: float


@dataclass(frozen=True)
class BeamHypothesis:
    nodes: frozenset[int]
    score: float
    step: int


def _final_key(nodes: frozenset[int], score: float):
    return (-score, len(nodes), tuple(sorted(nodes)))


def _score_rows(
    store: ParameterStore,
    cfg: EncoderConfig,
    enc,
    rows: list[QueryRow],
) -> np.ndarray:
    out = np.empty(len(rows))
    with no_grad():
        for i, row in enumerate(rows):
            out[i] = q_values(store, cfg, enc, [row]).data[0, 0]
    return out


def beam_search(
    store: ParameterStore,
    cfg: EncoderConfig,
    g: MolGraph,
    k: int,
    one_hop: bool = True,
) -> list[ScoredSet]:
    """The k best node sets by stop-value, best first."""
    if len(g) == 0:
        raise EmptyGraph("cannot search an empty graph")
    if k < 1:
        raise ValueError("beam width must be >= 1")
    enc = None
    with no_grad():
        enc = encode_batch(store, cfg, [g])

    alive: list[BeamHypothesis] = [BeamHypothesis(frozenset(), 0.0, 0)]
    completed: dict[frozenset[int], float] = {}
    while alive:
        rows: list[QueryRow] = []
        spans: list[tuple[BeamHypothesis, list[int]]] = []
        for hyp in alive:
            actions = legal_actions(RCState(g, hyp.nodes, hyp.step), one_hop=one_hop)
            spans.append((hyp, actions))
            rows.extend(QueryRow(0, hyp.nodes, a) for a in actions)
        scores = _score_rows(store, cfg, enc, rows)

        grown: dict[frozenset[int], float] = {}
        cursor = 0
        for hyp, actions in spans:
            values = scores[cursor : cursor + len(actions)]
            cursor += len(actions)
            order = sorted(range(len(actions)), key=lambda i: (-values[i], i))
            for i in order[:k]:
                action, value = actions[i], float(values[i])
                if action == STOP:
                    if value > completed.get(hyp.nodes, -np.inf):
                        completed[hyp.nodes] = value
                else:
                    nodes = hyp.nodes | {action}
                    if value > grown.get(nodes, -np.inf):
                        grown[nodes] = value
        ranked = sorted(grown.items(), key=lambda item: _final_key(item[0], item[1]))
        step = alive[0].step + 1
        alive = [BeamHypothesis(nodes, score, step) for nodes, score in ranked[:k]]

    pool = sorted(completed.items(), key=lambda item: _final_key(item[0], item[1]))
    return [ScoredSet(nodes, score) for nodes, score in pool[:k]]


def enumerate_connected_subsets(
    g: MolGraph, max_size: int | None = None, limit: int = 10**6
) -> list[frozenset[int]]:
    """Every connected node subset up to ``max_size``, each exactly once."""
    cap = len(g) if max_size is None else max_size
    if cap < 1:
        raise ValueError("max_size must be >= 1")
    seen: set[frozenset[int]] = set()
    queue: deque[frozenset[int]] = deque()
    for v in range(len(g)):
        s = frozenset({v})
        seen.add(s)
        queue.append(s)
    while queue:
        s = queue.popleft()
        if len(s) >= cap:
            continue
        frontier = {u for v in s for u in g.neighbors(v)} - s
        for u in frontier:
            t = s | {u}
            if t not in seen:
                if len(seen) >= limit:
                    raise SizeExplosion(
                        f"more than {limit} connected subsets of size <= {cap}"
                    )
                seen.add(t)
                queue.append(t)
    return sorted(seen, key=lambda s: (len(s), tuple(sorted(s))))


def exhaustive_topk(
    store: ParameterStore,
    cfg: EncoderConfig,
    g: MolGraph,
    k: int,
    max_size: int | None = None,
    limit: int = 10**6,
) -> list[ScoredSet]:
    """Rank every connected subset by its stop value; top k, best first."""
    if len(g) == 0:
        raise EmptyGraph("cannot rank subsets of an empty graph")
    subsets = enumerate_connected_subsets(g, max_size=max_size, limit=limit)
    with no_grad():
        enc = encode_batch(store, cfg, [g])
    rows = [QueryRow(0, s, STOP) for s in subsets]
    scores = _score_rows(store, cfg, enc, rows)
    ranked = sorted(
        zip(subsets, scores), key=lambda item: _final_key(item[0], float(item[1]))
    )
    return [ScoredSet(nodes, float(score)) for nodes, score in ranked[:k]]


def format_prediction_line(sample_id: str, ranked: list[ScoredSet], k: int) -> str:
    blob = {
        "id": sample_id,
        "predictions": [
            {"nodes": sorted(s.nodes), "score": s.score} for s in ranked
        ],
        "k": k,
    }
    return json.dumps(blob, sort_keys=True, separators=(",", ":"))


def parse_prediction_line(line: str) -> tuple[str, list[ScoredSet], int]:
    blob = json.loads(line)
    ranked = [
        ScoredSet(frozenset(p["nodes"]), float(p["score"]))
        for p in blob["predictions"]
    ]
    return str(blob["id"]), ranked, int(blob["k"])
