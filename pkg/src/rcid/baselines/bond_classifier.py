"""Bond-probability baseline with a disconnection-count head.

A shared graph encoder feeds two heads: a per-bond logit scoring each
bond as part of the reaction center, and a graph-level classifier over
the number of center bonds (1..count_classes, larger counts clamped).
Predicted node sets are unions of the chosen bonds' endpoints, so a
center with no bonds at all is outside this model's reach by design.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from ..encoder import (
    EncoderConfig,
    add_encoder_params,
    bond_embeddings,
    encode_batch,
    encoder_param_names,
)
from ..molgraph import MolGraph, Sample, induced_edge_count
from ..nn import (
    AdamConfig,
    ParameterStore,
    Tensor,
    VersionMismatch,
    adam_step,
    add,
    backward,
    load_tensors,
    matmul,
    no_grad,
    save_tensors,
    sigmoid_bce,
    softmax_cross_entropy,
)

_META_KEY = "meta.bond_dims"

_HEAD_NAMES = ("bond_head.w", "bond_head.b", "count_head.w", "count_head.b")


class EmptyTrainSet(ValueError):
    """Every sample was filtered out before training."""


@dataclass(frozen=True)
class BondClassifierConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    count_classes: int = 6
    iters: int = 2000
    batch_size: int = 16
    seed: int = 0

    def __post_init__(self) -> None:
        if self.count_classes < 1:
            raise ValueError("count_classes must be >= 1")
        if self.iters < 1 or self.batch_size < 1:
            raise ValueError("iters and batch_size must be >= 1")


@dataclass
class BondClassifier:
    store: ParameterStore
    encoder: EncoderConfig
    count_classes: int


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_bond_classifier(cfg: BondClassifierConfig) -> BondClassifier:
    rng = np.random.default_rng([cfg.seed, 0])
    store = ParameterStore()
    add_encoder_params(store, cfg.encoder, rng)
    d = cfg.encoder.hidden_dim
    store.add("bond_head.w", _glorot(rng, d, 1, (d, 1)))
    store.add("bond_head.b", np.zeros((1, 1)))
    store.add("count_head.w", _glorot(rng, d, cfg.count_classes, (d, cfg.count_classes)))
    store.add("count_head.b", np.zeros((1, cfg.count_classes)))
    return BondClassifier(store, cfg.encoder, cfg.count_classes)


def _bond_targets(graphs: list[MolGraph], labels: list[frozenset[int]]) -> np.ndarray:
    rows = []
    for g, label in zip(graphs, labels):
        for b in g.bonds:
            rows.append(1.0 if b.a in label and b.b in label else 0.0)
    return np.asarray(rows).reshape(-1, 1)


def _loss(model: BondClassifier, graphs, labels, classes) -> Tensor:
    enc = encode_batch(model.store, model.encoder, graphs)
    bond_logits = add(
        matmul(bond_embeddings(enc), model.store["bond_head.w"]),
        model.store["bond_head.b"],
    )
    count_logits = add(
        matmul(enc.graph_embs, model.store["count_head.w"]),
        model.store["count_head.b"],
    )
    bce = sigmoid_bce(bond_logits, Tensor(_bond_targets(graphs, labels)))
    ce = softmax_cross_entropy(count_logits, classes)
    return add(bce, ce)


def train_bond_classifier(
    samples: list[Sample],
    cfg: BondClassifierConfig,
    acfg: AdamConfig | None = None,
) -> tuple[BondClassifier, list[float]]:
    """Fit the two heads jointly; returns the model and per-step losses.

    Samples whose center has no induced bond carry no per-bond signal
    and no count class, so they are dropped up front; at evaluation time
    they count against this baseline as guaranteed misses.
    """
    eligible = [s for s in samples if induced_edge_count(s.graph, s.label) >= 1]
    if not eligible:
        raise EmptyTrainSet("no training sample has a bond inside its center")
    model = init_bond_classifier(cfg)
    acfg = acfg or AdamConfig()
    batch_rng = np.random.default_rng([cfg.seed, 1])
    classes_all = [
        min(induced_edge_count(s.graph, s.label), cfg.count_classes) - 1 for s in eligible
    ]
    losses: list[float] = []
    size = min(cfg.batch_size, len(eligible))
    for _ in range(cfg.iters):
        picks = batch_rng.choice(len(eligible), size=size, replace=False)
        graphs = [eligible[i].graph for i in picks]
        labels = [eligible[i].label for i in picks]
        classes = [classes_all[i] for i in picks]
        loss = _loss(model, graphs, labels, classes)
        model.store.zero_grads()
        backward(loss)
        adam_step(model.store, acfg)
        losses.append(float(loss.item()))
    return model, losses


def _best_subsets(weights: np.ndarray, n: int) -> Iterator[tuple[float, tuple[int, ...]]]:
    """Size-n index subsets of ``weights`` by descending total weight.

    Weights must be sorted descending. States are strictly increasing
    position tuples; each pop advances one position to the right, which
    never raises the total, so heap order is globally correct.
    """
    m = len(weights)
    if n > m:
        return
    start = tuple(range(n))
    heap = [(-float(weights[list(start)].sum()), start)]
    seen = {start}
    while heap:
        neg, pos = heapq.heappop(heap)
        yield -neg, pos
        for i in range(n):
            step = pos[i] + 1
            if step >= m or (i + 1 < n and step >= pos[i + 1]):
                continue
            cand = pos[:i] + (step,) + pos[i + 1 :]
            if cand not in seen:
                seen.add(cand)
                heapq.heappush(heap, (-float(weights[list(cand)].sum()), cand))


def infer_bond_classifier(model: BondClassifier, g: MolGraph, k: int) -> list[frozenset[int]]:
    """Ranked node sets from the two heads.

    The first prediction follows the count head: argmax class n, then
    the n strongest bonds. Later ranks come from enumerating (count,
    bond subset) pairs in descending joint probability, where the joint
    score is the count log-probability plus the chosen bonds' log-odds.
    Graphs with no bonds yield an empty list.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    m = len(g.bonds)
    if m == 0:
        return []
    with no_grad():
        enc = encode_batch(model.store, model.encoder, [g])
        bond_logits = (
            add(matmul(bond_embeddings(enc), model.store["bond_head.w"]), model.store["bond_head.b"])
            .data.reshape(-1)
            .copy()
        )
        count_logits = (
            add(matmul(enc.graph_embs, model.store["count_head.w"]), model.store["count_head.b"])
            .data.reshape(-1)
            .copy()
        )
    shifted = count_logits - count_logits.max()
    log_q = shifted - math.log(np.exp(shifted).sum())

    order = sorted(range(m), key=lambda i: (-bond_logits[i], i))
    weights = bond_logits[order]

    def node_set(positions: tuple[int, ...]) -> frozenset[int]:
        nodes: set[int] = set()
        for p in positions:
            bond = g.bonds[order[p]]
            nodes.update((bond.a, bond.b))
        return frozenset(nodes)

    ranked: list[frozenset[int]] = []
    n_top = min(int(np.argmax(count_logits)) + 1, m)
    ranked.append(node_set(tuple(range(n_top))))

    gens = {}
    heap: list[tuple[float, int, tuple[int, ...]]] = []
    for n in range(1, min(model.count_classes, m) + 1):
        gen = _best_subsets(weights, n)
        first = next(gen, None)
        if first is None:
            continue
        gens[n] = gen
        heapq.heappush(heap, (-(log_q[n - 1] + first[0]), n, first[1]))
    while heap and len(ranked) < k:
        _, n, positions = heapq.heappop(heap)
        candidate = node_set(positions)
        if candidate not in ranked:
            ranked.append(candidate)
        nxt = next(gens[n], None)
        if nxt is not None:
            heapq.heappush(heap, (-(log_q[n - 1] + nxt[0]), n, nxt[1]))
    return ranked[:k]


def save_bond_classifier(model: BondClassifier, path: str | Path) -> None:
    arrays = dict(model.store.state_arrays())
    arrays[_META_KEY] = np.array(
        [model.encoder.layers, model.encoder.heads, model.encoder.hidden_dim, model.count_classes],
        dtype=np.float64,
    )
    save_tensors(arrays, path)


def load_bond_classifier(path: str | Path) -> BondClassifier:
    arrays = load_tensors(path)
    meta = arrays.pop(_META_KEY, None)
    if meta is None:
        raise VersionMismatch(f"{path}: missing model shape metadata")
    layers, heads, hidden, classes = (int(v) for v in meta.reshape(-1))
    cfg = EncoderConfig(hidden_dim=hidden, layers=layers, heads=heads)
    expected = encoder_param_names(cfg) + list(_HEAD_NAMES)
    if sorted(arrays) != sorted(expected):
        raise VersionMismatch(f"{path}: parameter names do not match the metadata")
    store = ParameterStore()
    for name in arrays:
        store.add(name, arrays[name])
    return BondClassifier(store, cfg, classes)
