"""Q-network on top of the graph encoder.

The value of (state, action) is a three-layer MLP over the concatenation
of the pooled graph embedding, the mean embedding of the selected nodes
(zeros when nothing is selected yet) and the action embedding, which is
either a node's embedding or the learned stop token. Rows for many states
and actions are scored in one pass against a shared batch encoding.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..encoder import (
    BatchEncoding,
    EncoderConfig,
    add_encoder_params,
    encode_batch,
    encoder_param_names,
)
from ..env import RCState, legal_actions
from ..molgraph import MolGraph
from ..nn import (
    ParameterStore,
    Tensor,
    VersionMismatch,
    add,
    concat,
    elu,
    gather_rows,
    load_tensors,
    matmul,
    no_grad,
    save_tensors,
    scatter_rows,
    segment_mean,
)
from ..nn.tensor import ShapeMismatch

_META_KEY = "meta.dims"


@dataclass(frozen=True)
class QueryRow:
    """One (state, action) row to score against a batch encoding."""

    graph_index: int
    selected: frozenset[int]
    action: int


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_qnetwork(cfg: EncoderConfig, seed) -> ParameterStore:
    """Fresh parameters for encoder plus value head, reproducible by seed."""
    rng = np.random.default_rng(seed)
    store = ParameterStore()
    add_encoder_params(store, cfg, rng)
    d = cfg.hidden_dim
    store.add("qhead.w1", _glorot(rng, 3 * d, d, (3 * d, d)))
    store.add("qhead.b1", np.zeros((1, d)))
    store.add("qhead.w2", _glorot(rng, d, d, (d, d)))
    store.add("qhead.b2", np.zeros((1, d)))
    store.add("qhead.w3", _glorot(rng, d, 1, (d, 1)))
    store.add("qhead.b3", np.zeros((1, 1)))
    return store


def qnetwork_param_names(cfg: EncoderConfig) -> list[str]:
    return encoder_param_names(cfg) + [
        "qhead.w1",
        "qhead.b1",
        "qhead.w2",
        "qhead.b2",
        "qhead.w3",
        "qhead.b3",
    ]


def q_values(
    store: ParameterStore,
    cfg: EncoderConfig,
    enc: BatchEncoding,
    rows: list[QueryRow],
) -> Tensor:
    """Differentiable Q values, one per row, shape (len(rows), 1)."""
    if not rows:
        raise ShapeMismatch("q_values needs at least one row")
    n_rows = len(rows)
    d = cfg.hidden_dim
    offsets = enc.batch.node_offset

    h_graph = gather_rows(enc.graph_embs, [r.graph_index for r in rows])

    with_selection = [i for i, r in enumerate(rows) if r.selected]
    if with_selection:
        node_ids: list[int] = []
        seg: list[int] = []
        for si, i in enumerate(with_selection):
            row = rows[i]
            base = int(offsets[row.graph_index])
            for v in sorted(row.selected):
                node_ids.append(base + v)
                seg.append(si)
        means = segment_mean(gather_rows(enc.node_embs, node_ids), seg, len(with_selection))
        h_rc = scatter_rows(means, with_selection, n_rows)
    else:
        h_rc = Tensor(np.zeros((n_rows, d)))

    node_rows = [i for i, r in enumerate(rows) if r.action >= 0]
    stop_rows = [i for i, r in enumerate(rows) if r.action < 0]
    parts = []
    if node_rows:
        picks = [int(offsets[rows[i].graph_index]) + rows[i].action for i in node_rows]
        parts.append(scatter_rows(gather_rows(enc.node_embs, picks), node_rows, n_rows))
    if stop_rows:
        stops = gather_rows(store["h_stop"], np.zeros(len(stop_rows), dtype=np.int64))
        parts.append(scatter_rows(stops, stop_rows, n_rows))
    h_action = parts[0] if len(parts) == 1 else add(parts[0], parts[1])

    x = concat([h_graph, h_rc, h_action], axis=1)
    h = elu(add(matmul(x, store["qhead.w1"]), store["qhead.b1"]))
    h = elu(add(matmul(h, store["qhead.w2"]), store["qhead.b2"]))
    return add(matmul(h, store["qhead.w3"]), store["qhead.b3"])


def encode_one(store: ParameterStore, cfg: EncoderConfig, graph: MolGraph) -> BatchEncoding:
    """Encode a single graph without building an autodiff graph."""
    with no_grad():
        return encode_batch(store, cfg, [graph])


def action_values(
    store: ParameterStore,
    cfg: EncoderConfig,
    enc: BatchEncoding,
    selected: frozenset[int],
    actions: list[int],
    graph_index: int = 0,
) -> np.ndarray:
    """Q values for many actions of one state, as a plain array."""
    with no_grad():
        rows = [QueryRow(graph_index, selected, a) for a in actions]
        return q_values(store, cfg, enc, rows).data.reshape(-1)


def q_value(
    store: ParameterStore,
    cfg: EncoderConfig,
    state: RCState,
    action: int,
    enc: BatchEncoding | None = None,
) -> float:
    if enc is None:
        enc = encode_one(store, cfg, state.graph)
    return float(action_values(store, cfg, enc, state.selected, [action])[0])


def act_epsilon_greedy(
    store: ParameterStore,
    cfg: EncoderConfig,
    state: RCState,
    epsilon: float,
    rng: np.random.Generator,
    one_hop: bool = True,
    enc: BatchEncoding | None = None,
) -> int:
    """Uniform random legal action with probability epsilon, else argmax.

    Ties break toward the first action in the deterministic legal order.
    """
    actions = legal_actions(state, one_hop=one_hop)
    if rng.random() < epsilon:
        return actions[int(rng.integers(len(actions)))]
    if enc is None:
        enc = encode_one(store, cfg, state.graph)
    values = action_values(store, cfg, enc, state.selected, actions)
    return actions[int(np.argmax(values))]


# -- checkpoints -----------------------------------------------------------------


def save_checkpoint(store: ParameterStore, cfg: EncoderConfig, path: str | Path) -> None:
    arrays = dict(store.state_arrays())
    arrays[_META_KEY] = np.array(
        [cfg.layers, cfg.heads, cfg.hidden_dim], dtype=np.float64
    )
    save_tensors(arrays, path)


def load_checkpoint(path: str | Path, cfg: EncoderConfig) -> ParameterStore:
    arrays = load_tensors(path)
    meta = arrays.pop(_META_KEY, None)
    if meta is None:
        raise VersionMismatch(f"{path}: missing model shape metadata")
    expect = [cfg.layers, cfg.heads, cfg.hidden_dim]
    if [int(v) for v in meta.reshape(-1)] != expect:
        raise VersionMismatch(
            f"{path}: checkpoint shape {[int(v) for v in meta.reshape(-1)]} "
            f"does not match config {expect}"
        )
    expected_names = qnetwork_param_names(cfg)
    if sorted(arrays) != sorted(expected_names):
        raise VersionMismatch(f"{path}: parameter names do not match the config")
    store = ParameterStore()
    for name in arrays:
        store.add(name, arrays[name])
    return store
