"""Edge-featured graph attention encoder for molecular product graphs.

Per layer and head, every directed edge (receiver i, sender j) builds a
fused feature from [h_i W | f_ij | h_j W], passes it through a LeakyReLU
projection, and scores it with a learned row vector. Scores are softmaxed
over each receiver's incoming edges and the attention-weighted sender
projections are summed, run through ELU per head, concatenated across
heads and mixed by a two-layer MLP. Edge features for the next layer are
the concatenated per-head fused features under a linear projection.

The pooled graph embedding combines the mean node embedding u and mean
undirected-bond embedding v as [|u - v| , u + v] through a two-layer MLP.
Bond embeddings average the two directed copies of each bond; a graph with
no bonds contributes a zero mean. Every node gets a self-loop edge carrying
a learned input feature row so attention segments are never empty.

Several graphs can be encoded in one pass as a disjoint union; all
aggregation is segment-based, so per-graph results are identical to
encoding each graph alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .molgraph import ATOM_FEATURE_SIZE, BOND_FEATURE_SIZE, MolGraph, featurize
from .nn import (
    ParameterStore,
    Tensor,
    absolute,
    add,
    concat,
    elu,
    gather_rows,
    leaky_relu,
    matmul,
    mean_rows,
    mul,
    scatter_rows,
    segment_mean,
    segment_softmax,
    segment_sum,
    sub,
    transpose,
)

LEAKY_SLOPE = 0.2
ELU_ALPHA = 1.0


class IsolatedNode(ValueError):
    """A node with no incident edges; only possible without self-loops."""


@dataclass(frozen=True)
class EncoderConfig:
    hidden_dim: int = 256
    layers: int = 4
    heads: int = 4

    def __post_init__(self) -> None:
        if self.hidden_dim < 1 or self.layers < 1 or self.heads < 1:
            raise ValueError("hidden_dim, layers and heads must be >= 1")


@dataclass
class GraphBatch:
    """Index arrays for one or more graphs packed as a disjoint union."""

    graphs: list[MolGraph]
    node_offset: np.ndarray  # (B+1,) prefix sum of node counts
    node_graph_ids: np.ndarray  # (N,)
    atom_feats: np.ndarray  # (N, 135)
    edge_const: np.ndarray  # (E, 15), zero rows at self-loops
    receiver: np.ndarray  # (E,) global node ids, sorted ascending
    sender: np.ndarray  # (E,)
    self_positions: np.ndarray  # rows that are self-loops
    bond_fwd_pos: np.ndarray  # (M,) directed row of bond k in its a->b copy
    bond_rev_pos: np.ndarray  # (M,) the b->a copy
    bond_graph_ids: np.ndarray  # (M,)

    @property
    def num_nodes(self) -> int:
        return int(self.node_offset[-1])

    @property
    def num_graphs(self) -> int:
        return len(self.graphs)


@dataclass
class BatchEncoding:
    """Encoder output for a batch: per-node, per-bond and per-graph rows."""

    batch: GraphBatch
    node_embs: Tensor  # (N, d)
    edge_rows: Tensor  # (E, d) final directed edge features
    graph_embs: Tensor  # (B, d)


@dataclass
class GraphEmbeddings:
    """Single-graph encoder output."""

    node: Tensor  # (n, d)
    edge: Tensor  # (m, d), per undirected bond
    graph: Tensor  # (1, d)


def build_batch(graphs: list[MolGraph], self_loops: bool = True) -> GraphBatch:
    offsets = np.zeros(len(graphs) + 1, dtype=np.int64)
    for i, g in enumerate(graphs):
        offsets[i + 1] = offsets[i] + len(g)
    n_total = int(offsets[-1])

    atom_feats = np.zeros((n_total, ATOM_FEATURE_SIZE), dtype=np.float64)
    node_graph_ids = np.zeros(n_total, dtype=np.int64)
    receiver: list[int] = []
    sender: list[int] = []
    edge_rows_const: list[np.ndarray] = []
    self_positions: list[int] = []
    bond_fwd: dict[tuple[int, int], int] = {}

    zero_bond = np.zeros(BOND_FEATURE_SIZE, dtype=np.float64)
    for gi, g in enumerate(graphs):
        enc = featurize(g)
        o = int(offsets[gi])
        atom_feats[o : o + len(g)] = enc.atom_features
        node_graph_ids[o : o + len(g)] = gi
        for i in range(len(g)):
            incident = g.incident(i)
            if not incident and not self_loops:
                raise IsolatedNode(f"node {i} of graph {gi} has no incident edges")
            entries = [(j, bi) for j, bi in incident]
            if self_loops:
                entries.append((i, -1))
            entries.sort()
            for j, bi in entries:
                row = len(receiver)
                receiver.append(o + i)
                sender.append(o + j)
                if bi < 0:
                    self_positions.append(row)
                    edge_rows_const.append(zero_bond)
                else:
                    edge_rows_const.append(enc.bond_features[bi])
                    bond_fwd[(o + i, o + j)] = row

    bond_fwd_pos: list[int] = []
    bond_rev_pos: list[int] = []
    bond_graph_ids: list[int] = []
    for gi, g in enumerate(graphs):
        o = int(offsets[gi])
        for b in g.bonds:
            bond_fwd_pos.append(bond_fwd[(o + b.a, o + b.b)])
            bond_rev_pos.append(bond_fwd[(o + b.b, o + b.a)])
            bond_graph_ids.append(gi)

    edge_const = (
        np.stack(edge_rows_const)
        if edge_rows_const
        else np.zeros((0, BOND_FEATURE_SIZE), dtype=np.float64)
    )
    return GraphBatch(
        graphs=list(graphs),
        node_offset=offsets,
        node_graph_ids=node_graph_ids,
        atom_feats=atom_feats,
        edge_const=edge_const,
        receiver=np.asarray(receiver, dtype=np.int64),
        sender=np.asarray(sender, dtype=np.int64),
        self_positions=np.asarray(self_positions, dtype=np.int64),
        bond_fwd_pos=np.asarray(bond_fwd_pos, dtype=np.int64),
        bond_rev_pos=np.asarray(bond_rev_pos, dtype=np.int64),
        bond_graph_ids=np.asarray(bond_graph_ids, dtype=np.int64),
    )


# -- parameters ---------------------------------------------------------------


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def add_encoder_params(store: ParameterStore, cfg: EncoderConfig, rng: np.random.Generator) -> None:
    d = cfg.hidden_dim
    store.add("input.atom", _glorot(rng, ATOM_FEATURE_SIZE, d, (ATOM_FEATURE_SIZE, d)))
    store.add("input.bond", _glorot(rng, BOND_FEATURE_SIZE, d, (BOND_FEATURE_SIZE, d)))
    store.add("input.self_bond", _glorot(rng, 1, BOND_FEATURE_SIZE, (1, BOND_FEATURE_SIZE)))
    for t in range(cfg.layers):
        for k in range(cfg.heads):
            store.add(f"egat.{t}.{k}.W", _glorot(rng, d, d, (d, d)))
            store.add(f"egat.{t}.{k}.A", _glorot(rng, 3 * d, d, (3 * d, d)))
            store.add(f"egat.{t}.{k}.a", _glorot(rng, d, 1, (1, d)))
        store.add(f"egat.{t}.edge_fusion", _glorot(rng, cfg.heads * d, d, (cfg.heads * d, d)))
        store.add(f"egat.{t}.node_mlp.w1", _glorot(rng, cfg.heads * d, d, (cfg.heads * d, d)))
        store.add(f"egat.{t}.node_mlp.b1", np.zeros((1, d)))
        store.add(f"egat.{t}.node_mlp.w2", _glorot(rng, d, d, (d, d)))
        store.add(f"egat.{t}.node_mlp.b2", np.zeros((1, d)))
    store.add("readout.w1", _glorot(rng, 2 * d, d, (2 * d, d)))
    store.add("readout.b1", np.zeros((1, d)))
    store.add("readout.w2", _glorot(rng, d, d, (d, d)))
    store.add("readout.b2", np.zeros((1, d)))
    store.add("h_stop", _glorot(rng, 1, d, (1, d)))


def encoder_param_names(cfg: EncoderConfig) -> list[str]:
    names = ["input.atom", "input.bond", "input.self_bond"]
    for t in range(cfg.layers):
        for k in range(cfg.heads):
            names += [f"egat.{t}.{k}.W", f"egat.{t}.{k}.A", f"egat.{t}.{k}.a"]
        names += [
            f"egat.{t}.edge_fusion",
            f"egat.{t}.node_mlp.w1",
            f"egat.{t}.node_mlp.b1",
            f"egat.{t}.node_mlp.w2",
            f"egat.{t}.node_mlp.b2",
        ]
    names += ["readout.w1", "readout.b1", "readout.w2", "readout.b2", "h_stop"]
    return names


def mlp2(store: ParameterStore, prefix: str, x: Tensor) -> Tensor:
    h = elu(add(matmul(x, store[f"{prefix}.w1"]), store[f"{prefix}.b1"]), ELU_ALPHA)
    return add(matmul(h, store[f"{prefix}.w2"]), store[f"{prefix}.b2"])


# -- forward -------------------------------------------------------------------


def egat_layer(
    store: ParameterStore,
    cfg: EncoderConfig,
    layer: int,
    H: Tensor,
    F: Tensor,
    batch: GraphBatch,
) -> tuple[Tensor, Tensor]:
    """One attention layer; returns next node and directed-edge features."""
    n = H.shape[0]
    head_nodes: list[Tensor] = []
    head_edges: list[Tensor] = []
    for k in range(cfg.heads):
        W = store[f"egat.{layer}.{k}.W"]
        A = store[f"egat.{layer}.{k}.A"]
        a = store[f"egat.{layer}.{k}.a"]
        HW = matmul(H, W)
        h_recv = gather_rows(HW, batch.receiver)
        h_send = gather_rows(HW, batch.sender)
        fused = leaky_relu(matmul(concat([h_recv, F, h_send], axis=1), A), LEAKY_SLOPE)
        scores = matmul(fused, transpose(a))
        alpha = segment_softmax(scores, batch.receiver, n)
        agg = segment_sum(mul(alpha, h_send), batch.receiver, n)
        head_nodes.append(elu(agg, ELU_ALPHA))
        head_edges.append(fused)
    new_H = mlp2(store, f"egat.{layer}.node_mlp", concat(head_nodes, axis=1))
    new_F = matmul(concat(head_edges, axis=1), store[f"egat.{layer}.edge_fusion"])
    return new_H, new_F


def encode_batch(
    store: ParameterStore,
    cfg: EncoderConfig,
    graphs: list[MolGraph],
    self_loops: bool = True,
) -> BatchEncoding:
    batch = build_batch(graphs, self_loops=self_loops)
    n_edges = batch.receiver.size
    H = matmul(Tensor(batch.atom_feats), store["input.atom"])
    F_in = Tensor(batch.edge_const)
    if batch.self_positions.size:
        self_rows = gather_rows(
            store["input.self_bond"], np.zeros(batch.self_positions.size, dtype=np.int64)
        )
        F_in = add(F_in, scatter_rows(self_rows, batch.self_positions, n_edges))
    F = matmul(F_in, store["input.bond"])

    for t in range(cfg.layers):
        H, F = egat_layer(store, cfg, t, H, F, batch)

    B = batch.num_graphs
    h_nodes = segment_mean(H, batch.node_graph_ids, B)
    d = cfg.hidden_dim
    if batch.bond_fwd_pos.size:
        directed = concat(
            [gather_rows(F, batch.bond_fwd_pos), gather_rows(F, batch.bond_rev_pos)], axis=0
        )
        directed_gids = np.concatenate([batch.bond_graph_ids, batch.bond_graph_ids])
        order = np.argsort(directed_gids, kind="stable")
        directed = gather_rows(directed, order)
        directed_gids = directed_gids[order]
        present = np.unique(directed_gids)
        compact = np.searchsorted(present, directed_gids)
        means = segment_mean(directed, compact, present.size)
        h_edges = scatter_rows(means, present, B)
    else:
        h_edges = Tensor(np.zeros((B, d)))

    pooled = concat([absolute(sub(h_nodes, h_edges)), add(h_nodes, h_edges)], axis=1)
    graph_embs = mlp2(store, "readout", pooled)
    return BatchEncoding(batch=batch, node_embs=H, edge_rows=F, graph_embs=graph_embs)


def encode_product(store: ParameterStore, cfg: EncoderConfig, g: MolGraph) -> GraphEmbeddings:
    enc = encode_batch(store, cfg, [g])
    batch = enc.batch
    if batch.bond_fwd_pos.size:
        edge = mul(
            add(
                gather_rows(enc.edge_rows, batch.bond_fwd_pos),
                gather_rows(enc.edge_rows, batch.bond_rev_pos),
            ),
            0.5,
        )
    else:
        edge = Tensor(np.zeros((0, cfg.hidden_dim)))
    return GraphEmbeddings(node=enc.node_embs, edge=edge, graph=enc.graph_embs)


def bond_embeddings(enc: BatchEncoding) -> Tensor:
    """Per undirected bond embedding across a batch, bonds in graph order."""
    batch = enc.batch
    if not batch.bond_fwd_pos.size:
        raise ValueError("batch has no bonds")
    return mul(
        add(
            gather_rows(enc.edge_rows, batch.bond_fwd_pos),
            gather_rows(enc.edge_rows, batch.bond_rev_pos),
        ),
        0.5,
    )


# -- state and action embeddings --------------------------------------------------


def subgraph_embedding(node_embs: Tensor, selected) -> Tensor:
    """Mean embedding of the selected nodes; zeros for an empty selection."""
    ids = sorted(selected)
    if not ids:
        return Tensor(np.zeros((1, node_embs.shape[1])))
    return mean_rows(gather_rows(node_embs, np.asarray(ids, dtype=np.int64)))


def action_embedding(node_embs: Tensor, action: int, h_stop: Tensor) -> Tensor:
    """Embedding row for one action; negative ids select the stop token."""
    if action < 0:
        return h_stop
    return gather_rows(node_embs, np.asarray([action], dtype=np.int64))
