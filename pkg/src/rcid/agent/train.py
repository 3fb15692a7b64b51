"""Deep Q-learning over reaction center episodes.

Training runs a fixed number of iterations, one episode per iteration.
The first block of iterations pushes teacher episodes built from the
labeled sets; after that the behavior policy is epsilon greedy with a
linear schedule. Every iteration after warmup draws a uniform minibatch
from the replay buffer and takes one Adam step on the squared Bellman
error. Targets come from a periodically synced copy of the parameters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..encoder import EncoderConfig, encode_batch
from ..env import (
    STOP,
    RCEnv,
    RCState,
    Transition,
    ground_truth_trajectory,
    initial_state,
    legal_actions,
    rollout_trajectory,
)
from ..molgraph import MolGraph, Sample, is_connected_subset
from ..nn import AdamConfig, ParameterStore, adam_step, backward, constant, no_grad, squared_error
from .qnet import (
    QueryRow,
    act_epsilon_greedy,
    action_values,
    encode_one,
    init_qnetwork,
    q_values,
    save_checkpoint,
)
from .replay import ReplayBuffer

TARGET_MODES = ("standard", "discount_on_reward")


@dataclass(frozen=True)
class TrainConfig:
    """Knobs of the learning loop.

    ``target_mode`` picks where the discount lands in the one-step target:
    "standard" uses reward + gamma * best next value, "discount_on_reward"
    uses gamma * reward + best next value. The bootstrap term is zero for
    terminal transitions in both modes.
    """

    gamma: float = 0.99
    total_iters: int = 100_000
    imitation_iters: int = 10_000
    batch_size: int = 32
    replay_capacity: int = 100_000
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_start: int = 10_000
    eps_decay_end: int = 60_000
    target_sync: int = 1_000
    use_target_network: bool = True
    target_mode: str = "standard"
    checkpoint_period: int = 1_000
    one_hop: bool = True
    include_disconnected: bool = False
    step_cap: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.total_iters < 1 or self.batch_size < 1 or self.replay_capacity < 1:
            raise ValueError("iteration, batch and capacity counts must be positive")
        if not 0 <= self.imitation_iters <= self.total_iters:
            raise ValueError("imitation_iters must lie within total_iters")
        if self.eps_decay_end < self.eps_decay_start:
            raise ValueError("epsilon decay window is reversed")
        if self.target_mode not in TARGET_MODES:
            raise ValueError(f"target_mode must be one of {TARGET_MODES}")
        if self.target_sync < 1 or self.checkpoint_period < 1:
            raise ValueError("sync and checkpoint periods must be positive")

    def epsilon(self, iteration: int) -> float:
        """Piecewise linear schedule over the decay window."""
        if iteration <= self.eps_decay_start:
            return self.eps_start
        if iteration >= self.eps_decay_end:
            return self.eps_end
        span = self.eps_decay_end - self.eps_decay_start
        frac = (iteration - self.eps_decay_start) / span
        return self.eps_start + frac * (self.eps_end - self.eps_start)


def compute_targets(
    transitions: list[Transition],
    target_store: ParameterStore,
    cfg: EncoderConfig,
    gamma: float,
    mode: str = "standard",
    one_hop: bool = True,
) -> np.ndarray:
    """One-step targets, shape (len(transitions), 1), no gradients."""
    if mode not in TARGET_MODES:
        raise ValueError(f"target_mode must be one of {TARGET_MODES}")
    best = np.zeros(len(transitions))
    live = [(i, t) for i, t in enumerate(transitions) if not t.terminal]
    if live:
        graphs: list[MolGraph] = []
        index_of: dict[int, int] = {}
        for _, t in live:
            if id(t.graph) not in index_of:
                index_of[id(t.graph)] = len(graphs)
                graphs.append(t.graph)
        with no_grad():
            enc = encode_batch(target_store, cfg, graphs)
            rows: list[QueryRow] = []
            spans: list[tuple[int, int]] = []
            for _, t in live:
                actions = legal_actions(t.next_state(), one_hop=one_hop)
                start = len(rows)
                rows.extend(
                    QueryRow(index_of[id(t.graph)], t.next_selected, a) for a in actions
                )
                spans.append((start, len(rows)))
            values = q_values(target_store, cfg, enc, rows).data.reshape(-1)
        for (i, _), (start, end) in zip(live, spans):
            best[i] = float(np.max(values[start:end]))
    rewards = np.array([t.reward for t in transitions])
    if mode == "standard":
        out = rewards + gamma * best
    else:
        out = gamma * rewards + best
    return out.reshape(-1, 1)


def bellman_target(
    transition: Transition,
    target_store: ParameterStore,
    cfg: EncoderConfig,
    gamma: float,
    mode: str = "standard",
    one_hop: bool = True,
) -> float:
    return float(
        compute_targets([transition], target_store, cfg, gamma, mode, one_hop)[0, 0]
    )


def train_step(
    store: ParameterStore,
    target_store: ParameterStore,
    batch: list[Transition],
    cfg: EncoderConfig,
    tcfg: TrainConfig,
    acfg: AdamConfig,
) -> float:
    """One gradient step on a minibatch; returns the loss value."""
    targets = compute_targets(
        batch, target_store, cfg, tcfg.gamma, tcfg.target_mode, tcfg.one_hop
    )
    graphs: list[MolGraph] = []
    index_of: dict[int, int] = {}
    for t in batch:
        if id(t.graph) not in index_of:
            index_of[id(t.graph)] = len(graphs)
            graphs.append(t.graph)
    enc = encode_batch(store, cfg, graphs)
    rows = [QueryRow(index_of[id(t.graph)], t.selected, t.action) for t in batch]
    predicted = q_values(store, cfg, enc, rows)
    loss = squared_error(predicted, constant(targets))
    store.zero_grads()
    backward(loss)
    adam_step(store, acfg)
    return float(loss.item())


def run_episode(
    store: ParameterStore,
    cfg: EncoderConfig,
    env: RCEnv,
    epsilon: float,
    rng: np.random.Generator,
    graph_id: str = "",
) -> list[Transition]:
    """Roll the epsilon-greedy policy until the environment terminates."""
    enc = encode_one(store, cfg, env.graph)
    out: list[Transition] = []
    state = env.initial_state()
    while True:
        action = act_epsilon_greedy(
            store, cfg, state, epsilon, rng, one_hop=env.one_hop, enc=enc
        )
        nxt, reward, terminal = env.step(state, action)
        out.append(
            Transition(
                graph_id=graph_id,
                graph=env.graph,
                selected=state.selected,
                step=state.step,
                action=action,
                reward=reward,
                next_selected=nxt.selected,
                next_step=nxt.step,
                terminal=terminal,
            )
        )
        if terminal:
            return out
        state = nxt


def greedy_rollout(
    store: ParameterStore,
    cfg: EncoderConfig,
    graph: MolGraph,
    one_hop: bool = True,
    step_cap: int | None = None,
) -> frozenset[int]:
    """Deterministic argmax rollout; returns the final selected node set."""
    cap = len(graph) if step_cap is None else step_cap
    enc = encode_one(store, cfg, graph)
    state = initial_state(graph)
    while True:
        actions = legal_actions(state, one_hop=one_hop)
        values = action_values(store, cfg, enc, state.selected, actions)
        action = actions[int(np.argmax(values))]
        if action == STOP:
            return state.selected
        selected = state.selected | {action}
        if len(selected) >= cap:
            return selected
        state = RCState(graph, selected, state.step + 1)


def evaluate_top1(
    store: ParameterStore,
    cfg: EncoderConfig,
    samples: list[Sample],
    one_hop: bool = True,
) -> float:
    """Exact-match rate of the greedy policy over the given samples."""
    if not samples:
        raise ValueError("cannot evaluate on an empty sample list")
    hits = 0
    for s in samples:
        if greedy_rollout(store, cfg, s.graph, one_hop=one_hop) == s.label:
            hits += 1
    return hits / len(samples)


@dataclass
class TrainResult:
    store: ParameterStore
    log: list[dict] = field(default_factory=list)
    best_val_top1: float | None = None
    best_iteration: int | None = None
    best_store: ParameterStore | None = None

    def selected_store(self) -> ParameterStore:
        """Best validation checkpoint when one exists, else the final state."""
        return self.best_store if self.best_store is not None else self.store


def run_training(
    train_samples: list[Sample],
    val_samples: list[Sample],
    tcfg: TrainConfig,
    cfg: EncoderConfig,
    acfg: AdamConfig,
    seed: int,
    out_dir: str | Path | None = None,
    log_every: int = 100,
) -> TrainResult:
    """Full training run, reproducible from the seed alone.

    Three dedicated streams are derived from the seed: parameter init,
    episode control (sample choice, teacher order, exploration) and replay
    sampling. Checkpoints land in ``out_dir`` every ``checkpoint_period``
    iterations together with a greedy validation score; the best scoring
    parameters are kept as ``best.bin`` and the last ones as ``final.bin``.
    """
    eligible = [
        s
        for s in train_samples
        if tcfg.include_disconnected or (s.label and is_connected_subset(s.graph, s.label))
    ]
    if not eligible:
        raise ValueError("no usable training samples (all labels empty or disconnected)")

    store = init_qnetwork(cfg, seed=[seed, 0])
    target = store.clone() if tcfg.use_target_network else store
    episode_rng = np.random.default_rng([seed, 1])
    replay_rng = np.random.default_rng([seed, 2])
    buffer = ReplayBuffer(tcfg.replay_capacity)
    envs: dict[str, RCEnv] = {}

    out_path = Path(out_dir) if out_dir is not None else None
    log_file = None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        log_file = open(out_path / "log.jsonl", "w", encoding="utf-8")

    result = TrainResult(store=store)
    last_loss: float | None = None
    try:
        for it in range(1, tcfg.total_iters + 1):
            sample = eligible[int(episode_rng.integers(len(eligible)))]
            env = envs.get(sample.id)
            if env is None:
                env = RCEnv(
                    sample.graph,
                    sample.label,
                    one_hop=tcfg.one_hop,
                    step_cap=tcfg.step_cap,
                )
                envs[sample.id] = env
            if it <= tcfg.imitation_iters:
                pairs = ground_truth_trajectory(sample.graph, sample.label, episode_rng)
                transitions = rollout_trajectory(env, pairs, graph_id=sample.id)
            else:
                transitions = run_episode(
                    store, cfg, env, tcfg.epsilon(it), episode_rng, graph_id=sample.id
                )
            buffer.extend(transitions)

            if len(buffer) >= tcfg.batch_size:
                batch = buffer.sample(tcfg.batch_size, replay_rng)
                last_loss = train_step(store, target, batch, cfg, tcfg, acfg)

            if tcfg.use_target_network and it % tcfg.target_sync == 0:
                target.copy_from(store)

            val_top1 = None
            if it % tcfg.checkpoint_period == 0 or it == tcfg.total_iters:
                if val_samples:
                    val_top1 = evaluate_top1(store, cfg, val_samples, one_hop=tcfg.one_hop)
                    if result.best_val_top1 is None or val_top1 > result.best_val_top1:
                        result.best_val_top1 = val_top1
                        result.best_iteration = it
                        result.best_store = store.clone()
                        if out_path is not None:
                            save_checkpoint(store, cfg, out_path / "best.bin")
                if out_path is not None:
                    save_checkpoint(store, cfg, out_path / f"ckpt_{it:06d}.bin")

            if it % log_every == 0 or it == tcfg.total_iters:
                row = {
                    "iter": it,
                    "loss": last_loss,
                    "eps": round(tcfg.epsilon(it), 6),
                    "buffer": len(buffer),
                    "val_top1": val_top1,
                }
                result.log.append(row)
                if log_file is not None:
                    log_file.write(json.dumps(row, sort_keys=True) + "\n")
                    log_file.flush()
        if out_path is not None:
            save_checkpoint(store, cfg, out_path / "final.bin")
    finally:
        if log_file is not None:
            log_file.close()
    return result
