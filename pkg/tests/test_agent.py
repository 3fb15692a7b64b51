import json

import numpy as np
import pytest

from rcid.agent import (
    BufferTooSmall,
    QueryRow,
    ReplayBuffer,
    TrainConfig,
    act_epsilon_greedy,
    action_values,
    bellman_target,
    compute_targets,
    encode_one,
    evaluate_top1,
    greedy_rollout,
    init_qnetwork,
    load_checkpoint,
    q_values,
    run_training,
    save_checkpoint,
    train_step,
)
from rcid.encoder import EncoderConfig, encode_batch
from rcid.env import STOP, RCEnv, RCState, Transition, initial_state
from rcid.molgraph import Atom, Bond, MolGraph, Sample, parse_smiles
from rcid.nn import AdamConfig, VersionMismatch

CFG = EncoderConfig(hidden_dim=16, layers=1, heads=2)


def path_graph(n: int) -> MolGraph:
    return MolGraph(
        tuple(Atom(6) for _ in range(n)), tuple(Bond(i, i + 1) for i in range(n - 1))
    )


def make_transition(g, selected, action, reward, next_selected, terminal, step=1):
    return Transition(
        graph_id="t",
        graph=g,
        selected=frozenset(selected),
        step=step,
        action=action,
        reward=reward,
        next_selected=frozenset(next_selected),
        next_step=step + 1,
        terminal=terminal,
    )


def test_q_values_deterministic():
    store = init_qnetwork(CFG, seed=1)
    g = parse_smiles("CCO")
    enc = encode_one(store, CFG, g)
    a = action_values(store, CFG, enc, frozenset({1}), [0, 2, STOP])
    b = action_values(store, CFG, enc, frozenset({1}), [0, 2, STOP])
    assert np.array_equal(a, b)


def test_q_value_depends_on_set_not_history():
    store = init_qnetwork(CFG, seed=2)
    g = parse_smiles("CCO")
    enc = encode_one(store, CFG, g)
    a = action_values(store, CFG, enc, frozenset({0, 1}), [2])
    b = action_values(store, CFG, enc, frozenset({1, 0}), [2])
    assert np.array_equal(a, b)


def test_stop_action_reads_stop_token():
    store = init_qnetwork(CFG, seed=3)
    g = parse_smiles("CCO")
    enc = encode_one(store, CFG, g)
    before = action_values(store, CFG, enc, frozenset({1}), [0, STOP])
    store["h_stop"].data = store["h_stop"].data + 0.5
    after = action_values(store, CFG, enc, frozenset({1}), [0, STOP])
    assert after[0] == before[0]
    assert after[1] != before[1]


def test_batched_rows_match_single_rows():
    store = init_qnetwork(CFG, seed=4)
    graphs = [parse_smiles("CCO"), parse_smiles("C=C")]
    enc = encode_batch(store, CFG, graphs)
    rows = [
        QueryRow(0, frozenset(), 1),
        QueryRow(0, frozenset({0, 1}), STOP),
        QueryRow(1, frozenset({0}), 1),
        QueryRow(1, frozenset(), 0),
    ]
    got = q_values(store, CFG, enc, rows).data.reshape(-1)
    for row, want in zip(rows, got):
        solo = encode_one(store, CFG, graphs[row.graph_index])
        one = action_values(store, CFG, solo, row.selected, [row.action])[0]
        assert abs(one - want) < 1e-9


def test_bellman_targets_by_mode():
    store = init_qnetwork(CFG, seed=5)
    g = parse_smiles("CCO")
    term = make_transition(g, {1}, STOP, 1.0, {1}, True)
    assert bellman_target(term, store, CFG, gamma=0.9) == pytest.approx(1.0)
    assert bellman_target(
        term, store, CFG, gamma=0.9, mode="discount_on_reward"
    ) == pytest.approx(0.9)

    live = make_transition(g, set(), 1, 0.0, {1}, False, step=0)
    enc = encode_one(store, CFG, g)
    best = float(np.max(action_values(store, CFG, enc, frozenset({1}), [0, 2, STOP])))
    assert bellman_target(live, store, CFG, gamma=0.9) == pytest.approx(0.9 * best)
    assert bellman_target(
        live, store, CFG, gamma=0.9, mode="discount_on_reward"
    ) == pytest.approx(best)
    live_paid = make_transition(g, {1}, 0, 0.5, {0, 1}, False)
    t = bellman_target(live_paid, store, CFG, gamma=0.9)
    best2 = float(np.max(action_values(store, CFG, enc, frozenset({0, 1}), [2, STOP])))
    assert t == pytest.approx(0.5 + 0.9 * best2)


def test_compute_targets_batch_matches_singles():
    store = init_qnetwork(CFG, seed=6)
    g = parse_smiles("CCO")
    g2 = path_graph(4)
    batch = [
        make_transition(g, {1}, STOP, 1.0, {1}, True),
        make_transition(g, set(), 0, 0.0, {0}, False, step=0),
        make_transition(g2, {1}, 2, 0.0, {1, 2}, False),
    ]
    got = compute_targets(batch, store, CFG, gamma=0.99)
    for i, t in enumerate(batch):
        assert got[i, 0] == pytest.approx(bellman_target(t, store, CFG, gamma=0.99))


def test_targets_leave_no_gradients():
    store = init_qnetwork(CFG, seed=7)
    g = parse_smiles("CCO")
    batch = [make_transition(g, set(), 1, 0.0, {1}, False, step=0)]
    compute_targets(batch, store, CFG, gamma=0.99)
    assert all(p.grad is None for _, p in store.items())


def test_epsilon_greedy_zero_is_argmax():
    store = init_qnetwork(CFG, seed=8)
    g = parse_smiles("CCO")
    state = initial_state(g)
    enc = encode_one(store, CFG, g)
    values = action_values(store, CFG, enc, frozenset(), [0, 1, 2])
    want = int(np.argmax(values))
    for seed in range(5):
        got = act_epsilon_greedy(
            store, CFG, state, 0.0, np.random.default_rng(seed), enc=enc
        )
        assert got == want


def test_epsilon_greedy_one_is_uniform_over_legal():
    store = init_qnetwork(CFG, seed=9)
    g = parse_smiles("CCO")
    state = RCState(g, frozenset({1}), 1)
    enc = encode_one(store, CFG, g)
    rng = np.random.default_rng(0)
    counts = {0: 0, 2: 0, STOP: 0}
    n = 3000
    for _ in range(n):
        a = act_epsilon_greedy(store, CFG, state, 1.0, rng, enc=enc)
        counts[a] += 1
    for a, c in counts.items():
        assert abs(c / n - 1 / 3) < 0.04, (a, c)


def test_replay_buffer_eviction_and_sampling():
    g = path_graph(2)
    buf = ReplayBuffer(capacity=5)
    for i in range(8):
        buf.push(make_transition(g, set(), 0, float(i), {0}, False, step=0))
    assert len(buf) == 5
    rewards = {t.reward for t in buf.sample(5, np.random.default_rng(0))}
    assert rewards == {3.0, 4.0, 5.0, 6.0, 7.0}
    with pytest.raises(BufferTooSmall):
        buf.sample(6, np.random.default_rng(0))


def test_replay_sampling_is_roughly_uniform():
    g = path_graph(2)
    buf = ReplayBuffer(capacity=10)
    for i in range(10):
        buf.push(make_transition(g, set(), 0, float(i), {0}, False, step=0))
    rng = np.random.default_rng(1)
    counts = np.zeros(10)
    for _ in range(2000):
        for t in buf.sample(2, rng):
            counts[int(t.reward)] += 1
    freq = counts / counts.sum()
    assert np.all(np.abs(freq - 0.1) < 0.02)


def test_train_step_overfits_single_transition():
    store = init_qnetwork(CFG, seed=10)
    target_store = store.clone()
    g = parse_smiles("CCO")
    t = make_transition(g, {1}, STOP, 1.0, {1}, True)
    tcfg = TrainConfig(total_iters=10, imitation_iters=0, batch_size=1)
    acfg = AdamConfig(lr=0.01)
    losses = [
        train_step(store, target_store, [t], CFG, tcfg, acfg) for _ in range(60)
    ]
    assert losses[-1] < 0.05 * losses[0]
    enc = encode_one(store, CFG, g)
    assert action_values(store, CFG, enc, frozenset({1}), [STOP])[0] == pytest.approx(
        1.0, abs=0.15
    )


def test_epsilon_schedule():
    tcfg = TrainConfig(
        eps_start=1.0,
        eps_end=0.05,
        eps_decay_start=100,
        eps_decay_end=200,
        total_iters=300,
        imitation_iters=100,
    )
    assert tcfg.epsilon(1) == 1.0
    assert tcfg.epsilon(100) == 1.0
    assert tcfg.epsilon(150) == pytest.approx(0.525)
    assert tcfg.epsilon(200) == 0.05
    assert tcfg.epsilon(299) == 0.05


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(gamma=1.5)
    with pytest.raises(ValueError):
        TrainConfig(imitation_iters=10, total_iters=5)
    with pytest.raises(ValueError):
        TrainConfig(eps_decay_start=50, eps_decay_end=10)
    with pytest.raises(ValueError):
        TrainConfig(target_mode="other")


def test_checkpoint_round_trip(tmp_path):
    store = init_qnetwork(CFG, seed=11)
    path = tmp_path / "model.bin"
    save_checkpoint(store, CFG, path)
    loaded = load_checkpoint(path, CFG)
    for name, p in store.items():
        assert np.allclose(loaded[name].data, p.data, atol=1e-7)
    path2 = tmp_path / "again.bin"
    save_checkpoint(loaded, CFG, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_checkpoint_rejects_other_shape(tmp_path):
    store = init_qnetwork(CFG, seed=12)
    path = tmp_path / "model.bin"
    save_checkpoint(store, CFG, path)
    with pytest.raises(VersionMismatch):
        load_checkpoint(path, EncoderConfig(hidden_dim=32, layers=1, heads=2))


def test_training_loop_mechanics(tmp_path):
    samples = [
        Sample(id="a", graph=path_graph(3), label=frozenset({1})),
        Sample(id="b", graph=path_graph(4), label=frozenset({0, 1})),
    ]
    tcfg = TrainConfig(
        total_iters=250,
        imitation_iters=100,
        batch_size=8,
        replay_capacity=500,
        checkpoint_period=125,
        target_sync=50,
        eps_decay_start=100,
        eps_decay_end=200,
    )
    result = run_training(
        samples,
        samples,
        tcfg,
        CFG,
        AdamConfig(lr=0.003),
        seed=13,
        out_dir=tmp_path,
    )
    assert (tmp_path / "final.bin").exists()
    assert (tmp_path / "best.bin").exists()
    assert (tmp_path / "ckpt_000125.bin").exists()
    assert (tmp_path / "ckpt_000250.bin").exists()
    lines = (tmp_path / "log.jsonl").read_text().strip().splitlines()
    assert len(lines) >= 2
    for line in lines:
        row = json.loads(line)
        assert set(row) == {"iter", "loss", "eps", "buffer", "val_top1"}
    assert result.log[-1]["iter"] == 250
    losses = [r["loss"] for r in result.log if r["loss"] is not None]
    assert losses and all(np.isfinite(v) for v in losses)
    assert result.best_val_top1 is not None
    assert 0.0 <= result.best_val_top1 <= 1.0
    assert result.best_iteration is not None
    assert result.selected_store() is result.best_store
    top1 = evaluate_top1(result.selected_store(), CFG, samples)
    assert 0.0 <= top1 <= 1.0


def test_training_runs_are_reproducible(tmp_path):
    samples = [Sample(id="a", graph=path_graph(3), label=frozenset({1}))]
    tcfg = TrainConfig(
        total_iters=40,
        imitation_iters=20,
        batch_size=4,
        replay_capacity=100,
        checkpoint_period=40,
        target_sync=10,
        eps_decay_start=20,
        eps_decay_end=30,
    )
    out = []
    for d in ("r1", "r2"):
        res = run_training(
            samples, [], tcfg, CFG, AdamConfig(), seed=21, out_dir=tmp_path / d
        )
        out.append(res)
    a = (tmp_path / "r1" / "final.bin").read_bytes()
    b = (tmp_path / "r2" / "final.bin").read_bytes()
    assert a == b
    assert out[0].log == out[1].log


def test_greedy_rollout_respects_cap():
    store = init_qnetwork(CFG, seed=14)
    g = path_graph(3)
    got = greedy_rollout(store, CFG, g, step_cap=1)
    assert len(got) == 1
