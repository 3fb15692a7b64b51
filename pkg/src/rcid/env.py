"""Sequential reaction-center selection as a finite episodic decision process.

A state is (product graph, selected node set, step count). The first move
picks any node; later moves either grow the selection by one frontier node
or stop. The only reward is 1.0 on termination with the selected set
exactly equal to the labeled center. Episodes are also cut off once the
selection reaches a step cap (the whole graph by default), scoring the
same exact-match reward as an explicit stop.

``one_hop=False`` widens the action space to every unselected node, which
drops the connectivity guarantee; it exists for ablation runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .molgraph import MolGraph, is_connected_subset, one_hop_frontier

# Stop is encoded as a negative pseudo-node id so actions stay plain ints.
STOP = -1


class EmptyGraph(ValueError):
    pass


class IllegalAction(ValueError):
    pass


class UnreachableTarget(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RCState:
    graph: MolGraph
    selected: frozenset[int]
    step: int


@dataclass(frozen=True)
class Transition:
    graph_id: str
    graph: MolGraph
    selected: frozenset[int]
    step: int
    action: int
    reward: float
    next_selected: frozenset[int]
    next_step: int
    terminal: bool

    def state(self) -> RCState:
        return RCState(self.graph, self.selected, self.step)

    def next_state(self) -> RCState:
        return RCState(self.graph, self.next_selected, self.next_step)


def initial_state(g: MolGraph) -> RCState:
    if len(g) == 0:
        raise EmptyGraph("cannot start an episode on an empty graph")
    return RCState(graph=g, selected=frozenset(), step=0)


def legal_actions(state: RCState, one_hop: bool = True) -> list[int]:
    """Actions in deterministic order: node ids ascending, stop last."""
    g = state.graph
    if state.step == 0 or not state.selected:
        return list(range(len(g)))
    if one_hop:
        growth = sorted(one_hop_frontier(g, state.selected))
    else:
        growth = [v for v in range(len(g)) if v not in state.selected]
    return growth + [STOP]


class RCEnv:
    """Environment bound to one labeled product graph."""

    def __init__(
        self,
        graph: MolGraph,
        label: frozenset[int],
        one_hop: bool = True,
        step_cap: int | None = None,
    ):
        if len(graph) == 0:
            raise EmptyGraph("empty product graph")
        for v in label:
            if not (0 <= v < len(graph)):
                raise ValueError(f"label node {v} outside graph of size {len(graph)}")
        self.graph = graph
        self.label = frozenset(label)
        self.one_hop = one_hop
        self.step_cap = len(graph) if step_cap is None else step_cap
        if self.step_cap < 1:
            raise ValueError("step cap must be >= 1")

    def initial_state(self) -> RCState:
        return initial_state(self.graph)

    def legal_actions(self, state: RCState) -> list[int]:
        return legal_actions(state, one_hop=self.one_hop)

    def step(self, state: RCState, action: int) -> tuple[RCState, float, bool]:
        """Apply one action; returns (next state, reward, terminal)."""
        actions = self.legal_actions(state)
        if action not in actions:
            raise IllegalAction(
                f"action {action} not legal in state (selected={sorted(state.selected)}, "
                f"step={state.step})"
            )
        if action == STOP:
            nxt = RCState(self.graph, state.selected, state.step + 1)
            reward = 1.0 if state.selected == self.label else 0.0
            return nxt, reward, True
        selected = state.selected | {action}
        nxt = RCState(self.graph, selected, state.step + 1)
        if len(selected) >= self.step_cap:
            reward = 1.0 if selected == self.label else 0.0
            return nxt, reward, True
        return nxt, 0.0, False


def ground_truth_trajectory(
    g: MolGraph,
    label: frozenset[int],
    rng: np.random.Generator,
) -> list[tuple[RCState, int]]:
    """A legal (state, action) path that builds ``label`` and then stops.

    Node order is uniform over the label's internal frontier at each step.
    Raises UnreachableTarget when the label is empty or not connected. When
    the label covers the whole graph the final stop is omitted because the
    step cap already terminates the episode there.
    """
    label = frozenset(label)
    if not label or not is_connected_subset(g, label):
        raise UnreachableTarget(
            f"label {sorted(label)} is not a non-empty connected node set"
        )
    ordered = sorted(label)
    first = ordered[int(rng.integers(len(ordered)))]
    path: list[tuple[RCState, int]] = []
    state = initial_state(g)
    path.append((state, first))
    selected = frozenset({first})
    state = RCState(g, selected, 1)
    while selected != label:
        candidates = sorted(one_hop_frontier(g, selected) & label)
        nxt = candidates[int(rng.integers(len(candidates)))]
        path.append((state, nxt))
        selected = selected | {nxt}
        state = RCState(g, selected, state.step + 1)
    if len(label) < len(g):
        path.append((state, STOP))
    return path


def rollout_trajectory(
    env: RCEnv, pairs: list[tuple[RCState, int]], graph_id: str = ""
) -> list[Transition]:
    """Replay (state, action) pairs through an environment into transitions."""
    out: list[Transition] = []
    for state, action in pairs:
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
    return out
