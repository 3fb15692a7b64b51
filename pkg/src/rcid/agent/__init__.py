"""Q-learning agent: value network, replay buffer, training loop."""

from .qnet import (
    QueryRow,
    act_epsilon_greedy,
    action_values,
    encode_one,
    init_qnetwork,
    load_checkpoint,
    q_value,
    q_values,
    qnetwork_param_names,
    save_checkpoint,
)
from .replay import BufferTooSmall, ReplayBuffer
from .train import (
    TARGET_MODES,
    TrainConfig,
    TrainResult,
    bellman_target,
    compute_targets,
    evaluate_top1,
    greedy_rollout,
    run_episode,
    run_training,
    train_step,
)

__all__ = [
    "QueryRow",
    "act_epsilon_greedy",
    "action_values",
    "encode_one",
    "init_qnetwork",
    "load_checkpoint",
    "q_value",
    "q_values",
    "qnetwork_param_names",
    "save_checkpoint",
    "BufferTooSmall",
    "ReplayBuffer",
    "TARGET_MODES",
    "TrainConfig",
    "TrainResult",
    "bellman_target",
    "compute_targets",
    "evaluate_top1",
    "greedy_rollout",
    "run_episode",
    "run_training",
    "train_step",
]
