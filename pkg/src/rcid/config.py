"""One flat JSON run configuration shared by every CLI command.

Each field has a default, unknown keys are rejected, and the resolved
document is echoed next to command outputs so a run can be repeated
from its artifacts alone. All randomness descends from the single root
``seed`` through ``derive_seed``, which hashes the seed with a short
component tag.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .agent import TrainConfig
from .encoder import EncoderConfig
from .evalkit import GeneratorConfig
from .hashing import stable_hash64
from .nn import AdamConfig


class ConfigError(ValueError):
    """Unknown keys, wrong types or inconsistent fields in a run config."""


def derive_seed(root: int, tag: str) -> int:
    """Stable per-component seed from the root seed and a short tag."""
    return stable_hash64(root, *tag.encode("utf-8"))


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0

    hidden_dim: int = 64
    layers: int = 2
    heads: int = 2

    gamma: float = 0.99
    total_iters: int = 20_000
    imitation_iters: int = 2_000
    batch_size: int = 32
    replay_capacity: int = 100_000
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_start: int = 2_000
    eps_decay_end: int = 12_000
    target_sync: int = 1_000
    use_target_network: bool = True
    target_mode: str = "standard"
    checkpoint_period: int = 1_000
    one_hop: bool = True
    include_disconnected: bool = False
    step_cap: int | None = None

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    count: int = 2_400
    min_atoms: int = 12
    max_atoms: int = 20
    extra_edge_rate: float = 0.15
    split_train: int = 2_000
    split_val: int = 200
    split_test: int = 200

    beam_k: int = 4
    kmax: int = 4

    sim_repeats: int = 20
    count_classes: int = 6
    bond_iters: int = 2_000
    bond_batch_size: int = 16

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            cfg = cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    def validate(self) -> None:
        """Build every sub-config once so their range checks all run."""
        try:
            self.encoder_config()
            self.train_config()
            self.adam_config()
            self.generator_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        splits = (self.split_train, self.split_val, self.split_test)
        if any(not isinstance(v, int) or v < 0 for v in splits):
            raise ConfigError("split sizes must be non-negative integers")
        if sum(splits) != self.count:
            raise ConfigError(
                f"split sizes {splits} must sum to the sample count {self.count}"
            )
        if self.beam_k < 1 or self.kmax < 1:
            raise ConfigError("beam_k and kmax must be >= 1")
        if self.sim_repeats < 1:
            raise ConfigError("sim_repeats must be >= 1")
        if self.count_classes < 1 or self.bond_iters < 1 or self.bond_batch_size < 1:
            raise ConfigError("bond classifier fields must be >= 1")

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(hidden_dim=self.hidden_dim, layers=self.layers, heads=self.heads)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            gamma=self.gamma,
            total_iters=self.total_iters,
            imitation_iters=self.imitation_iters,
            batch_size=self.batch_size,
            replay_capacity=self.replay_capacity,
            eps_start=self.eps_start,
            eps_end=self.eps_end,
            eps_decay_start=self.eps_decay_start,
            eps_decay_end=self.eps_decay_end,
            target_sync=self.target_sync,
            use_target_network=self.use_target_network,
            target_mode=self.target_mode,
            checkpoint_period=self.checkpoint_period,
            one_hop=self.one_hop,
            include_disconnected=self.include_disconnected,
            step_cap=self.step_cap,
        )

    def adam_config(self) -> AdamConfig:
        return AdamConfig(lr=self.lr, beta1=self.beta1, beta2=self.beta2, eps=self.adam_eps)

    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(
            count=self.count,
            min_atoms=self.min_atoms,
            max_atoms=self.max_atoms,
            extra_edge_rate=self.extra_edge_rate,
            seed=derive_seed(self.seed, "gen"),
        )

    def split_ratios(self) -> tuple[float, float, float]:
        return (
            self.split_train / self.count,
            self.split_val / self.count,
            self.split_test / self.count,
        )

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())
