"""Command-line workflows tying the library into reproducible runs.

Every command reads one flat JSON config (all fields defaulted), applies
any flag overrides, and echoes the resolved document into its output
directory. Exit codes: 0 success, 1 validation problem (bad flags,
missing or malformed files, failed oracle check), 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from functools import partial
from pathlib import Path

import numpy as np

from . import CHECKPOINT_FORMAT_VERSION, DATASET_FORMAT_VERSION, __version__
from .agent import TARGET_MODES, init_qnetwork, load_checkpoint, run_training
from .baselines import (
    BondClassifierConfig,
    SimilarityBaseline,
    infer_bond_classifier,
    save_bond_classifier,
    train_bond_classifier,
)
from .config import ConfigError, RunConfig, derive_seed
from .encoder import EncoderConfig
from .evalkit import generate_sample, split_dataset, stratified_report
from .evalkit.synth import random_molgraph
from .molgraph import Sample, load_dataset, save_dataset
from .search import ScoredSet, beam_search, enumerate_connected_subsets, exhaustive_topk, format_prediction_line

_SPLITS = ("train", "val", "test")

# Per-process state for worker pools, filled by pool initializers.
_WORKER: dict = {}


def _version_string() -> str:
    return (
        f"rcid {__version__} "
        f"(dataset format {DATASET_FORMAT_VERSION}, checkpoint format {CHECKPOINT_FORMAT_VERSION})"
    )


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as validation errors."""

    def error(self, message: str):
        raise ConfigError(message)


def _load_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "mode", None) is not None:
        overrides["target_mode"] = args.mode
    if getattr(args, "beam", None) is not None:
        overrides["beam_k"] = args.beam
    if overrides:
        cfg = replace(cfg, **overrides)
        cfg.validate()
    return cfg


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_corpus(data_dir: str | Path) -> dict[str, list[Sample]]:
    data_dir = Path(data_dir)
    samples = load_dataset(data_dir / "dataset.jsonl")
    manifest = json.loads((data_dir / "splits.json").read_text())
    by_id = {s.id: s for s in samples}
    out: dict[str, list[Sample]] = {}
    for name in _SPLITS:
        ids = manifest.get(name)
        if not isinstance(ids, list):
            raise ConfigError(f"splits.json lacks a {name!r} id list")
        missing = [i for i in ids if i not in by_id]
        if missing:
            raise ConfigError(f"splits.json {name} ids absent from dataset: {missing[:3]}")
        out[name] = [by_id[i] for i in ids]
    return out


# -- gen-data ----------------------------------------------------------------------


def cmd_gen_data(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    gcfg = cfg.generator_config()
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            samples = list(pool.map(partial(generate_sample, gcfg), range(gcfg.count)))
    else:
        samples = [generate_sample(gcfg, i) for i in range(gcfg.count)]
    save_dataset(samples, out / "dataset.jsonl")
    train, val, test = split_dataset(
        samples, cfg.split_ratios(), seed=derive_seed(cfg.seed, "split")
    )
    manifest = {name: [s.id for s in part] for name, part in zip(_SPLITS, (train, val, test))}
    (out / "splits.json").write_text(json.dumps(manifest, indent=2) + "\n")
    cfg.write(out / "config.json")
    print(f"gen-data: wrote {len(samples)} samples to {out} "
          f"(train {len(train)} / val {len(val)} / test {len(test)})")
    return 0


# -- train -------------------------------------------------------------------------


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    corpus = _load_corpus(args.data)
    result = run_training(
        corpus["train"],
        corpus["val"],
        cfg.train_config(),
        cfg.encoder_config(),
        cfg.adam_config(),
        seed=derive_seed(cfg.seed, "train"),
        out_dir=out,
    )
    cfg.write(out / "config.json")
    best = "n/a" if result.best_val_top1 is None else f"{result.best_val_top1:.4f}"
    print(f"train: {cfg.total_iters} iterations done, best val top-1 {best} "
          f"(checkpoints in {out})")
    return 0


# -- predict -----------------------------------------------------------------------


def _predict_init(checkpoint: str, dims: tuple[int, int, int], beam_k: int, one_hop: bool) -> None:
    enc_cfg = EncoderConfig(hidden_dim=dims[0], layers=dims[1], heads=dims[2])
    _WORKER["store"] = load_checkpoint(checkpoint, enc_cfg)
    _WORKER["cfg"] = enc_cfg
    _WORKER["beam_k"] = beam_k
    _WORKER["one_hop"] = one_hop


def _predict_one(sample: Sample) -> str:
    ranked = beam_search(
        _WORKER["store"], _WORKER["cfg"], sample.graph, _WORKER["beam_k"],
        one_hop=_WORKER["one_hop"],
    )
    return format_prediction_line(sample.id, ranked, _WORKER["beam_k"])


def cmd_predict(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    samples = _load_corpus(args.data)[args.split]
    dims = (cfg.hidden_dim, cfg.layers, cfg.heads)
    if args.workers > 1:
        with ProcessPoolExecutor(
            max_workers=args.workers,
            initializer=_predict_init,
            initargs=(args.checkpoint, dims, cfg.beam_k, cfg.one_hop),
        ) as pool:
            lines = list(pool.map(_predict_one, samples))
    else:
        _predict_init(args.checkpoint, dims, cfg.beam_k, cfg.one_hop)
        lines = [_predict_one(s) for s in samples]
    path = out / "predictions.jsonl"
    path.write_text("".join(line + "\n" for line in lines))
    cfg.write(out / "config.json")
    print(f"predict: {len(lines)} molecules, beam {cfg.beam_k}, wrote {path}")
    return 0


# -- evaluate ----------------------------------------------------------------------


def _read_predictions(path: str | Path) -> dict[int, dict[str, list[frozenset[int]]]]:
    """Prediction lists keyed by repeat then sample id; plain runs use repeat 0."""
    by_repeat: dict[int, dict[str, list[frozenset[int]]]] = {}
    for number, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        obj = json.loads(line)
        try:
            ranked = [frozenset(p["nodes"]) for p in obj["predictions"]]
            repeat = int(obj.get("repeat", 0))
            sample_id = obj["id"]
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"{path}:{number}: bad prediction record ({exc})") from exc
        by_repeat.setdefault(repeat, {})[sample_id] = ranked
    if not by_repeat:
        raise ConfigError(f"{path}: no prediction records")
    return by_repeat


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    corpus = _load_corpus(args.data)
    samples = corpus[args.split]
    by_repeat = _read_predictions(args.predictions)
    reports = [
        stratified_report(by_repeat[r], samples, kmax=cfg.kmax, train_samples=corpus["train"])
        for r in sorted(by_repeat)
    ]
    if len(reports) == 1:
        accuracy = reports[0].accuracy
        text = reports[0].to_json()
    else:
        curves = np.asarray([[r.accuracy[k] for k in range(1, cfg.kmax + 1)] for r in reports])
        accuracy = {k: float(curves[:, k - 1].mean()) for k in range(1, cfg.kmax + 1)}
        payload = {
            "repeats": len(reports),
            "accuracy": {str(k): v for k, v in accuracy.items()},
            "accuracy_std": {
                str(k): float(curves[:, k - 1].std()) for k in range(1, cfg.kmax + 1)
            },
            "first_repeat": json.loads(reports[0].to_json()),
        }
        text = json.dumps(payload, indent=2, sort_keys=True)
    (out / "report.json").write_text(text + "\n")
    cfg.write(out / "config.json")
    summary = " ".join(f"top-{k} {accuracy[k]:.4f}" for k in sorted(accuracy))
    print(f"evaluate: {len(samples)} samples, {summary}")
    return 0


# -- oracle-check ------------------------------------------------------------------


def cmd_oracle_check(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    enc_cfg = cfg.encoder_config()
    rng = np.random.default_rng(derive_seed(cfg.seed, "oracle"))
    mismatches = 0
    started = time.perf_counter()
    for i in range(args.count):
        g = random_molgraph(rng, min_atoms=4, max_atoms=args.max_atoms)
        store = init_qnetwork(enc_cfg, seed=derive_seed(cfg.seed, f"oracle-{i}"))
        k = len(enumerate_connected_subsets(g))
        # Equivalence with the exhaustive ranking holds for connected growth.
        got = beam_search(store, enc_cfg, g, k, one_hop=True)
        want = exhaustive_topk(store, enc_cfg, g, k)
        if [(h.nodes, h.score) for h in got] != [(h.nodes, h.score) for h in want]:
            mismatches += 1
            print(f"oracle-check: graph {i} disagrees "
                  f"({len(g.atoms)} atoms, {k} subsets)", file=sys.stderr)
    elapsed = time.perf_counter() - started
    status = "ok" if mismatches == 0 else f"{mismatches} mismatches"
    print(f"oracle-check: {args.count} graphs, {status}, {elapsed:.1f}s")
    return 0 if mismatches == 0 else 1


# -- baseline ----------------------------------------------------------------------


def _sim_init(data: str, radius: int, nbits: int, kmax: int, repeats: int, root_seed: int) -> None:
    corpus = _load_corpus(data)
    _WORKER["model"] = SimilarityBaseline(corpus["train"], radius=radius, nbits=nbits)
    _WORKER["kmax"] = kmax
    _WORKER["repeats"] = repeats
    _WORKER["root_seed"] = root_seed


def _sim_one(sample: Sample) -> list[str]:
    rng = np.random.default_rng(derive_seed(_WORKER["root_seed"], f"sim:{sample.id}"))
    per_repeat = _WORKER["model"].predict_repeats(
        sample.graph, _WORKER["kmax"], _WORKER["repeats"], rng
    )
    lines = []
    for repeat, ranked in enumerate(per_repeat):
        scored = [ScoredSet(nodes, -float(pos)) for pos, nodes in enumerate(ranked)]
        obj = json.loads(format_prediction_line(sample.id, scored, _WORKER["kmax"]))
        obj["repeat"] = repeat
        lines.append(json.dumps(obj, sort_keys=True))
    return lines


def cmd_baseline(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    path = out / "predictions.jsonl"
    if args.method == "sim":
        samples = _load_corpus(args.data)[args.split]
        init = (str(args.data), 2, 2048, cfg.kmax, cfg.sim_repeats, cfg.seed)
        if args.workers > 1:
            with ProcessPoolExecutor(
                max_workers=args.workers, initializer=_sim_init, initargs=init
            ) as pool:
                chunks = list(pool.map(_sim_one, samples))
        else:
            _sim_init(*init)
            chunks = [_sim_one(s) for s in samples]
        lines = [line for chunk in chunks for line in chunk]
        print(f"baseline sim: {len(samples)} molecules x {cfg.sim_repeats} repeats, wrote {path}")
    else:
        corpus = _load_corpus(args.data)
        bcfg = BondClassifierConfig(
            encoder=cfg.encoder_config(),
            count_classes=cfg.count_classes,
            iters=cfg.bond_iters,
            batch_size=cfg.bond_batch_size,
            seed=derive_seed(cfg.seed, "bond"),
        )
        model, losses = train_bond_classifier(corpus["train"], bcfg, cfg.adam_config())
        save_bond_classifier(model, out / "bond.bin")
        lines = []
        for s in corpus[args.split]:
            ranked = infer_bond_classifier(model, s.graph, cfg.kmax)
            scored = [ScoredSet(nodes, -float(pos)) for pos, nodes in enumerate(ranked)]
            lines.append(format_prediction_line(s.id, scored, cfg.kmax))
        print(f"baseline bond: trained {bcfg.iters} steps "
              f"(final loss {losses[-1]:.4f}), wrote {path}")
    path.write_text("".join(line + "\n" for line in lines))
    cfg.write(out / "config.json")
    return 0


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rcid", description=__doc__)
    parser.add_argument("--version", action="version", version=_version_string())
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, workers: bool = False) -> None:
        p.add_argument("--config", help="path to a JSON run config")
        p.add_argument("--seed", type=int, help="override the config root seed")
        if workers:
            p.add_argument("--workers", type=int, default=1, help="parallel worker processes")

    p = sub.add_parser("gen-data", help="write a synthetic dataset and split manifest")
    common(p, workers=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=cmd_gen_data)

    p = sub.add_parser("train", help="train the Q-network on a dataset directory")
    common(p)
    p.add_argument("--data", required=True, help="directory from gen-data")
    p.add_argument("--out", required=True, help="output directory for checkpoints and log")
    p.add_argument("--mode", choices=TARGET_MODES, help="bootstrap target arithmetic")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("predict", help="beam-search predictions from a checkpoint")
    common(p, workers=True)
    p.add_argument("--data", required=True, help="directory from gen-data")
    p.add_argument("--checkpoint", required=True, help="model checkpoint file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--split", choices=_SPLITS, default="test")
    p.add_argument("--beam", type=int, help="override beam width")
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("evaluate", help="score a prediction file against labels")
    common(p)
    p.add_argument("--data", required=True, help="directory from gen-data")
    p.add_argument("--predictions", required=True, help="prediction JSONL file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--split", choices=_SPLITS, default="test")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("oracle-check", help="compare beam search against exhaustive ranking")
    common(p)
    p.add_argument("--count", type=int, default=100, help="number of random graphs")
    p.add_argument("--max-atoms", type=int, default=10, help="largest graph to draw")
    p.set_defaults(handler=cmd_oracle_check)

    p = sub.add_parser("baseline", help="run a comparator method end to end")
    common(p, workers=True)
    p.add_argument("--method", choices=("sim", "bond"), required=True)
    p.add_argument("--data", required=True, help="directory from gen-data")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--split", choices=_SPLITS, default="test")
    p.set_defaults(handler=cmd_baseline)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except (ConfigError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
