"""Top-k exact match, stratified reporting and dataset splitting."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..molgraph import Sample, induced_edge_count, subset_component_count
from .patterns import pattern_key, pattern_set


class MissingPrediction(KeyError):
    """A sample id has no ranked prediction list."""


class TooFewSamples(ValueError):
    """Not enough samples to split."""


def topk_exact_match(
    predictions: list[frozenset[int]], label: frozenset[int], kmax: int = 4
) -> list[bool]:
    """Hit flags for k = 1..kmax; hit when the label appears in the top k."""
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    label = frozenset(label)
    hits = []
    seen = False
    for k in range(1, kmax + 1):
        if not seen and k <= len(predictions) and frozenset(predictions[k - 1]) == label:
            seen = True
        hits.append(seen)
    return hits


def split_dataset(
    samples: list[Sample], ratios=(0.8, 0.1, 0.1), seed: int = 0
) -> tuple[list[Sample], list[Sample], list[Sample]]:
    """Seeded shuffle split into train/val/test with rounded ratio counts."""
    if len(samples) < 10:
        raise TooFewSamples(f"need at least 10 samples, got {len(samples)}")
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must be three non-negative numbers summing to 1")
    order = np.random.default_rng(seed).permutation(len(samples))
    n_train = int(round(ratios[0] * len(samples)))
    n_val = int(round(ratios[1] * len(samples)))
    picks = [samples[int(i)] for i in order]
    return (
        picks[:n_train],
        picks[n_train : n_train + n_val],
        picks[n_train + n_val :],
    )


def _edge_stratum(edges: int) -> str:
    if edges == 0:
        return "atom-only"
    if edges <= 2:
        return str(edges)
    return "3+"


def _branch_stratum(branches: int) -> str:
    return str(branches) if branches <= 2 else "3+"


@dataclass
class EvalReport:
    """Per-k accuracy overall and per label stratum.

    Strata: by induced edge count of the label (atom-only, 1, 2, 3+),
    by single versus multiple (two or more edges) centers, and by
    connected branch count. Counts per stratum sum to the total.
    """

    kmax: int
    total: int
    accuracy: dict[int, float]
    by_edges: dict[str, dict] = field(default_factory=dict)
    by_multiplicity: dict[str, dict] = field(default_factory=dict)
    by_branches: dict[str, dict] = field(default_factory=dict)
    extrapolation: dict[str, int] | None = None

    def to_json(self) -> str:
        blob = {
            "kmax": self.kmax,
            "total": self.total,
            "accuracy": {str(k): v for k, v in self.accuracy.items()},
            "by_edges": self.by_edges,
            "by_multiplicity": self.by_multiplicity,
            "by_branches": self.by_branches,
            "extrapolation": self.extrapolation,
        }
        return json.dumps(blob, sort_keys=True, indent=2)


def _aggregate(rows: list[list[bool]], kmax: int) -> dict:
    count = len(rows)
    acc = {}
    for k in range(1, kmax + 1):
        acc[str(k)] = (sum(r[k - 1] for r in rows) / count) if count else 0.0
    return {"count": count, "accuracy": acc}


def stratified_report(
    predictions: dict[str, list[frozenset[int]]],
    samples: list[Sample],
    kmax: int = 4,
    train_samples: list[Sample] | None = None,
) -> EvalReport:
    """Aggregate hit flags over samples, overall and per stratum.

    When ``train_samples`` is given the report also counts successful
    extrapolations: correctly predicted (top-1) test labels whose pattern
    never occurs among the training labels, reported both per sample and
    per distinct pattern.
    """
    if not samples:
        raise TooFewSamples("cannot report on zero samples")
    rows: list[list[bool]] = []
    strata: dict[str, dict[str, list[list[bool]]]] = {
        "edges": {},
        "multiplicity": {},
        "branches": {},
    }
    for s in samples:
        if s.id not in predictions:
            raise MissingPrediction(s.id)
        hits = topk_exact_match(predictions[s.id], s.label, kmax)
        rows.append(hits)
        edges = induced_edge_count(s.graph, s.label)
        branches = subset_component_count(s.graph, s.label)
        keys = {
            "edges": _edge_stratum(edges),
            "multiplicity": "multiple" if edges >= 2 else "single",
            "branches": _branch_stratum(branches),
        }
        for group, key in keys.items():
            strata[group].setdefault(key, []).append(hits)

    overall = {k: sum(r[k - 1] for r in rows) / len(rows) for k in range(1, kmax + 1)}
    report = EvalReport(
        kmax=kmax,
        total=len(rows),
        accuracy=overall,
        by_edges={k: _aggregate(v, kmax) for k, v in strata["edges"].items()},
        by_multiplicity={k: _aggregate(v, kmax) for k, v in strata["multiplicity"].items()},
        by_branches={k: _aggregate(v, kmax) for k, v in strata["branches"].items()},
    )
    if train_samples is not None:
        per_sample, per_pattern = extrapolation_counts(predictions, samples, train_samples)
        report.extrapolation = {"samples": per_sample, "patterns": per_pattern}
    return report


def extrapolation_counts(
    predictions: dict[str, list[frozenset[int]]],
    test_samples: list[Sample],
    train_samples: list[Sample],
) -> tuple[int, int]:
    """Successful extrapolations under both counting protocols.

    Returns (per-sample count, per-distinct-pattern count) of top-1
    correct test predictions whose label pattern is absent from the
    training labels.
    """
    known = pattern_set(train_samples)
    novel_hits = 0
    novel_patterns: set[int] = set()
    for s in test_samples:
        ranked = predictions.get(s.id)
        if ranked is None:
            raise MissingPrediction(s.id)
        if not ranked or frozenset(ranked[0]) != s.label:
            continue
        key = pattern_key(s.graph, s.label)
        if key not in known:
            novel_hits += 1
            novel_patterns.add(key)
    return novel_hits, len(novel_patterns)


def extrapolation_count(
    predictions: dict[str, list[frozenset[int]]],
    test_samples: list[Sample],
    train_samples: list[Sample],
) -> int:
    """Per-sample protocol of ``extrapolation_counts``."""
    return extrapolation_counts(predictions, test_samples, train_samples)[0]
