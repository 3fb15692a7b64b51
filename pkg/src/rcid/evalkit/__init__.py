"""Metrics, stratified reports, pattern fingerprints, synthetic data."""

from .metrics import (
    EvalReport,
    MissingPrediction,
    TooFewSamples,
    extrapolation_count,
    extrapolation_counts,
    split_dataset,
    stratified_report,
    topk_exact_match,
)
from .patterns import pattern_key, pattern_set
from .synth import (
    BASE_ELEMENTS,
    DEFAULT_MOTIFS,
    GeneratorConfig,
    Motif,
    MotifPlantFailure,
    generate_sample,
    generate_synthetic_dataset,
    random_molgraph,
)

__all__ = [
    "EvalReport",
    "MissingPrediction",
    "TooFewSamples",
    "extrapolation_count",
    "extrapolation_counts",
    "split_dataset",
    "stratified_report",
    "topk_exact_match",
    "pattern_key",
    "pattern_set",
    "BASE_ELEMENTS",
    "DEFAULT_MOTIFS",
    "GeneratorConfig",
    "Motif",
    "MotifPlantFailure",
    "generate_sample",
    "generate_synthetic_dataset",
    "random_molgraph",
]
