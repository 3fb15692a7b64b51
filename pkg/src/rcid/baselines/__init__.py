"""Comparator methods: similarity retrieval and a bond classifier."""

from .bond_classifier import (
    BondClassifier,
    BondClassifierConfig,
    EmptyTrainSet,
    infer_bond_classifier,
    init_bond_classifier,
    load_bond_classifier,
    save_bond_classifier,
    train_bond_classifier,
)
from .fingerprints import Fingerprint, WidthMismatch, ecfp_fingerprint, tanimoto
from .matching import MatchExplosion, subgraph_match
from .similarity import SimilarityBaseline, sim_predict

__all__ = [
    "BondClassifier",
    "BondClassifierConfig",
    "EmptyTrainSet",
    "Fingerprint",
    "MatchExplosion",
    "SimilarityBaseline",
    "WidthMismatch",
    "ecfp_fingerprint",
    "infer_bond_classifier",
    "init_bond_classifier",
    "load_bond_classifier",
    "save_bond_classifier",
    "sim_predict",
    "subgraph_match",
    "tanimoto",
    "train_bond_classifier",
]
