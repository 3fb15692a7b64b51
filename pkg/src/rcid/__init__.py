"""Reaction-center identification on molecular product graphs.

The package bundles a light molecular-graph toolkit, a small reverse-mode
autodiff engine, an edge-featured graph-attention encoder, a Q-learning
agent that grows a connected node set one atom at a time, beam-search
inference with exhaustive oracles, an evaluation harness with a synthetic
data generator, and two reference baselines.
"""

__version__ = "0.1.0"

DATASET_FORMAT_VERSION = 1
CHECKPOINT_FORMAT_VERSION = 1
