"""Molecular graphs: data model, SMILES parsing, features, dataset IO."""

from .dataset import (
    MalformedRecord,
    Sample,
    SCHEMA_VERSION,
    SchemaVersionMismatch,
    graph_to_record,
    load_dataset,
    parse_record_line,
    record_to_graph,
    sample_to_line,
    save_dataset,
)
from .features import (
    ATOM_FEATURE_SIZE,
    BOND_FEATURE_SIZE,
    FeatureEncoding,
    atom_feature_vector,
    bond_feature_vector,
    featurize,
    hybridization,
    is_conjugated,
)
from .graph import (
    ATOMIC_NUMBER,
    BOND_ORDERS,
    BOND_VALENCE,
    PERIODIC_SYMBOLS,
    STANDARD_VALENCE,
    Atom,
    Bond,
    EmptySelection,
    InvalidNodeId,
    MolGraph,
    induced_edge_count,
    induced_subgraph,
    is_connected_subset,
    one_hop_frontier,
    subset_component_count,
)
from .smiles import (
    EmptyInput,
    SmilesParseError,
    UnbalancedBranch,
    UnknownElement,
    UnmatchedRingBond,
    parse_smiles,
)

__all__ = [
    "ATOMIC_NUMBER",
    "ATOM_FEATURE_SIZE",
    "Atom",
    "BOND_FEATURE_SIZE",
    "BOND_ORDERS",
    "BOND_VALENCE",
    "Bond",
    "EmptyInput",
    "EmptySelection",
    "FeatureEncoding",
    "InvalidNodeId",
    "MalformedRecord",
    "MolGraph",
    "PERIODIC_SYMBOLS",
    "SCHEMA_VERSION",
    "STANDARD_VALENCE",
    "Sample",
    "SchemaVersionMismatch",
    "SmilesParseError",
    "UnbalancedBranch",
    "UnknownElement",
    "UnmatchedRingBond",
    "atom_feature_vector",
    "bond_feature_vector",
    "featurize",
    "graph_to_record",
    "hybridization",
    "induced_edge_count",
    "induced_subgraph",
    "is_connected_subset",
    "is_conjugated",
    "load_dataset",
    "one_hop_frontier",
    "parse_record_line",
    "parse_smiles",
    "record_to_graph",
    "sample_to_line",
    "save_dataset",
    "subset_component_count",
]
