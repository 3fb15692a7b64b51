"""JSON-lines dataset records: one product graph plus its labeled center.

Record layout (version 1):
    {"id": str, "smiles": str?, "product": {"atoms": [...], "bonds": [...]},
     "rc": [int, ...], "v": 1}

Atoms carry {"z", "charge", "aromatic", "h"} where "h" is null for implicit
hydrogens; bonds carry {"a", "b", "order", "stereo", "dir"}. When "product"
is present it wins; otherwise "smiles" is parsed. Files are written with
sorted keys and no whitespace so identical inputs give identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .graph import Atom, Bond, MolGraph
from .smiles import parse_smiles

SCHEMA_VERSION = 1


class DatasetError(ValueError):
    pass


class MalformedRecord(DatasetError):
    def __init__(self, line_number: int, reason: str):
        super().__init__(f"bad record on line {line_number}: {reason}")
        self.line_number = line_number


class SchemaVersionMismatch(DatasetError):
    def __init__(self, line_number: int, found) -> None:
        super().__init__(
            f"record on line {line_number} has schema version {found!r}, "
            f"expected {SCHEMA_VERSION}"
        )
        self.line_number = line_number


@dataclass
class Sample:
    """One dataset entry: a product graph and its reaction-center nodes."""

    id: str
    graph: MolGraph
    label: frozenset[int]
    smiles: str | None = None


def graph_to_record(g: MolGraph) -> dict:
    return {
        "atoms": [
            {
                "z": a.element,
                "charge": a.formal_charge,
                "aromatic": a.aromatic,
                "h": a.explicit_h,
            }
            for a in g.atoms
        ],
        "bonds": [
            {"a": b.a, "b": b.b, "order": b.order, "stereo": b.stereo, "dir": b.direction}
            for b in g.bonds
        ],
    }


def record_to_graph(rec: dict) -> MolGraph:
    atoms = [
        Atom(
            element=int(a["z"]),
            formal_charge=int(a.get("charge", 0)),
            aromatic=bool(a.get("aromatic", False)),
            explicit_h=None if a.get("h") is None else int(a["h"]),
        )
        for a in rec["atoms"]
    ]
    bonds = [
        Bond(
            int(b["a"]),
            int(b["b"]),
            str(b.get("order", "single")),
            int(b.get("stereo", 0)),
            int(b.get("dir", 0)),
        )
        for b in rec["bonds"]
    ]
    return MolGraph(atoms, bonds)


def sample_to_line(sample: Sample) -> str:
    record = {
        "id": sample.id,
        "product": graph_to_record(sample.graph),
        "rc": sorted(sample.label),
        "v": SCHEMA_VERSION,
    }
    if sample.smiles is not None:
        record["smiles"] = sample.smiles
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def save_dataset(samples: Iterable[Sample], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(sample_to_line(sample) + "\n")


def load_dataset(path: str | Path) -> list[Sample]:
    """Read every record; fail fast with the offending line number."""
    out: list[Sample] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            out.append(parse_record_line(line, line_number))
    return out


def parse_record_line(line: str, line_number: int) -> Sample:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(line_number, f"invalid JSON ({exc.msg})") from exc
    if not isinstance(rec, dict):
        raise MalformedRecord(line_number, "record is not an object")
    version = rec.get("v")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(line_number, version)
    try:
        sample_id = rec["id"]
        if not isinstance(sample_id, str):
            raise TypeError("id must be a string")
        if "product" in rec:
            graph = record_to_graph(rec["product"])
        elif "smiles" in rec:
            graph = parse_smiles(rec["smiles"])
        else:
            raise KeyError("product")
        rc = rec["rc"]
        if not isinstance(rc, list) or not all(isinstance(v, int) for v in rc):
            raise TypeError("rc must be a list of ints")
        label = frozenset(rc)
        for v in label:
            if not (0 <= v < len(graph)):
                raise ValueError(f"rc node {v} outside graph of size {len(graph)}")
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise MalformedRecord(line_number, str(exc)) from exc
    return Sample(id=sample_id, graph=graph, label=label, smiles=rec.get("smiles"))
