"""Synthetic planted-center dataset generator.

Each sample is a random connected base graph of plain single-bonded
C/N/O atoms with one marker fragment attached. The fragment's element
and bond-order signature cannot occur in the base material, so its node
set (the label) is identifiable from the graph alone and appears exactly
once per sample. Fragment sizes cover 1 to 3 nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..molgraph import Atom, Bond, MolGraph, Sample


class MotifPlantFailure(RuntimeError):
    """Could not place a marker fragment after bounded retries."""


@dataclass(frozen=True)
class Motif:
    """A small labeled fragment: element list plus (i, j, order) edges."""

    name: str
    elements: tuple[int, ...]
    edges: tuple[tuple[int, int, str], ...]

    def size(self) -> int:
        return len(self.elements)


# Base graphs use only C/N/O with single bonds, so each fragment below is
# unique by construction: P, S, Cl and F never occur outside fragments and
# neither do double or triple bonds. No fragment contains another one as
# an induced subgraph, so exactly one pattern matches per sample.
DEFAULT_MOTIFS: tuple[Motif, ...] = (
    Motif("phosphorus", (15,), ()),
    Motif("sulfinyl", (16, 8), ((0, 1, "double"),)),
    Motif("nitrile", (6, 7), ((0, 1, "triple"),)),
    Motif("chloro-imine", (17, 6, 7), ((0, 1, "single"), (1, 2, "double"))),
    Motif("acyl-fluoride", (9, 6, 8), ((0, 1, "single"), (1, 2, "double"))),
)

BASE_ELEMENTS = (6, 6, 6, 7, 8)  # carbon-heavy palette


@dataclass(frozen=True)
class GeneratorConfig:
    count: int = 100
    min_atoms: int = 12
    max_atoms: int = 20
    elements: tuple[int, ...] = BASE_ELEMENTS
    motifs: tuple[Motif, ...] = DEFAULT_MOTIFS
    extra_edge_rate: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be positive")
        if not 1 <= self.min_atoms <= self.max_atoms:
            raise ValueError("atom count range is invalid")
        if not self.motifs:
            raise ValueError("need at least one motif")
        if any(m.size() < 1 for m in self.motifs):
            raise ValueError("motif sizes must be >= 1")
        if not 0.0 <= self.extra_edge_rate <= 1.0:
            raise ValueError("extra_edge_rate must lie in [0, 1]")
        if self.max_atoms < max(m.size() for m in self.motifs) + 1:
            raise ValueError("max_atoms too small to hold a motif plus base")


def _plant(rng: np.random.Generator, cfg: GeneratorConfig) -> tuple[MolGraph, frozenset[int]]:
    motif = cfg.motifs[int(rng.integers(len(cfg.motifs)))]
    n_total = int(rng.integers(cfg.min_atoms, cfg.max_atoms + 1))
    n_base = n_total - motif.size()
    if n_base < 1:
        raise MotifPlantFailure(
            f"{n_total} atoms cannot hold motif {motif.name!r} plus a base graph"
        )

    atoms = [Atom(int(rng.choice(cfg.elements))) for _ in range(n_base)]
    bonds = [Bond(int(rng.integers(0, i)), i) for i in range(1, n_base)]
    present = {(min(b.a, b.b), max(b.a, b.b)) for b in bonds}
    extra_budget = int(round(cfg.extra_edge_rate * n_base))
    for _ in range(extra_budget):
        if n_base < 3:
            break
        a, b = rng.integers(0, n_base, size=2)
        a, b = int(min(a, b)), int(max(a, b))
        if a == b or (a, b) in present:
            continue
        present.add((a, b))
        bonds.append(Bond(a, b))

    offset = n_base
    for z in motif.elements:
        atoms.append(Atom(z))
    for i, j, order in motif.edges:
        bonds.append(Bond(offset + i, offset + j, order=order))
    attach_motif = offset + int(rng.integers(motif.size()))
    attach_base = int(rng.integers(n_base))
    bonds.append(Bond(attach_base, attach_motif))

    perm = rng.permutation(n_total)
    relabeled_atoms = [None] * n_total
    for old, atom in enumerate(atoms):
        relabeled_atoms[perm[old]] = atom
    relabeled_bonds = [
        Bond(int(perm[b.a]), int(perm[b.b]), order=b.order) for b in bonds
    ]
    label = frozenset(int(perm[offset + i]) for i in range(motif.size()))
    return MolGraph(tuple(relabeled_atoms), tuple(relabeled_bonds)), label


def generate_sample(cfg: GeneratorConfig, index: int) -> Sample:
    """Sample ``index`` of the dataset; independent of all other indices."""
    rng = np.random.default_rng([cfg.seed, index])
    last_error: Exception | None = None
    for _ in range(20):
        try:
            graph, label = _plant(rng, cfg)
        except MotifPlantFailure as exc:
            last_error = exc
            continue
        return Sample(id=f"syn-{index:05d}", graph=graph, label=label)
    raise MotifPlantFailure(f"sample {index}: {last_error}")


def generate_synthetic_dataset(cfg: GeneratorConfig) -> list[Sample]:
    return [generate_sample(cfg, i) for i in range(cfg.count)]


def random_molgraph(
    rng: np.random.Generator,
    min_atoms: int = 4,
    max_atoms: int = 10,
    elements=BASE_ELEMENTS,
    extra_edge_rate: float = 0.15,
) -> MolGraph:
    """Plain random connected graph without a planted fragment."""
    n = int(rng.integers(min_atoms, max_atoms + 1))
    atoms = [Atom(int(rng.choice(elements))) for _ in range(n)]
    bonds = [Bond(int(rng.integers(0, i)), i) for i in range(1, n)]
    present = {(min(b.a, b.b), max(b.a, b.b)) for b in bonds}
    for _ in range(int(round(extra_edge_rate * n))):
        if n < 3:
            break
        a, b = rng.integers(0, n, size=2)
        a, b = int(min(a, b)), int(max(a, b))
        if a == b or (a, b) in present:
            continue
        present.add((a, b))
        bonds.append(Bond(a, b))
    return MolGraph(tuple(atoms), tuple(bonds))
