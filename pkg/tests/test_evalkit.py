import itertools

import numpy as np
import pytest

from rcid.evalkit import (
    DEFAULT_MOTIFS,
    EvalReport,
    GeneratorConfig,
    MissingPrediction,
    TooFewSamples,
    extrapolation_counts,
    generate_synthetic_dataset,
    pattern_key,
    random_molgraph,
    split_dataset,
    stratified_report,
    topk_exact_match,
)
from rcid.molgraph import (
    Atom,
    Bond,
    MolGraph,
    Sample,
    is_connected_subset,
    sample_to_line,
)


def fs(*ids):
    return frozenset(ids)


def path_sample(sid, n, label):
    g = MolGraph(tuple(Atom(6) for _ in range(n)), tuple(Bond(i, i + 1) for i in range(n - 1)))
    return Sample(id=sid, graph=g, label=frozenset(label))


# -- top-k metric ---------------------------------------------------------------


def test_topk_label_at_rank_two():
    hits = topk_exact_match([fs(0), fs(1, 2), fs(3)], fs(1, 2), kmax=4)
    assert hits == [False, True, True, True]


def test_topk_empty_predictions_all_miss():
    assert topk_exact_match([], fs(0), kmax=3) == [False, False, False]


def test_topk_duplicates_counted_positionally():
    hits = topk_exact_match([fs(0), fs(0), fs(1)], fs(1), kmax=3)
    assert hits == [False, False, True]


def test_topk_matches_naive_reimplementation():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        label = frozenset(int(v) for v in rng.integers(0, 5, size=rng.integers(1, 4)))
        preds = [
            frozenset(int(v) for v in rng.integers(0, 5, size=rng.integers(1, 4)))
            for _ in range(int(rng.integers(0, 5)))
        ]
        kmax = int(rng.integers(1, 6))
        got = topk_exact_match(preds, label, kmax)
        naive = [
            any(sorted(p) == sorted(label) for p in preds[:k])
            for k in range(1, kmax + 1)
        ]
        assert got == naive


def test_topk_monotone_in_k():
    rng = np.random.default_rng(1)
    for _ in range(200):
        label = frozenset(int(v) for v in rng.integers(0, 4, size=2))
        preds = [frozenset(int(v) for v in rng.integers(0, 4, size=2)) for _ in range(4)]
        hits = topk_exact_match(preds, label, kmax=4)
        assert all(a <= b for a, b in zip(hits, hits[1:]))


# -- splitting ------------------------------------------------------------------


def test_split_thousand_samples():
    samples = [path_sample(f"s{i}", 3, {0}) for i in range(1000)]
    train, val, test = split_dataset(samples, seed=7)
    assert (len(train), len(val), len(test)) == (800, 100, 100)
    ids = {s.id for s in train} | {s.id for s in val} | {s.id for s in test}
    assert len(ids) == 1000


def test_split_deterministic():
    samples = [path_sample(f"s{i}", 3, {0}) for i in range(40)]
    a = split_dataset(samples, seed=3)
    b = split_dataset(samples, seed=3)
    for part_a, part_b in zip(a, b):
        assert [s.id for s in part_a] == [s.id for s in part_b]


def test_split_too_few():
    with pytest.raises(TooFewSamples):
        split_dataset([path_sample("a", 3, {0})] * 5)


def test_split_bad_ratios():
    samples = [path_sample(f"s{i}", 3, {0}) for i in range(20)]
    with pytest.raises(ValueError):
        split_dataset(samples, ratios=(0.5, 0.2, 0.2))


# -- stratified report ----------------------------------------------------------


def strata_fixture():
    # one sample in each edge stratum; the 2-node one is also "single"
    samples = [
        path_sample("atom", 4, {1}),          # 0 edges
        path_sample("one", 4, {1, 2}),        # 1 edge
        path_sample("two", 5, {1, 2, 3}),     # 2 edges
        path_sample("big", 6, {0, 1, 2, 3}),  # 3 edges
    ]
    preds = {
        "atom": [fs(1)],
        "one": [fs(0), fs(1, 2)],
        "two": [fs(4)],
        "big": [fs(0, 1, 2, 3)],
    }
    return samples, preds


def test_report_strata_and_accuracy():
    samples, preds = strata_fixture()
    report = stratified_report(preds, samples, kmax=2)
    assert report.total == 4
    assert report.accuracy[1] == pytest.approx(0.5)
    assert report.accuracy[2] == pytest.approx(0.75)
    assert set(report.by_edges) == {"atom-only", "1", "2", "3+"}
    assert report.by_edges["2"]["count"] == 1
    assert report.by_edges["2"]["accuracy"]["2"] == 0.0
    assert report.by_multiplicity["single"]["count"] == 2
    assert report.by_multiplicity["multiple"]["count"] == 2
    assert sum(v["count"] for v in report.by_edges.values()) == report.total
    assert report.by_branches["1"]["count"] == 4


def test_report_branch_strata():
    g = MolGraph(
        tuple(Atom(6) for _ in range(6)),
        tuple(Bond(i, i + 1) for i in range(5)),
    )
    s = Sample(id="split", graph=g, label=frozenset({0, 2, 4}))
    report = stratified_report({"split": [fs(0, 2, 4)]}, [s], kmax=1)
    assert report.by_branches == {
        "3+": {"count": 1, "accuracy": {"1": 1.0}}
    }


def test_report_missing_prediction():
    samples, preds = strata_fixture()
    del preds["two"]
    with pytest.raises(MissingPrediction):
        stratified_report(preds, samples)


def test_report_json_round_trip():
    import json

    samples, preds = strata_fixture()
    report = stratified_report(preds, samples, kmax=2)
    blob = json.loads(report.to_json())
    assert blob["total"] == 4
    assert blob["accuracy"]["2"] == pytest.approx(0.75)


def test_all_correct_report_is_all_ones():
    samples = [path_sample(f"s{i}", 4, {1, 2}) for i in range(3)]
    preds = {s.id: [s.label] for s in samples}
    report = stratified_report(preds, samples, kmax=3)
    assert all(v == 1.0 for v in report.accuracy.values())
    for group in (report.by_edges, report.by_multiplicity, report.by_branches):
        for stratum in group.values():
            assert all(v == 1.0 for v in stratum["accuracy"].values())


# -- pattern fingerprints -------------------------------------------------------


def test_pattern_invariant_under_relabeling():
    g1 = parse_like(("C", "N", "O"), [(0, 1, "single"), (1, 2, "double")])
    g2 = parse_like(("O", "N", "C"), [(2, 1, "single"), (1, 0, "double")])
    assert pattern_key(g1, {0, 1, 2}) == pattern_key(g2, {0, 1, 2})


def parse_like(symbols, edges):
    z = {"C": 6, "N": 7, "O": 8, "S": 16}
    atoms = tuple(Atom(z[s]) for s in symbols)
    bonds = tuple(Bond(a, b, order=o) for a, b, o in edges)
    return MolGraph(atoms, bonds)


def test_pattern_separates_labels_and_orders():
    base = parse_like(("C", "N"), [(0, 1, "single")])
    double = parse_like(("C", "N"), [(0, 1, "double")])
    other = parse_like(("C", "O"), [(0, 1, "single")])
    keys = {
        pattern_key(base, {0, 1}),
        pattern_key(double, {0, 1}),
        pattern_key(other, {0, 1}),
    }
    assert len(keys) == 3


def test_pattern_separates_shapes():
    path = parse_like(("C", "C", "C"), [(0, 1, "single"), (1, 2, "single")])
    tri = parse_like(
        ("C", "C", "C"), [(0, 1, "single"), (1, 2, "single"), (0, 2, "single")]
    )
    assert pattern_key(path, {0, 1, 2}) != pattern_key(tri, {0, 1, 2})


def test_pattern_on_enumerated_isomorph_pairs():
    # every relabeling of a 4-node labeled graph maps to one fingerprint
    symbols = ("C", "N", "O", "S")
    edges = [(0, 1, "single"), (1, 2, "double"), (1, 3, "single")]
    base = parse_like(symbols, edges)
    want = pattern_key(base, range(4))
    for perm in itertools.permutations(range(4)):
        relabeled = parse_like(
            tuple(symbols[perm.index(i)] for i in range(4)),
            [(perm[a], perm[b], o) for a, b, o in edges],
        )
        assert pattern_key(relabeled, range(4)) == want


# -- extrapolation counting -----------------------------------------------------


def test_extrapolation_counts_both_protocols():
    train = [path_sample("tr", 4, {1, 2})]  # pattern: C-C single bond
    novel = parse_like(("C", "N", "C"), [(0, 1, "double")])
    test_samples = [
        path_sample("known", 5, {2, 3}),
        Sample(id="new1", graph=novel, label=frozenset({0, 1})),
        Sample(id="new2", graph=novel, label=frozenset({0, 1})),
        Sample(id="missed", graph=novel, label=frozenset({0, 1})),
    ]
    preds = {
        "known": [fs(2, 3)],
        "new1": [fs(0, 1)],
        "new2": [fs(0, 1)],
        "missed": [fs(2)],
    }
    per_sample, per_pattern = extrapolation_counts(preds, test_samples, train)
    assert (per_sample, per_pattern) == (2, 1)


# -- synthetic generator --------------------------------------------------------


def test_generator_is_deterministic():
    cfg = GeneratorConfig(count=30, seed=17)
    a = generate_synthetic_dataset(cfg)
    b = generate_synthetic_dataset(cfg)
    assert [sample_to_line(s) for s in a] == [sample_to_line(s) for s in b]


def test_generator_labels_are_valid():
    cfg = GeneratorConfig(count=60, seed=2)
    for s in generate_synthetic_dataset(cfg):
        assert 1 <= len(s.label) <= 3
        assert is_connected_subset(s.graph, s.label)
        assert cfg.min_atoms <= len(s.graph) <= cfg.max_atoms


def brute_force_embeddings(g: MolGraph, motif) -> int:
    """Count induced embeddings of a motif by trying all node tuples."""
    count = 0
    want_edges = {(min(i, j), max(i, j)): o for i, j, o in motif.edges}
    for combo in itertools.permutations(range(len(g)), motif.size()):
        if any(g.atoms[v].element != motif.elements[i] for i, v in enumerate(combo)):
            continue
        ok = True
        for i in range(motif.size()):
            for j in range(i + 1, motif.size()):
                have = None
                for b in g.bonds:
                    if {b.a, b.b} == {combo[i], combo[j]}:
                        have = b.order
                        break
                want = want_edges.get((i, j))
                if (have is None) != (want is None) or (have is not None and have != want):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            count += 1
    return count


def automorphisms(motif) -> int:
    """Symmetries of the motif pattern itself (each embedding repeats this often)."""
    return brute_force_embeddings(
        MolGraph(
            tuple(Atom(z) for z in motif.elements),
            tuple(Bond(i, j, order=o) for i, j, o in motif.edges),
        ),
        motif,
    )


def test_generator_plants_motifs_exactly_once():
    cfg = GeneratorConfig(count=40, seed=4)
    motif_by_size = {}
    for s in generate_synthetic_dataset(cfg):
        hits = []
        for motif in DEFAULT_MOTIFS:
            n = brute_force_embeddings(s.graph, motif)
            if n:
                hits.append((motif, n))
        assert len(hits) == 1
        motif, n = hits[0]
        assert n == automorphisms(motif)
        assert len(s.label) == motif.size()


def test_generator_rejects_bad_config():
    with pytest.raises(ValueError):
        GeneratorConfig(count=0)
    with pytest.raises(ValueError):
        GeneratorConfig(min_atoms=9, max_atoms=5)
    with pytest.raises(ValueError):
        GeneratorConfig(max_atoms=3, min_atoms=1)


def test_random_molgraph_connected():
    rng = np.random.default_rng(5)
    for _ in range(30):
        g = random_molgraph(rng)
        assert is_connected_subset(g, frozenset(range(len(g))))
