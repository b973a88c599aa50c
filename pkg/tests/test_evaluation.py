import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import brute_nmi
from winegraph.embed import EmbeddingMatrix
from winegraph.evaluation import (
    _lloyd,
    append_nmi_report,
    category_labels,
    cluster_nmi,
    export_projection,
    kmeans,
    nmi,
    query_pairings,
    write_projection,
)
from winegraph.graph import INGREDIENT, WINE, COMPOUND, HetGraph, Node
from winegraph.synthetic import two_cliques


def test_kmeans_separable_pairs():
    pts = {"a": [0, 0], "b": [0, 1], "c": [10, 10], "d": [10, 11]}
    out = kmeans(pts, 2, seed=0)
    assert out.labels["a"] == out.labels["b"] != out.labels["c"] == out.labels["d"]


def test_kmeans_one_point_per_cluster():
    X = np.array([[0.0, 0], [5, 5], [9, 1]])
    out = kmeans(X, 3)
    assert sorted(out.labels.values()) == [0, 1, 2]
    assert out.distortion == pytest.approx(0.0, abs=1e-12)


def test_kmeans_errors():
    with pytest.raises(ValueError):
        kmeans(np.zeros((5, 2)), 2)
    with pytest.raises(ValueError):
        kmeans(np.eye(3), 1)


def distortion(X, labels):
    return sum(((X[labels == c] - X[labels == c].mean(0)) ** 2).sum() for c in np.unique(labels))


def test_kmeans_beats_worst_restart(rng):
    X = rng.normal(size=(50, 2))
    best = kmeans(X, 3, seed=1)
    single_runs = []
    r = np.random.default_rng(99)
    for _ in range(100):
        assign, _ = _lloyd(X, 3, r, 300)
        single_runs.append(distortion(X, assign))
    labels = np.array([best.labels[i] for i in range(50)])
    assert distortion(X, labels) <= max(single_runs) + 1e-9
    assert best.distortion == pytest.approx(distortion(X, labels))


@given(st.integers(0, 10_000))
def test_kmeans_distortion_non_increasing(seed):
    X = np.random.default_rng(seed).normal(size=(40, 3))
    out = kmeans(X, 4, seed=seed, restarts=1)
    assert all(b <= a + 1e-9 for a, b in zip(out.history, out.history[1:]))


def test_nmi_examples():
    assert nmi({"a": 0, "b": 0, "c": 1}, {"a": "x", "b": "x", "c": "y"}) == 1.0
    assert nmi({i: 0 for i in range(4)}, {0: 0, 1: 0, 2: 1, 3: 1}) == 0.0
    pred = {"a": 0, "b": 0, "c": 1, "d": 1}
    truth = {"a": 0, "b": 1, "c": 0, "d": 1}
    assert abs(nmi(pred, truth)) < 1e-12
    with pytest.raises(ValueError):
        nmi({"a": 0}, {"b": 0})


def test_nmi_hand_computed_three_class():
    # contingency [[2,1],[0,1]] on 4 items
    pred = {1: "p", 2: "p", 3: "p", 4: "q"}
    truth = {1: "x", 2: "x", 3: "y", 4: "y"}
    ha = -(0.75 * math.log(0.75) + 0.25 * math.log(0.25))
    hb = math.log(2)
    mi = 0.5 * math.log(0.5 / (0.75 * 0.5)) + 0.25 * math.log(0.25 / (0.75 * 0.5)) \
        + 0.25 * math.log(0.25 / (0.25 * 0.5))
    assert nmi(pred, truth) == pytest.approx(mi / math.sqrt(ha * hb), abs=1e-12)
    assert nmi(pred, truth, "arithmetic") == pytest.approx(mi / ((ha + hb) / 2), abs=1e-12)
    assert nmi(pred, truth, "min") == pytest.approx(mi / min(ha, hb), abs=1e-12)


labels = st.lists(st.integers(0, 4), min_size=2, max_size=40)


@given(labels, st.data())
def test_nmi_properties(a, data):
    b = data.draw(st.lists(st.integers(0, 4), min_size=len(a), max_size=len(a)))
    pa, pb = dict(enumerate(a)), dict(enumerate(b))
    v = nmi(pa, pb)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(nmi(pb, pa), abs=1e-12)
    assert v == pytest.approx(brute_nmi(a, b), abs=1e-9)
    perm = {x: f"L{(x * 3 + 1) % 5}" for x in range(5)}
    assert v == pytest.approx(nmi({i: perm[x] for i, x in pa.items()}, pb), abs=1e-12)
    if len(set(a)) > 1:
        assert nmi(pa, pa) == 1.0


def test_nmi_matches_sklearn(rng):
    metrics = pytest.importorskip("sklearn.metrics")
    for _ in range(200):
        a = rng.integers(0, 5, size=60)
        b = rng.integers(0, 3, size=60)
        ours = nmi(dict(enumerate(a)), dict(enumerate(b)))
        ref = metrics.normalized_mutual_info_score(b, a, average_method="geometric")
        assert ours == pytest.approx(ref, abs=1e-10)


def test_cluster_nmi_on_cliques():
    g = two_cliques(10)
    vecs = np.array([[1.0, 0.0] if g.nodes[str(i)].category == "left" else [0.0, 1.0]
                     for i in range(20)]) + np.random.default_rng(0).normal(scale=0.01, size=(20, 2))
    emb = EmbeddingMatrix([str(i) for i in range(20)], vecs)
    assert set(category_labels(g).values()) == {"left", "right"}
    value, assignment = cluster_nmi(emb, g)
    assert value == pytest.approx(1.0)
    assert assignment.K == 2


def toy_graph():
    g = HetGraph()
    g.add_node(Node("f", "burrito", INGREDIENT, "meat"))
    g.add_node(Node("c", "vanillin", COMPOUND))
    for w in ("w1", "w2", "w3", "w4"):
        g.add_node(Node(w, w, WINE))
        g.add_edge("f", w)
    return g


def test_query_brute_force():
    g = toy_graph()
    vecs = {"f": [1, 0], "c": [1, 0.01], "w1": [0, 1], "w2": [1, 1], "w3": [2, 2], "w4": [1, -0.2]}
    emb = EmbeddingMatrix(list(vecs), np.array(list(vecs.values()), dtype=float))
    got = query_pairings("f", emb, g, k=10)
    f = np.array(vecs["f"], float)
    oracle = sorted((-(np.dot(f, vecs[w]) / np.linalg.norm(vecs[w])), w) for w in ("w1", "w2", "w3", "w4"))
    assert [w for w, _ in got] == [w for _, w in oracle] == ["w4", "w2", "w3", "w1"]
    sims = [s for _, s in got]
    assert sims == sorted(sims, reverse=True)
    assert [w for w, _ in query_pairings("f", emb, g, k=2)] == ["w4", "w2"]


def test_query_singleton_and_errors():
    g = HetGraph()
    g.add_node(Node("f", "burrito", INGREDIENT))
    g.add_node(Node("w", "w", WINE))
    g.add_edge("f", "w")
    emb = EmbeddingMatrix(["f", "w"], np.array([[1.0, 0.0], [-1.0, 0.0]]))
    assert query_pairings("f", emb, g) == [("w", -1.0)]
    with pytest.raises(KeyError):
        query_pairings("zz", emb, g)
    g2 = HetGraph()
    g2.add_node(Node("f", "burrito", INGREDIENT))
    with pytest.raises(ValueError):
        query_pairings("f", EmbeddingMatrix(["f"], np.ones((1, 2))), g2)


def test_projection_fixed_point():
    X = np.array([[3.0, 0.0], [-3.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    coords = export_projection(EmbeddingMatrix(list("abcd"), X))
    Y = np.array([coords[k] for k in "abcd"])
    np.testing.assert_allclose(np.abs(Y), np.abs(X), atol=1e-12)


def test_projection_collinear_and_degenerate(rng):
    d = rng.normal(size=10)
    X = np.array([d * t + 5 for t in (0.0, 1.0, 3.0)])
    coords = export_projection(EmbeddingMatrix(list("abc"), X))
    assert max(abs(y) for _, y in coords.values()) < 1e-9
    with pytest.raises(ValueError):
        export_projection(EmbeddingMatrix(list("ab"), np.ones((2, 4))))
    with pytest.raises(ValueError):
        export_projection(EmbeddingMatrix(list("a"), np.ones((1, 4))))


def test_report_files(tmp_path):
    g = toy_graph()
    emb = EmbeddingMatrix(["f", "w1"], np.array([[1.0, 2.0], [0.0, 1.0]]))
    write_projection(export_projection(emb), g, tmp_path / "p.csv", header="h")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[1] == "node_id,node_type,x,y" and lines[2].startswith("f,ingredient,")
    path = tmp_path / "nmi.csv"
    append_nmi_report(path, "base", 10, 0.3)
    append_nmi_report(path, "wine", 20, 0.35)
    append_nmi_report(path, "base", 10, 0.31)
    assert path.read_text().splitlines() == ["dataset,epochs,nmi", "base,10,0.310000", "wine,20,0.350000"]
