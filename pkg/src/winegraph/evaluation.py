"""Embedding evaluation: k-means + NMI against food categories, PCA export
and nearest-wine queries."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Mapping, Sequence

import numpy as np

from .embed import EmbeddingMatrix
from .graph import INGREDIENT_KINDS, WINE, HetGraph
from .io import atomic_write, csv_field, format_float


@dataclass
class ClusterAssignment:
    labels: dict[Hashable, int]
    K: int
    distortion: float = math.nan
    history: list[float] = field(default_factory=list)


def _kmeans_pp(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    centers = [X[rng.integers(len(X))]]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, K):
        total = d2.sum()
        i = rng.choice(len(X), p=d2 / total) if total > 0 else rng.integers(len(X))
        centers.append(X[i])
        d2 = np.minimum(d2, ((X - X[i]) ** 2).sum(axis=1))
    return np.array(centers)


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d = (X ** 2).sum(1)[:, None] - 2 * X @ C.T + (C ** 2).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _lloyd(X: np.ndarray, K: int, rng: np.random.Generator, max_iter: int):
    C = _kmeans_pp(X, K, rng)
    assign = None
    history = []
    for _ in range(max_iter):
        d = _sq_dists(X, C)
        new = d.argmin(axis=1)
        history.append(float(d[np.arange(len(X)), new].sum()))
        if assign is not None and np.array_equal(new, assign):
            break
        assign = new
        for c in range(K):
            members = assign == c
            if members.any():
                C[c] = X[members].mean(axis=0)
            else:
                # reseed from the point farthest from its own centroid
                far = int(d[np.arange(len(X)), assign].argmax())
                C[c] = X[far]
                assign[far] = c
    return assign, history


def kmeans(vectors: Mapping[Hashable, Sequence[float]] | np.ndarray, K: int, seed: int = 0,
           max_iter: int = 300, restarts: int = 10) -> ClusterAssignment:
    """Lloyd's algorithm from k-means++ seeds; best of ``restarts`` runs."""
    if isinstance(vectors, Mapping):
        keys = list(vectors)
        X = np.array([vectors[k] for k in keys], dtype=np.float64)
    else:
        X = np.asarray(vectors, dtype=np.float64)
        keys = list(range(len(X)))
    if K < 2:
        raise ValueError("K must be >= 2")
    if len(np.unique(X, axis=0)) < K:
        raise ValueError(f"fewer than K={K} distinct vectors")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, restarts)):
        assign, history = _lloyd(X, K, rng, max_iter)
        if best is None or history[-1] < best[1][-1]:
            best = (assign, history)
    assign, history = best
    return ClusterAssignment({k: int(c) for k, c in zip(keys, assign)}, K, history[-1], history)


def _entropy(counts) -> float:
    n = sum(counts)
    return -sum(c / n * math.log(c / n) for c in counts if c)


def nmi(pred: ClusterAssignment | Mapping[Hashable, Hashable], truth: Mapping[Hashable, Hashable],
        average: str = "geometric") -> float:
    """Normalized mutual information (natural log).

    ``average`` picks the normalizer: ``geometric`` sqrt(H(a)H(b)),
    ``arithmetic`` (H(a)+H(b))/2, or ``min``.
    """
    p = pred.labels if isinstance(pred, ClusterAssignment) else pred
    if set(p) != set(truth):
        raise ValueError("prediction and truth cover different items")
    items = list(p)
    if not items:
        raise ValueError("no items")
    joint = Counter((p[i], truth[i]) for i in items)
    ca = Counter(p[i] for i in items)
    cb = Counter(truth[i] for i in items)
    if len(joint) == len(ca) == len(cb):
        return 1.0  # identical partitions up to relabeling
    ha, hb = _entropy(ca.values()), _entropy(cb.values())
    if ha == 0 or hb == 0:
        return 0.0
    n = len(items)
    mi = sum(c / n * math.log(c * n / (ca[a] * cb[b])) for (a, b), c in joint.items())
    if average == "geometric":
        denom = math.sqrt(ha * hb)
    elif average == "arithmetic":
        denom = (ha + hb) / 2
    elif average == "min":
        denom = min(ha, hb)
    else:
        raise ValueError(f"unknown NMI average {average!r}")
    return min(1.0, max(0.0, mi / denom))


def category_labels(g: HetGraph) -> dict[str, str]:
    """First ``;``-separated category of every labelled ingredient-kind node."""
    out = {}
    for nid, node in g.nodes.items():
        if node.type in INGREDIENT_KINDS and node.category:
            label = node.category.split(";")[0].strip()
            if label:
                out[nid] = label
    return out


def cluster_nmi(emb: EmbeddingMatrix, g: HetGraph, seed: int = 0, restarts: int = 10,
                average: str = "geometric", K: int | None = None) -> tuple[float, ClusterAssignment]:
    """Cluster the labelled ingredient embeddings (K = number of categories
    unless given) and score against the category labels."""
    labels = {n: c for n, c in category_labels(g).items() if n in emb}
    if not labels:
        raise ValueError("no labelled ingredient node has an embedding")
    K = K or len(set(labels.values()))
    assignment = kmeans({n: emb[n] for n in labels}, K, seed=seed, restarts=restarts)
    return nmi(assignment, labels, average), assignment


def query_pairings(food_node: str, node_emb: EmbeddingMatrix, g: HetGraph, k: int = 3
                   ) -> list[tuple[str, float]]:
    """Top ``k`` wine nodes by cosine to ``food_node``; ties by node id."""
    if food_node not in g.nodes or food_node not in node_emb:
        raise KeyError(f"unknown or unembedded node {food_node!r}")
    wines = sorted(n for n in g.nodes_of_type(WINE) if n in node_emb)
    if not wines:
        raise ValueError("no embedded wine nodes")
    q = node_emb[food_node].astype(np.float64)
    q = q / np.linalg.norm(q)
    M = np.array([node_emb[w] for w in wines], dtype=np.float64)
    sims = M @ q / np.linalg.norm(M, axis=1)
    order = np.lexsort((np.arange(len(wines)), -sims))[:k]
    return [(wines[i], float(sims[i])) for i in order]


def export_projection(node_emb: EmbeddingMatrix, method: str = "pca2d") -> dict[str, tuple[float, float]]:
    """Top-2 principal component coordinates of the mean-centered vectors."""
    if method != "pca2d":
        raise ValueError(f"unsupported projection {method!r}")
    X = np.asarray(node_emb.vectors, dtype=np.float64)
    if len(X) < 2:
        raise ValueError("need at least two nodes")
    Xc = X - X.mean(axis=0)
    if np.abs(Xc).max() <= 1e-12 * max(1.0, np.abs(X).max()):
        raise ValueError("degenerate input: all vectors identical")
    _, _, vt = np.linalg.svd(Xc, full_matrices=False)
    comps = vt[:2] if len(vt) >= 2 else np.vstack([vt, np.zeros_like(vt)])
    Y = Xc @ comps.T
    return {k: (float(Y[i, 0]), float(Y[i, 1])) for i, k in enumerate(node_emb.vocab)}


def write_projection(coords: Mapping[str, tuple[float, float]], g: HetGraph,
                     path: str | Path, header: str | None = None) -> None:
    lines = ["node_id,node_type,x,y\n"]
    for nid, (x, y) in coords.items():
        kind = g.nodes[nid].type if nid in g.nodes else ""
        lines.append(f"{csv_field(nid)},{kind},{format_float(x)},{format_float(y)}\n")
    atomic_write(path, "".join(lines), header=header)


def append_nmi_report(path: str | Path, dataset: str, epochs: int, value: float,
                      header: str | None = None) -> None:
    """Add (or replace) a ``dataset,epochs,nmi`` row."""
    path = Path(path)
    rows = {}
    if path.exists():
        for line in path.read_text(encoding="utf-8").splitlines():
            if line and not line.startswith("#") and line != "dataset,epochs,nmi":
                d, e, v = line.rsplit(",", 2)
                rows[(d, int(e))] = v
    rows[(dataset, int(epochs))] = f"{value:.6f}"
    body = "dataset,epochs,nmi\n" + "".join(f"{d},{e},{v}\n" for (d, e), v in sorted(rows.items()))
    atomic_write(path, body, header=header)
