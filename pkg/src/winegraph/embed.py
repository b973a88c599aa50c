"""Skip-gram with negative sampling, TF-IDF weights and cosine similarity.

The trainer is one numba kernel shared by the text model (phrase ids) and
the graph model (node ids).  Negative sampling draws from per-group unigram
tables raised to the 3/4 power; the text model uses a single group, the
graph model one group per node type.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from numba import njit

from .corpus import PhraseDoc
from .io import atomic_write, csv_field, format_float, read_vectors, write_vectors


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 300
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    min_count: int = 1
    subsample_t: float = 1e-4
    seed: int = 1
    table_size: int = 10_000_000

    def __post_init__(self):
        for name in ("dim", "window", "negatives", "epochs", "table_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.initial_lr > 0:
            raise ValueError("initial_lr must be > 0")
        if self.subsample_t < 0:
            raise ValueError("subsample_t must be >= 0")


@dataclass
class EmbeddingMatrix:
    vocab: list[str]
    vectors: np.ndarray
    context_vectors: np.ndarray | None = None
    objective: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.index = {w: i for i, w in enumerate(self.vocab)}
        if len(self.index) != len(self.vocab):
            raise ValueError("duplicate keys in vocabulary")
        if self.vectors.shape[0] != len(self.vocab):
            raise ValueError("vectors and vocab disagree in length")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __contains__(self, key: object) -> bool:
        return key in self.index

    def __getitem__(self, key: str) -> np.ndarray:
        return self.vectors[self.index[key]]

    def save(self, path: str | Path, header: str | None = None) -> None:
        write_vectors(path, self.vocab, self.vectors, header=header)

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingMatrix":
        keys, vecs = read_vectors(path)
        return cls(keys, vecs)


# ---------------------------------------------------------------- kernel


@njit(cache=True, nogil=True)
def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@njit(cache=True, nogil=True)
def _log_sigmoid(x):
    if x >= 0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


@njit(cache=True, nogil=True)
def _sgns_grads(v, U, n_rows, gv, gU):
    """Objective and gradients for one (center, context) pair.

    Row 0 of ``U`` is the positive context vector, rows 1..n_rows-1 the
    negatives.  Returns ``ln s(v.u0) + sum ln s(-v.ui)`` and fills ``gv`` /
    ``gU`` with its gradients w.r.t. ``v`` and each row of ``U``.
    """
    dim = v.shape[0]
    for j in range(dim):
        gv[j] = 0.0
    obj = 0.0
    for i in range(n_rows):
        s = 0.0
        for j in range(dim):
            s += v[j] * U[i, j]
        if i == 0:
            obj += _log_sigmoid(s)
            g = 1.0 - _sigmoid(s)
        else:
            obj += _log_sigmoid(-s)
            g = -_sigmoid(s)
        for j in range(dim):
            gv[j] += g * U[i, j]
            gU[i, j] = g * v[j]
    return obj


@njit(cache=True, nogil=True)
def _train_epoch(tokens, bounds, s_lo, s_hi, W, C, keep_prob, groups, table,
                 tab_off, tab_len, window, negatives, lr0, done0, total_work, seed):
    np.random.seed(seed)
    dim = W.shape[1]
    longest = 1
    for s in range(s_lo, s_hi):
        longest = max(longest, bounds[s + 1] - bounds[s])
    buf = np.empty(longest, dtype=np.int64)
    rows = np.empty(negatives + 1, dtype=np.int64)
    U = np.empty((negatives + 1, dim), dtype=np.float64)
    gU = np.empty((negatives + 1, dim), dtype=np.float64)
    gv = np.empty(dim, dtype=np.float64)
    v = np.empty(dim, dtype=np.float64)
    obj = 0.0
    pairs = 0
    done = done0
    for s in range(s_lo, s_hi):
        a = bounds[s]
        b = bounds[s + 1]
        m = 0
        for t in range(a, b):
            w = tokens[t]
            p = keep_prob[w]
            if p >= 1.0 or np.random.random() < p:
                buf[m] = w
                m += 1
        lr = lr0 * (1.0 - 0.9 * min(done / total_work, 1.0))
        done += b - a
        for pos in range(m):
            center = buf[pos]
            r = 1 + np.random.randint(0, window)
            lo = max(0, pos - r)
            hi = min(m, pos + r + 1)
            for cpos in range(lo, hi):
                if cpos == pos:
                    continue
                ctx = buf[cpos]
                rows[0] = ctx
                n = 1
                g = groups[ctx]
                ln = tab_len[g]
                if ln > 0:
                    off = tab_off[g]
                    for _ in range(negatives):
                        neg = table[off + np.random.randint(0, ln)]
                        if neg != ctx:
                            rows[n] = neg
                            n += 1
                for j in range(dim):
                    v[j] = W[center, j]
                for i in range(n):
                    for j in range(dim):
                        U[i, j] = C[rows[i], j]
                obj += _sgns_grads(v, U, n, gv, gU)
                for j in range(dim):
                    W[center, j] += lr * gv[j]
                for i in range(n):
                    for j in range(dim):
                        C[rows[i], j] += lr * gU[i, j]
                pairs += 1
    return obj, pairs


# ---------------------------------------------------------------- python side


def sgns_objective(v, u_pos, u_negs) -> float:
    """Negative-sampling objective of one pair (float64, for checking)."""
    U = np.vstack([np.atleast_2d(u_pos), np.atleast_2d(u_negs)]).astype(np.float64)
    gv, gU = np.empty(U.shape[1]), np.empty_like(U)
    return _sgns_grads(np.asarray(v, dtype=np.float64), U, U.shape[0], gv, gU)


def sgns_gradient(v, u_pos, u_negs):
    """Analytic gradients ``(d/dv, d/du_pos, d/du_negs)`` of `sgns_objective`."""
    U = np.vstack([np.atleast_2d(u_pos), np.atleast_2d(u_negs)]).astype(np.float64)
    gv, gU = np.empty(U.shape[1]), np.empty_like(U)
    _sgns_grads(np.asarray(v, dtype=np.float64), U, U.shape[0], gv, gU)
    return gv, gU[0], gU[1:]


def subsample_keep_prob(counts: np.ndarray, t: float) -> np.ndarray:
    """word2vec keep probability; >= 1 (never dropped) when count <= t*total."""
    counts = np.asarray(counts, dtype=np.float64)
    if t <= 0:
        return np.ones_like(counts)
    thresh = t * counts.sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        p = (np.sqrt(counts / thresh) + 1.0) * thresh / counts
    return np.where(counts > 0, p, 1.0)


def build_negative_table(counts: np.ndarray, groups: np.ndarray, size: int):
    """Concatenated per-group sampling tables for ``counts ** 0.75``.

    Returns ``(table, offsets, lengths)``; group ``g`` samples uniformly from
    ``table[offsets[g] : offsets[g] + lengths[g]]``.
    """
    counts = np.asarray(counts, dtype=np.float64)
    groups = np.asarray(groups, dtype=np.int64)
    n_groups = int(groups.max()) + 1 if len(groups) else 0
    mass = counts ** 0.75
    total = mass.sum()
    chunks, offsets, lengths = [], np.zeros(n_groups, np.int64), np.zeros(n_groups, np.int64)
    pos = 0
    for g in range(n_groups):
        members = np.flatnonzero(groups == g)
        m = mass[members]
        if m.sum() <= 0:
            offsets[g] = pos
            continue
        size_g = max(len(members), int(round(size * m.sum() / total)))
        reps = np.maximum(np.round(m / m.sum() * size_g), m > 0).astype(np.int64)
        chunk = np.repeat(members, reps)
        chunks.append(chunk)
        offsets[g], lengths[g] = pos, len(chunk)
        pos += len(chunk)
    table = np.concatenate(chunks) if chunks else np.zeros(1, np.int64)
    return table, offsets, lengths


def _flatten(sentences: Sequence[Sequence[int]]):
    lengths = np.fromiter((len(s) for s in sentences), dtype=np.int64, count=len(sentences))
    bounds = np.zeros(len(sentences) + 1, dtype=np.int64)
    np.cumsum(lengths, out=bounds[1:])
    tokens = np.empty(bounds[-1], dtype=np.int64)
    for i, s in enumerate(sentences):
        tokens[bounds[i]:bounds[i + 1]] = s
    return tokens, bounds


def train_skipgram(
    sentences: Sequence[Sequence[int]],
    vocab: Sequence[str],
    config: TrainConfig,
    counts: np.ndarray | None = None,
    groups: np.ndarray | None = None,
    workers: int = 1,
) -> EmbeddingMatrix:
    """Train input/context vectors with skip-gram negative sampling.

    ``sentences`` hold integer ids into ``vocab``.  ``counts`` (frequency per
    id, default: counted from ``sentences``) drives subsampling and the
    negative tables; ``groups`` (default: all zero) restricts each context's
    negatives to ids of the same group.  ``workers=1`` is bit-reproducible;
    more workers run lock-free shards over shared parameters.
    """
    tokens, bounds = _flatten(sentences)
    if len(tokens) == 0:
        raise ValueError("empty corpus")
    V = len(vocab)
    if V < config.negatives + 1:
        raise ValueError(f"vocabulary size {V} < negatives+1 ({config.negatives + 1})")
    if tokens.min() < 0 or tokens.max() >= V:
        raise ValueError("sentence token outside the vocabulary")
    if counts is None:
        counts = np.bincount(tokens, minlength=V)
    counts = np.asarray(counts, dtype=np.float64)
    if config.min_count > 1:
        keep_tok = counts[tokens] >= config.min_count
        sent_of = np.repeat(np.arange(len(bounds) - 1), np.diff(bounds))
        tokens = tokens[keep_tok]
        bounds = np.zeros_like(bounds)
        np.cumsum(np.bincount(sent_of[keep_tok], minlength=len(bounds) - 1), out=bounds[1:])
        if len(tokens) == 0:
            raise ValueError(f"no tokens with count >= {config.min_count}")
    groups = np.zeros(V, np.int64) if groups is None else np.asarray(groups, np.int64)

    rng = np.random.default_rng(config.seed)
    W = ((rng.random((V, config.dim)) - 0.5) / config.dim).astype(np.float32)
    C = np.zeros((V, config.dim), dtype=np.float32)
    keep = subsample_keep_prob(counts, config.subsample_t)
    table, tab_off, tab_len = build_negative_table(counts, groups, config.table_size)

    n_sent = len(bounds) - 1
    workers = max(1, min(workers, n_sent))
    cuts = np.linspace(0, n_sent, workers + 1).astype(np.int64)
    shards = [(int(cuts[i]), int(cuts[i + 1])) for i in range(workers)]
    shard_work = [max(1, int(bounds[hi] - bounds[lo])) for lo, hi in shards]

    history = []
    for epoch in range(config.epochs):
        def run(i):
            lo, hi = shards[i]
            seed = (config.seed * 1_000_003 + epoch * 7919 + i) % (2 ** 32)
            return _train_epoch(
                tokens, bounds, lo, hi, W, C, keep, groups, table, tab_off, tab_len,
                config.window, config.negatives, config.initial_lr,
                float(epoch * shard_work[i]), float(config.epochs * shard_work[i]), seed,
            )

        if workers == 1:
            results = [run(0)]
        else:
            with ThreadPoolExecutor(workers) as pool:
                results = list(pool.map(run, range(workers)))
        obj = sum(r[0] for r in results)
        pairs = sum(r[1] for r in results)
        history.append(obj / pairs if pairs else 0.0)

    if not np.all(np.isfinite(W)):
        raise FloatingPointError("non-finite embedding after training")
    return EmbeddingMatrix(list(vocab), W, C, history)


# ---------------------------------------------------------------- tf-idf


@dataclass
class TfidfWeights:
    weights: dict[str, dict[str, float]]
    df: dict[str, Counter]
    n_docs: dict[str, int]

    def get(self, item_id: str, surface: str) -> float:
        return self.weights.get(item_id, {}).get(surface, 0.0)

    def write_csv(self, path: str | Path, header: str | None = None) -> None:
        lines = ["item_id,surface,weight\n"]
        for item_id in sorted(self.weights):
            for surface, w in sorted(self.weights[item_id].items()):
                lines.append(f"{csv_field(item_id)},{surface},{format_float(w)}\n")
        atomic_write(path, "".join(lines), header=header)


def compute_tfidf(docs: Iterable[PhraseDoc]) -> TfidfWeights:
    """``tf * ln(N / df)`` with raw term counts; N and df are per source."""
    docs = list(docs)
    if not docs:
        raise ValueError("at least one document required")
    seen: set[str] = set()
    df: dict[str, Counter] = defaultdict(Counter)
    n_docs: Counter = Counter()
    for doc in docs:
        if doc.item_id in seen:
            raise ValueError(f"duplicate item id {doc.item_id!r}")
        seen.add(doc.item_id)
        n_docs[doc.source] += 1
        df[doc.source].update(p for p, c in doc.phrases.items() if c > 0)
    weights = {}
    for doc in docs:
        N, dfs = n_docs[doc.source], df[doc.source]
        weights[doc.item_id] = {
            p: tf * math.log(N / dfs[p]) for p, tf in doc.phrases.items() if tf > 0
        }
    return TfidfWeights(weights, dict(df), dict(n_docs))


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("cosine of a zero vector is undefined")
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))
