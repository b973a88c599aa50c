"""Taste profiles: aroma-wheel mapping, TF-IDF weighted aroma vectors and the
seven anchor-cosine taste scalars."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import WINE, PhraseDoc, Vocabulary
from .embed import EmbeddingMatrix, TfidfWeights, compute_tfidf, cosine
from .io import atomic_write, csv_field, data_lines, format_float, read_vectors, write_vectors

log = logging.getLogger(__name__)

TASTES = ("weight", "sweet", "acid", "salt", "piquant", "fat", "bitter")
LEVELS = ("specific", "tier2", "tier1")


def _data_path(name: str):
    return resources.files("winegraph").joinpath("data", name)


@dataclass(frozen=True)
class AromaWheel:
    """specific descriptor -> (tier2, tier1)."""

    entries: Mapping[str, tuple[str, str]]

    def __post_init__(self):
        for specific, (t2, t1) in self.entries.items():
            for level, value in (("tier2", t2), ("tier1", t1)):
                if value in self.entries and self.map(value, level) != value:
                    raise ValueError(
                        f"wheel is not idempotent at {level}: {specific} -> {value} -> "
                        f"{self.map(value, level)}"
                    )

    def map(self, phrase: str, level: str = "tier2") -> str:
        chain = self.entries.get(phrase)
        if chain is None or level == "specific":
            return phrase
        if level == "tier2":
            return chain[0]
        if level == "tier1":
            return chain[1]
        raise ValueError(f"unknown wheel level {level!r}")

    @classmethod
    def load(cls, path: str | Path | None = None) -> "AromaWheel":
        source = _data_path("aroma_wheel.csv") if path is None else Path(path)
        text = source.read_text(encoding="utf-8")
        entries: dict[str, tuple[str, str]] = {}
        rows = csv.DictReader(line for line in text.splitlines() if not line.startswith("#"))
        if rows.fieldnames != ["specific", "tier2", "tier1"]:
            raise ValueError(f"{source}: expected header specific,tier2,tier1")
        for row in rows:
            specific = row["specific"].strip().lower()
            chain = (row["tier2"].strip().lower(), row["tier1"].strip().lower())
            if specific in entries and entries[specific] != chain:
                raise ValueError(f"{source}: {specific!r} maps to two chains")
            entries[specific] = chain
        return cls(entries)


def map_aroma(phrase: str, wheel: AromaWheel, level: str = "tier2") -> str:
    return wheel.map(phrase, level)


def map_doc(doc: PhraseDoc, wheel: AromaWheel, level: str, vocab=None) -> PhraseDoc:
    """Wheel-map every phrase of ``doc``.  When ``vocab`` is given, a mapped
    descriptor outside it falls back to the original phrase."""
    out = PhraseDoc(doc.item_id, doc.source)
    for surface, n in doc.phrases.items():
        mapped = wheel.map(surface, level)
        if vocab is not None and mapped not in vocab:
            mapped = surface
        out.phrases[mapped] += n
    return out


def load_anchors(path: str | Path | None = None) -> dict[str, list[str]]:
    source = _data_path("anchors.txt") if path is None else Path(path)
    anchors: dict[str, list[str]] = {}
    for lineno, line in enumerate(source.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        taste, sep, rest = line.partition(":")
        taste = taste.strip()
        if not sep or taste not in TASTES:
            raise ValueError(f"{source}:{lineno}: expected '<taste>: phrase, ...'")
        anchors[taste] = [p.strip() for p in rest.split(",") if p.strip()]
    missing = [t for t in TASTES if not anchors.get(t)]
    if missing:
        raise ValueError(f"{source}: no anchors for {', '.join(missing)}")
    return anchors


def anchor_vectors(anchors: Mapping[str, Sequence[str]], emb: EmbeddingMatrix) -> dict[str, np.ndarray]:
    """Mean embedding of each taste's in-vocabulary anchors.

    Missing anchors are logged and dropped; a taste left with none raises.
    """
    out = {}
    for taste in TASTES:
        present = [p for p in anchors[taste] if p in emb]
        dropped = [p for p in anchors[taste] if p not in emb]
        if dropped:
            log.warning("taste %s: anchors not in vocabulary: %s", taste, ", ".join(dropped))
        if not present:
            raise ValueError(f"taste {taste!r} has no anchor phrase in the vocabulary")
        out[taste] = np.mean([emb[p] for p in present], axis=0)
    return out


@dataclass
class TasteProfile:
    item_id: str
    source: str
    aroma_vec: np.ndarray | None
    scalars: dict[str, float]
    metadata: dict[str, str] = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return self.aroma_vec is None


def aroma_vector(doc: PhraseDoc, emb: EmbeddingMatrix, weights: TfidfWeights) -> np.ndarray | None:
    """Unit-norm TF-IDF weighted mean of the doc's in-vocabulary phrase
    vectors, or None when nothing is in vocabulary or the mean vanishes.

    If every phrase has zero TF-IDF weight (e.g. a single-document source)
    raw term counts are used instead.
    """
    terms = [(p, n) for p, n in doc.phrases.items() if n > 0 and p in emb]
    if not terms:
        return None
    w = np.array([weights.get(doc.item_id, p) for p, _ in terms])
    if not w.any():
        w = np.array([n for _, n in terms], dtype=np.float64)
    vecs = np.array([emb[p] for p, _ in terms], dtype=np.float64)
    agg = (w[:, None] * vecs).sum(axis=0) / w.sum()
    norm = np.linalg.norm(agg)
    if norm < 1e-12:
        return None
    return agg / norm


def taste_scalar_raw(
    item_vec: np.ndarray | None,
    taste: str,
    emb: EmbeddingMatrix,
    anchors: Mapping[str, Sequence[str]] | None = None,
) -> float:
    if item_vec is None or not np.any(item_vec):
        raise ValueError("empty item vector")
    anchors = load_anchors() if anchors is None else anchors
    present = [p for p in anchors[taste] if p in emb]
    if not present:
        raise ValueError(f"taste {taste!r} has no anchor phrase in the vocabulary")
    return cosine(item_vec, np.mean([emb[p] for p in present], axis=0))


def normalize_scalars(raw: Mapping[str, float]) -> dict[str, float]:
    """Min-max to [0, 1]; a constant group maps to 0.5."""
    if not raw:
        raise ValueError("at least one item required")
    lo, hi = min(raw.values()), max(raw.values())
    if hi == lo:
        return {k: 0.5 for k in raw}
    return {k: (x - lo) / (hi - lo) for k, x in raw.items()}


def build_profiles(
    docs: Iterable[PhraseDoc],
    emb: EmbeddingMatrix,
    anchors: Mapping[str, Sequence[str]],
    wheel: AromaWheel,
    level: str = "tier2",
    vocab: Vocabulary | None = None,
    metadata: Mapping[str, Mapping[str, str]] | None = None,
) -> tuple[list[TasteProfile], TfidfWeights]:
    """Profiles for every document.

    Wine documents are wheel-mapped at ``level`` before TF-IDF.  Scalars are
    min-max normalized within each (taste, source) group over the items with
    a non-empty aroma vector; empty items get 0.5 everywhere.
    """
    known = vocab if vocab is not None else emb
    docs = [map_doc(d, wheel, level, known) if d.source == WINE else d for d in docs]
    tfidf = compute_tfidf(docs)
    taste_vecs = anchor_vectors(anchors, emb)

    profiles = []
    raw: dict[tuple[str, str], dict[str, float]] = {}
    for doc in docs:
        vec = aroma_vector(doc, emb, tfidf)
        meta = dict(metadata.get(doc.item_id, {})) if metadata else {}
        profiles.append(TasteProfile(doc.item_id, doc.source, vec, {}, meta))
        if vec is None:
            continue
        for taste in TASTES:
            raw.setdefault((taste, doc.source), {})[doc.item_id] = cosine(vec, taste_vecs[taste])

    normed = {key: normalize_scalars(group) for key, group in raw.items()}
    n_empty = 0
    for prof in profiles:
        if prof.empty:
            n_empty += 1
            prof.scalars = {t: 0.5 for t in TASTES}
        else:
            prof.scalars = {t: normed[(t, prof.source)][prof.item_id] for t in TASTES}
    if n_empty:
        log.info("%d items without in-vocabulary phrases (empty aroma vector)", n_empty)
    return profiles, tfidf


def raw_taste_table(profiles: Iterable[TasteProfile], emb: EmbeddingMatrix,
                    anchors: Mapping[str, Sequence[str]]) -> dict[str, dict[str, float]]:
    """Un-normalized anchor cosines per taste, keyed by item id."""
    taste_vecs = anchor_vectors(anchors, emb)
    return {
        t: {p.item_id: cosine(p.aroma_vec, taste_vecs[t]) for p in profiles if not p.empty}
        for t in TASTES
    }


PROFILE_COLUMNS = ("item_id", "source") + TASTES


def write_profiles(profiles: Sequence[TasteProfile], csv_path: str | Path,
                   vec_path: str | Path, header: str | None = None) -> None:
    lines = [",".join(PROFILE_COLUMNS) + "\n"]
    keys, vecs = [], []
    for p in profiles:
        row = [csv_field(p.item_id), p.source] + [format_float(p.scalars[t]) for t in TASTES]
        lines.append(",".join(row) + "\n")
        if not p.empty:
            keys.append(p.item_id)
            vecs.append(p.aroma_vec)
    atomic_write(csv_path, "".join(lines), header=header)
    dim = vecs[0].shape[0] if vecs else 0
    write_vectors(vec_path, keys, np.array(vecs).reshape(len(vecs), dim), header=header)


def read_profiles(csv_path: str | Path, vec_path: str | Path) -> list[TasteProfile]:
    keys, vecs = read_vectors(vec_path)
    by_key = dict(zip(keys, vecs))
    rows = csv.DictReader(data_lines(csv_path))
    if tuple(rows.fieldnames or ()) != PROFILE_COLUMNS:
        raise ValueError(f"{csv_path}: unexpected header {rows.fieldnames}")
    return [
        TasteProfile(r["item_id"], r["source"], by_key.get(r["item_id"]),
                     {t: float(r[t]) for t in TASTES})
        for r in rows
    ]

