"""Sommelier rules: elimination constraints, congruent/contrasting pairing
rules and the eliminate -> classify -> rank pairing procedure.

Predicates are written with ``<``, ``>``, ``&`` and ``|`` only, so the same
table evaluates one profile (floats) or many wines at once (numpy arrays).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .io import atomic_write, csv_field, format_float
from .profile import TASTES, TasteProfile

Scalars = Mapping[str, float]

ELIMINATION: tuple[tuple[str, Callable], ...] = (
    ("weight", lambda f, w, tb: w["weight"] < f["weight"]),
    ("acidity", lambda f, w, tb: w["acid"] < f["acid"]),
    ("sweetness", lambda f, w, tb: w["sweet"] < f["sweet"]),
    ("bitterness", lambda f, w, tb: (w["bitter"] > tb) & (f["bitter"] > tb)),
    ("bitter-salt", lambda f, w, tb: ((w["bitter"] > tb) & (f["salt"] > tb))
                                     | ((w["salt"] > tb) & (f["bitter"] > tb))),
    ("acid-bitter", lambda f, w, tb: ((w["acid"] > tb) & (f["bitter"] > tb))
                                     | ((w["bitter"] > tb) & (f["acid"] > tb))),
    ("acid-piquant", lambda f, w, tb: ((w["acid"] > tb) & (f["piquant"] > tb))
                                      | ((w["piquant"] > tb) & (f["acid"] > tb))),
)

# food taste -> wine tastes that complement it when "high"
PAIRING_TABLE: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("sweet", ("bitter", "fat", "piquant", "salt", "acid")),
    ("acid", ("sweet", "fat", "salt")),
    ("salt", ("bitter", "sweet", "fat", "piquant", "acid")),
    ("piquant", ("sweet", "fat")),
    ("fat", ("bitter", "sweet", "piquant", "acid")),
    ("bitter", ("sweet", "fat")),
)


def _pairing_rule(food_taste: str, wine_tastes: tuple[str, ...]):
    def rule(f, w, t):
        hit = w[wine_tastes[0]] > t
        for taste in wine_tastes[1:]:
            hit = hit | (w[taste] > t)
        return (f[food_taste] > t) & hit
    return rule


PAIRING: tuple[tuple[str, Callable], ...] = tuple(
    (f"{taste} pairing", _pairing_rule(taste, wine_tastes)) for taste, wine_tastes in PAIRING_TABLE
)

ELIMINATED, PAIRED, NO_RULE = "eliminated", "paired", "no_rule_fired"


@dataclass(frozen=True)
class RuleSet:
    tau_high: float = 0.75
    tau_bitter: float = 0.75
    elimination: tuple[tuple[str, Callable], ...] = field(default=ELIMINATION, repr=False)
    pairing: tuple[tuple[str, Callable], ...] = field(default=PAIRING, repr=False)

    def __post_init__(self):
        for name in ("tau_high", "tau_bitter"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        names = [n for n, _ in self.elimination] + [n for n, _ in self.pairing]
        if len(set(names)) != len(names):
            raise ValueError("rule names must be unique")


@dataclass
class PairingVerdict:
    status: str
    fired_elimination: list[str] = field(default_factory=list)
    fired_pairing: list[str] = field(default_factory=list)
    aroma_similarity: float | None = None


def _scalars(profile: TasteProfile | Scalars) -> Scalars:
    s = profile.scalars if isinstance(profile, TasteProfile) else profile
    missing = [t for t in TASTES if t not in s]
    if missing:
        raise ValueError(f"missing taste scalar(s): {', '.join(missing)}")
    return s


def eliminate(food, wine, rs: RuleSet = RuleSet()) -> tuple[bool, list[str]]:
    f, w = _scalars(food), _scalars(wine)
    fired = [name for name, rule in rs.elimination if rule(f, w, rs.tau_bitter)]
    return bool(fired), fired


def classify_pairing(food, wine, rs: RuleSet = RuleSet()) -> list[str]:
    f, w = _scalars(food), _scalars(wine)
    return [name for name, rule in rs.pairing if rule(f, w, rs.tau_high)]


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def evaluate(food: TasteProfile, wine: TasteProfile, rs: RuleSet = RuleSet()) -> PairingVerdict:
    rejected, fired = eliminate(food, wine, rs)
    if rejected:
        return PairingVerdict(ELIMINATED, fired_elimination=fired)
    sim = None
    if not food.empty and not wine.empty:
        sim = float(_unit(food.aroma_vec) @ _unit(wine.aroma_vec))
    pairing = classify_pairing(food, wine, rs)
    return PairingVerdict(PAIRED if pairing else NO_RULE, fired_pairing=pairing, aroma_similarity=sim)


def pair(food: TasteProfile, wines: Sequence[TasteProfile], rs: RuleSet = RuleSet(),
         k: int = 3) -> list[tuple[TasteProfile, PairingVerdict]]:
    """Top ``k`` wines that survive elimination and fire a pairing rule,
    by descending aroma cosine then ascending item id.  Wines without an
    aroma vector cannot be ranked and are skipped."""
    if food.empty:
        raise ValueError(f"food {food.item_id!r} has an empty aroma vector")
    if k < 1:
        raise ValueError("k must be >= 1")
    hits = []
    for wine in wines:
        if wine.empty:
            continue
        verdict = evaluate(food, wine, rs)
        if verdict.status == PAIRED:
            hits.append((wine, verdict))
    hits.sort(key=lambda wv: (-wv[1].aroma_similarity, wv[0].item_id))
    return hits[:k]


class WineTable:
    """Column view of many wine profiles for vectorized rule evaluation."""

    def __init__(self, wines: Iterable[TasteProfile]):
        self.wines = [w for w in wines if not w.empty]
        self.scalars = {t: np.array([w.scalars[t] for w in self.wines]) for t in TASTES}
        dim = self.wines[0].aroma_vec.shape[0] if self.wines else 0
        vecs = np.array([w.aroma_vec for w in self.wines]).reshape(len(self.wines), dim)
        self.unit = vecs / np.linalg.norm(vecs, axis=1, keepdims=True) if len(vecs) else vecs
        order = sorted(range(len(self.wines)), key=lambda i: self.wines[i].item_id)
        self.id_rank = np.empty(len(self.wines), dtype=np.int64)
        self.id_rank[order] = np.arange(len(self.wines))

    def __len__(self) -> int:
        return len(self.wines)

    def pair(self, food: TasteProfile, rs: RuleSet = RuleSet(), k: int = 3):
        """Same result as `pair` over ``self.wines``."""
        if food.empty:
            raise ValueError(f"food {food.item_id!r} has an empty aroma vector")
        if k < 1:
            raise ValueError("k must be >= 1")
        if not self.wines:
            return []
        f = _scalars(food)
        w = self.scalars
        out = np.zeros(len(self.wines), dtype=bool)
        for _, rule in rs.elimination:
            out |= rule(f, w, rs.tau_bitter)
        fires = np.zeros(len(self.wines), dtype=bool)
        for _, rule in rs.pairing:
            fires |= rule(f, w, rs.tau_high)
        idx = np.flatnonzero(~out & fires)
        if not len(idx):
            return []
        sims = self.unit[idx] @ _unit(food.aroma_vec)
        order = np.lexsort((self.id_rank[idx], -sims))[:k]
        return [(self.wines[i], evaluate(food, self.wines[i], rs)) for i in idx[order]]


def pairing_label(food: TasteProfile, wine: TasteProfile) -> str:
    """``congruent`` when both share the dominant taste, else ``contrasting``."""
    fs, ws = _scalars(food), _scalars(wine)
    top_f = max(TASTES, key=lambda t: fs[t])
    top_w = max(TASTES, key=lambda t: ws[t])
    return "congruent" if top_f == top_w else "contrasting"


VERDICT_COLUMNS = ("food_id", "wine_id", "status", "fired_rules", "aroma_similarity")


def write_verdicts(rows: Iterable[tuple[str, str, PairingVerdict]], path: str | Path,
                   header: str | None = None) -> None:
    lines = [",".join(VERDICT_COLUMNS) + "\n"]
    for food_id, wine_id, v in rows:
        fired = v.fired_elimination if v.status == ELIMINATED else v.fired_pairing
        sim = "" if v.aroma_similarity is None else format_float(v.aroma_similarity)
        lines.append(",".join([csv_field(food_id), csv_field(wine_id), v.status,
                               csv_field(";".join(fired)), sim]) + "\n")
    atomic_write(path, "".join(lines), header=header)
