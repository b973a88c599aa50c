"""Review ingestion, text normalization and collocation-based phrase mining."""

from __future__ import annotations

import csv
import logging
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

log = logging.getLogger(__name__)

FOOD, WINE = "food", "wine"

FOOD_COLUMNS = (
    "Id", "ProductId", "UserId", "ProfileName", "HelpfulnessNumerator",
    "HelpfulnessDenominator", "Score", "Time", "Summary", "Text",
)
WINE_COLUMNS = (
    "country", "description", "points", "price", "province", "title",
    "variety", "winery",
)
WINE_META = ("variety", "province", "country")

# English function words; taste/aroma adjectives deliberately absent.
STOPWORDS = frozenset("""
a about above after again against ain all am an and any are aren aren't as at
be because been before being below between both but by can couldn couldn't d
did didn didn't do does doesn doesn't doing don don't down during each few for
from further had hadn hadn't has hasn hasn't have haven haven't having he her
here hers herself him himself his how i if in into is isn isn't it it's its
itself just ll m ma me mightn mightn't more most mustn mustn't my myself needn
needn't no nor not now o of off on once only or other our ours ourselves out
over own re s same shan shan't she she's should should've shouldn shouldn't so
some such t than that that'll the their theirs them themselves then there these
they this those through to too under until up ve very was wasn wasn't we were
weren weren't what when where which while who whom why will with won won't
wouldn wouldn't y you you'd you'll you're you've your yours yourself yourselves
""".split())


class SchemaError(ValueError):
    """CSV header does not match the declared review schema."""


class DataError(ValueError):
    """Input data is present but unusable (e.g. zero valid rows)."""


@dataclass(frozen=True)
class Review:
    review_id: str
    item_id: str
    text: str
    source: str
    meta: Mapping[str, str] = field(default_factory=dict)


@dataclass
class IngestStats:
    rows: int = 0
    kept: int = 0
    empty_text: int = 0
    malformed: int = 0

    @property
    def skipped(self) -> int:
        return self.empty_text + self.malformed


def ingest(
    dataset_path: str | Path,
    schema: str,
    stats: IngestStats | None = None,
    item_map: Mapping[str, str] | None = None,
) -> Iterator[Review]:
    """Stream reviews from an Amazon Fine Food (``food_reviews``) or Wine
    Reviews (``wine_reviews``) CSV export.

    Rows with missing/extra fields or empty text are skipped and tallied in
    ``stats``.  ``item_map`` optionally re-keys item ids (e.g. product id to
    food name) so several products can share one food item.
    """
    if schema not in ("food_reviews", "wine_reviews"):
        raise ValueError(f"unknown schema {schema!r}")
    path = Path(dataset_path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")
    stats = stats if stats is not None else IngestStats()
    required = FOOD_COLUMNS if schema == "food_reviews" else WINE_COLUMNS

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(f"{path}: header is missing column(s): {', '.join(missing)}")

        for lineno, row in enumerate(reader, start=2):
            stats.rows += 1
            if None in row or any(v is None for v in row.values()):
                stats.malformed += 1
                continue
            if schema == "food_reviews":
                text = f"{row['Summary']} {row['Text']}".strip()
                item_id = row["ProductId"].strip()
                review_id = row["Id"].strip() or str(lineno)
                meta: dict[str, str] = {}
                source = FOOD
            else:
                text = row["description"].strip()
                item_id = row["title"].strip()
                review_id = (row.get("") or "").strip() or str(lineno)
                meta = {k: row[k].strip() for k in WINE_META}
                source = WINE
            if not text:
                stats.empty_text += 1
                continue
            if not item_id:
                stats.malformed += 1
                continue
            if item_map is not None:
                item_id = item_map.get(item_id, item_id)
            stats.kept += 1
            yield Review(review_id, item_id, text, source, meta)

    log.info("%s: %d rows, %d kept, %d empty, %d malformed",
             path.name, stats.rows, stats.kept, stats.empty_text, stats.malformed)
    if stats.kept == 0:
        raise DataError(f"{path}: zero valid rows")


def _is_punct(ch: str) -> bool:
    cat = unicodedata.category(ch)
    return cat[0] in "PS"


def tokenize_normalize(text: str) -> list[str]:
    """Lowercase, replace punctuation/symbols by spaces, split, then drop
    stopwords and digit-only tokens."""
    cleaned = "".join(" " if _is_punct(ch) else ch for ch in text.lower())
    return [t for t in cleaned.split() if t not in STOPWORDS and not t.isdigit()]


@dataclass(frozen=True)
class Phrase:
    tokens: tuple[str, ...]
    count: int

    @property
    def surface(self) -> str:
        return "_".join(self.tokens)


def _width(surface: str) -> int:
    return surface.count("_") + 1


def _merge(stream: Sequence[str], pairs: frozenset[tuple[str, str]]) -> list[str]:
    out: list[str] = []
    i, n = 0, len(stream)
    while i < n:
        if i + 1 < n and (stream[i], stream[i + 1]) in pairs:
            out.append(stream[i] + "_" + stream[i + 1])
            i += 2
        else:
            out.append(stream[i])
            i += 1
    return out


def _collocations(
    streams: Sequence[Sequence[str]],
    min_count: int,
    score_threshold: float,
    width: int,
) -> frozenset[tuple[str, str]]:
    """Pairs whose merged width equals ``width`` and that pass the score test."""
    unigrams: Counter[str] = Counter()
    pairs: Counter[tuple[str, str]] = Counter()
    for s in streams:
        unigrams.update(s)
        pairs.update(zip(s, s[1:]))
    total = sum(unigrams.values())
    keep = set()
    for (a, b), n_ab in pairs.items():
        if n_ab < min_count or _width(a) + _width(b) != width:
            continue
        score = (n_ab - min_count) * total / (unigrams[a] * unigrams[b])
        if score >= score_threshold:
            keep.add((a, b))
    return frozenset(keep)


@dataclass
class Vocabulary:
    """Admitted phrases plus the two merge tables used to re-apply them."""

    phrases: dict[str, Phrase]
    bigrams: frozenset[tuple[str, str]] = frozenset()
    trigrams: frozenset[tuple[str, str]] = frozenset()

    def __len__(self) -> int:
        return len(self.phrases)

    def __contains__(self, surface: object) -> bool:
        return surface in self.phrases

    def transform(self, tokens: Sequence[str], keep_oov: bool = False) -> list[str]:
        merged = _merge(_merge(tokens, self.bigrams), self.trigrams)
        return merged if keep_oov else [s for s in merged if s in self.phrases]

    def sorted_phrases(self) -> list[Phrase]:
        return sorted(self.phrases.values(), key=lambda p: (-p.count, p.surface))

    def dump(self, path: str | Path, header: str | None = None) -> None:
        from .io import atomic_write

        lines = [f"{p.surface}\t{p.count}\n" for p in self.sorted_phrases()]
        atomic_write(path, "".join(lines), header=header)

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        """Read a vocabulary dump.

        Merge tables are rebuilt from the multi-token surfaces only, so a
        bigram that was merged but fell under ``min_count`` afterwards is not
        recovered.  Stage outputs store already-merged streams for that reason.
        """
        from .io import data_lines

        phrases: dict[str, Phrase] = {}
        for line in data_lines(path):
            surface, count = line.rstrip("\n").split("\t")
            phrases[surface] = Phrase(tuple(surface.split("_")), int(count))
        bigrams, trigrams = set(), set()
        for p in phrases.values():
            if len(p.tokens) == 2:
                bigrams.add(p.tokens)
        for p in phrases.values():
            if len(p.tokens) == 3:
                a, b, c = p.tokens
                if (a, b) in bigrams:
                    trigrams.add((f"{a}_{b}", c))
                if (b, c) in bigrams:
                    trigrams.add((a, f"{b}_{c}"))
        return cls(phrases, frozenset(bigrams), frozenset(trigrams))


def extract_phrases(
    token_streams: Iterable[Sequence[str]],
    min_count: int = 10,
    score_threshold: float = 10.0,
) -> Vocabulary:
    """Mine 1-3 token phrases with two collocation passes.

    A pair ``(a, b)`` merges when ``count(a,b) >= min_count`` and
    ``(count(a,b) - min_count) * N / (count(a) * count(b)) >= score_threshold``
    where ``N`` is the token total of the pass.  Pass one builds bigrams, pass
    two joins a bigram with one neighbouring token.  Every surface left in the
    merged corpus with ``count >= min_count`` is admitted.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    streams = [list(s) for s in token_streams]
    bigrams = _collocations(streams, min_count, score_threshold, width=2)
    pass1 = [_merge(s, bigrams) for s in streams]
    trigrams = _collocations(pass1, min_count, score_threshold, width=3)
    final = [_merge(s, trigrams) for s in pass1]

    counts: Counter[str] = Counter()
    for s in final:
        counts.update(s)
    phrases = {
        w: Phrase(tuple(w.split("_")), n) for w, n in counts.items() if n >= min_count
    }
    return Vocabulary(phrases, bigrams, trigrams)


@dataclass
class PhraseDoc:
    item_id: str
    source: str
    phrases: Counter[str] = field(default_factory=Counter)

    def __len__(self) -> int:
        return sum(self.phrases.values())


def build_docs(
    reviews: Iterable[tuple[str, str, Sequence[str]]], vocab: Vocabulary
) -> dict[tuple[str, str], PhraseDoc]:
    """Group phrase streams ``(source, item_id, surfaces)`` into one document
    per item, keeping in-vocabulary surfaces only."""
    docs: dict[tuple[str, str], PhraseDoc] = {}
    for source, item_id, surfaces in reviews:
        doc = docs.get((source, item_id))
        if doc is None:
            doc = docs[(source, item_id)] = PhraseDoc(item_id, source)
        doc.phrases.update(s for s in surfaces if s in vocab)
    return docs
