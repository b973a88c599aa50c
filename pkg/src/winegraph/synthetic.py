"""Small synthetic datasets for tests and desk experiments."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .corpus import FOOD_COLUMNS, WINE_COLUMNS, build_docs, extract_phrases, tokenize_normalize
from .embed import TrainConfig, train_skipgram
from .graph import COMPOUND, HUB, INGREDIENT, WINE, HetGraph, Node
from .profile import TASTES, AromaWheel, TasteProfile, build_profiles, load_anchors

TASTE_WORDS = {
    "weight": ["heavy", "full bodied", "bold", "dense", "hearty"],
    "sweet": ["sweet", "sweetness", "sugar", "honey", "sugary"],
    "acid": ["acid", "acidity", "tart", "sour", "zesty"],
    "salt": ["salt", "salty", "briny", "savory", "brine"],
    "piquant": ["spicy", "piquant", "pepper", "chili", "fiery"],
    "fat": ["fat", "fatty", "rich", "buttery", "creamy"],
    "bitter": ["bitter", "bitterness", "tannin", "astringent", "grippy"],
}
AROMA_WORDS = ["raspberry", "blackberry", "cherry", "plum", "lemon", "oak", "vanilla",
               "tobacco", "earth", "mushroom", "rose", "violet", "toast", "coffee"]
FILLER = ["good", "taste", "flavor", "really", "product", "nice", "bought", "great",
          "finish", "notes", "palate", "drink", "love", "fresh"]

FOOD_NAMES = ["burrito", "pizza", "bacon", "tart", "cake", "chili", "coffee", "salmon",
              "cheese", "mango"]
CATEGORIES = ["meat", "dairy", "fruit", "bakery", "vegetable"]


def review_text(rng: np.random.Generator, taste: str | None, n_words: int = 14,
                focus: float = 0.5) -> str:
    words = []
    for _ in range(n_words):
        u = rng.random()
        if taste is not None and u < focus:
            words.append(rng.choice(TASTE_WORDS[taste]))
        elif u < focus + 0.2:
            words.append(rng.choice(AROMA_WORDS))
        else:
            words.append(rng.choice(FILLER))
    return " ".join(words).capitalize() + "."


def taste_corpus(n_items: int = 10, reviews_per_item: int = 20, seed: int = 0,
                 saturated: str = "acid", saturated_item: str = "item0"):
    """``(item_id, text)`` pairs; ``saturated_item`` talks almost only about
    ``saturated`` vocabulary, other items rotate through the other tastes."""
    rng = np.random.default_rng(seed)
    others = [t for t in TASTES if t != saturated]
    out = []
    for i in range(n_items):
        item = f"item{i}"
        for _ in range(reviews_per_item):
            if item == saturated_item:
                text = review_text(rng, saturated, focus=0.85)
            else:
                text = review_text(rng, others[i % len(others)], focus=0.5)
            out.append((item, text))
    return out


def write_food_csv(path: str | Path, rows) -> None:
    """``rows``: iterable of (product_id, text)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(FOOD_COLUMNS)
        for i, (pid, text) in enumerate(rows, 1):
            w.writerow([i, pid, f"U{i}", "anon", 0, 0, 5, 1300000000 + i, "", text])


def write_wine_csv(path: str | Path, rows) -> None:
    """``rows``: iterable of (title, description, variety)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([""] + list(WINE_COLUMNS))
        for i, (title, text, variety) in enumerate(rows):
            w.writerow([i, "France", text, 90, 20, "Bordeaux", title, variety, "Winery"])


def review_datasets(directory: str | Path, seed: int = 0, food_reviews: int = 15,
                    n_wines: int = 30, wine_reviews: int = 6) -> tuple[Path, Path]:
    """Food reviews keyed by the `FOOD_NAMES` and wine reviews for
    ``n_wines`` synthetic wines, written as CSVs in ``directory``."""
    rng = np.random.default_rng(seed)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    foods = []
    for i, name in enumerate(FOOD_NAMES):
        tastes = (TASTES[i % 7], TASTES[(i * 3 + 1) % 7])
        for j in range(food_reviews):
            foods.append((name, review_text(rng, tastes[j % 2])))
    wines = []
    for i in range(n_wines):
        title = f"Chateau {i:02d} Red Blend, Bordeaux, France"
        tastes = (TASTES[i % 7], TASTES[(i * 2 + 3) % 7])
        for j in range(wine_reviews):
            wines.append((title, review_text(rng, tastes[j % 2]), "Bordeaux-style Red Blend"))
    food_path, wine_path = directory / "food.csv", directory / "wine.csv"
    write_food_csv(food_path, foods)
    write_wine_csv(wine_path, wines)
    return food_path, wine_path


def flavor_graph(directory: str | Path, seed: int = 0, extra_ingredients: int = 30,
                 n_hubs: int = 8, n_compounds: int = 25) -> tuple[Path, Path]:
    """FlavorGraph-format node/edge CSVs containing the `FOOD_NAMES`."""
    rng = np.random.default_rng(seed)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = FOOD_NAMES + [f"ingredient_{i}" for i in range(extra_ingredients)]
    rows = []
    nid = 0
    ingr, hubs, comps = [], [], []
    for i, name in enumerate(names):
        rows.append([nid, name, "", "ingredient", "no_hub", CATEGORIES[i % len(CATEGORIES)]])
        ingr.append(nid)
        nid += 1
    for i in range(n_hubs):
        rows.append([nid, f"hub_{i}", "", "ingredient", "hub", CATEGORIES[i % len(CATEGORIES)]])
        hubs.append(nid)
        nid += 1
    for i in range(n_compounds):
        rows.append([nid, f"compound_{i}", f"C{i}", "compound", "no_hub", ""])
        comps.append(nid)
        nid += 1
    edges = set()
    by_cat = {}
    for i, n in enumerate(ingr + hubs):
        by_cat.setdefault(rows[n][5], []).append(n)
    for members in by_cat.values():
        for a in members:
            for b in rng.choice(members, size=min(4, len(members)), replace=False):
                if a != b:
                    edges.add((min(a, b), max(a, b), "ingr-ingr"))
    for a in ingr:
        b = int(rng.choice(hubs))
        edges.add((min(a, b), max(a, b), "ingr-ingr"))
    for h in hubs:
        for c in rng.choice(comps, size=4, replace=False):
            edges.add((h, int(c), "ingr-fcomp"))
    nodes_path, edges_path = directory / "nodes.csv", directory / "edges.csv"
    with open(nodes_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id", "name", "id", "node_type", "is_hub", "category"])
        w.writerows(rows)
    with open(edges_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id_1", "id_2", "score", "edge_type"])
        for a, b, et in sorted(edges):
            w.writerow([a, b, round(float(rng.random()), 4), et])
    return nodes_path, edges_path


def random_hetgraph(seed: int = 0, sizes: tuple[int, int, int, int] = (80, 30, 50, 40),
                    degree: int = 3) -> HetGraph:
    """Random graph with all four node types and every metapath step present."""
    rng = np.random.default_rng(seed)
    g = HetGraph()
    groups = {}
    nid = 0
    for kind, n in zip((INGREDIENT, HUB, COMPOUND, WINE), sizes):
        groups[kind] = []
        for _ in range(n):
            g.add_node(Node(str(nid), f"{kind}_{nid}", kind))
            groups[kind].append(str(nid))
            nid += 1
    seen = set()

    def connect(src, dst):
        for a in groups[src]:
            for b in rng.choice(groups[dst], size=degree, replace=False):
                key = frozenset((a, b))
                if a != b and key not in seen:
                    seen.add(key)
                    g.add_edge(a, str(b))

    connect(INGREDIENT, INGREDIENT)
    connect(INGREDIENT, HUB)
    connect(HUB, COMPOUND)
    connect(COMPOUND, HUB)
    connect(WINE, INGREDIENT)
    return g


def two_cliques(size: int = 20) -> HetGraph:
    """Two ingredient cliques joined by a single bridge edge."""
    g = HetGraph()
    for i in range(2 * size):
        g.add_node(Node(str(i), f"ingredient_{i}", INGREDIENT, "left" if i < size else "right"))
    for base in (0, size):
        for a in range(base, base + size):
            for b in range(a + 1, base + size):
                g.add_edge(str(a), str(b))
    g.add_edge(str(size - 1), str(size))
    return g


def random_profile(rng: np.random.Generator, item_id: str, source: str, dim: int = 8,
                   scalars: dict[str, float] | None = None) -> TasteProfile:
    vec = rng.normal(size=dim)
    vec /= np.linalg.norm(vec)
    s = {t: float(rng.random()) for t in TASTES} if scalars is None else dict(scalars)
    return TasteProfile(item_id, source, vec, s)


def descriptor_profiles(item_texts, source: str = "food", text_cfg: TrainConfig | None = None,
                        min_count: int = 3, score_threshold: float = 10.0, anchors=None):
    """Text -> phrases -> skip-gram -> taste profiles, in memory.

    ``item_texts`` is a list of ``(item_id, review text)``; each review is
    one training sentence.  Returns ``(profiles, embedding)``.
    """
    streams = [tokenize_normalize(text) for _, text in item_texts]
    vocab = extract_phrases(streams, min_count, score_threshold)
    surfaces = [ph.surface for ph in vocab.sorted_phrases()]
    index = {s: i for i, s in enumerate(surfaces)}
    phrased = [vocab.transform(toks) for toks in streams]
    sentences = [[index[s] for s in ph] for ph in phrased if ph]
    cfg = text_cfg or TrainConfig(dim=50, epochs=10, subsample_t=0.0, table_size=100_000)
    emb = train_skipgram(sentences, surfaces, cfg)
    docs = build_docs(((source, item, ph) for (item, _), ph in zip(item_texts, phrased)), vocab)
    anchors = load_anchors() if anchors is None else anchors
    profiles, _ = build_profiles(docs.values(), emb, anchors, AromaWheel.load(), vocab=vocab)
    return profiles, emb
