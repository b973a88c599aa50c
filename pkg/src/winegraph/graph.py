"""WineGraph: FlavorGraph nodes/edges plus wine nodes and food-wine pairing
edges, metapath-constrained random walks and metapath2vec training."""

from __future__ import annotations

import csv
import logging
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .embed import EmbeddingMatrix, TrainConfig, train_skipgram
from .io import atomic_write, csv_field, data_lines, format_float

log = logging.getLogger(__name__)

INGREDIENT, HUB, COMPOUND, WINE = "ingredient", "hub_ingredient", "compound", "wine"
NODE_TYPES = (INGREDIENT, HUB, COMPOUND, WINE)
INGR_INGR, INGR_COMPOUND, FOOD_WINE = "ingr_ingr", "ingr_compound", "food_wine"
EDGE_TYPES = (INGR_INGR, INGR_COMPOUND, FOOD_WINE)
INGREDIENT_KINDS = frozenset({INGREDIENT, HUB})

NODE_COLUMNS = ("node_id", "name", "id", "node_type", "is_hub")
EDGE_COLUMNS = ("id_1", "id_2", "score", "edge_type")
_TRUTHY = {"hub", "true", "1", "yes", "y"}


class GraphParseError(ValueError):
    pass


def edge_type_for(t1: str, t2: str) -> str | None:
    """Edge type implied by two endpoint node types, or None if not allowed."""
    kinds = {t1, t2}
    if kinds <= INGREDIENT_KINDS:
        return INGR_INGR
    if COMPOUND in kinds and (kinds - {COMPOUND}) <= INGREDIENT_KINDS and kinds != {COMPOUND}:
        return INGR_COMPOUND
    if WINE in kinds and (kinds - {WINE}) <= INGREDIENT_KINDS and kinds != {WINE}:
        return FOOD_WINE
    return None


def _edge_label(label: str) -> str:
    lab = label.strip().lower().replace("-", "_")
    if lab in EDGE_TYPES:
        return lab
    if "comp" in lab:
        return INGR_COMPOUND
    if lab in ("food_wine", "ingr_wine"):
        return FOOD_WINE
    raise GraphParseError(f"unknown edge type {label!r}")


def normalize_name(name: str) -> str:
    return re.sub(r"[\s_\-]+", " ", name.strip().lower()).strip()


@dataclass
class Node:
    node_id: str
    name: str
    type: str
    category: str | None = None
    source_id: str = ""


class HetGraph:
    """Undirected typed graph; adjacency is kept per node and edge type."""

    def __init__(self):
        self.nodes: dict[str, Node] = {}
        self.adj: dict[str, dict[str, list[tuple[str, float]]]] = {}
        self.edges: list[tuple[str, str, float, str]] = []
        self._by_name: dict[str, str] = {}

    def copy(self) -> "HetGraph":
        g = HetGraph()
        for n in self.nodes.values():
            g.add_node(Node(n.node_id, n.name, n.type, n.category, n.source_id))
        for a, b, w, et in self.edges:
            g.add_edge(a, b, w, et)
        return g

    def add_node(self, node: Node) -> None:
        if node.type not in NODE_TYPES:
            raise GraphParseError(f"node {node.node_id}: unknown type {node.type!r}")
        if node.node_id in self.nodes:
            raise GraphParseError(f"duplicate node id {node.node_id}")
        self.nodes[node.node_id] = node
        self.adj[node.node_id] = {}
        if node.type in INGREDIENT_KINDS:
            self._by_name.setdefault(normalize_name(node.name), node.node_id)

    def add_edge(self, a: str, b: str, weight: float = 1.0, edge_type: str | None = None) -> None:
        if a not in self.nodes or b not in self.nodes:
            raise GraphParseError(f"edge ({a}, {b}) references an unknown node")
        inferred = edge_type_for(self.nodes[a].type, self.nodes[b].type)
        if inferred is None:
            raise GraphParseError(
                f"no edge type joins {self.nodes[a].type} and {self.nodes[b].type} ({a}, {b})")
        if edge_type is not None and edge_type != inferred:
            raise GraphParseError(f"edge ({a}, {b}) labelled {edge_type} but endpoints imply {inferred}")
        self.edges.append((a, b, weight, inferred))
        self.adj[a].setdefault(inferred, []).append((b, weight))
        if a != b:
            self.adj[b].setdefault(inferred, []).append((a, weight))

    def neighbors(self, node_id: str, node_type: str | None = None) -> list[str]:
        out = [n for nbrs in self.adj[node_id].values() for n, _ in nbrs]
        if node_type is not None:
            out = [n for n in out if self.nodes[n].type == node_type]
        return out

    def find_ingredient(self, name: str) -> str | None:
        return self._by_name.get(normalize_name(name))

    def nodes_of_type(self, node_type: str) -> list[str]:
        return [i for i, n in self.nodes.items() if n.type == node_type]

    def node_types(self) -> set[str]:
        return {n.type for n in self.nodes.values()}

    def edge_types(self) -> set[str]:
        return {e[3] for e in self.edges}

    def edge_count(self, edge_type: str | None = None) -> int:
        return sum(1 for e in self.edges if edge_type is None or e[3] == edge_type)

    def is_heterogeneous(self) -> bool:
        return len(self.node_types()) + len(self.edge_types()) > 2

    def type_pair_counts(self) -> dict[frozenset, int]:
        counts: dict[frozenset, int] = {}
        for a, b, _, _ in self.edges:
            key = frozenset((self.nodes[a].type, self.nodes[b].type))
            counts[key] = counts.get(key, 0) + 1
        return counts


def read_flavorgraph(nodes_path: str | Path, edges_path: str | Path) -> HetGraph:
    """Parse a FlavorGraph-style node/edge CSV pair.

    Ingredient rows flagged ``is_hub`` become ``hub_ingredient`` nodes; an
    optional ``category`` column is kept as the node label.
    """
    g = HetGraph()
    rows = csv.DictReader(data_lines(nodes_path))
    missing = [c for c in NODE_COLUMNS if c not in (rows.fieldnames or [])]
    if missing:
        raise GraphParseError(f"{nodes_path}: missing column(s) {', '.join(missing)}")
    for lineno, row in enumerate(rows, 2):
        if None in row or any(v is None for v in row.values()):
            raise GraphParseError(f"{nodes_path}:{lineno}: wrong number of fields")
        kind = row["node_type"].strip().lower()
        if kind == INGREDIENT and row["is_hub"].strip().lower() in _TRUTHY:
            kind = HUB
        category = (row.get("category") or "").strip() or None
        g.add_node(Node(row["node_id"].strip(), row["name"].strip(), kind, category,
                        row["id"].strip()))

    rows = csv.DictReader(data_lines(edges_path))
    missing = [c for c in EDGE_COLUMNS if c not in (rows.fieldnames or [])]
    if missing:
        raise GraphParseError(f"{edges_path}: missing column(s) {', '.join(missing)}")
    for lineno, row in enumerate(rows, 2):
        try:
            score = float(row["score"]) if row["score"] not in ("", None) else 1.0
        except (TypeError, ValueError) as exc:
            raise GraphParseError(f"{edges_path}:{lineno}: bad score {row['score']!r}") from exc
        g.add_edge(row["id_1"].strip(), row["id_2"].strip(), score, _edge_label(row["edge_type"]))
    return g


def write_graph(g: HetGraph, nodes_path: str | Path, edges_path: str | Path,
                header: str | None = None) -> None:
    lines = [",".join(NODE_COLUMNS + ("category",)) + "\n"]
    for n in g.nodes.values():
        kind = INGREDIENT if n.type == HUB else n.type
        hub = "hub" if n.type == HUB else "no_hub"
        lines.append(",".join([csv_field(n.node_id), csv_field(n.name), csv_field(n.source_id),
                               kind, hub, csv_field(n.category or "")]) + "\n")
    atomic_write(nodes_path, "".join(lines), header=header)
    lines = [",".join(EDGE_COLUMNS) + "\n"]
    for a, b, w, et in g.edges:
        lines.append(f"{csv_field(a)},{csv_field(b)},{format_float(w)},{et}\n")
    atomic_write(edges_path, "".join(lines), header=header)


@dataclass
class BuildStats:
    foods: int = 0
    skipped_foods: int = 0
    wine_nodes: int = 0
    pairing_edges: int = 0


def _entry(entry) -> tuple[str, float]:
    """Accepts a wine id, ``(wine_id, score)`` or ``(TasteProfile, PairingVerdict)``."""
    if isinstance(entry, str) or not isinstance(entry, Sequence):
        entry = (entry,)
    wine, info = entry[0], entry[1] if len(entry) > 1 else None
    wine_id = getattr(wine, "item_id", wine)
    score = getattr(info, "aroma_similarity", info)
    return str(wine_id), 1.0 if score is None else float(score)


def augment(g: HetGraph, pairings: Mapping[str, Sequence], k: int = 3,
            stats: BuildStats | None = None) -> HetGraph:
    """Copy of ``g`` with one wine node per distinct paired wine and a
    food_wine edge for each of a food's top ``k`` (already ranked) wines."""
    if k < 1:
        raise ValueError("k must be >= 1")
    stats = stats if stats is not None else BuildStats()
    out = g.copy()
    if not pairings:
        return out
    numeric = all(i.lstrip("-").isdigit() for i in g.nodes)
    next_id = max((int(i) for i in g.nodes), default=-1) + 1 if numeric else 0
    wine_nodes: dict[str, str] = {}
    for food_id in sorted(pairings):
        stats.foods += 1
        node = g.find_ingredient(food_id)
        if node is None:
            stats.skipped_foods += 1
            continue
        for entry in list(pairings[food_id])[:k]:
            wine_id, score = _entry(entry)
            if wine_id not in wine_nodes:
                nid = str(next_id) if numeric else f"wine:{next_id}"
                next_id += 1
                out.add_node(Node(nid, wine_id, WINE))
                wine_nodes[wine_id] = nid
            out.add_edge(node, wine_nodes[wine_id], score, FOOD_WINE)
            stats.pairing_edges += 1
    stats.wine_nodes = len(wine_nodes)
    if stats.pairing_edges == 0:
        raise ValueError(f"none of {stats.foods} paired foods resolve to a graph ingredient")
    if stats.skipped_foods:
        log.info("%d of %d paired foods not found in the graph", stats.skipped_foods, stats.foods)
    return out


def build_winegraph(flavor_nodes: str | Path, flavor_edges: str | Path,
                    pairings: Mapping[str, Sequence], k: int = 3,
                    stats: BuildStats | None = None) -> HetGraph:
    return augment(read_flavorgraph(flavor_nodes, flavor_edges), pairings, k, stats)


# ---------------------------------------------------------------- metapaths


@dataclass(frozen=True)
class Metapath:
    type_sequence: tuple[str, ...]
    name: str = ""
    weight: float = 1.0

    def __post_init__(self):
        if len(self.type_sequence) < 2:
            raise ValueError("a metapath needs at least two node types")
        for t in self.type_sequence:
            if t not in NODE_TYPES:
                raise ValueError(f"unknown node type {t!r} in metapath")
        for a, b in zip(self.type_sequence, self.type_sequence[1:]):
            if edge_type_for(a, b) is None:
                raise ValueError(f"no edge type joins {a} and {b}")
        if not self.weight > 0:
            raise ValueError("metapath weight must be > 0")
        if not self.name:
            object.__setattr__(self, "name", "-".join(self.type_sequence))

    @property
    def cycle(self) -> tuple[str, ...]:
        """Repeating unit: a path whose ends share a type is closed there."""
        seq = self.type_sequence
        return seq[:-1] if seq[0] == seq[-1] else seq

    @classmethod
    def parse(cls, text: str) -> "Metapath":
        parts = text.split()
        if not parts or len(parts) > 2:
            raise ValueError(f"bad metapath line {text!r}")
        weight = float(parts[1]) if len(parts) == 2 else 1.0
        return cls(tuple(parts[0].split("-")), parts[0], weight)


DEFAULT_METAPATHS = (
    Metapath((INGREDIENT, HUB, COMPOUND, HUB, INGREDIENT), "M1"),
    Metapath((WINE, INGREDIENT, INGREDIENT, WINE), "M2"),
    Metapath((INGREDIENT, WINE, INGREDIENT), "M3"),
)


def read_metapaths(path: str | Path) -> tuple[Metapath, ...]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(Metapath.parse(line))
    if not out:
        raise ValueError(f"{path}: no metapaths")
    return tuple(out)


def conforms(types: Sequence[str], metapath: Metapath) -> bool:
    """True when ``types`` is a prefix of the metapath's cycle from some offset."""
    cyc = metapath.cycle
    L = len(cyc)
    return any(
        all(t == cyc[(off + i) % L] for i, t in enumerate(types))
        for off in range(L) if cyc[off] == types[0]
    ) if types else False


@dataclass(frozen=True)
class WalkConfig:
    walks_per_node: int = 100
    walk_length: int = 50
    seed: int = 0
    metapaths: tuple[Metapath, ...] = DEFAULT_METAPATHS
    weighted: bool = False

    def __post_init__(self):
        if self.walk_length < 2:
            raise ValueError("walk_length must be >= 2")
        if self.walks_per_node < 1:
            raise ValueError("walks_per_node must be >= 1")
        if not self.metapaths:
            raise ValueError("at least one metapath required")


class Walk(NamedTuple):
    nodes: tuple[str, ...]
    metapath: str


class UnrealizableMetapath(ValueError):
    pass


def check_realizable(g: HetGraph, metapaths: Iterable[Metapath]) -> None:
    pairs = g.type_pair_counts()
    for mp in metapaths:
        cyc = mp.cycle
        steps = list(zip(cyc, cyc[1:] + cyc[:1])) if len(cyc) > 1 else [(cyc[0], cyc[0])]
        for a, b in steps:
            if not pairs.get(frozenset((a, b))):
                raise UnrealizableMetapath(f"metapath {mp.name}: no {a}-{b} edge in the graph")


class _Walker:
    """Index-based neighbour tables per (node, neighbour type)."""

    def __init__(self, g: HetGraph, cfg: WalkConfig):
        self.ids = list(g.nodes)
        self.cfg = cfg
        index = {n: i for i, n in enumerate(self.ids)}
        self.types = [g.nodes[n].type for n in self.ids]
        self.table: list[dict[str, tuple[np.ndarray, np.ndarray]]] = []
        for n in self.ids:
            grouped: dict[str, tuple[list[int], list[float]]] = {}
            for nbrs in g.adj[n].values():
                for m, w in nbrs:
                    idx, wts = grouped.setdefault(g.nodes[m].type, ([], []))
                    idx.append(index[m])
                    wts.append(w)
            self.table.append({
                t: (np.array(idx, np.int64), np.cumsum(np.asarray(wts, dtype=np.float64)))
                for t, (idx, wts) in grouped.items()
            })
        self.paths_for = {t: [mp for mp in cfg.metapaths if t in mp.cycle] for t in NODE_TYPES}

    def walk(self, start: int, j: int) -> Walk:
        cfg = self.cfg
        rng = np.random.default_rng([cfg.seed, start, j])
        u = rng.random(cfg.walk_length + 1)
        options = self.paths_for[self.types[start]]
        weights = np.cumsum([mp.weight for mp in options])
        mp = options[int(np.searchsorted(weights, u[0] * weights[-1], side="right"))]
        cyc, L = mp.cycle, len(mp.cycle)
        offsets = [i for i, t in enumerate(cyc) if t == self.types[start]]
        pos = offsets[int(u[1] * len(offsets)) % len(offsets)]
        walk = [start]
        cur = start
        for step in range(2, cfg.walk_length + 1):
            pos = (pos + 1) % L
            entry = self.table[cur].get(cyc[pos])
            if entry is None:
                break
            nbrs, cumw = entry
            if cfg.weighted and cumw[-1] > 0:
                k = int(np.searchsorted(cumw, u[step] * cumw[-1], side="right"))
                cur = int(nbrs[min(k, len(nbrs) - 1)])
            else:
                cur = int(nbrs[int(u[step] * len(nbrs)) % len(nbrs)])
            walk.append(cur)
        return Walk(tuple(self.ids[i] for i in walk), mp.name)

    def starts(self) -> list[int]:
        return [i for i, t in enumerate(self.types) if self.paths_for[t]]

    def batch(self, args: tuple[int, list[int]]) -> list[Walk]:
        j, starts = args
        return [self.walk(s, j) for s in starts]


def generate_walks(g: HetGraph, cfg: WalkConfig, workers: int = 1) -> Iterator[Walk]:
    """Metapath-guided walks: ``walks_per_node`` rounds over every node whose
    type occurs in some metapath.

    Each walk picks a metapath (by weight) among those containing the start
    type, then steps uniformly (or weight-proportionally) to a neighbour of
    the next type in the cycle, stopping early when there is none.  Walk
    ``j`` from node ``i`` uses its own stream seeded by ``(seed, i, j)`` so
    the output does not depend on ``workers``.
    """
    if not g.nodes:
        raise ValueError("empty graph")
    check_realizable(g, cfg.metapaths)
    walker = _Walker(g, cfg)
    starts = walker.starts()
    jobs = [(j, starts) for j in range(cfg.walks_per_node)]
    if workers <= 1:
        for job in jobs:
            yield from walker.batch(job)
    else:
        with ProcessPoolExecutor(workers) as pool:
            for batch in pool.map(walker.batch, jobs):
                yield from batch


def write_walks(walks: Iterable[Walk], path: str | Path, header: str | None = None) -> int:
    lines = [" ".join(w.nodes) + "\n" for w in walks]
    atomic_write(path, "".join(lines), header=header)
    return len(lines)


def train_metapath2vec(walks: Iterable[Walk | Sequence[str]], cfg: TrainConfig,
                       node_types: Mapping[str, str], workers: int = 1) -> EmbeddingMatrix:
    """Heterogeneous skip-gram over walk windows; each context's negatives
    come from nodes of the context's own type."""
    vocab: dict[str, int] = {}
    sentences = []
    for w in walks:
        nodes = w.nodes if isinstance(w, Walk) else w
        sentences.append([vocab.setdefault(n, len(vocab)) for n in nodes])
    if not sentences:
        raise ValueError("empty walk stream")
    ids = list(vocab)
    try:
        groups = np.array([NODE_TYPES.index(node_types[n]) for n in ids], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"walk node {exc.args[0]!r} has no type") from None
    return train_skipgram(sentences, ids, cfg, groups=groups, workers=workers)
