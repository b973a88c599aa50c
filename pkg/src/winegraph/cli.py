"""``winegraph`` command line: one subcommand per pipeline stage, with file
handoff between stages under ``output_dir``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import corpus, embed, evaluation, graph, profile, rules
from .config import STAGE_ORDER, ConfigError, PipelineConfig, load_config, stage_hash
from .io import atomic_write, csv_field, data_lines, read_header

log = logging.getLogger("winegraph")

EXIT_OK, EXIT_CONFIG, EXIT_PREREQ, EXIT_DATA = 0, 1, 2, 3

# artifact -> producing stage
ARTIFACTS = {
    "vocab.tsv": "prepare",
    "reviews.tsv": "prepare",
    "items.csv": "prepare",
    "text_vectors.txt": "train-text",
    "tfidf.csv": "profile",
    "profiles.csv": "profile",
    "profile_vectors.txt": "profile",
    "pairings.csv": "pair",
    "graph_nodes.csv": "build-graph",
    "graph_edges.csv": "build-graph",
    "walks.txt": "train-graph",
    "node_vectors.txt": "train-graph",
    "nmi_report.txt": "evaluate",
    "projection.csv": "evaluate",
}


class MissingPrerequisite(RuntimeError):
    pass


class Stage:
    def __init__(self, name: str, cfg: PipelineConfig, force: bool = False, workers: int = 1):
        self.name, self.cfg, self.force, self.workers = name, cfg, force, workers
        self.out = Path(cfg.output_dir)

    def header(self, stage: str | None = None) -> str:
        stage = stage or self.name
        return f"config_hash={stage_hash(self.cfg, stage)} stage={stage}"

    def require(self, *names: str) -> list[Path]:
        paths = []
        for name in names:
            path = self.out / name
            producer = ARTIFACTS[name]
            if not path.is_file():
                raise MissingPrerequisite(
                    f"missing {path} (produced by stage '{producer}'; run it first)")
            if not self.force and read_header(path) != self.header(producer):
                raise MissingPrerequisite(
                    f"{path} was produced with a different configuration "
                    f"(rerun stage '{producer}' or pass --force)")
            paths.append(path)
        return paths

    def require_inputs(self, **paths: str | None) -> None:
        for key, value in paths.items():
            if not value:
                raise ConfigError(f"paths.{key} must be set for stage '{self.name}'")
            if not Path(value).is_file():
                raise ConfigError(f"paths.{key}: file not found: {value}")


def summary(stage: str, **metrics) -> None:
    extra = " ".join(f"{k}={v}" for k, v in metrics.items())
    print(f"stage={stage} status=ok {extra}".rstrip(), flush=True)


# ---------------------------------------------------------------- stages


def _read_item_map(path: str | None) -> dict[str, str] | None:
    if not path:
        return None
    with open(path, newline="", encoding="utf-8") as fh:
        rows = csv.DictReader(fh)
        if not {"item_id", "name"} <= set(rows.fieldnames or []):
            raise corpus.SchemaError(f"{path}: expected columns item_id,name")
        return {r["item_id"].strip(): r["name"].strip() for r in rows}


def corpus_key(item_id: str) -> str:
    return item_id.replace("\t", " ").replace("\n", " ")


def _tokenize_all(texts: list[str], workers: int) -> list[list[str]]:
    if workers <= 1:
        return [corpus.tokenize_normalize(t) for t in texts]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(corpus.tokenize_normalize, texts, chunksize=2048))


def run_prepare(st: Stage) -> None:
    p = st.cfg.paths
    st.require_inputs(food_reviews=p.food_reviews, wine_reviews=p.wine_reviews)
    item_map = _read_item_map(p.food_item_map)
    fstats, wstats = corpus.IngestStats(), corpus.IngestStats()
    reviews = list(corpus.ingest(p.food_reviews, "food_reviews", fstats, item_map))
    reviews += list(corpus.ingest(p.wine_reviews, "wine_reviews", wstats))
    streams = _tokenize_all([r.text for r in reviews], st.workers)
    vocab = corpus.extract_phrases(streams, st.cfg.corpus.min_count, st.cfg.corpus.score_threshold)
    if not len(vocab):
        raise corpus.DataError("phrase vocabulary is empty; lower corpus.min_count")

    lines, meta = [], {}
    for r, toks in zip(reviews, streams):
        surfaces = vocab.transform(toks)
        key = corpus_key(r.item_id)
        lines.append(f"{r.source}\t{key}\t{' '.join(surfaces)}\n")
        if r.source == corpus.WINE and key not in meta:
            meta[key] = r.meta
    hdr = st.header()
    vocab.dump(st.out / "vocab.tsv", header=hdr)
    atomic_write(st.out / "reviews.tsv", "".join(lines), header=hdr)
    items = ["item_id," + ",".join(corpus.WINE_META) + "\n"]
    for item_id in sorted(meta):
        items.append(",".join([csv_field(item_id)] + [csv_field(meta[item_id][k]) for k in corpus.WINE_META]) + "\n")
    atomic_write(st.out / "items.csv", "".join(items), header=hdr)
    summary("prepare", food_reviews=fstats.kept, wine_reviews=wstats.kept,
            skipped=fstats.skipped + wstats.skipped, vocab=len(vocab))


def _read_reviews(path: Path):
    for line in data_lines(path):
        source, item_id, phrases = line.rstrip("\n").split("\t")
        yield source, item_id, phrases.split()


def run_train_text(st: Stage) -> None:
    vocab_path, reviews_path = st.require("vocab.tsv", "reviews.tsv")
    vocab = corpus.Vocabulary.load(vocab_path)
    surfaces = [ph.surface for ph in vocab.sorted_phrases()]
    index = {s: i for i, s in enumerate(surfaces)}
    sentences = [[index[s] for s in phrases if s in index]
                 for _, _, phrases in _read_reviews(reviews_path)]
    sentences = [s for s in sentences if s]
    emb = embed.train_skipgram(sentences, surfaces, st.cfg.text_train_config(), workers=st.workers)
    emb.save(st.out / "text_vectors.txt", header=st.header())
    summary("train-text", vocab=len(surfaces), sentences=len(sentences),
            objective=f"{emb.objective[-1]:.4f}")


def run_profile(st: Stage) -> None:
    vocab_path, reviews_path, items_path, vec_path = st.require(
        "vocab.tsv", "reviews.tsv", "items.csv", "text_vectors.txt")
    vocab = corpus.Vocabulary.load(vocab_path)
    docs = corpus.build_docs(_read_reviews(reviews_path), vocab)
    emb = embed.EmbeddingMatrix.load(vec_path)
    meta = {r["item_id"]: r for r in csv.DictReader(data_lines(items_path))}
    anchors = profile.load_anchors(st.cfg.paths.anchors)
    wheel = profile.AromaWheel.load(st.cfg.paths.aroma_wheel)
    level = st.cfg.profile.wheel_level
    if level not in profile.LEVELS:
        raise ConfigError(f"profile.wheel_level must be one of {', '.join(profile.LEVELS)}")
    profs, tfidf = profile.build_profiles(docs.values(), emb, anchors, wheel, level, vocab, meta)
    hdr = st.header()
    tfidf.write_csv(st.out / "tfidf.csv", header=hdr)
    profile.write_profiles(profs, st.out / "profiles.csv", st.out / "profile_vectors.txt", header=hdr)
    by_source = Counter(p.source for p in profs)
    summary("profile", foods=by_source[corpus.FOOD], wines=by_source[corpus.WINE],
            empty=sum(p.empty for p in profs))


def run_pair(st: Stage) -> None:
    csv_path, vec_path = st.require("profiles.csv", "profile_vectors.txt")
    profs = profile.read_profiles(csv_path, vec_path)
    rs = rules.RuleSet(st.cfg.rules.tau_high, st.cfg.rules.tau_bitter)
    k = st.cfg.pair.k
    if k < 1:
        raise ConfigError("pair.k must be >= 1")
    table = rules.WineTable(p for p in profs if p.source == corpus.WINE)
    rows, paired_foods = [], 0
    for food in sorted((p for p in profs if p.source == corpus.FOOD and not p.empty),
                       key=lambda p: p.item_id):
        top = table.pair(food, rs, k)
        paired_foods += bool(top)
        rows.extend((food.item_id, w.item_id, v) for w, v in top)
    rules.write_verdicts(rows, st.out / "pairings.csv", header=st.header())
    summary("pair", k=k, wines=len(table), foods_paired=paired_foods, pairings=len(rows))


def _read_pairings(path: Path) -> dict[str, list[tuple[str, float | None]]]:
    out: dict[str, list[tuple[str, float | None]]] = {}
    for r in csv.DictReader(data_lines(path)):
        if r["status"] != rules.PAIRED:
            continue
        sim = float(r["aroma_similarity"]) if r["aroma_similarity"] else None
        out.setdefault(r["food_id"], []).append((r["wine_id"], sim))
    return out


def run_build_graph(st: Stage) -> None:
    p = st.cfg.paths
    st.require_inputs(flavor_nodes=p.flavor_nodes, flavor_edges=p.flavor_edges)
    base = graph.read_flavorgraph(p.flavor_nodes, p.flavor_edges)
    stats = graph.BuildStats()
    if st.cfg.graph.include_wine:
        (pairings_path,) = st.require("pairings.csv")
        g = graph.augment(base, _read_pairings(pairings_path), st.cfg.pair.k, stats)
    else:
        g = base
    graph.write_graph(g, st.out / "graph_nodes.csv", st.out / "graph_edges.csv", header=st.header())
    summary("build-graph", nodes=len(g.nodes), edges=g.edge_count(),
            wine_nodes=stats.wine_nodes, food_wine_edges=stats.pairing_edges,
            skipped_foods=stats.skipped_foods)


def _load_graph(st: Stage) -> graph.HetGraph:
    nodes, edges = st.require("graph_nodes.csv", "graph_edges.csv")
    return graph.read_flavorgraph(nodes, edges)


def _metapaths(cfg: PipelineConfig, g: graph.HetGraph):
    if cfg.paths.metapaths:
        return graph.read_metapaths(cfg.paths.metapaths)
    if graph.WINE in g.node_types():
        return graph.DEFAULT_METAPATHS
    return graph.DEFAULT_METAPATHS[:1]


def run_train_graph(st: Stage) -> None:
    g = _load_graph(st)
    w = st.cfg.walk
    wcfg = graph.WalkConfig(w.walks_per_node, w.walk_length, st.cfg.seed, _metapaths(st.cfg, g),
                            w.weighted)
    walks = list(graph.generate_walks(g, wcfg, workers=st.workers))
    if w.dump_walks:
        graph.write_walks(walks, st.out / "walks.txt", header=st.header())
    types = {n: node.type for n, node in g.nodes.items()}
    emb = graph.train_metapath2vec(walks, st.cfg.graph_train_config(), types, workers=st.workers)
    emb.save(st.out / "node_vectors.txt", header=st.header())
    summary("train-graph", walks=len(walks), nodes=len(emb.vocab),
            epochs=st.cfg.graph.epochs, objective=f"{emb.objective[-1]:.4f}")


def run_evaluate(st: Stage) -> None:
    g = _load_graph(st)
    (vec_path,) = st.require("node_vectors.txt")
    emb = embed.EmbeddingMatrix.load(vec_path)
    e = st.cfg.eval
    score, assignment = evaluation.cluster_nmi(emb, g, seed=st.cfg.seed, restarts=e.restarts,
                                               average=e.nmi_average)
    dataset = e.dataset or ("FlavorGraph + wine" if st.cfg.graph.include_wine else "FlavorGraph")
    hdr = st.header()
    evaluation.append_nmi_report(st.out / "nmi_report.txt", dataset, st.cfg.graph.epochs, score,
                                 header=hdr)
    coords = evaluation.export_projection(emb)
    evaluation.write_projection(coords, g, st.out / "projection.csv", header=hdr)
    summary("evaluate", nmi=f"{score:.4f}", K=assignment.K, items=len(assignment.labels))


def run_query(st: Stage, food: str, k: int | None) -> None:
    g = _load_graph(st)
    (vec_path,) = st.require("node_vectors.txt")
    emb = embed.EmbeddingMatrix.load(vec_path)
    node = g.find_ingredient(food) or (food if food in g.nodes else None)
    if node is None:
        raise KeyError(f"no ingredient named {food!r} in the graph")
    k = k or st.cfg.query.k
    hits = evaluation.query_pairings(node, emb, g, k)
    for rank, (wine, sim) in enumerate(hits, 1):
        print(f"{rank}\t{g.nodes[wine].name}\t{sim:.4f}")
    summary("query", food=node, k=k, returned=len(hits))


STAGES = {
    "prepare": run_prepare,
    "train-text": run_train_text,
    "profile": run_profile,
    "pair": run_pair,
    "build-graph": run_build_graph,
    "train-graph": run_train_graph,
    "evaluate": run_evaluate,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value pipeline config file")
    common.add_argument("--workers", type=int, default=1, help="1 = deterministic mode")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--force", action="store_true", help="accept stale upstream artifacts")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="winegraph", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in STAGE_ORDER:
        sub.add_parser(name, parents=[common])
    q = sub.add_parser("query", parents=[common], help="top-k wines for a food")
    q.add_argument("food")
    q.add_argument("--k", type=int)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        st = Stage(args.command, cfg, args.force, args.workers)
        if args.command == "query":
            run_query(st, args.food, args.k)
        else:
            STAGES[args.command](st)
    except ConfigError as exc:
        print(f"winegraph: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingPrerequisite as exc:
        print(f"winegraph: {exc}", file=sys.stderr)
        return EXIT_PREREQ
    except (ValueError, KeyError, OSError, FloatingPointError) as exc:
        print(f"winegraph: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
