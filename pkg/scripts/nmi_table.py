"""Category-clustering NMI of the base graph vs the wine-augmented graph,
over several training lengths and seeds.

Without --data-dir the run uses the small synthetic datasets, which is only
a smoke-scale check of the experiment plumbing; numbers from it say nothing
about real data.  With --data-dir pointing at the public review and
FlavorGraph files, the desk defaults can be dropped via --full.
"""

import argparse
import os
import statistics
from pathlib import Path

from winegraph.cli import main as cli
from winegraph.synthetic import flavor_graph, review_datasets

DESK = """\
corpus.min_count = 3
corpus.score_threshold = 5
text.dim = 32
text.table_size = 200000
graph.dim = 32
graph.table_size = 200000
walk.walks_per_node = 10
walk.walk_length = 30
"""


def data_paths(args, work: Path) -> str:
    if args.data_dir:
        d = Path(args.data_dir)
        lines = [f"paths.food_reviews = {d / 'Reviews.csv'}",
                 f"paths.wine_reviews = {d / 'winemag-data-130k-v2.csv'}",
                 f"paths.flavor_nodes = {d / 'nodes_191120.csv'}",
                 f"paths.flavor_edges = {d / 'edges_191120.csv'}"]
        if (d / "food_item_map.csv").exists():
            lines.append(f"paths.food_item_map = {d / 'food_item_map.csv'}")
        return "\n".join(lines) + "\n"
    food, wine = review_datasets(work / "data")
    nodes, edges = flavor_graph(work / "data")
    return (f"paths.food_reviews = {food}\npaths.wine_reviews = {wine}\n"
            f"paths.flavor_nodes = {nodes}\npaths.flavor_edges = {edges}\n")


def run(stage, cfg_path, workers):
    code = cli([stage, "--config", str(cfg_path), "--workers", str(workers)])
    if code != 0:
        raise SystemExit(f"stage {stage} failed with exit code {code}")


def nmi_of(report: Path, dataset: str, epochs: int) -> float:
    for line in report.read_text().splitlines():
        if line.startswith(f"{dataset},{epochs},"):
            return float(line.rsplit(",", 1)[1])
    raise KeyError((dataset, epochs))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--work", default="runs/nmi_table")
    ap.add_argument("--data-dir")
    ap.add_argument("--full", action="store_true", help="use pipeline defaults instead of desk sizes")
    ap.add_argument("--epochs", type=int, nargs="+", default=[10, 20])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args()

    work = Path(args.work).resolve()
    work.mkdir(parents=True, exist_ok=True)
    paths = data_paths(args, work)
    results = {}
    for seed in range(args.seeds):
        out = work / f"seed{seed}"
        for include_wine in (False, True):
            for epochs in args.epochs:
                cfg = work / f"seed{seed}_{int(include_wine)}_{epochs}.cfg"
                body = paths + f"output_dir = {out}\nseed = {seed}\n"
                body += f"graph.include_wine = {include_wine}\ngraph.epochs = {epochs}\n"
                cfg.write_text(body + ("" if args.full else DESK))
                stages = ["build-graph", "train-graph", "evaluate"]
                if include_wine and not (out / "pairings.csv").exists():
                    stages = ["prepare", "train-text", "profile", "pair"] + stages
                for stage in stages:
                    run(stage, cfg, args.workers)
                name = "FlavorGraph + wine" if include_wine else "FlavorGraph"
                results.setdefault((name, epochs), []).append(nmi_of(out / "nmi_report.txt", name, epochs))

    print(f"{'dataset':<20}{'epochs':>8}{'NMI mean':>10}{'sd':>8}")
    for (name, epochs), vals in sorted(results.items()):
        sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
        print(f"{name:<20}{epochs:>8}{statistics.mean(vals):>10.4f}{sd:>8.4f}")


if __name__ == "__main__":
    main()
