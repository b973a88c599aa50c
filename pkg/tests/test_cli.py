import subprocess
import sys

import pytest

from winegraph.cli import main
from winegraph.io import read_header
from winegraph.synthetic import flavor_graph, review_datasets

CONFIG = """\
output_dir = out
seed = 7
paths.food_reviews = data/food.csv
paths.wine_reviews = data/wine.csv
paths.flavor_nodes = data/nodes.csv
paths.flavor_edges = data/edges.csv
corpus.min_count = 3
corpus.score_threshold = 5
text.dim = 24
text.epochs = 3
text.table_size = 100000
graph.dim = 16
graph.epochs = 2
graph.table_size = 100000
walk.walks_per_node = 4
walk.walk_length = 15
"""
PIPELINE = ["prepare", "train-text", "profile", "pair", "build-graph", "train-graph", "evaluate"]


@pytest.fixture
def workdir(tmp_path):
    review_datasets(tmp_path / "data")
    flavor_graph(tmp_path / "data")
    (tmp_path / "run.cfg").write_text(CONFIG)
    return tmp_path


def run(workdir, *args):
    return main([*args, "--config", str(workdir / "run.cfg")])


def run_all(workdir, capsys):
    for stage in PIPELINE:
        assert run(workdir, stage) == 0, capsys.readouterr().err
    return capsys.readouterr().out


def outputs(workdir):
    return {p.name: p.read_bytes() for p in sorted((workdir / "out").iterdir())}


def test_full_pipeline(workdir, capsys):
    out = run_all(workdir, capsys)
    assert out.count("status=ok") == len(PIPELINE)
    files = outputs(workdir)
    for name in ("vocab.tsv", "text_vectors.txt", "profiles.csv", "pairings.csv",
                 "graph_nodes.csv", "node_vectors.txt", "nmi_report.txt", "projection.csv"):
        assert name in files
        assert read_header(workdir / "out" / name).startswith("config_hash=")

    pairs = {}
    for line in files["pairings.csv"].decode().splitlines()[2:]:
        food = line.split(",")[0]
        pairs[food] = pairs.get(food, 0) + 1
    assert pairs and max(pairs.values()) <= 3

    assert run(workdir, "query", "burrito") == 0
    printed = capsys.readouterr().out.splitlines()
    ranked = [l for l in printed if l[:1].isdigit()]
    assert len(ranked) == 3 and "returned=3" in printed[-1]


def test_deterministic_rerun(workdir, capsys):
    run_all(workdir, capsys)
    first = outputs(workdir)
    run_all(workdir, capsys)
    assert outputs(workdir) == first


def test_missing_prerequisite(workdir, capsys):
    for stage in PIPELINE[:5]:
        assert run(workdir, stage) == 0
    capsys.readouterr()
    assert run(workdir, "evaluate") == 2
    err = capsys.readouterr().err
    assert "node_vectors.txt" in err and "train-graph" in err


def test_stale_artifact_refused(workdir, capsys):
    assert run(workdir, "prepare") == 0
    cfg = workdir / "run.cfg"
    cfg.write_text(CONFIG.replace("corpus.min_count = 3", "corpus.min_count = 4"))
    assert run(workdir, "train-text") == 2
    assert "different configuration" in capsys.readouterr().err
    assert run(workdir, "train-text", "--force") == 0


def test_downstream_keys_do_not_invalidate(workdir):
    assert run(workdir, "prepare") == 0
    (workdir / "run.cfg").write_text(CONFIG + "rules.tau_high = 0.6\n")
    assert run(workdir, "train-text") == 0


def test_exit_codes(workdir, capsys):
    (workdir / "bad.cfg").write_text("corpus.nonsense = 3\n")
    assert main(["prepare", "--config", str(workdir / "bad.cfg")]) == 1
    assert main(["prepare", "--config", str(workdir / "missing.cfg")]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    (workdir / "data" / "wine.csv").write_text("wrong,header\n1,2\n")
    assert run(workdir, "prepare") == 3
    capsys.readouterr()


def test_query_unknown_food(workdir, capsys):
    run_all(workdir, capsys)
    assert run(workdir, "query", "unobtainium") == 3


def test_wine_free_graph(workdir, capsys):
    (workdir / "run.cfg").write_text(CONFIG + "graph.include_wine = false\n")
    assert run(workdir, "build-graph") == 0
    assert run(workdir, "train-graph") == 0
    assert run(workdir, "evaluate") == 0
    report = (workdir / "out" / "nmi_report.txt").read_text()
    assert "FlavorGraph," in report


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "winegraph.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "train-graph" in res.stdout
