import numpy as np
import pytest
from hypothesis import given, strategies as st

from winegraph.config import ConfigError, PipelineConfig, load_config, parse_config, stage_hash
from winegraph.io import atomic_write, data_lines, quote_key, read_header, read_vectors, unquote_key, \
    write_vectors


def test_parse_config_types_and_paths(tmp_path):
    cfg = parse_config("seed = 3\ntext.dim = 16\ngraph.include_wine = no\n"
                       "rules.tau_high = 0.6\npaths.anchors = a.txt\n# comment\n", tmp_path)
    assert cfg.seed == 3 and cfg.text.dim == 16 and cfg.graph.include_wine is False
    assert cfg.rules.tau_high == 0.6
    assert cfg.paths.anchors == str(tmp_path / "a.txt")
    assert cfg.output_dir == str(tmp_path / "out")
    assert cfg.text_train_config().dim == 16
    assert cfg.graph_train_config().subsample_t == 0.0


@pytest.mark.parametrize("text", ["text.dims = 3", "nosection.x = 1", "text.dim = abc",
                                  "graph.include_wine = maybe", "just words", "text = 3"])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_config_missing(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")
    assert isinstance(load_config(None), PipelineConfig)


def test_stage_hash_scopes():
    a, b = PipelineConfig(), PipelineConfig()
    b.rules.tau_high = 0.6
    assert stage_hash(a, "train-text") == stage_hash(b, "train-text")
    assert stage_hash(a, "pair") != stage_hash(b, "pair")
    assert stage_hash(a, "evaluate") != stage_hash(b, "evaluate")
    b.walk.dump_walks = True
    b.rules.tau_high = 0.75
    assert stage_hash(a, "evaluate") == stage_hash(b, "evaluate")
    assert len(stage_hash(a, "prepare")) == 16


@given(st.text())
def test_key_quoting_roundtrip(key):
    q = quote_key(key)
    assert not any(c in q for c in " \t\n\r")
    assert unquote_key(q) == key


def test_atomic_write_and_header(tmp_path):
    path = tmp_path / "sub" / "f.txt"
    atomic_write(path, "a\nb\n", header="config_hash=x stage=y")
    assert read_header(path) == "config_hash=x stage=y"
    assert list(data_lines(path)) == ["a\n", "b\n"]
    assert not [p for p in path.parent.iterdir() if p.name != "f.txt"]


def test_vectors_roundtrip(tmp_path):
    keys = ["a b", "100%", "x"]
    vecs = np.arange(6, dtype=float).reshape(3, 2) / 7
    write_vectors(tmp_path / "v.txt", keys, vecs, header="h")
    k2, v2 = read_vectors(tmp_path / "v.txt")
    assert k2 == keys
    np.testing.assert_allclose(v2, vecs, rtol=1e-6)
