import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import brute_eliminate, brute_pair, brute_pairing
from winegraph.profile import TASTES, TasteProfile
from winegraph.rules import (
    ELIMINATED,
    NO_RULE,
    PAIRED,
    RuleSet,
    WineTable,
    classify_pairing,
    eliminate,
    evaluate,
    pair,
    pairing_label,
    write_verdicts,
)
from winegraph.synthetic import random_profile


def scalars(base=0.5, **kw):
    s = {t: base for t in TASTES}
    s.update(kw)
    return s


def prof(item_id, source="wine", vec=(1.0, 0.0), **kw):
    v = None if vec is None else np.array(vec, dtype=float)
    return TasteProfile(item_id, source, v, scalars(**kw))


def test_elimination_examples():
    assert eliminate(scalars(acid=0.5), scalars(acid=0.6)) == (False, [])
    assert eliminate(scalars(sweet=0.9), scalars(sweet=0.3)) == (True, ["sweetness"])
    same = scalars(0.6, acid=0.7, bitter=0.2)
    assert eliminate(same, same) == (False, [])


def test_elimination_reports_all_fired():
    f = scalars(0.2, weight=0.9, acid=0.9, bitter=0.8)
    w = scalars(0.2, bitter=0.9)
    fired = eliminate(f, w)[1]
    assert fired == ["weight", "acidity", "bitterness", "acid-bitter"]


def test_pairing_examples():
    assert classify_pairing(scalars(0.1, acid=0.8), scalars(0.1, sweet=0.8)) == ["acid pairing"]
    assert classify_pairing(scalars(), scalars()) == []
    assert classify_pairing(scalars(0.1, sweet=0.8, salt=0.8), scalars(0.1, fat=0.8)) == [
        "sweet pairing", "salt pairing"]
    # strictly greater than the threshold
    assert classify_pairing(scalars(0.1, acid=0.75), scalars(0.1, sweet=0.9)) == []


def test_missing_scalar():
    with pytest.raises(ValueError, match="bitter"):
        eliminate({t: 0.5 for t in TASTES if t != "bitter"}, scalars())


def test_ruleset_validation():
    with pytest.raises(ValueError):
        RuleSet(tau_high=1.0)
    with pytest.raises(ValueError):
        RuleSet(tau_bitter=0.0)


def test_random_profiles_match_oracle(rng):
    for _ in range(2000):
        f = {t: float(x) for t, x in zip(TASTES, rng.random(7))}
        w = {t: float(x) for t, x in zip(TASTES, rng.random(7))}
        assert eliminate(f, w) == brute_eliminate(f, w)
        assert classify_pairing(f, w) == brute_pairing(f, w)


def test_custom_threshold_matches_oracle(rng):
    rs = RuleSet(tau_high=0.6, tau_bitter=0.9)
    for _ in range(500):
        f = {t: float(x) for t, x in zip(TASTES, rng.random(7))}
        w = {t: float(x) for t, x in zip(TASTES, rng.random(7))}
        assert eliminate(f, w, rs) == brute_eliminate(f, w, 0.9)
        assert classify_pairing(f, w, rs) == brute_pairing(f, w, 0.6)


def test_acid_grid():
    grid = np.linspace(0, 1, 101)
    for fa in grid:
        for wa in grid:
            f, w = scalars(0.1, acid=fa), scalars(0.1, acid=wa)
            fired = eliminate(f, w)[1]
            assert ("acidity" in fired) == (wa < fa)


unit = st.floats(0, 1)


@given(st.lists(unit, min_size=7, max_size=7), st.lists(unit, min_size=7, max_size=7), unit)
def test_acid_monotone(fv, wv, bump):
    f, w = dict(zip(TASTES, fv)), dict(zip(TASTES, wv))
    before = "acidity" in eliminate(f, w)[1]
    w2 = dict(w, acid=max(w["acid"], bump))
    after = "acidity" in eliminate(f, w2)[1]
    assert not (not before and after)


def test_evaluate_statuses():
    food = prof("f", "food", acid=0.8)
    assert evaluate(food, prof("w1", acid=0.9, sweet=0.9)).status == PAIRED
    assert evaluate(food, prof("w2", acid=0.1)).status == ELIMINATED
    v = evaluate(food, prof("w3", vec=(0.0, 2.0), acid=0.8))
    assert v.status == NO_RULE and v.aroma_similarity == pytest.approx(0.0)


def test_pair_singleton_and_all_eliminated():
    food = prof("f", "food", acid=0.8)
    good = prof("w1", acid=0.85, sweet=0.8)
    out = pair(food, [good])
    assert [w.item_id for w, _ in out] == ["w1"]
    assert out[0][1].fired_pairing == ["acid pairing"]
    assert pair(food, [prof("w2", acid=0.1), prof("w3", sweet=0.1)]) == []


def test_pair_errors():
    with pytest.raises(ValueError):
        pair(prof("f", "food", vec=None), [])
    with pytest.raises(ValueError):
        pair(prof("f", "food"), [], k=0)


def test_pair_tie_break_by_id():
    food = prof("f", "food", acid=0.8)
    wines = [prof(i, acid=0.9, fat=0.9) for i in ("w_c", "w_a", "w_b")]
    assert [w.item_id for w, _ in pair(food, wines, k=2)] == ["w_a", "w_b"]


def test_five_wine_oracle():
    food = prof("f", "food", vec=(1.0, 0.0), acid=0.8, fat=0.2)
    wines = [
        prof("w1", vec=(1.0, 1.0), acid=0.9, sweet=0.9),    # paired, cos .707
        prof("w2", vec=(1.0, 0.1), acid=0.9, salt=0.8),     # paired, cos .995
        prof("w3", vec=(1.0, 0.0), acid=0.5, sweet=0.9),    # eliminated by acidity
        prof("w4", vec=(0.0, 1.0), acid=0.9, fat=0.8),      # paired, cos 0
        prof("w5", vec=(1.0, 0.0), acid=0.9),               # no rule fires
    ]
    got = [w.item_id for w, _ in pair(food, wines, k=3)]
    assert got == ["w2", "w1", "w4"] == brute_pair(food, wines)


def test_wine_table_matches_pair(rng):
    rs = RuleSet(tau_high=0.5, tau_bitter=0.8)
    wines = [random_profile(rng, f"w{i:03d}", "wine") for i in range(200)]
    wines.append(TasteProfile("empty", "wine", None, scalars(0.9)))
    table = WineTable(wines)
    for i in range(30):
        food = random_profile(rng, f"f{i}", "food")
        a = [(w.item_id, v.fired_pairing) for w, v in pair(food, wines, rs, k=5)]
        b = [(w.item_id, v.fired_pairing) for w, v in table.pair(food, rs, k=5)]
        assert a == b


def test_returned_wines_satisfy_rules(rng):
    wines = [random_profile(rng, f"w{i}", "wine") for i in range(300)]
    for i in range(20):
        food = random_profile(rng, f"f{i}", "food")
        for w, v in pair(food, wines, k=10):
            assert not brute_eliminate(food.scalars, w.scalars)[0]
            assert brute_pairing(food.scalars, w.scalars) == v.fired_pairing != []


def test_pairing_label():
    assert pairing_label(prof("f", acid=0.9), prof("w", acid=0.8)) == "congruent"
    assert pairing_label(prof("f", acid=0.9), prof("w", sweet=0.8)) == "contrasting"


def test_write_verdicts(tmp_path):
    food = prof("f, 1", "food", acid=0.8)
    rows = [("f, 1", "w1", evaluate(food, prof("w1", acid=0.9, sweet=0.9, fat=0.9))),
            ("f, 1", "w2", evaluate(food, prof("w2", acid=0.1)))]
    path = tmp_path / "v.csv"
    write_verdicts(rows, path, header="h")
    lines = path.read_text().splitlines()
    assert lines[0] == "# h"
    assert lines[1] == "food_id,wine_id,status,fired_rules,aroma_similarity"
    assert lines[2] == '"f, 1",w1,paired,acid pairing,1'
    assert lines[3] == '"f, 1",w2,eliminated,acidity,'
