import json
import math
import os
from pathlib import Path

import pytest

import atf

DATA = Path(os.environ.get("ATF_TEST_DATA_DIR", Path(__file__).resolve().parents[2] / "tests" / "data"))


def test_normalization_examples():
    assert atf.normalize_answer("11,327") == "11327"
    assert atf.normalize_answer("11327.0") == "11327"
    assert atf.exact_match("48,730", ["48730.0"]) == 1
    assert atf.f1_score("george washington", ["washington"]) == pytest.approx(2 / 3)


def test_aggregation():
    mu, sigma, final = atf.aggregate_scores([1.0, 1.0, 0.0])
    assert mu == pytest.approx(2 / 3)
    assert sigma == pytest.approx(math.sqrt(2) / 3)
    assert final == pytest.approx(mu / (1 + sigma))
    with pytest.raises(atf.AtfError):
        atf.aggregate_scores([])


def test_kmeans_and_fusion():
    model = atf.kmeans([(0, 0), (0.01, 0), (1, 1), (1, 0.99), (0, 1), (0.02, 1)])
    assert model["assignments"] == [0, 0, 1, 1, 2, 2]
    assert atf.adaptive_k(44) == 18
    assert sum(atf.softmax([1.0, 2.0, 3.0])) == pytest.approx(1.0)
    selected, fused = atf.fuse_and_select([0.1, 0.9, 0.2], [0, 1, 0], [0.3, 0.8, 0.1])
    assert selected == [1, 0]
    assert len(fused) == 3
    scores = atf.tfidf_scores("red apple", ["red apple", "green pear"])
    assert scores[0] == pytest.approx(1.0)
    assert atf.bm25_scores("pear", ["red apple", "green pear"])[1] > 0


def test_mock_pipeline():
    table = atf.table_from_csv("Player,Country,Score\nHoch,United States,278\nWatson,United States,280\n")
    filtered, trace = atf.filter_table(table, "Who scored 278?")
    assert filtered.n_rows == 1
    assert set(filtered.headers) <= set(table.headers)
    assert trace["stats"]["raw_cells"] == 6
    with pytest.raises(atf.AtfError):
        atf.filter_table(table, "Who?", config={"not_a_field": 1})


def test_fixture_replay():
    case = json.loads((DATA / "cases" / "openwiki_777.case.json").read_text())
    table = atf.Table(case["table"]["headers"], case["table"]["rows"])
    filtered, trace = atf.filter_table(
        table,
        case["question"],
        backend="fixture:" + str(DATA / "cases" / "openwiki_777.fixture.json"),
        row_signals=case["row_signals"],
    )
    assert set(filtered.headers) == set(case["expected"]["columns"])
    assert trace["selected_rows"] == case["expected"]["rows"]
