"""Question-aware column and row filtering for table question answering."""

import json

from ._atf import (
    AtfError,
    Table,
    adaptive_k,
    aggregate_scores,
    bm25_scores,
    exact_match,
    f1_score,
    fuse_and_select,
    kmeans,
    load_table,
    normalize_answer,
    softmax,
    table_from_csv,
    tfidf_scores,
)
from ._atf import _run

__all__ = [
    "AtfError",
    "Table",
    "adaptive_k",
    "aggregate_scores",
    "bm25_scores",
    "exact_match",
    "f1_score",
    "filter_table",
    "fuse_and_select",
    "kmeans",
    "load_table",
    "normalize_answer",
    "softmax",
    "table_from_csv",
    "tfidf_scores",
]


def filter_table(table, question, config=None, backend="mock", row_signals=None):
    """Filter `table` for `question`; returns (filtered Table, trace dict).

    `backend` is "mock", "http" or "fixture:PATH".
    """
    config_json = json.dumps(config) if config else ""
    signals_json = json.dumps(row_signals) if row_signals is not None else ""
    filtered, trace = _run(table, question, config_json, backend, signals_json)
    return filtered, json.loads(trace)
