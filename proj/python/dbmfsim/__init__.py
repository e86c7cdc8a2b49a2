"""Python bindings for the dbmf MANET simulator."""

import json as _json

from ._dbmf import (
    InvalidConfig,
    combine_link_life,
    combine_tm,
    csv_header,
    distance_from_rss,
    drop_ratio,
    label_of,
    link_prediction,
    partition,
    rss_at,
    rule_tables,
    run_matrix,
    select_link_disjoint,
    squash,
    validate,
)
from ._dbmf import run as _run


def run(scenario, trace=False):
    """Run a scenario given as a dict or JSON text; returns the metrics dict."""
    if not isinstance(scenario, str):
        scenario = _json.dumps(scenario)
    return _run(scenario, trace)


__all__ = [
    "InvalidConfig",
    "combine_link_life",
    "combine_tm",
    "csv_header",
    "distance_from_rss",
    "drop_ratio",
    "label_of",
    "link_prediction",
    "partition",
    "rss_at",
    "rule_tables",
    "run",
    "run_matrix",
    "select_link_disjoint",
    "squash",
    "validate",
]
