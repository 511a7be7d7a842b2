"""End-to-end inference latency of a trained machine on a dataset."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .netlist import (build_clause_netlist, build_comparator_netlist, build_datapath_netlist,
                      build_popcount_netlist, clause_codeword, comparator_codeword,
                      datapath_codeword)
from .sim import LatencyStats, delay_model, simulate_cycle, worst_case_latency

COMPONENTS = ("clause", "popcount", "comparator", "end_to_end")


@dataclass
class DatapathLatency:
    """Per-sample latencies (normalised) for each component and end to end."""

    per_sample: dict[str, np.ndarray]
    predictions: np.ndarray
    worst_case: dict[str, float]
    stats: dict[str, LatencyStats] = field(default_factory=dict)

    def summary(self):
        return {k: self.stats[k].to_dict() for k in COMPONENTS}


@lru_cache(maxsize=16)
def _netlists(num_features, num_clauses, negative, combiner, cells):
    half = num_clauses // 2
    dp = build_datapath_netlist(num_features, num_clauses, negative, combiner, cells)
    clause = build_clause_netlist(num_features, combiner, empty_guard=True)
    pop = build_popcount_netlist(half, cells)
    comp = build_comparator_netlist(len(pop.primary_outputs))
    return dp, clause, pop, comp


def _bits(v, width):
    return [(v >> i) & 1 for i in range(width)]


def datapath_latency(exclude, negative, features, delays=None, combiner="chain", cells="gates",
                     bins=None) -> DatapathLatency:
    """Simulate the inference datapath once per feature vector.

    ``exclude`` is a ``(num_clauses, 2 * num_features)`` boolean array of
    exclude bits (a machine snapshot) and ``negative`` the clause polarities.
    Components are also simulated standalone on the operands they see for
    each sample: the slowest clause, the positive-vote popcount and the
    comparator. Each component is normalised by its own worst case; the end to
    end path by its structural critical path.
    """
    exclude = np.asarray(exclude, dtype=bool)
    negative = tuple(bool(b) for b in negative)
    X = np.asarray(features, dtype=np.uint8)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("need a non-empty (samples, features) array")
    num_clauses, lits = exclude.shape
    num_features = X.shape[1]
    if lits != 2 * num_features or len(negative) != num_clauses:
        raise ValueError("snapshot shape does not match the features or polarities")
    dm = delay_model(delays)
    dp, clause_nl, pop_nl, comp_nl = _netlists(num_features, num_clauses, negative, combiner, cells)
    width = len(comp_nl.primary_inputs) // 2
    worst = {
        "clause": worst_case_latency(clause_nl, dm),
        "popcount": pop_nl.critical_path(dm),
        "comparator": worst_case_latency(comp_nl, dm),
        "end_to_end": dp.critical_path(dm),
    }
    neg = np.array(negative)
    include = ~exclude
    out = {k: [] for k in COMPONENTS}
    preds = []
    for f in X:
        res = simulate_cycle(dp, datapath_codeword(f, exclude), dm)
        preds.append(res.output_bits()[0])
        out["end_to_end"].append(res.latency_s2c)

        c_lat, c_out = [], []
        for row in include:
            r = simulate_cycle(clause_nl, clause_codeword(f, row[:num_features], row[num_features:]), dm)
            c_lat.append(r.latency_s2c)
            c_out.append(r.output_bits()[0])
        out["clause"].append(max(c_lat))
        c_out = np.array(c_out)
        out["popcount"].append(simulate_cycle(pop_nl, c_out[~neg].tolist(), dm).latency_s2c)
        a, b = int(c_out[~neg].sum()), int(c_out[neg].sum())
        out["comparator"].append(simulate_cycle(comp_nl, comparator_codeword(a, b, width), dm).latency_s2c)
    per_sample = {k: np.asarray(v) / worst[k] for k, v in out.items()}
    stats = {k: LatencyStats.from_values(v, bins, worst[k], normalized=True)
             for k, v in per_sample.items()}
    return DatapathLatency(per_sample, np.array(preds, dtype=bool), worst, stats)
