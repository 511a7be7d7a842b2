"""Event-driven simulation of one return-to-zero cycle and latency statistics."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .netlist import DrNetlist
from .values import (GATE_FUNCS, GATE_TABLES, ILLEGAL, SPACER, SWAP, DrValue,
                     SimulationFault, to_code)

UNIT_DELAYS = {"AND2": 1.0, "OR2": 1.0, "HA": 1.0, "FA": 1.0, "SPINV": 1.0, "COMP1": 1.0, "MERGE": 1.0}


def delay_model(table=None):
    delays = dict(UNIT_DELAYS)
    if table:
        unknown = set(table) - set(delays)
        if unknown:
            raise ValueError(f"unknown gate kinds in delay table: {sorted(unknown)}")
        delays.update({k: float(v) for k, v in table.items()})
    if any(v <= 0 for v in delays.values()):
        raise ValueError("gate delays must be positive")
    return delays


@dataclass
class SimResult:
    latency_s2c: float
    latency_c2s: float
    output_values: list[DrValue]
    events_fired: int
    activated: set = field(default_factory=set)  # gates whose outputs left spacer

    def output_bits(self):
        return [v.bit for v in self.output_values]


class _Compiled:
    """Flattened netlist for the inner loop."""

    def __init__(self, netlist: DrNetlist, delays):
        self.netlist = netlist
        self.fanout = netlist.fanout()
        self.gates = []
        for g in netlist.gates:
            refs = tuple((r, False) if r >= 0 else (~r, True) for r in g.inputs)
            table = GATE_TABLES.get(g.kind)
            fn = GATE_FUNCS.get(g.kind)
            self.gates.append((refs, g.outputs, delays[g.kind], table, fn))
        netlist.topological_gates()  # rejects loops


_CACHE: dict = {}


def _compiled(netlist, delays):
    key = (id(netlist), len(netlist.gates), tuple(sorted(delays.items())))
    hit = _CACHE.get(key)
    if hit is None or hit.netlist is not netlist:
        if len(_CACHE) > 64:
            _CACHE.clear()
        hit = _CACHE[key] = _Compiled(netlist, delays)
    return hit


def _run(comp, values, projected, events, budget, outputs, stamp, activated, driver):
    heap = list(events)
    heapq.heapify(heap)
    seq = len(heap)
    fired = 0
    t_last = 0.0
    while heap:
        t, _, net, code = heapq.heappop(heap)
        if values[net] == code:
            continue
        if code == ILLEGAL:
            raise SimulationFault(f"net {comp.netlist.nets[net]} reached (1,1) at t={t}")
        values[net] = code
        fired += 1
        t_last = t
        if fired > budget:
            raise SimulationFault(f"no quiescence within {budget} events")
        if net in outputs:
            stamp[net] = t
        if code != SPACER and net in driver:
            activated.add(driver[net])
        for gi in comp.fanout[net]:
            refs, outs, delay, table, fn = comp.gates[gi]
            codes = tuple(SWAP[values[n]] if inv else values[n] for n, inv in refs)
            if ILLEGAL in codes:
                raise SimulationFault("gate input in the illegal (1,1) state")
            res = table[codes] if table is not None else fn(codes)
            for o, v in zip(outs, res):
                if projected[o] != v:
                    projected[o] = v
                    seq += 1
                    heapq.heappush(heap, (t + delay, seq, o, v))
    return fired, t_last


def simulate_cycle(netlist: DrNetlist, codeword, delays=None, max_events=None) -> SimResult:
    """Spacer -> codeword -> spacer on a netlist starting from all-spacer.

    ``latency_s2c`` is the time from applying the codeword until every
    primary output holds a valid value; ``latency_c2s`` is the time from
    withdrawing it until every primary output is back at spacer.
    """
    delays = delay_model(delays)
    comp = _compiled(netlist, delays)
    codes = [to_code(v) for v in codeword]
    if len(codes) != len(netlist.primary_inputs):
        raise ValueError(f"codeword has {len(codes)} values, netlist has {len(netlist.primary_inputs)} inputs")
    if any(c not in (1, 2) for c in codes):
        raise SimulationFault("codeword must be all valid (no spacer, no (1,1))")
    n = len(netlist.nets)
    budget = max_events or 8 * (n + 1)
    values = [SPACER] * n
    projected = [SPACER] * n
    outputs = set(netlist.primary_outputs)
    stamp = {}
    activated = set()
    events = []
    for i, (net, c) in enumerate(zip(netlist.primary_inputs, codes)):
        projected[net] = c
        events.append((0.0, i, net, c))
    fired1, t_quiet = _run(comp, values, projected, events, budget, outputs, stamp, activated, netlist.driver)
    out_vals = [values[o] for o in netlist.primary_outputs]
    if any(v == SPACER for v in out_vals):
        raise SimulationFault("an output never left spacer")
    s2c = max(stamp[o] for o in netlist.primary_outputs)

    stamp2 = {}
    events = []
    for i, net in enumerate(netlist.primary_inputs):
        projected[net] = SPACER
        events.append((t_quiet, i, net, SPACER))
    fired2, _ = _run(comp, values, projected, events, budget, outputs, stamp2, set(), netlist.driver)
    if any(v != SPACER for v in values):
        raise SimulationFault("circuit did not return to spacer")
    c2s = max((stamp2.get(o, t_quiet) for o in netlist.primary_outputs), default=t_quiet) - t_quiet
    return SimResult(s2c, c2s, [DrValue.from_code(v) for v in out_vals], fired1 + fired2, activated)


def all_codewords(num_inputs):
    return product((0, 1), repeat=num_inputs)


def worst_case_latency(netlist: DrNetlist, delays=None, exhaustive_limit=12) -> float:
    """Slowest spacer->codeword latency.

    Uses the builder's known worst-case codeword when there is one, an
    exhaustive sweep for small input counts, and otherwise the structural
    critical path (an upper bound).
    """
    if netlist.worst_case_input is not None:
        return simulate_cycle(netlist, netlist.worst_case_input, delays).latency_s2c
    if len(netlist.primary_inputs) <= exhaustive_limit:
        return max(simulate_cycle(netlist, w, delays).latency_s2c
                   for w in all_codewords(len(netlist.primary_inputs)))
    return netlist.critical_path(delay_model(delays))


@dataclass
class LatencyStats:
    values: np.ndarray  # per-trial latency, normalised if ``normalized``
    bin_edges: np.ndarray
    counts: np.ndarray
    mean: float
    min: float
    max: float
    worst_case: float | None = None
    normalized: bool = False

    @classmethod
    def from_values(cls, values, bins=None, worst_case=None, normalized=False):
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            raise ValueError("no latency samples")
        if bins is None:
            bins = np.linspace(0.0, 1.0, 21) if normalized else _integer_bins(values)
        counts, edges = np.histogram(values, bins=bins)
        return cls(values, edges, counts, float(values.mean()), float(values.min()),
                   float(values.max()), worst_case, normalized)

    def to_dict(self):
        return {
            "mean": self.mean,
            "min": self.min,
            "max": self.max,
            "worst_case": self.worst_case,
            "normalized": self.normalized,
            "n": int(self.values.size),
        }

    def csv_rows(self):
        return [(float(lo), float(hi), int(c))
                for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts)]


def _integer_bins(values):
    lo, hi = math.floor(values.min()), math.ceil(values.max())
    return np.arange(lo - 0.5, hi + 1.5, 1.0)


def latency_distribution(netlist, sampler, trials, normalize=True, delays=None, seed=0,
                         worst_case=None, bins=None, keep_results=False):
    """Latency histogram over ``trials`` codewords drawn by ``sampler(rng)``.

    Returns the stats and, with ``keep_results``, the list of (codeword,
    SimResult) pairs.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    lat, kept = [], []
    for _ in range(trials):
        word = sampler(rng)
        res = simulate_cycle(netlist, word, delays)
        lat.append(res.latency_s2c)
        if keep_results:
            kept.append((word, res))
    wc = None
    if normalize:
        wc = worst_case if worst_case is not None else worst_case_latency(netlist, delays)
        lat = [v / wc for v in lat]
    stats = LatencyStats.from_values(lat, bins, wc, normalize)
    return (stats, kept) if keep_results else stats


def uniform_sampler(num_inputs):
    return lambda rng: rng.integers(0, 2, num_inputs).tolist()
