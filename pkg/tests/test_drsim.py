from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selftimed_tm.drsim.datapath import datapath_latency
from selftimed_tm.drsim.netlist import (DrNetlist, build_clause_netlist, build_comparator_netlist,
                                        build_datapath_netlist, build_popcount_netlist,
                                        clause_codeword, comparator_codeword, datapath_codeword)
from selftimed_tm.drsim.sim import (LatencyStats, delay_model, latency_distribution,
                                    simulate_cycle, uniform_sampler, worst_case_latency)
from selftimed_tm.drsim.values import (DR_ONE, DR_SPACER, DR_ZERO, DrValue, SimulationFault,
                                       dr_gate_eval)
from selftimed_tm.tm import TmConfig, TsetlinMachine


def test_gate_examples():
    assert dr_gate_eval("AND2", [DR_ONE, DR_ZERO]) == (DR_ZERO,)
    assert dr_gate_eval("AND2", [DR_SPACER, DR_ZERO]) == (DR_ZERO,)
    assert dr_gate_eval("AND2", [DR_SPACER, DR_ONE]) == (DR_SPACER,)
    assert dr_gate_eval("OR2", [DR_SPACER, DR_ONE]) == (DR_ONE,)
    assert dr_gate_eval("SPINV", [DR_ONE]) == (DR_ZERO,)
    assert dr_gate_eval("FA", [1, 1, DR_SPACER]) == (DR_SPACER, DR_ONE)


def test_illegal_input_faults():
    with pytest.raises(SimulationFault):
        dr_gate_eval("AND2", [DrValue(True, True), DR_ONE])


def test_values():
    assert DR_SPACER.is_spacer and not DR_SPACER.is_valid
    assert DrValue.of(1) == DR_ONE and DR_ZERO.bit == 0
    with pytest.raises(ValueError):
        DR_SPACER.bit


def single_and():
    nl = DrNetlist()
    a, b = nl.add_input("a"), nl.add_input("b")
    nl.primary_outputs = [nl.gate("AND2", [a, b])]
    return nl


def test_single_gate_latency():
    res = simulate_cycle(single_and(), [1, 1])
    assert res.latency_s2c == 1 and res.latency_c2s == 1
    assert res.output_bits() == [1]


def test_simulate_rejects_bad_codewords():
    with pytest.raises(ValueError):
        simulate_cycle(single_and(), [1])
    with pytest.raises(SimulationFault):
        simulate_cycle(single_and(), [DR_SPACER, DR_ONE])


def test_delay_model_validation():
    assert delay_model({"FA": 2})["FA"] == 2.0
    with pytest.raises(ValueError):
        delay_model({"NAND": 1})
    with pytest.raises(ValueError):
        delay_model({"AND2": 0})


def test_delay_table_scales_latency():
    res = simulate_cycle(single_and(), [1, 1], {"AND2": 2.5})
    assert res.latency_s2c == 2.5


def clause_oracle(f, e0, e1):
    return int(all((a or x) and (b or not x) for x, a, b in zip(f, e0, e1)))


@pytest.mark.parametrize("combiner", ["chain", "tree"])
@pytest.mark.parametrize("features", [2, 3, 4])
def test_clause_exhaustive(features, combiner):
    nl = build_clause_netlist(features, combiner)
    count = 0
    for word in product((0, 1), repeat=3 * features):
        f, e0, e1 = word[:features], word[features:2 * features], word[2 * features:]
        res = simulate_cycle(nl, word)
        assert res.output_bits() == [clause_oracle(f, e0, e1)], word
        count += 1
    assert count == 8 ** features


def test_clause_examples():
    nl = build_clause_netlist(3)
    for f in product((0, 1), repeat=3):
        assert simulate_cycle(nl, list(f) + [1] * 6).output_bits() == [1]
    # one positive literal included and unsatisfied
    word = clause_codeword([0, 1, 1], [True, False, False], [False] * 3)
    assert simulate_cycle(nl, word).output_bits() == [0]


def test_clause_early_zero_is_faster():
    nl = build_clause_netlist(8)
    worst = worst_case_latency(nl)
    early = clause_codeword([0] + [1] * 7, [True] * 8, [False] * 8)
    assert simulate_cycle(nl, early).latency_s2c < worst
    assert simulate_cycle(nl, nl.worst_case_input).output_bits() == [1]


def test_clause_empty_guard():
    nl = build_clause_netlist(2, empty_guard=True)
    assert simulate_cycle(nl, [1, 0, 1, 1, 1, 1]).output_bits() == [0]
    assert simulate_cycle(nl, [1, 0, 0, 1, 1, 1]).output_bits() == [1]


@pytest.mark.parametrize("cells", ["gates", "macro"])
def test_popcount_all_512(cells):
    nl = build_popcount_netlist(9, cells)
    assert len(nl.primary_outputs) == 4
    for word in product((0, 1), repeat=9):
        bits = simulate_cycle(nl, word).output_bits()
        assert sum(b << i for i, b in enumerate(bits)) == sum(word)


@pytest.mark.parametrize("n", [2, 3, 5, 10])
def test_popcount_small_sizes(n):
    nl = build_popcount_netlist(n)
    for word in product((0, 1), repeat=n):
        bits = simulate_cycle(nl, word).output_bits()
        assert sum(b << i for i, b in enumerate(bits)) == sum(word)


def test_popcount_examples():
    nl = build_popcount_netlist(9)
    assert simulate_cycle(nl, [1] * 9).output_bits()[::-1] == [1, 0, 0, 1]
    lat = {w: simulate_cycle(nl, w).latency_s2c for w in product((0, 1), repeat=9)}
    assert lat[(0,) * 9] == min(lat.values())
    assert len(set(lat.values())) > 1
    with pytest.raises(ValueError):
        build_popcount_netlist(1)
    with pytest.raises(ValueError):
        build_popcount_netlist(4, "lut")


def test_comparator_width4_exhaustive():
    nl = build_comparator_netlist(4)
    for a, b in product(range(16), repeat=2):
        res = simulate_cycle(nl, comparator_codeword(a, b, 4))
        assert res.output_bits() == [int(a >= b)]


def test_comparator_width8_random():
    nl = build_comparator_netlist(8)
    rng = np.random.default_rng(0)
    for a, b in rng.integers(0, 256, (10_000, 2)):
        assert simulate_cycle(nl, comparator_codeword(int(a), int(b), 8)).output_bits() == [int(a >= b)]


def comp1_cells(nl):
    return [i for i, g in enumerate(nl.gates) if g.kind == "COMP1"]


def test_comparator_stage_examples():
    nl = build_comparator_netlist(4)
    cells = comp1_cells(nl)
    res = simulate_cycle(nl, comparator_codeword(0b1000, 0b0111, 4))
    assert res.output_bits() == [1] and len(res.activated & set(cells)) == 1
    res = simulate_cycle(nl, comparator_codeword(5, 5, 4))
    assert res.output_bits() == [1] and len(res.activated & set(cells)) == 4
    assert res.latency_s2c == worst_case_latency(nl)


def test_comparator_latency_ratio():
    nl = build_comparator_netlist(8)
    fast = simulate_cycle(nl, comparator_codeword(128, 0, 8)).latency_s2c
    slow = simulate_cycle(nl, comparator_codeword(9, 9, 8)).latency_s2c
    # one cell plus the merge versus eight cells plus the merge
    assert (fast, slow) == (2.0, 9.0)


@settings(max_examples=300)
@given(st.integers(0, 255), st.integers(0, 255))
def test_comparator_early_exit(a, b):
    nl = build_comparator_netlist(8)
    cells = comp1_cells(nl)
    res = simulate_cycle(nl, comparator_codeword(a, b, 8))
    diff = a ^ b
    decided = 8 - diff.bit_length() if diff else 7  # index of the deciding (or last) cell
    assert res.activated & set(cells) == set(cells[:decided + 1])


def test_comparator_mean_stages_oracle():
    # exhaustive over all 65536 pairs
    stages = []
    for a, b in product(range(256), repeat=2):
        diff = a ^ b
        stages.append(9 - diff.bit_length() if diff else 8)
    assert np.mean(stages) == pytest.approx(2 - 2 ** -7)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.data())
def test_normalized_latency_in_unit_interval(features, data):
    nl = build_clause_netlist(features)
    worst = worst_case_latency(nl)
    word = data.draw(st.lists(st.integers(0, 1), min_size=3 * features, max_size=3 * features))
    res = simulate_cycle(nl, word)
    assert 0 < res.latency_s2c / worst <= 1
    assert res.latency_c2s > 0


def test_latency_distribution_basics():
    nl = build_comparator_netlist(4)
    stats = latency_distribution(nl, uniform_sampler(8), 300, seed=1)
    assert stats.normalized and 0 < stats.min and stats.max <= 1
    assert stats.counts.sum() == 300
    assert stats.worst_case == 5.0
    again = latency_distribution(nl, uniform_sampler(8), 300, seed=1)
    assert np.array_equal(stats.values, again.values)
    with pytest.raises(ValueError):
        latency_distribution(nl, uniform_sampler(8), 0)


def test_latency_stats_integer_bins():
    stats = LatencyStats.from_values([1, 2, 2, 3])
    assert stats.counts.tolist() == [1, 2, 1]
    assert stats.csv_rows()[0] == (0.5, 1.5, 1)


def test_datapath_netlist_matches_vote():
    rng = np.random.default_rng(4)
    cfg = TmConfig(num_features=3, num_clauses=4, state_depth_n=5)
    tm = TsetlinMachine(cfg)
    nl = build_datapath_netlist(3, 4, tm.negative)
    for _ in range(30):
        tm.states[:] = rng.integers(1, 11, tm.states.shape)
        f = rng.integers(0, 2, 3)
        word = datapath_codeword(f, tm.exclude_mask())
        assert simulate_cycle(nl, word).output_bits() == [int(tm.vote(tuple(f)).predicted)]


def test_datapath_needs_two_clauses_per_polarity():
    with pytest.raises(ValueError):
        build_datapath_netlist(2, 2, [False, True])


def test_datapath_latency_report():
    rng = np.random.default_rng(5)
    tm = TsetlinMachine(TmConfig(num_features=4, num_clauses=4, state_depth_n=5))
    tm.states[:] = rng.integers(1, 11, tm.states.shape)
    X = rng.integers(0, 2, (12, 4))
    rep = datapath_latency(tm.exclude_mask(), tm.negative, X)
    assert rep.predictions.tolist() == [tm.vote(tuple(x)).predicted for x in X]
    for name, values in rep.per_sample.items():
        assert values.shape == (12,)
        assert np.all((values > 0) & (values <= 1)), name
    again = datapath_latency(tm.exclude_mask(), tm.negative, X[:1])
    assert again.per_sample["end_to_end"][0] == rep.per_sample["end_to_end"][0]
    with pytest.raises(ValueError):
        datapath_latency(tm.exclude_mask(), tm.negative, np.zeros((0, 4)))


def test_untrained_snapshot_is_fastest():
    tm = TsetlinMachine(TmConfig(num_features=4, num_clauses=4, state_depth_n=5))
    X = np.random.default_rng(6).integers(0, 2, (8, 4))
    untrained = datapath_latency(tm.exclude_mask(), tm.negative, X)
    tm.states[:, :4] = 10  # include every positive literal
    trained = datapath_latency(tm.exclude_mask(), tm.negative, X)
    assert trained.stats["end_to_end"].mean > untrained.stats["end_to_end"].mean
