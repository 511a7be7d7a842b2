import pytest

from selftimed_tm.stg import (DUMMY, INPUT, INTERNAL, OUTPUT, BoundExceeded, FiringError, Marking,
                              Stg, StgError, build_ta_stg, enabled, fire, from_g, reachability,
                              to_g, verify)


def handshake(drop_ack_fall=False, double_rise=False):
    """Four-phase req/ack cycle starting and ending at p0."""
    g = Stg(name="hs")
    g.add_transition("req+", "req", "+", INPUT, ["p0"], ["c1"])
    if double_rise:
        g.add_transition("ack+", "ack", "+", OUTPUT, ["c1"], ["c2"])
        g.add_transition("ack+/2", "ack", "+", OUTPUT, ["c2"], ["c3"])
    else:
        g.add_transition("ack+", "ack", "+", OUTPUT, ["c1"], ["c2"])
        g.add_transition("req-", "req", "-", INPUT, ["c2"], ["c3"])
    if not drop_ack_fall:
        g.add_transition("ack-", "ack", "-", OUTPUT, ["c3"], ["p0"])
    g.initial_marking = Marking.of("p0")
    return g


def test_enabled_and_fire():
    g = handshake()
    m = g.initial_marking
    assert enabled(g, m) == ["req+"]
    m = fire(g, m, "req+")
    assert m == Marking.of("c1") and m["p0"] == 0
    with pytest.raises(FiringError):
        fire(g, m, "req+")


def test_read_arc_is_not_consumed():
    g = Stg()
    g.add_transition("t", None, None, DUMMY, ["a"], ["b"], read=["guard"])
    m = Marking.of("a", "guard")
    assert enabled(g, m) == ["t"]
    assert fire(g, m, "t") == Marking.of("b", "guard")
    assert enabled(g, Marking.of("a")) == []


def test_two_place_cycle_has_two_states():
    g = Stg()
    g.add_transition("t1", None, None, DUMMY, ["a"], ["b"])
    g.add_transition("t2", None, None, DUMMY, ["b"], ["a"])
    g.initial_marking = Marking.of("a")
    graph = reachability(g)
    assert len(graph.states) == 2 and len(graph.edges) == 2


def test_handshake_passes():
    rep = verify(handshake())
    assert rep.passed and rep.state_count == 4 and rep.witnesses == {}


def test_unsafe_net_reported():
    g = Stg()
    g.add_transition("t", None, None, DUMMY, ["p0"], ["a", "a"])
    g.add_transition("u", None, None, DUMMY, ["a", "a"], ["p0"])
    g.initial_marking = Marking.of("p0")
    rep = verify(g)
    assert not rep.one_safe and rep.witnesses["one_safe"] == ["t"]


def test_missing_ack_fall_deadlocks():
    rep = verify(handshake(drop_ack_fall=True))
    assert not rep.deadlock_free
    assert rep.witnesses["deadlock_free"] == ["req+", "ack+", "req-"]


def test_double_rise_is_inconsistent():
    rep = verify(handshake(double_rise=True))
    assert not rep.consistent
    assert rep.witnesses["consistent"] == ["req+", "ack+", "ack+/2"]


def test_output_disabled_by_input_is_not_persistent():
    g = Stg()
    g.add_transition("x+", "x", "+", OUTPUT, ["p0"], ["a"])
    g.add_transition("i+", "i", "+", INPUT, ["p0"], ["b"])
    g.add_transition("x-", "x", "-", OUTPUT, ["a"], ["p0"])
    g.add_transition("i-", "i", "-", INPUT, ["b"], ["p0"])
    g.initial_marking = Marking.of("p0")
    rep = verify(g)
    assert not rep.output_persistent


def test_bound_exceeded_gives_witness():
    g = Stg()
    g.add_transition("grow", None, None, DUMMY, ["p"], ["p", "q"])
    g.initial_marking = Marking.of("p")
    with pytest.raises(BoundExceeded) as exc:
        reachability(g, bound=5)
    assert exc.value.witness == ["grow"] * 5


def test_ta_net_verifies():
    g = build_ta_stg(3)
    rep = verify(g)
    assert rep.passed
    assert rep.state_count == 114


def test_single_state_per_action_verifies():
    assert verify(build_ta_stg(1)).passed


def test_ta_signals_and_initial_marking():
    g = build_ta_stg(3)
    assert g.signals(INPUT) == ["p", "r"]
    assert g.signals(OUTPUT) == ["a1", "a2", "ack"]
    assert {"x11", "x21", "xR11", "xL12"} <= set(g.signals(INTERNAL))
    assert g.initial_marking == Marking.of("p0", "x13_0", "x12_0", "x11_1", "x21_0", "x22_0", "x23_0")


def test_ta_net_rejects_bad_arguments():
    with pytest.raises(ValueError):
        build_ta_stg(0)
    with pytest.raises(ValueError):
        build_ta_stg(3, initial_state=7)


def test_mixed_roles_rejected():
    g = Stg()
    g.add_transition("a+", "a", "+", INPUT, ["p"], ["q"])
    g.add_transition("a-", "a", "-", OUTPUT, ["q"], ["p"])
    with pytest.raises(StgError):
        g.validate()


def test_g_round_trip():
    g = build_ta_stg(3)
    back = from_g(to_g(g))
    assert back.initial_marking == g.initial_marking
    assert set(back.transitions) == set(g.transitions)
    for name in g.transitions:
        assert sorted(back.pre[name]) == sorted(g.pre[name])
        assert sorted(back.post[name]) == sorted(g.post[name])
        assert back.read[name] == g.read[name]
    assert verify(back).state_count == 114


def test_g_implicit_places():
    text = """.model loop
.inputs a
.outputs b
.graph
a+ b+
b+ a-
a- b-
b- a+
.marking {<b-,a+>}
.end
"""
    g = from_g(text)
    rep = verify(g, idle_place="<b-,a+>")
    assert rep.passed and rep.state_count == 4
