"""Tsetlin automaton realisations and a bounded equivalence checker.

States are numbered 1..2n, 1 being the deepest exclude state and 2n the
deepest include state. For the six-state automaton the names map as
x13, x12, x11, x21, x22, x23 -> 1..6.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass

import numpy as np

from .feedback import TaCommand
from .stg import Marking, Stg, StgError, build_ta_stg, enabled, fire, ta_state_names, INPUT


class Action(enum.IntEnum):
    EXCLUDE = 0
    INCLUDE = 1


class TaProtocolError(Exception):
    pass


class DeadlockError(TaProtocolError):
    pass


ONEHOT_NAMES = ("x13", "x12", "x11", "x21", "x22", "x23")

# next-state equations of the bundled-data one-hot automaton:
# target <- OR of (source AND input) terms
ONEHOT_EQUATIONS = {
    "x13": (("x13", "r"), ("x12", "r")),
    "x12": (("x11", "r"), ("x13", "p")),
    "x11": (("x12", "p"), ("x21", "p")),
    "x21": (("x22", "p"), ("x11", "p")),
    "x22": (("x21", "r"), ("x23", "p")),
    "x23": (("x23", "r"), ("x22", "r")),
}


# --- saturating counter ----------------------------------------------------

def counter_step(state: int, cmd, n: int) -> int:
    if not 1 <= state <= 2 * n:
        raise ValueError(f"state {state} outside 1..{2 * n}")
    cmd = TaCommand(cmd)
    if cmd is TaCommand.INACTION:
        return state
    exclude = state <= n
    if cmd is TaCommand.REWARD:
        return max(1, state - 1) if exclude else min(2 * n, state + 1)
    return state + 1 if exclude else state - 1


def counter_step_array(states, cmds, n):
    """Vectorised :func:`counter_step`; returns a new array."""
    states = np.asarray(states)
    cmds = np.asarray(cmds)
    exclude = states <= n
    toward_include = np.where(exclude, 1, -1)
    delta = np.where(cmds == TaCommand.PENALTY, toward_include,
                     np.where(cmds == TaCommand.REWARD, -toward_include, 0))
    return np.clip(states + delta, 1, 2 * n).astype(states.dtype)


def counter_action(state: int, n: int) -> Action:
    return Action.EXCLUDE if state <= n else Action.INCLUDE


@dataclass
class CounterTa:
    state: int
    n: int

    def __post_init__(self):
        if not 1 <= self.state <= 2 * self.n:
            raise ValueError(f"state {self.state} outside 1..{2 * self.n}")

    def step(self, cmd):
        self.state = counter_step(self.state, cmd, self.n)
        return self

    @property
    def action(self):
        return counter_action(self.state, self.n)


# --- one-hot FSM -----------------------------------------------------------

def onehot_next(x, p, r, equations=ONEHOT_EQUATIONS):
    """Apply the one-hot next-state equations.

    ``x`` maps state names to bits. With neither input asserted no handshake
    happens and the state is returned unchanged.
    """
    if p and r:
        raise TaProtocolError("penalty and reward asserted together")
    if not (p or r):
        return dict(x)
    inputs = {"p": int(bool(p)), "r": int(bool(r))}
    return {name: int(any(x[src] and inputs[sig] for src, sig in terms))
            for name, terms in equations.items()}


def onehot_from_index(index: int) -> dict:
    return {name: int(i == index) for i, name in enumerate(ONEHOT_NAMES, start=1)}


def onehot_index(x) -> int:
    hot = [i for i, name in enumerate(ONEHOT_NAMES, start=1) if x[name]]
    if len(hot) != 1:
        raise TaProtocolError(f"state vector is not one-hot: {x}")
    return hot[0]


@dataclass
class OneHotTa:
    x: dict

    @classmethod
    def at(cls, index):
        return cls(onehot_from_index(index))

    def step(self, cmd, equations=ONEHOT_EQUATIONS):
        cmd = TaCommand(cmd)
        self.x = onehot_next(self.x, cmd is TaCommand.PENALTY, cmd is TaCommand.REWARD, equations)
        return self

    @property
    def index(self):
        return onehot_index(self.x)

    @property
    def action(self):
        return Action.EXCLUDE if self.x["x13"] or self.x["x12"] or self.x["x11"] else Action.INCLUDE


# --- STG interpretation ----------------------------------------------------

@dataclass
class StgTa:
    stg: Stg
    marking: Marking
    states_per_action: int = 3

    @classmethod
    def at(cls, index, states_per_action=3):
        stg = build_ta_stg(states_per_action, initial_state=index)
        return cls(stg, stg.initial_marking, states_per_action)

    @property
    def index(self):
        names = ta_state_names(self.states_per_action)
        hot = [i for i, s in enumerate(names, start=1) if self.marking[f"{s}_1"]]
        if len(hot) != 1:
            raise TaProtocolError(f"state places not mutually exclusive: {self.marking!r}")
        return hot[0]

    @property
    def action(self):
        return Action.EXCLUDE if self.index <= self.states_per_action else Action.INCLUDE


def _fire_internal_until(stg, marking, stop, max_firings):
    """Fire non-input transitions (lowest name first) until ``stop`` fires.

    Returns the new marking and the fired transition labels.
    """
    fired = []
    for _ in range(max_firings):
        ready = sorted(t for t in enabled(stg, marking) if stg.transitions[t].role != INPUT)
        if not ready:
            raise DeadlockError(f"no enabled transition after {' '.join(fired) or 'input'} at {marking!r}")
        t = ready[0]
        marking = fire(stg, marking, t)
        fired.append(stg.transitions[t].label)
        if stop(stg.transitions[t]):
            return marking, fired
    raise DeadlockError(f"handshake did not complete within {max_firings} firings")


def stg_ta_step(sta: StgTa, cmd):
    """Run one four-phase handshake on the STG automaton.

    Returns the updated automaton and the list of signal edges observed, in
    firing order. ``INACTION`` performs no handshake.
    """
    cmd = TaCommand(cmd)
    if cmd is TaCommand.INACTION:
        return sta, []
    stg, marking = sta.stg, sta.marking
    if not marking["p0"]:
        raise TaProtocolError("automaton is not idle")
    sig = "p" if cmd is TaCommand.PENALTY else "r"
    candidates = [t for t in enabled(stg, marking)
                  if stg.transitions[t].signal == sig and stg.transitions[t].polarity == "+"]
    if len(candidates) != 1:
        raise TaProtocolError(f"expected exactly one enabled {sig}+ branch, got {candidates}")
    budget = 4 * len(stg.transitions)
    marking = fire(stg, marking, candidates[0])
    observed = [f"{sig}+"]
    marking, fired = _fire_internal_until(
        stg, marking, lambda t: t.signal == "ack" and t.polarity == "+", budget)
    observed += fired
    falling = [t for t in enabled(stg, marking)
               if stg.transitions[t].signal == sig and stg.transitions[t].polarity == "-"]
    if len(falling) != 1:
        raise DeadlockError(f"input {sig}- not enabled after ack+")
    marking = fire(stg, marking, falling[0])
    observed.append(f"{sig}-")
    marking, fired = _fire_internal_until(
        stg, marking, lambda t: t.signal == "ack" and t.polarity == "-", budget)
    observed += fired
    if not marking["p0"]:
        raise DeadlockError("handshake ended away from the idle place")
    return StgTa(stg, marking, sta.states_per_action), observed


def read_action(ta) -> Action:
    """Current action of any realisation, without stepping it."""
    if isinstance(ta, (CounterTa, OneHotTa, StgTa)):
        return ta.action
    raise TypeError(f"not an automaton: {type(ta).__name__}")


# --- equivalence checking --------------------------------------------------

@dataclass(frozen=True)
class Realization:
    """Deterministic automaton given as plain functions over hashable states."""

    name: str
    start: callable  # canonical index -> state
    step: callable  # (state, TaCommand) -> state
    index: callable  # state -> canonical index
    action: callable  # state -> Action


def counter_realization(n=3):
    return Realization(
        "counter",
        start=lambda i: i,
        step=lambda s, c: counter_step(s, c, n),
        index=lambda s: s,
        action=lambda s: counter_action(s, n),
    )


def onehot_realization(equations=ONEHOT_EQUATIONS):
    def step(s, c):
        c = TaCommand(c)
        x = onehot_next(dict(zip(ONEHOT_NAMES, s)), c is TaCommand.PENALTY, c is TaCommand.REWARD, equations)
        return tuple(x[name] for name in ONEHOT_NAMES)

    def index(s):
        hot = [i for i, b in enumerate(s, start=1) if b]
        return hot[0] if len(hot) == 1 else None  # None never matches a counter index

    return Realization(
        "onehot",
        start=lambda i: tuple(int(j == i) for j in range(1, 7)),
        step=step,
        index=index,
        action=lambda s: Action.EXCLUDE if any(s[:3]) else Action.INCLUDE,
    )


def stg_realization(states_per_action=3):
    stg = build_ta_stg(states_per_action)
    names = ta_state_names(states_per_action)

    def start(i):
        tokens = {"p0": 1}
        for j, s in enumerate(names, start=1):
            tokens[f"{s}_1" if j == i else f"{s}_0"] = 1
        return Marking(tokens)

    def step(m, c):
        try:
            return stg_ta_step(StgTa(stg, m, states_per_action), c)[0].marking
        except (TaProtocolError, StgError):
            return None

    def index(m):
        if m is None:
            return None
        hot = [j for j, s in enumerate(names, start=1) if m[f"{s}_1"]]
        return hot[0] if len(hot) == 1 else None

    return Realization(
        "stg",
        start=start,
        step=step,
        index=index,
        action=lambda m: Action.EXCLUDE if index(m) is not None and index(m) <= states_per_action
        else Action.INCLUDE,
    )


@dataclass
class EquivalenceVerdict:
    passed: bool
    pairs_explored: int
    start_state: int | None = None
    counterexample: list | None = None  # TaCommand sequence
    detail: str = ""

    def to_dict(self):
        return {
            "passed": self.passed,
            "pairs_explored": self.pairs_explored,
            "start_state": self.start_state,
            "counterexample": None if self.counterexample is None
            else [c.name for c in self.counterexample],
            "detail": self.detail,
        }


COMMANDS = (TaCommand.INACTION, TaCommand.PENALTY, TaCommand.REWARD)


def check_equivalence(a: Realization, b: Realization, n=3, max_len=12) -> EquivalenceVerdict:
    """Compare two deterministic realisations on every command sequence of
    length <= ``max_len`` from every start state.

    Both machines are deterministic, so the sequences are explored as paths in
    the product automaton: breadth-first, remembering the shallowest depth at
    which a pair was seen. Every sequence's trajectory passes only through
    pairs that are checked, and the first mismatch found is a shortest
    counterexample.
    """
    explored = 0
    seen = set()
    queue = deque()
    for start in range(1, 2 * n + 1):
        root = (a.start(start), b.start(start))
        if root not in seen:
            seen.add(root)
            queue.append((root, start, []))
    while queue:
        (sa, sb), start, path = queue.popleft()
        explored += 1
        ia, ib = a.index(sa), b.index(sb)
        if ia != ib or ia is None or a.action(sa) != b.action(sb):
            return EquivalenceVerdict(
                False, explored, start, path,
                f"{a.name} state {ia} / {b.name} state {ib} after {len(path)} commands")
        if len(path) == max_len:
            continue
        for cmd in COMMANDS:
            nxt = (a.step(sa, cmd), b.step(sb, cmd))
            if nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, start, path + [cmd]))
    return EquivalenceVerdict(True, explored)


def enumerate_sequences_equivalent(a: Realization, b: Realization, n=3, max_len=6) -> bool:
    """Literal enumeration of all 3**L sequences; slow, used as a cross-check."""
    from itertools import product

    for start in range(1, 2 * n + 1):
        for length in range(max_len + 1):
            for seq in product(COMMANDS, repeat=length):
                sa, sb = a.start(start), b.start(start)
                for cmd in seq:
                    sa, sb = a.step(sa, cmd), b.step(sb, cmd)
                if a.index(sa) != b.index(sb) or a.index(sa) is None or a.action(sa) != b.action(sb):
                    return False
    return True
