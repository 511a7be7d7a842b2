"""Signal transition graphs: a small Petri-net kernel with read arcs.

Markings are immutable mappings ``place -> tokens``. A reachable *state* is a
marking plus the current level of every signal, both starting from the
initial marking with all signals low.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from types import MappingProxyType

INPUT = "input"
OUTPUT = "output"
INTERNAL = "internal"
DUMMY = "dummy"


class StgError(Exception):
    pass


class FiringError(StgError):
    pass


class BoundExceeded(StgError):
    def __init__(self, bound, witness):
        super().__init__(f"reachability exceeded {bound} states; witness path: {' '.join(witness)}")
        self.witness = witness


@dataclass(frozen=True)
class Transition:
    name: str
    signal: str | None  # None for dummies
    polarity: str | None  # "+" or "-"
    role: str

    @property
    def label(self):
        return self.name if self.signal is None else f"{self.signal}{self.polarity}"


class Marking:
    """Immutable token assignment; places with zero tokens are dropped."""

    __slots__ = ("_tokens", "_key")

    def __init__(self, tokens=None):
        items = {p: int(n) for p, n in dict(tokens or {}).items() if n}
        if any(n < 0 for n in items.values()):
            raise ValueError("negative token count")
        self._tokens = MappingProxyType(items)
        self._key = frozenset(items.items())

    @classmethod
    def of(cls, *places):
        tokens = {}
        for p in places:
            tokens[p] = tokens.get(p, 0) + 1
        return cls(tokens)

    def __getitem__(self, place):
        return self._tokens.get(place, 0)

    def __eq__(self, other):
        return isinstance(other, Marking) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return "Marking({" + ", ".join(f"{p}: {n}" for p, n in sorted(self._tokens.items())) + "})"

    def marked(self):
        return sorted(self._tokens)

    def items(self):
        return self._tokens.items()

    def is_safe(self):
        return all(n <= 1 for n in self._tokens.values())


@dataclass
class Stg:
    places: list[str] = field(default_factory=list)
    transitions: dict[str, Transition] = field(default_factory=dict)
    pre: dict[str, list[str]] = field(default_factory=dict)  # transition -> input places
    post: dict[str, list[str]] = field(default_factory=dict)  # transition -> output places
    read: dict[str, list[str]] = field(default_factory=dict)  # transition -> read-arc places
    initial_marking: Marking = field(default_factory=Marking)
    name: str = "stg"

    def add_place(self, place):
        if place not in self.places:
            self.places.append(place)
        return place

    def add_transition(self, name, signal=None, polarity=None, role=DUMMY,
                       pre=(), post=(), read=()):
        if name in self.transitions:
            raise StgError(f"duplicate transition {name}")
        if signal is not None and polarity not in ("+", "-"):
            raise StgError(f"transition {name}: polarity must be + or -")
        for p in (*pre, *post, *read):
            self.add_place(p)
        self.transitions[name] = Transition(name, signal, polarity, role)
        self.pre[name] = list(pre)
        self.post[name] = list(post)
        self.read[name] = list(read)
        return name

    def signals(self, role=None):
        return sorted({t.signal for t in self.transitions.values()
                       if t.signal is not None and (role is None or t.role == role)})

    def validate(self):
        roles = {}
        for t in self.transitions.values():
            if not self.pre[t.name] and not self.read[t.name]:
                raise StgError(f"transition {t.name} has no input or read arc")
            if t.signal is not None:
                if roles.setdefault(t.signal, t.role) != t.role:
                    raise StgError(f"signal {t.signal} used with roles {roles[t.signal]} and {t.role}")
        return self


def enabled(stg: Stg, marking: Marking) -> list[str]:
    out = []
    for name in stg.transitions:
        need = {}
        for p in stg.pre[name]:
            need[p] = need.get(p, 0) + 1
        if all(marking[p] >= n for p, n in need.items()) and all(marking[p] >= 1 for p in stg.read[name]):
            out.append(name)
    return out


def fire(stg: Stg, marking: Marking, name: str) -> Marking:
    if name not in enabled(stg, marking):
        raise FiringError(f"transition {name} is not enabled at {marking!r}")
    tokens = dict(marking.items())
    for p in stg.pre[name]:
        tokens[p] -= 1
    for p in stg.post[name]:
        tokens[p] = tokens.get(p, 0) + 1
    return Marking(tokens)


@dataclass(frozen=True)
class State:
    marking: Marking
    signals: frozenset  # names of signals currently high


@dataclass
class ReachabilityGraph:
    root: State
    states: list[State]
    edges: list[tuple[int, str, int]]  # (src index, transition, dst index)
    parent: dict[int, tuple[int, str]]
    inconsistencies: list[tuple[int, str]]  # (src index, transition) that repeated an edge

    def index(self, state):
        return self._index[state]

    def path_to(self, i):
        """Transition names leading from the root to state ``i``."""
        path = []
        while i in self.parent:
            i, t = self.parent[i]
            path.append(t)
        return path[::-1]

    def successors(self, i):
        return [(t, j) for s, t, j in self._out.get(i, ())]

    def _finish(self):
        self._index = {s: i for i, s in enumerate(self.states)}
        self._out = {}
        for e in self.edges:
            self._out.setdefault(e[0], []).append(e)


def _step_signals(stg, signals, name):
    t = stg.transitions[name]
    if t.signal is None:
        return signals, True
    high = t.signal in signals
    ok = high != (t.polarity == "+")
    return (signals | {t.signal}) if t.polarity == "+" else (signals - {t.signal}), ok


def reachability(stg: Stg, bound: int = 100_000) -> ReachabilityGraph:
    """Breadth-first closure of the token game from the initial marking."""
    root = State(stg.initial_marking, frozenset())
    states, index = [root], {root: 0}
    edges, parent, bad = [], {}, []
    queue = deque([0])
    while queue:
        i = queue.popleft()
        s = states[i]
        for name in enabled(stg, s.marking):
            marking = fire(stg, s.marking, name)
            signals, ok = _step_signals(stg, s.signals, name)
            if not ok:
                bad.append((i, name))
            nxt = State(marking, signals)
            j = index.get(nxt)
            if j is None:
                if len(states) >= bound:
                    witness = []
                    k = i
                    while k in parent:
                        k, t = parent[k]
                        witness.append(t)
                    raise BoundExceeded(bound, witness[::-1] + [name])
                j = index[nxt] = len(states)
                states.append(nxt)
                parent[j] = (i, name)
                queue.append(j)
            edges.append((i, name, j))
    graph = ReachabilityGraph(root, states, edges, parent, bad)
    graph._finish()
    return graph


@dataclass
class VerificationReport:
    one_safe: bool
    deadlock_free: bool
    consistent: bool
    output_persistent: bool
    input_proper: bool
    state_count: int
    witnesses: dict[str, list[str]] = field(default_factory=dict)

    @property
    def passed(self):
        return (self.one_safe and self.deadlock_free and self.consistent
                and self.output_persistent and self.input_proper)

    def to_dict(self):
        return {
            "one_safe": self.one_safe,
            "deadlock_free": self.deadlock_free,
            "consistent": self.consistent,
            "output_persistent": self.output_persistent,
            "input_proper": self.input_proper,
            "state_count": self.state_count,
            "witnesses": self.witnesses,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def verify(stg: Stg, idle_place="p0", bound: int = 100_000) -> VerificationReport:
    """Check 1-safety, deadlock freedom, consistency, output persistency and
    input properness over the full reachability graph.

    The net is treated as an open system: a state with only input transitions
    enabled is fine, and a state with nothing enabled is a deadlock unless it is
    the idle state. Input properness here means rising input edges are only
    offered while ``idle_place`` is marked, and falling input edges only while
    some output has been acknowledged (a signal of role output is high).
    """
    graph = reachability(stg, bound)
    witnesses = {}

    def note(key, i, extra=()):
        witnesses.setdefault(key, graph.path_to(i) + list(extra))

    one_safe = True
    for i, s in enumerate(graph.states):
        if not s.marking.is_safe():
            one_safe = False
            note("one_safe", i)
            break

    deadlock_free = True
    for i, s in enumerate(graph.states):
        if not graph.successors(i) and s.marking[idle_place] == 0:
            deadlock_free = False
            note("deadlock_free", i)
            break

    consistent = not graph.inconsistencies
    if not consistent:
        i, name = graph.inconsistencies[0]
        note("consistent", i, [name])

    outputs = set(stg.signals(OUTPUT))
    input_proper = True
    for i, s in enumerate(graph.states):
        for name, _ in graph.successors(i):
            t = stg.transitions[name]
            if t.role != INPUT:
                continue
            ok = s.marking[idle_place] > 0 if t.polarity == "+" else bool(s.signals & outputs)
            if not ok:
                input_proper = False
                note("input_proper", i, [name])
                break
        if not input_proper:
            break

    output_persistent = True
    for i, s in enumerate(graph.states):
        succ = graph.successors(i)
        en = {t for t, _ in succ}
        for u, j in succ:
            after = {t for t, _ in graph.successors(j)}
            for t in en - {u}:
                if stg.transitions[t].role in (OUTPUT, INTERNAL) and t not in after:
                    output_persistent = False
                    note("output_persistent", i, [u, f"(disables {t})"])
                    break
            if not output_persistent:
                break
        if not output_persistent:
            break

    return VerificationReport(one_safe, deadlock_free, consistent, output_persistent,
                              input_proper, len(graph.states), witnesses)


# --- Tsetlin automaton net -------------------------------------------------

def ta_state_names(states_per_action: int) -> list[str]:
    """State names ordered from deepest exclude to deepest include.

    For three states per action this is x13 x12 x11 x21 x22 x23.
    """
    k = states_per_action
    return [f"x1{d}" for d in range(k, 0, -1)] + [f"x2{d}" for d in range(1, k + 1)]


def ta_next_index(index: int, command: str, states_per_action: int) -> int:
    """Successor of 1-based state ``index`` under ``"p"`` or ``"r"``."""
    k = states_per_action
    exclude = index <= k
    if command == "r":
        return max(1, index - 1) if exclude else min(2 * k, index + 1)
    return index + 1 if exclude else index - 1


def build_ta_stg(states_per_action: int = 3, initial_state: int | None = None) -> Stg:
    """Interpreted STG of a two-action Tsetlin automaton.

    Every (state, input) pair gets its own branch out of the idle place
    ``p0``; the branch is chosen by a read arc on the current state's ``_1``
    place. A branch raises the input, raises the action output of the
    resulting state, hands the state token over (new ``_1`` first, then the old
    one back to ``_0``) while pulsing a state signal and a direction signal,
    acknowledges, and then returns everything to zero in the same order.

    ``initial_state`` is 1-based; the default is the exclude state next to the
    decision boundary.
    """
    k = states_per_action
    if k < 1:
        raise ValueError("states_per_action must be >= 1")
    names = ta_state_names(k)
    start = k if initial_state is None else initial_state
    if not 1 <= start <= 2 * k:
        raise ValueError(f"initial state {start} out of range 1..{2 * k}")

    stg = Stg(name=f"ta{2 * k}")
    stg.add_place("p0")
    for s in names:
        stg.add_place(f"{s}_0")
        stg.add_place(f"{s}_1")

    for idx, src in enumerate(names, start=1):
        for cmd in ("p", "r"):
            dst_idx = ta_next_index(idx, cmd, k)
            dst = names[dst_idx - 1]
            action = "a1" if dst_idx <= k else "a2"
            # direction of travel along the state line; saturating rewards
            # keep pushing outward
            if dst_idx != idx:
                direction = "R" if dst_idx > idx else "L"
            else:
                direction = "L" if idx == 1 else "R"
            dsig = f"x{direction}{src[1:]}"
            tag = f"{src}{cmd}"
            c = [f"{tag}_c{j}" for j in range(1, 10)]
            read_src = [f"{src}_1"]

            stg.add_transition(f"{cmd}+/{tag}", cmd, "+", INPUT, ["p0"], [c[0]], read_src)
            stg.add_transition(f"{action}+/{tag}", action, "+", OUTPUT, [c[0]], [c[1]])
            if dst != src:
                stg.add_transition(f"{dst}+/{tag}", dst, "+", INTERNAL,
                                   [c[1], f"{dst}_0"], [c[2], f"{dst}_1"])
                stg.add_transition(f"{dsig}+/{tag}", dsig, "+", INTERNAL,
                                   [c[2], f"{src}_1"], [c[3], f"{src}_0"])
            else:
                stg.add_transition(f"{dst}+/{tag}", dst, "+", INTERNAL, [c[1]], [c[2]])
                stg.add_transition(f"{dsig}+/{tag}", dsig, "+", INTERNAL, [c[2]], [c[3]])
            stg.add_transition(f"ack+/{tag}", "ack", "+", OUTPUT, [c[3]], [c[4]])
            stg.add_transition(f"{cmd}-/{tag}", cmd, "-", INPUT, [c[4]], [c[5]])
            stg.add_transition(f"{action}-/{tag}", action, "-", OUTPUT, [c[5]], [c[6]])
            stg.add_transition(f"{dst}-/{tag}", dst, "-", INTERNAL, [c[6]], [c[7]])
            stg.add_transition(f"{dsig}-/{tag}", dsig, "-", INTERNAL, [c[7]], [c[8]])
            stg.add_transition(f"ack-/{tag}", "ack", "-", OUTPUT, [c[8]], ["p0"])

    tokens = {"p0": 1}
    for idx, s in enumerate(names, start=1):
        tokens[f"{s}_1" if idx == start else f"{s}_0"] = 1
    stg.initial_marking = Marking(tokens)
    return stg.validate()


# --- .g text format --------------------------------------------------------

def _g_name(name):
    return name.replace(" ", "_")


def to_g(stg: Stg) -> str:
    """Serialise to the ``.g`` interchange format.

    Places are always explicit. A read arc is written as a self loop
    (``place -> t`` plus ``t -> place``), which :func:`from_g` turns back into
    a read arc.
    """
    lines = [f".model {stg.name}"]
    for role, key in ((INPUT, ".inputs"), (OUTPUT, ".outputs"), (INTERNAL, ".internal")):
        sig = stg.signals(role)
        if sig:
            lines.append(f"{key} {' '.join(sig)}")
    dummies = [t.name for t in stg.transitions.values() if t.signal is None]
    if dummies:
        lines.append(f".dummy {' '.join(dummies)}")
    lines.append(".graph")
    succ = {p: [] for p in stg.places}
    for name in stg.transitions:
        lines.append(f"{_g_name(name)} {' '.join(stg.post[name] + stg.read[name])}".rstrip())
        for p in stg.pre[name] + stg.read[name]:
            succ[p].append(_g_name(name))
    for p in stg.places:
        if succ[p]:
            lines.append(f"{p} {' '.join(succ[p])}")
    marked = " ".join(p if n == 1 else f"{p}={n}" for p, n in sorted(stg.initial_marking.items()))
    lines.append(f".marking {{{marked}}}")
    lines.append(".end")
    return "\n".join(lines) + "\n"


def from_g(text: str) -> Stg:
    roles = {}
    dummies = set()
    arcs = []
    marking_spec = ""
    name = "stg"
    in_graph = False
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("."):
            key, _, rest = line.partition(" ")
            if key == ".model":
                name = rest.strip()
            elif key in (".inputs", ".outputs", ".internal"):
                role = {".inputs": INPUT, ".outputs": OUTPUT, ".internal": INTERNAL}[key]
                roles.update({s: role for s in rest.split()})
            elif key == ".dummy":
                dummies.update(rest.split())
            elif key == ".graph":
                in_graph = True
            elif key == ".marking":
                marking_spec = rest.strip().strip("{}")
            elif key == ".end":
                break
            continue
        if in_graph:
            src, *dsts = line.split()
            arcs.extend((src, d) for d in dsts)

    def node_kind(token):
        base = token.split("/", 1)[0]
        if token in dummies or base in dummies:
            return "t"
        if base[-1:] in "+-" and base[:-1] in roles:
            return "t"
        return "p"

    stg = Stg(name=name)
    pre, post = {}, {}
    for src, dst in arcs:
        ks, kd = node_kind(src), node_kind(dst)
        if ks == "t" and kd == "t":
            place = f"<{src},{dst}>"
            post.setdefault(src, []).append(place)
            pre.setdefault(dst, []).append(place)
        elif ks == "t":
            post.setdefault(src, []).append(dst)
        elif kd == "t":
            pre.setdefault(dst, []).append(src)
        else:
            raise StgError(f"arc between two places: {src} -> {dst}")
    order = dict.fromkeys(n for arc in arcs for n in arc if node_kind(n) == "t")
    for t in order:
        ins, outs = list(pre.get(t, [])), list(post.get(t, []))
        reads = []
        for p in list(ins):
            if p in outs:
                ins.remove(p)
                outs.remove(p)
                reads.append(p)
        base = t.split("/", 1)[0]
        if t in dummies or base in dummies:
            stg.add_transition(t, None, None, DUMMY, ins, outs, reads)
        else:
            sig, pol = base[:-1], base[-1]
            stg.add_transition(t, sig, pol, roles[sig], ins, outs, reads)
    tokens = {}
    for item in marking_spec.split():
        place, _, count = item.partition("=")
        if place.startswith("<") and place not in stg.places:
            raise StgError(f"unknown implicit place {place}")
        tokens[place] = int(count or 1)
    stg.initial_marking = Marking(tokens)
    for p in tokens:
        stg.add_place(p)
    return stg
