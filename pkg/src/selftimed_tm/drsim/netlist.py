"""Dual-rail netlists and builders for the inference circuits.

Gate inputs are net references: a net id ``k >= 0`` or its bitwise
complement ``~k`` for the rail-swapped (inverted) net, which costs nothing in
dual-rail logic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .values import GATE_OUTPUTS


@dataclass(frozen=True)
class Gate:
    kind: str
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    group: str = ""


@dataclass
class DrNetlist:
    nets: list[str] = field(default_factory=list)
    gates: list[Gate] = field(default_factory=list)
    primary_inputs: list[int] = field(default_factory=list)
    primary_outputs: list[int] = field(default_factory=list)
    driver: dict[int, int] = field(default_factory=dict)
    worst_case_input: list[int] | None = None  # known slowest codeword, if any
    name: str = "netlist"

    def add_net(self, name=None):
        self.nets.append(name or f"n{len(self.nets)}")
        return len(self.nets) - 1

    def add_input(self, name):
        net = self.add_net(name)
        self.primary_inputs.append(net)
        return net

    def gate(self, kind, inputs, names=None, group=""):
        """Add a gate and return its output net (or tuple of nets)."""
        n_out = GATE_OUTPUTS[kind]
        for ref in inputs:
            net = ref if ref >= 0 else ~ref
            if not 0 <= net < len(self.nets):
                raise ValueError(f"unknown net {net}")
        outs = tuple(self.add_net(names[i] if names else None) for i in range(n_out))
        idx = len(self.gates)
        self.gates.append(Gate(kind, tuple(inputs), outs, group))
        for o in outs:
            self.driver[o] = idx
        return outs[0] if n_out == 1 else outs

    def fanout(self):
        fo = [[] for _ in self.nets]
        for gi, g in enumerate(self.gates):
            for ref in g.inputs:
                net = ref if ref >= 0 else ~ref
                if gi not in fo[net]:
                    fo[net].append(gi)
        return fo

    def topological_gates(self):
        """Gate indices in dependency order; raises on a combinational loop."""
        indeg = []
        fo = self.fanout()
        for g in self.gates:
            indeg.append(sum(1 for ref in g.inputs if (ref if ref >= 0 else ~ref) in self.driver))
        ready = [i for i, d in enumerate(indeg) if d == 0]
        order = []
        while ready:
            gi = ready.pop()
            order.append(gi)
            for o in self.gates[gi].outputs:
                for nxt in fo[o]:
                    g = self.gates[nxt]
                    indeg[nxt] -= sum(1 for ref in g.inputs if (ref if ref >= 0 else ~ref) == o)
                    if indeg[nxt] == 0:
                        ready.append(nxt)
        if len(order) != len(self.gates):
            raise ValueError("netlist contains a combinational loop")
        return order

    def critical_path(self, delays):
        """Longest input-to-output delay, ignoring logic values."""
        arrival = [0.0] * len(self.nets)
        for gi in self.topological_gates():
            g = self.gates[gi]
            t = max((arrival[r if r >= 0 else ~r] for r in g.inputs), default=0.0) + delays[g.kind]
            for o in g.outputs:
                arrival[o] = t
        return max(arrival[o] for o in self.primary_outputs)

    def dump(self):
        def ref(r):
            return self.nets[r] if r >= 0 else "~" + self.nets[~r]

        lines = [f"# {self.name}: {len(self.gates)} gates, {len(self.nets)} nets",
                 "inputs " + " ".join(self.nets[n] for n in self.primary_inputs),
                 "outputs " + " ".join(self.nets[n] for n in self.primary_outputs)]
        for g in self.gates:
            lines.append(f"{g.kind} {' '.join(ref(r) for r in g.inputs)} -> "
                         f"{' '.join(self.nets[o] for o in g.outputs)}")
        return "\n".join(lines) + "\n"


# --- building blocks -------------------------------------------------------

def balanced(nl, kind, refs, group=""):
    refs = list(refs)
    if not refs:
        raise ValueError("empty reduction")
    while len(refs) > 1:
        nxt = [nl.gate(kind, [refs[i], refs[i + 1]], group=group) for i in range(0, len(refs) - 1, 2)]
        if len(refs) % 2:
            nxt.append(refs[-1])
        refs = nxt
    return refs[0]


def clause_into(nl, f, e0, e1, combiner="chain", empty_guard=False, group="clause"):
    """Partial clause per feature, combined into one clause output.

    Partial clause i is ``(e0 | f) & (e1 | ~f)``. The ``chain`` combiner is a
    ripple of AND2 gates with partial 0 nearest the output, so a 0 there
    terminates evaluation early; ``tree`` is a balanced AND2 tree. With
    ``empty_guard`` the clause is additionally ANDed with "some literal is
    included", making a fully excluded clause output 0.
    """
    partial = []
    for fi, a, b in zip(f, e0, e1):
        lit = nl.gate("OR2", [a, fi], group=group)
        neg = nl.gate("OR2", [b, ~fi], group=group)
        partial.append(nl.gate("AND2", [lit, neg], group=group))
    if combiner == "chain":
        acc = partial[-1]
        for p in reversed(partial[:-1]):
            acc = nl.gate("AND2", [p, acc], group=group)
    elif combiner == "tree":
        acc = balanced(nl, "AND2", partial, group)
    else:
        raise ValueError(f"unknown combiner {combiner!r}")
    if empty_guard:
        included = balanced(nl, "OR2", [~r for pair in zip(e0, e1) for r in pair], group)
        acc = nl.gate("AND2", [included, acc], group=group)
    return acc


def xor_into(nl, a, b, group=""):
    """Dual-rail XOR as two AND2 and an OR2; it always waits for both inputs."""
    return nl.gate("OR2", [nl.gate("AND2", [a, ~b], group=group),
                           nl.gate("AND2", [~a, b], group=group)], group=group)


def half_adder(nl, a, b, cells="gates", group=""):
    """Returns (sum, carry)."""
    if cells == "macro":
        return nl.gate("HA", [a, b], group=group)
    return xor_into(nl, a, b, group), nl.gate("AND2", [a, b], group=group)


def full_adder(nl, a, b, c, cells="gates", group=""):
    """Returns (sum, carry). The gate version builds the carry as a majority
    of three AND2 terms, so it resolves without ``c`` whenever ``a == b``."""
    if cells == "macro":
        return nl.gate("FA", [a, b, c], group=group)
    s = xor_into(nl, xor_into(nl, a, b, group), c, group)
    ab = nl.gate("AND2", [a, b], group=group)
    ac = nl.gate("AND2", [a, c], group=group)
    bc = nl.gate("AND2", [b, c], group=group)
    carry = nl.gate("OR2", [nl.gate("OR2", [ab, ac], group=group), bc], group=group)
    return s, carry


def ripple_add(nl, a, b, cin=None, cells="gates", group=""):
    """Ripple-carry sum of two LSB-first operands plus an optional carry-in."""
    out = []
    carry = cin
    for k in range(max(len(a), len(b))):
        ops = [x[k] for x in (a, b) if k < len(x)]
        if carry is not None:
            ops.append(carry)
        if len(ops) == 1:
            out.append(ops[0])
            carry = None
            continue
        if len(ops) == 2:
            s, carry = half_adder(nl, *ops, cells=cells, group=group)
        else:
            s, carry = full_adder(nl, *ops, cells=cells, group=group)
        out.append(s)
    if carry is not None:
        out.append(carry)
    return out


def popcount_into(nl, bits, cells="gates", group="popcount"):
    """Population count of ``bits`` as LSB-first nets.

    The inputs are split in halves, each half is counted recursively and the
    two counts are summed by a ripple-carry adder; an odd input out enters as
    that adder's carry-in. The leaves are half adders and the top is a
    carry chain, so the latency depends on how far carries actually ripple.
    ``cells="gates"`` expands the adders into AND2/OR2 gates, ``"macro"``
    uses single HA/FA cells.
    """
    if cells not in ("gates", "macro"):
        raise ValueError(f"unknown adder cells {cells!r}")
    n = len(bits)
    width = max(1, math.ceil(math.log2(n + 1)))
    out = _popcount(nl, list(bits), cells, group)
    # bits above ``width`` can only ever carry 0 and are left unconnected
    return out[:width]


def _popcount(nl, bits, cells, group):
    n = len(bits)
    if n == 1:
        return bits
    if n == 2:
        return list(half_adder(nl, *bits, cells=cells, group=group))
    if n == 3:
        return list(full_adder(nl, *bits, cells=cells, group=group))
    cin = bits[-1] if n % 2 else None
    half = n // 2
    lo = _popcount(nl, bits[:half], cells, group)
    hi = _popcount(nl, bits[half:2 * half], cells, group)
    return ripple_add(nl, lo, hi, cin, cells, group)


def comparator_into(nl, a_msb_first, b_msb_first, group="comparator"):
    """MSB-first magnitude comparator; returns the net for ``a >= b``.

    Cell k only leaves spacer once every higher bit pair compared equal.
    """
    decisions = []
    go = None
    for a, b in zip(a_msb_first, b_msb_first):
        ins = [a, b] if go is None else [a, b, go]
        dec, go = nl.gate("COMP1", ins, group=group)
        decisions.append(dec)
    return nl.gate("MERGE", decisions + [go], group=group)


# --- public builders -------------------------------------------------------

def build_clause_netlist(num_features, combiner="chain", empty_guard=False):
    """Inputs ``f0..``, ``e0_0..``, ``e1_0..``; one output ``c``."""
    if num_features < 1:
        raise ValueError("num_features must be >= 1")
    nl = DrNetlist(name=f"clause{num_features}")
    f = [nl.add_input(f"f{i}") for i in range(num_features)]
    e0 = [nl.add_input(f"e0_{i}") for i in range(num_features)]
    e1 = [nl.add_input(f"e1_{i}") for i in range(num_features)]
    nl.primary_outputs = [clause_into(nl, f, e0, e1, combiner, empty_guard)]
    # every positive literal included and satisfied: c=1 through the whole chain
    nl.worst_case_input = [1] * num_features + [0] * num_features + [1] * num_features
    return nl


def clause_codeword(features, include_pos, include_neg):
    """Input vector for :func:`build_clause_netlist` from include flags."""
    return (list(map(int, features)) + [int(not b) for b in include_pos]
            + [int(not b) for b in include_neg])


def build_popcount_netlist(num_inputs, cells="gates"):
    if num_inputs < 2:
        raise ValueError("num_inputs must be >= 2")
    nl = DrNetlist(name=f"popcount{num_inputs}")
    bits = [nl.add_input(f"x{i}") for i in range(num_inputs)]
    nl.primary_outputs = popcount_into(nl, bits, cells)
    return nl


def build_comparator_netlist(width):
    """Inputs ``a{w-1}..a0`` then ``b{w-1}..b0`` (MSB first); output ``y``."""
    if width < 1:
        raise ValueError("width must be >= 1")
    nl = DrNetlist(name=f"comparator{width}")
    a = [nl.add_input(f"a{i}") for i in reversed(range(width))]
    b = [nl.add_input(f"b{i}") for i in reversed(range(width))]
    nl.primary_outputs = [comparator_into(nl, a, b)]
    nl.worst_case_input = [0] * (2 * width)  # equal operands walk every cell
    return nl


def comparator_codeword(a, b, width):
    bits = lambda v: [(v >> i) & 1 for i in reversed(range(width))]
    return bits(a) + bits(b)


def build_datapath_netlist(num_features, num_clauses, negative, combiner="chain", cells="gates"):
    """Clauses -> two popcounts (positive / negative votes) -> comparator.

    Inputs: ``f0..`` then, per clause j, ``e0_j_0..`` and ``e1_j_0..``.
    Output: ``y = (#positive clauses firing >= #negative clauses firing)``.
    Clauses carry the empty guard so a fully excluded clause does not vote.
    """
    negative = list(map(bool, negative))
    if len(negative) != num_clauses:
        raise ValueError("polarity vector length must equal num_clauses")
    nl = DrNetlist(name=f"datapath{num_features}x{num_clauses}")
    f = [nl.add_input(f"f{i}") for i in range(num_features)]
    pos, neg = [], []
    for j in range(num_clauses):
        e0 = [nl.add_input(f"e0_{j}_{i}") for i in range(num_features)]
        e1 = [nl.add_input(f"e1_{j}_{i}") for i in range(num_features)]
        c = clause_into(nl, f, e0, e1, combiner, empty_guard=True, group="clause")
        (neg if negative[j] else pos).append(c)
    if len(pos) < 2 or len(neg) < 2:
        raise ValueError("need at least two clauses of each polarity")
    a = popcount_into(nl, pos, cells, group="popcount")
    b = popcount_into(nl, neg, cells, group="popcount")
    if len(a) != len(b):
        raise ValueError("positive and negative vote counts need equal widths")
    nl.primary_outputs = [comparator_into(nl, a[::-1], b[::-1], group="comparator")]
    return nl


def datapath_codeword(features, exclude):
    """``exclude`` is a (num_clauses, 2 * num_features) array of exclude bits,
    features first then complements."""
    num_features = len(features)
    word = list(map(int, features))
    for row in exclude:
        row = list(map(int, row))
        word += row[:num_features] + row[num_features:]
    return word
