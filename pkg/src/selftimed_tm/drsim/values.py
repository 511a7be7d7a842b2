"""Dual-rail values and gate evaluation.

A value is stored as the integer ``2 * rail_p + rail_n``: 0 is the spacer,
1 is logic-0, 2 is logic-1 and 3 is the illegal (1,1) state.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

SPACER, ZERO, ONE, ILLEGAL = 0, 1, 2, 3
SWAP = (SPACER, ONE, ZERO, ILLEGAL)  # rail swap = logical inversion


class SimulationFault(Exception):
    pass


@dataclass(frozen=True)
class DrValue:
    rail_p: bool
    rail_n: bool

    @property
    def code(self):
        return 2 * int(self.rail_p) + int(self.rail_n)

    @classmethod
    def from_code(cls, code):
        return cls(bool(code & 2), bool(code & 1))

    @classmethod
    def of(cls, bit):
        return cls(bool(bit), not bool(bit))

    @property
    def is_spacer(self):
        return not (self.rail_p or self.rail_n)

    @property
    def is_valid(self):
        return self.rail_p != self.rail_n

    @property
    def bit(self):
        if not self.is_valid:
            raise ValueError(f"{self} is not a valid codeword")
        return int(self.rail_p)

    def __str__(self):
        return {SPACER: "spacer", ZERO: "0", ONE: "1", ILLEGAL: "illegal"}[self.code]


DR_SPACER = DrValue(False, False)
DR_ZERO = DrValue(False, True)
DR_ONE = DrValue(True, False)


def to_code(value):
    """Accept a DrValue, a raw code or a plain bit (bool/0/1)."""
    if isinstance(value, DrValue):
        return value.code
    if isinstance(value, bool):
        return ONE if value else ZERO
    v = int(value)
    if v in (0, 1):
        return ONE if v else ZERO
    raise ValueError(f"cannot interpret {value!r} as a dual-rail value")


def _kleene_table(fn, arity, n_out):
    """Output codes for every combination of spacer/0/1 inputs.

    An output is valid only when every completion of the spacer inputs gives
    the same value; this is the early-propagation behaviour of a dual-rail
    gate whose rails are monotone functions of the input rails.
    """
    table = {}
    for codes in product((SPACER, ZERO, ONE), repeat=arity):
        free = [i for i, c in enumerate(codes) if c == SPACER]
        results = set()
        for fill in product((0, 1), repeat=len(free)):
            bits = [c == ONE for c in codes]
            for i, b in zip(free, fill):
                bits[i] = bool(b)
            results.add(tuple(fn(*bits)))
        out = []
        for k in range(n_out):
            vals = {r[k] for r in results}
            out.append((ONE if vals.pop() else ZERO) if len(vals) == 1 else SPACER)
        table[codes] = tuple(out)
    return table


def _comp1(codes):
    """Single-bit magnitude compare cell: (a, b[, go]) -> (decision, go_next).

    Stays in spacer until enabled; decides when the bits differ, otherwise
    passes the enable to the next lower bit.
    """
    a, b = codes[0], codes[1]
    if len(codes) > 2 and codes[2] != ONE:
        return (SPACER, SPACER)
    if a == SPACER or b == SPACER:
        return (SPACER, SPACER)
    if a != b:
        return (ONE if a == ONE else ZERO, SPACER)
    return (SPACER, ONE)


def _merge(codes):
    valid = {c for c in codes if c != SPACER}
    if len(valid) > 1:
        raise SimulationFault("merge of conflicting values")
    return (valid.pop() if valid else SPACER,)


GATE_TABLES = {
    "AND2": _kleene_table(lambda a, b: (a and b,), 2, 1),
    "OR2": _kleene_table(lambda a, b: (a or b,), 2, 1),
    "HA": _kleene_table(lambda a, b: (a != b, a and b), 2, 2),
    "FA": _kleene_table(lambda a, b, c: ((a + b + c) % 2 == 1, a + b + c >= 2), 3, 2),
    "SPINV": _kleene_table(lambda a: (not a,), 1, 1),
}

GATE_FUNCS = {"COMP1": _comp1, "MERGE": _merge}

GATE_OUTPUTS = {"AND2": 1, "OR2": 1, "HA": 2, "FA": 2, "SPINV": 1, "COMP1": 2, "MERGE": 1}


def eval_codes(kind, codes):
    if ILLEGAL in codes:
        raise SimulationFault(f"{kind} input in the illegal (1,1) state")
    table = GATE_TABLES.get(kind)
    if table is not None:
        return table[tuple(codes)]
    return GATE_FUNCS[kind](tuple(codes))


def dr_gate_eval(kind, inputs):
    """Evaluate a gate on DrValue inputs; returns a tuple of DrValues."""
    return tuple(DrValue.from_code(c) for c in eval_codes(kind, [to_code(v) for v in inputs]))
