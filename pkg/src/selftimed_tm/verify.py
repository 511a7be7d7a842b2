"""Exhaustive verification suites behind the ``verify`` command."""
from __future__ import annotations

from itertools import product

from . import automata, stg
from .feedback import FB3_TABLE, TaCommand, fb1, fb2, fb3, fb3_table_lookup

TARGETS = ("fb-tables", "ta-equivalence", "stg")

# fb2 written out case by case, independent of the implementation's structure
FB2_CASES = {
    (0, 0, 0): 0, (0, 0, 1): 0, (0, 1, 0): 0, (0, 1, 1): 0,
    (1, 0, 0): 0, (1, 1, 0): 0, (2, 0, 1): 0, (2, 1, 1): 0,
    (2, 1, 0): 1, (1, 1, 1): 2,
    (1, 0, 1): 1, (2, 0, 0): 2,
}

FB1_CASES = {(0, 0): 0, (0, 1): 0, (1, 1): 1, (1, 0): 2}


def check_fb_tables(table=FB3_TABLE):
    """fb1, fb2 and every fb3 input against the reference tables.

    ``table`` is the fb3 reference; pass a modified copy to check that a
    corrupted table is caught.
    """
    failures = []
    for (learn, y), want in FB1_CASES.items():
        got = fb1(learn, y)
        if got != want:
            failures.append({"stage": "fb1", "inputs": [learn, y], "expected": want, "got": int(got)})
    for (s1, neg, q2), want in FB2_CASES.items():
        got = fb2(s1, neg, q2)
        if got != want:
            failures.append({"stage": "fb2", "inputs": [s1, neg, q2], "expected": want, "got": int(got)})
    for s2, inc, c, x, q3 in product((0, 1, 2), (0, 1), (0, 1), (0, 1), (0, 1)):
        want = fb3_table_lookup(s2, inc, c, x, q3, table)
        got = fb3(s2, inc, c, x, q3)
        if got != want:
            row = next((list(p) for p, _ in table
                        if all(v is None or v == k for v, k in zip(p, (s2, inc, c, x, q3)))), None)
            failures.append({"stage": "fb3", "inputs": [s2, inc, c, x, q3],
                             "expected": int(want), "got": int(got), "table_row": row})
    return {"passed": not failures, "cases": len(FB1_CASES) + len(FB2_CASES) + 48,
            "failures": failures}


def check_onehot_steps(equations=automata.ONEHOT_EQUATIONS):
    """All 6 states x 3 commands keep the state vector one-hot."""
    bad = []
    for index in range(1, 7):
        for cmd in TaCommand:
            x = automata.onehot_next(automata.onehot_from_index(index), cmd is TaCommand.PENALTY,
                                     cmd is TaCommand.REWARD, equations)
            if sum(x.values()) != 1:
                bad.append({"state": index, "command": cmd.name, "next": x})
    return {"passed": not bad, "cases": 18, "failures": bad}


def check_ta_equivalence(max_len=12, equations=automata.ONEHOT_EQUATIONS):
    counter = automata.counter_realization(3)
    pairs = {
        "counter~onehot": automata.check_equivalence(counter, automata.onehot_realization(equations),
                                                     3, max_len),
        "counter~stg": automata.check_equivalence(counter, automata.stg_realization(3), 3, max_len),
    }
    onehot = check_onehot_steps(equations)
    result = {k: v.to_dict() for k, v in pairs.items()}
    result["onehot_steps"] = onehot
    result["passed"] = all(v.passed for v in pairs.values()) and onehot["passed"]
    return result


def check_stg(states_per_action=3, bound=100_000):
    report = stg.verify(stg.build_ta_stg(states_per_action), bound=bound)
    out = report.to_dict()
    out["passed"] = report.passed
    return out


def run_targets(targets=TARGETS):
    results = {}
    for name in targets:
        if name == "fb-tables":
            res = check_fb_tables()
        elif name == "ta-equivalence":
            res = check_ta_equivalence()
        elif name == "stg":
            res = check_stg()
        else:
            raise ValueError(f"unknown verification target {name!r}")
        results[name] = res
    return results


def mutate_fb3(row_index, new_command, table=FB3_TABLE):
    """Copy of ``table`` with one row's command replaced."""
    rows = list(table)
    pattern, _ = rows[row_index]
    rows[row_index] = (pattern, TaCommand(new_command))
    return tuple(rows)
