"""Three-stage reinforcement feedback for a single-class Tsetlin Machine.

Stage 1 runs once per machine, stage 2 once per clause and stage 3 once per
automaton. Each stage only sees the output of the stage before it plus a few
local signals, which is what lets the hardware instantiate them as separate
tiles.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class FeedbackType(enum.IntEnum):
    TYPE0 = 0  # no feedback
    TYPE1 = 1
    TYPE2 = 2

    def rails(self) -> tuple[int, int, int]:
        """One-hot rails ordered (f2, f1, f0)."""
        return tuple(int(self == k) for k in (2, 1, 0))


class TaCommand(enum.IntEnum):
    INACTION = 0  # action0
    PENALTY = 1  # action1, drives the automaton input p
    REWARD = 2  # action2, drives the automaton input r

    def rails(self) -> tuple[int, int, int]:
        """One-hot rails ordered (a2, a1, a0)."""
        return tuple(int(self == k) for k in (2, 1, 0))


class Fb2Polarity(str, enum.Enum):
    PAPER = "paper"  # Type I passes on q2=1
    SWAPPED = "swapped"  # Type I passes on q2=0, as in the original algorithm


@dataclass(frozen=True)
class FeedbackProbabilities:
    p1: float
    p2: float


def fb1(learn, y_exp) -> FeedbackType:
    if not learn:
        return FeedbackType.TYPE0
    return FeedbackType.TYPE1 if y_exp else FeedbackType.TYPE2


def clamp(value, threshold):
    return max(-threshold, min(threshold, value))


def fb_probabilities(T: int, c_sum: int) -> FeedbackProbabilities:
    if T < 1:
        raise ValueError(f"threshold must be >= 1, got {T}")
    c = clamp(c_sum, T)
    return FeedbackProbabilities(p1=(T - c) / (2 * T), p2=(T + c) / (2 * T))


def fb2(stage1, c_neg, q2, polarity=Fb2Polarity.PAPER) -> FeedbackType:
    """Clause-level gating and polarity swap.

    With ``polarity="swapped"`` the meaning of ``q2`` is inverted before the
    case list is applied.
    """
    stage1 = FeedbackType(stage1)
    if Fb2Polarity(polarity) is Fb2Polarity.SWAPPED:
        q2 = not q2
    if stage1 is FeedbackType.TYPE0:
        return FeedbackType.TYPE0
    if stage1 is FeedbackType.TYPE1 and not q2:
        return FeedbackType.TYPE0
    if stage1 is FeedbackType.TYPE2 and q2:
        return FeedbackType.TYPE0
    # the remaining cases pass the type through, swapped for negated clauses
    if c_neg:
        return FeedbackType.TYPE1 if stage1 is FeedbackType.TYPE2 else FeedbackType.TYPE2
    return stage1


# Truth table rows for stage 3: (stage2, inc, c, x, q3) -> command.
# None marks a don't-care input. Combinations not covered give INACTION.
FB3_TABLE: tuple[tuple[tuple, TaCommand], ...] = (
    ((0, None, None, None, None), TaCommand.INACTION),
    ((1, 1, 0, None, 0), TaCommand.PENALTY),
    ((1, 1, 0, None, 1), TaCommand.INACTION),
    ((1, 1, 1, None, 0), TaCommand.INACTION),
    ((1, 1, 1, None, 1), TaCommand.REWARD),
    ((1, 0, 0, None, 0), TaCommand.REWARD),
    ((1, 0, 0, None, 1), TaCommand.INACTION),
    ((1, 0, 1, 0, 0), TaCommand.INACTION),
    ((1, 0, 1, 0, 1), TaCommand.REWARD),
    ((1, 0, 1, 1, 0), TaCommand.INACTION),
    ((1, 0, 1, 1, 1), TaCommand.PENALTY),
    ((2, 1, None, None, None), TaCommand.INACTION),
    ((2, 0, 1, 0, None), TaCommand.PENALTY),
    ((2, 0, 0, None, None), TaCommand.INACTION),
)


def fb3_table_lookup(stage2, inc, c, x, q3, table=FB3_TABLE) -> TaCommand:
    """Resolve a stage-3 command by matching rows of ``table``."""
    key = (int(stage2), int(inc), int(c), int(x), int(q3))
    for pattern, command in table:
        if all(p is None or p == k for p, k in zip(pattern, key)):
            return TaCommand(command)
    return TaCommand.INACTION


def fb3(stage2, inc, c, x, q3) -> TaCommand:
    """Automaton-level command.

    ``q3=1`` selects the (s-1)/s branch of the payoff matrix, ``q3=0`` the
    1/s branch.
    """
    stage2 = FeedbackType(stage2)
    if stage2 is FeedbackType.TYPE1:
        if inc:
            if c:
                return TaCommand.REWARD if q3 else TaCommand.INACTION
            return TaCommand.INACTION if q3 else TaCommand.PENALTY
        if c and x:
            return TaCommand.PENALTY if q3 else TaCommand.INACTION
        if c:
            return TaCommand.REWARD if q3 else TaCommand.INACTION
        return TaCommand.INACTION if q3 else TaCommand.REWARD
    if stage2 is FeedbackType.TYPE2:
        if not inc and c and not x:
            return TaCommand.PENALTY
    return TaCommand.INACTION


def fb2_array(stage1, c_neg, q2, polarity=Fb2Polarity.PAPER):
    """Vectorised :func:`fb2` over clauses; ``stage1`` is a scalar."""
    stage1 = FeedbackType(stage1)
    c_neg = np.asarray(c_neg, dtype=bool)
    q2 = np.asarray(q2, dtype=bool)
    if Fb2Polarity(polarity) is Fb2Polarity.SWAPPED:
        q2 = ~q2
    out = np.zeros(c_neg.shape, dtype=np.int8)
    if stage1 is FeedbackType.TYPE1:
        out[q2] = np.where(c_neg[q2], 2, 1)
    elif stage1 is FeedbackType.TYPE2:
        out[~q2] = np.where(c_neg[~q2], 1, 2)
    return out


def fb3_array(stage2, inc, c, x, q3):
    """Vectorised :func:`fb3`; all arguments broadcast together."""
    stage2 = np.asarray(stage2)
    inc = np.asarray(inc, dtype=bool)
    c = np.asarray(c, dtype=bool)
    x = np.asarray(x, dtype=bool)
    q3 = np.asarray(q3, dtype=bool)
    t1 = stage2 == 1
    t2 = stage2 == 2
    penalty = (t1 & inc & ~c & ~q3) | (t1 & ~inc & c & x & q3) | (t2 & ~inc & c & ~x)
    reward = (t1 & inc & c & q3) | (t1 & ~inc & c & ~x & q3) | (t1 & ~inc & ~c & ~q3)
    return np.where(penalty, np.int8(1), np.where(reward, np.int8(2), np.int8(0)))


def draw_q2(source, T, c_sum) -> bool:
    """Clause-level random bit, 1 with probability p2."""
    return bool(source.bernoulli(fb_probabilities(T, c_sum).p2))


def draw_q3(source, s) -> bool:
    """Automaton-level random bit, 1 with probability (s-1)/s."""
    return bool(source.bernoulli((s - 1) / s))


def should_randomize(update_counter: int, d_period: int) -> bool:
    if d_period < 1:
        raise ValueError("d_period must be >= 1")
    return update_counter % d_period == 0


class IdealBits:
    """Seeded Bernoulli source backed by a numpy Generator."""

    def __init__(self, seed=None):
        self.rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    def bernoulli(self, p) -> bool:
        return bool(self.rng.random() < p)

    def bernoulli_array(self, p, size):
        return self.rng.random(size) < np.asarray(p)
