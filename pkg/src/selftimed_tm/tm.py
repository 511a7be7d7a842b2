"""Single-class Tsetlin Machine: clauses, voting and the training loop.

Automaton states are stored as one integer array of shape
``(num_clauses, 2 * num_features)`` with values in ``1..2n``; states ``<= n``
exclude their literal. Literals are the features followed by their
complements.
"""
from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .automata import counter_step_array
from .feedback import (Fb2Polarity, FeedbackType, IdealBits, TaCommand, fb1, fb2_array,
                       fb3_array, fb_probabilities)

SNAPSHOT_VERSION = 1


class ConfigError(ValueError):
    pass


class EmptyClauseMode(str, enum.Enum):
    SPLIT = "split"  # 1 while training, 0 at inference
    ONE = "one"
    ZERO = "zero"


class SkipPolicy(str, enum.Enum):
    """q3 source for automaton updates that skip the random draw."""

    PATTERN = "pattern"  # deterministic sequence with the (s-1)/s rate
    MAJORITY = "majority"  # always the (s-1)/s branch


class Mode(str, enum.Enum):
    TRAIN = "train"
    INFER = "infer"


@dataclass
class TmConfig:
    num_features: int
    num_clauses: int = 20
    threshold_T: int = 15
    specificity_s: float = 2.0
    state_depth_n: int = 50
    d_period: int = 1
    seed: int = 0
    empty_clause_mode: str = EmptyClauseMode.SPLIT.value
    fb2_polarity: str = Fb2Polarity.PAPER.value
    skip_policy: str = SkipPolicy.PATTERN.value

    def validate(self):
        if self.num_features < 1:
            raise ConfigError("num_features must be positive")
        if self.num_clauses < 2 or self.num_clauses % 2:
            raise ConfigError("num_clauses must be a positive even number")
        if self.threshold_T < 1:
            raise ConfigError("threshold_T must be >= 1")
        if not self.specificity_s > 1:
            raise ConfigError("specificity_s must be > 1")
        if self.state_depth_n < 1:
            raise ConfigError("state_depth_n must be positive")
        if self.d_period < 1:
            raise ConfigError("d_period must be >= 1")
        try:
            EmptyClauseMode(self.empty_clause_mode)
            Fb2Polarity(self.fb2_polarity)
            SkipPolicy(self.skip_policy)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self


@dataclass(frozen=True)
class Sample:
    features: tuple[int, ...]
    label: bool


@dataclass
class ClauseTeam:
    """View of one clause: its automaton states and polarity."""

    ta_states: np.ndarray
    negative: bool


@dataclass
class VoteResult:
    clause_outputs: np.ndarray
    vote_sum: int
    predicted: bool


@dataclass
class UpdateReport:
    penalties: int = 0
    rewards: int = 0
    inactions: int = 0

    @property
    def total(self):
        return self.penalties + self.rewards + self.inactions

    def __iadd__(self, other):
        self.penalties += other.penalties
        self.rewards += other.rewards
        self.inactions += other.inactions
        return self


@dataclass
class EpochStats:
    epoch: int
    train_accuracy: float
    updates: UpdateReport = field(default_factory=UpdateReport)


class TsetlinMachine:
    def __init__(self, config: TmConfig, source=None):
        self.config = config.validate()
        c = config
        self.states = np.full((c.num_clauses, 2 * c.num_features), c.state_depth_n, dtype=np.int32)
        self.negative = np.arange(c.num_clauses) % 2 == 1  # +,-,+,-,...
        shuffle_seq, bits_seq = np.random.SeedSequence(c.seed).spawn(2)
        self.shuffle_rng = np.random.default_rng(shuffle_seq)
        self.source = source if source is not None else IdealBits(np.random.default_rng(bits_seq))
        self.update_counter = 0  # automaton updates issued so far
        self.step_count = 0
        self.epochs_trained = 0

    @property
    def include(self):
        return self.states > self.config.state_depth_n

    def exclude_mask(self):
        """Exclude bits per clause, features first then complements."""
        return ~self.include

    def team(self, j) -> ClauseTeam:
        return ClauseTeam(self.states[j].copy(), bool(self.negative[j]))

    def _check(self, features):
        f = np.asarray(features, dtype=np.uint8)
        if f.shape != (self.config.num_features,):
            raise ConfigError(f"expected {self.config.num_features} features, got shape {f.shape}")
        return f

    def clause_outputs(self, features, mode=Mode.INFER):
        x = literal_vector(self._check(features))
        return _clauses(self.include, x, mode, self.config.empty_clause_mode)

    def vote(self, features, mode=Mode.INFER) -> VoteResult:
        return vote_and_classify(self.clause_outputs(features, mode), self.negative)

    # -- serialisation --
    def to_dict(self):
        return {
            "version": SNAPSHOT_VERSION,
            "config": asdict(self.config),
            "epochs_trained": self.epochs_trained,
            "update_counter": self.update_counter,
            "step_count": self.step_count,
            "polarity": "alternating",
            "states": self.states.tolist(),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        if data.get("version") != SNAPSHOT_VERSION:
            raise ConfigError(f"unsupported snapshot version {data.get('version')!r}")
        tm = cls(TmConfig(**data["config"]))
        states = np.asarray(data["states"], dtype=np.int32)
        if states.shape != tm.states.shape:
            raise ConfigError(f"state array has shape {states.shape}, expected {tm.states.shape}")
        n = tm.config.state_depth_n
        if states.min() < 1 or states.max() > 2 * n:
            raise ConfigError("automaton state out of range")
        tm.states = states
        tm.epochs_trained = int(data.get("epochs_trained", 0))
        tm.update_counter = int(data.get("update_counter", 0))
        tm.step_count = int(data.get("step_count", 0))
        return tm


def literal_vector(features):
    f = np.asarray(features, dtype=np.uint8)
    if f.ndim != 1:
        raise ConfigError("features must be a flat bit vector")
    return np.concatenate([f, 1 - f])


def _clauses(include, x, mode, empty_mode):
    # a clause is 0 iff some included literal is 0
    out = ~np.any(include & (x == 0), axis=-1)
    empty = ~np.any(include, axis=-1)
    empty_value = {
        EmptyClauseMode.SPLIT: Mode(mode) is Mode.TRAIN,
        EmptyClauseMode.ONE: True,
        EmptyClauseMode.ZERO: False,
    }[EmptyClauseMode(empty_mode)]
    return np.where(empty, empty_value, out).astype(np.uint8)


def clause_eval(team: ClauseTeam, literals, mode=Mode.INFER, n=None, empty_mode=EmptyClauseMode.SPLIT):
    """Conjunction of the included literals of one clause.

    ``n`` is the number of states per action; when omitted ``team.ta_states``
    is taken to be a boolean include vector.
    """
    literals = np.asarray(literals, dtype=np.uint8)
    states = np.asarray(team.ta_states)
    include = states > n if n is not None else states.astype(bool)
    if include.shape != literals.shape:
        raise ConfigError("literal vector length does not match the clause")
    return bool(_clauses(include, literals, mode, empty_mode))


def vote_and_classify(clause_outputs, negative) -> VoteResult:
    c = np.asarray(clause_outputs, dtype=np.uint8)
    neg = np.asarray(negative, dtype=bool)
    if c.shape != neg.shape:
        raise ConfigError("clause outputs and polarities differ in length")
    vote_sum = int(c[~neg].sum()) - int(c[neg].sum())
    return VoteResult(c, vote_sum, vote_sum >= 0)


def train_step(tm: TsetlinMachine, sample: Sample, source=None, learn=True) -> UpdateReport:
    """One feedback cycle. All feedback inputs come from the pre-update state."""
    cfg = tm.config
    source = source if source is not None else tm.source
    x = literal_vector(tm._check(sample.features))
    include = tm.include
    c = _clauses(include, x, Mode.TRAIN, cfg.empty_clause_mode).astype(bool)
    vote = vote_and_classify(c, tm.negative)

    stage1 = fb1(learn, sample.label)
    shape = tm.states.shape
    if stage1 is FeedbackType.TYPE0:
        return UpdateReport(inactions=int(np.prod(shape)))

    p2 = fb_probabilities(cfg.threshold_T, vote.vote_sum).p2
    q2 = np.asarray(source.bernoulli_array(p2, cfg.num_clauses), dtype=bool)
    stage2 = fb2_array(stage1, tm.negative, q2, cfg.fb2_polarity)

    # every automaton update advances the counter; only every d-th one draws
    # q3 from the bit source, the others follow the skip policy
    count = shape[0] * shape[1]
    ticks = tm.update_counter + np.arange(count).reshape(shape)
    tm.update_counter += count
    p3 = (cfg.specificity_s - 1) / cfg.specificity_s
    q3 = skipped_q3(tm.step_count, shape, p3, cfg.skip_policy)
    tm.step_count += 1
    draw = ticks % cfg.d_period == 0
    k = int(draw.sum())
    if k:
        q3[draw] = np.asarray(source.bernoulli_array(p3, k), dtype=bool)

    cmds = fb3_array(stage2[:, None], include, c[:, None], x[None, :], q3)
    tm.states = counter_step_array(tm.states, cmds, cfg.state_depth_n)
    return UpdateReport(
        penalties=int(np.count_nonzero(cmds == TaCommand.PENALTY)),
        rewards=int(np.count_nonzero(cmds == TaCommand.REWARD)),
        inactions=int(np.count_nonzero(cmds == TaCommand.INACTION)),
    )


_GOLDEN = (5 ** 0.5 - 1) / 2


def skipped_q3(step, shape, p3, policy=SkipPolicy.PATTERN):
    """Deterministic q3 for every automaton at training step ``step``.

    ``pattern`` gives automaton i the sequence ``floor((k+1)p3 + phi_i) >
    floor(k p3 + phi_i)``, whose ones occur at rate ``p3`` to within one in
    any window. The phases ``phi_i`` are spread by the golden ratio so
    neighbouring automata do not move in lockstep.
    """
    if SkipPolicy(policy) is SkipPolicy.MAJORITY:
        return np.ones(shape, dtype=bool)
    phase = (np.arange(int(np.prod(shape))).reshape(shape) * _GOLDEN) % 1.0
    return np.floor((step + 1) * p3 + phase) > np.floor(step * p3 + phase)


def train_epoch(tm: TsetlinMachine, samples, source=None, shuffle=True) -> EpochStats:
    samples = list(samples)
    if not samples:
        raise ValueError("cannot train on an empty dataset")
    order = tm.shuffle_rng.permutation(len(samples)) if shuffle else range(len(samples))
    report = UpdateReport()
    for i in order:
        report += train_step(tm, samples[i], source)
    tm.epochs_trained += 1
    return EpochStats(tm.epochs_trained, accuracy(tm, samples), report)


def predict(tm: TsetlinMachine, features) -> bool:
    return tm.vote(features, Mode.INFER).predicted


def predict_batch(tm: TsetlinMachine, features):
    """Infer-mode predictions for a (samples, features) array."""
    X = np.asarray(features, dtype=np.uint8)
    lit = np.concatenate([X, 1 - X], axis=1)
    inc = tm.include
    out = ~np.any(inc[None, :, :] & (lit[:, None, :] == 0), axis=2)
    empty = ~np.any(inc, axis=1)
    empty_value = EmptyClauseMode(tm.config.empty_clause_mode) is EmptyClauseMode.ONE
    out = np.where(empty[None, :], empty_value, out)
    votes = out[:, ~tm.negative].sum(axis=1) - out[:, tm.negative].sum(axis=1)
    return votes >= 0


def accuracy(tm: TsetlinMachine, samples) -> float:
    samples = list(samples)
    if not samples:
        raise ValueError("cannot score an empty dataset")
    X = np.array([s.features for s in samples], dtype=np.uint8)
    y = np.array([bool(s.label) for s in samples])
    return float(np.mean(predict_batch(tm, X) == y))
