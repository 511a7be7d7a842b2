import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selftimed_tm.tm import (ClauseTeam, ConfigError, Mode, Sample, TmConfig, TsetlinMachine,
                             accuracy, clause_eval, literal_vector, predict, predict_batch,
                             skipped_q3, train_epoch, train_step, vote_and_classify)


class Ones:
    """Bit source that always answers 1."""

    def bernoulli(self, p):
        return True

    def bernoulli_array(self, p, size):
        return np.ones(size, dtype=bool)


def small(**kw):
    base = dict(num_features=2, num_clauses=2, state_depth_n=3, threshold_T=2)
    base.update(kw)
    return TmConfig(**base)


def test_literal_vector():
    assert literal_vector([1, 0, 1]).tolist() == [1, 0, 1, 0, 1, 0]


def test_clause_eval_examples():
    lits = literal_vector([1, 0])
    assert clause_eval(ClauseTeam(np.array([1, 0, 0, 1]), False), lits)
    assert not clause_eval(ClauseTeam(np.array([0, 1, 0, 0]), False), lits)
    # counter states with n=3: state 4 includes
    assert not clause_eval(ClauseTeam(np.array([3, 4, 1, 1]), False), lits, n=3)
    with pytest.raises(ConfigError):
        clause_eval(ClauseTeam(np.array([1, 0]), False), lits)


def test_empty_clause_modes():
    empty = ClauseTeam(np.zeros(4), False)
    lits = literal_vector([1, 1])
    assert clause_eval(empty, lits, Mode.TRAIN) and not clause_eval(empty, lits, Mode.INFER)
    assert clause_eval(empty, lits, Mode.INFER, empty_mode="one")
    assert not clause_eval(empty, lits, Mode.TRAIN, empty_mode="zero")


def test_vote_examples():
    neg = [False, True, False, True]
    r = vote_and_classify([1, 0, 1, 0], neg)
    assert (r.vote_sum, r.predicted) == (2, True)
    r = vote_and_classify([1, 1, 0, 1], neg)
    assert (r.vote_sum, r.predicted) == (-1, False)
    assert vote_and_classify([1, 1, 0, 0], neg).predicted  # tie resolves to 1


def test_polarity_alternates():
    tm = TsetlinMachine(TmConfig(num_features=3, num_clauses=6))
    assert tm.negative.tolist() == [False, True] * 3


def test_config_validation():
    for bad in (dict(num_clauses=3), dict(threshold_T=0), dict(specificity_s=1.0),
                dict(state_depth_n=0), dict(d_period=0), dict(fb2_polarity="x"),
                dict(skip_policy="x"), dict(num_features=0)):
        with pytest.raises(ConfigError):
            TsetlinMachine(small(**bad))


def test_feature_length_checked():
    tm = TsetlinMachine(small())
    with pytest.raises(ConfigError):
        tm.vote((1, 0, 1))


def test_untrained_predicts_one():
    tm = TsetlinMachine(TmConfig(num_features=4))
    assert np.all(tm.states == 50) and not tm.include.any()
    assert predict(tm, (0, 1, 0, 1))
    assert predict_batch(tm, np.eye(4, dtype=int)).all()


def test_hand_traced_step():
    tm = TsetlinMachine(small(), source=Ones())
    rep = train_step(tm, Sample((1, 0), True))
    # clause 0 (positive) gets Type I, clause 1 (negative) gets Type II
    assert tm.states.tolist() == [[4, 2, 2, 4], [3, 4, 4, 3]]
    assert (rep.penalties, rep.rewards, rep.inactions) == (4, 2, 2)
    assert tm.update_counter == 8 and tm.step_count == 1


def test_swapped_polarity_step():
    tm = TsetlinMachine(small(fb2_polarity="swapped"), source=Ones())
    train_step(tm, Sample((1, 0), True))
    # q2=1 under the swapped polarity sends no feedback to either clause
    assert np.all(tm.states == 3)


def test_learn_zero_is_no_op():
    tm = TsetlinMachine(small(), source=Ones())
    rep = train_step(tm, Sample((1, 0), True), learn=False)
    assert np.all(tm.states == 3) and rep.inactions == 8 and rep.total == 8


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 1000), st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1),
                                                st.integers(0, 1), st.booleans()),
                                      min_size=1, max_size=10))
def test_one_command_per_automaton(seed, rows):
    tm = TsetlinMachine(TmConfig(num_features=3, num_clauses=4, state_depth_n=4, seed=seed))
    for *f, y in rows:
        before = tm.states.copy()
        rep = train_step(tm, Sample(tuple(f), y))
        assert rep.total == tm.states.size
        assert np.all(np.abs(tm.states - before) <= 1)
        assert tm.states.min() >= 1 and tm.states.max() <= 8


def xor_data():
    return [Sample((a, b, c), bool(a ^ b)) for a in (0, 1) for b in (0, 1) for c in (0, 1)]


def test_training_is_deterministic():
    runs = []
    for _ in range(2):
        tm = TsetlinMachine(TmConfig(num_features=3, num_clauses=10, threshold_T=5, seed=7))
        for _ in range(5):
            train_epoch(tm, xor_data())
        runs.append(tm.states.copy())
    assert np.array_equal(*runs)


def test_training_learns_conjunction():
    data = [Sample((a, b, c), bool(a and not b)) for a in (0, 1) for b in (0, 1) for c in (0, 1)]
    tm = TsetlinMachine(TmConfig(num_features=3, num_clauses=10, threshold_T=5, seed=1))
    for _ in range(40):
        stats = train_epoch(tm, data * 4)
    assert stats.train_accuracy == 1.0 and tm.epochs_trained == 40


def test_empty_dataset_raises():
    tm = TsetlinMachine(small())
    with pytest.raises(ValueError):
        train_epoch(tm, [])
    with pytest.raises(ValueError):
        accuracy(tm, [])


def test_predict_batch_matches_vote():
    rng = np.random.default_rng(0)
    for mode in ("split", "one", "zero"):
        tm = TsetlinMachine(TmConfig(num_features=5, num_clauses=8, state_depth_n=4,
                                     empty_clause_mode=mode))
        tm.states[:] = rng.integers(1, 9, tm.states.shape)
        tm.states[0] = 1  # keep one clause empty
        X = rng.integers(0, 2, (40, 5))
        assert predict_batch(tm, X).tolist() == [predict(tm, x) for x in X]


def test_json_round_trip():
    tm = TsetlinMachine(TmConfig(num_features=3, num_clauses=4, seed=3))
    train_epoch(tm, xor_data())
    back = TsetlinMachine.from_dict(json.loads(tm.to_json()))
    assert np.array_equal(back.states, tm.states)
    assert back.config == tm.config and back.epochs_trained == 1
    assert back.update_counter == tm.update_counter


def test_snapshot_validation():
    data = TsetlinMachine(small()).to_dict()
    with pytest.raises(ConfigError):
        TsetlinMachine.from_dict({**data, "version": 99})
    with pytest.raises(ConfigError):
        TsetlinMachine.from_dict({**data, "states": [[0, 1, 1, 1], [1, 1, 1, 1]]})
    with pytest.raises(ConfigError):
        TsetlinMachine.from_dict({**data, "states": [[1, 1, 1, 1]]})


@given(st.integers(0, 10_000), st.sampled_from([1.5, 2.0, 3.9, 10.0]))
def test_pattern_rate_is_p3(start, s):
    p3 = (s - 1) / s
    steps = 200
    hits = sum(skipped_q3(k, (3,), p3) for k in range(start, start + steps))
    # each automaton's ones track the rate to within one per window
    assert np.all(np.abs(hits - steps * p3) <= 1)


def test_majority_policy_is_all_ones():
    assert skipped_q3(5, (2, 3), 0.5, "majority").all()


def test_skip_period_reduces_draws():
    class Counting(Ones):
        def __init__(self):
            self.drawn = 0

        def bernoulli_array(self, p, size):
            self.drawn += int(np.prod(size))
            return super().bernoulli_array(p, size)

    for d, expected in ((1, 2 + 8), (4, 2 + 2)):
        src = Counting()
        tm = TsetlinMachine(small(d_period=d), source=src)
        train_step(tm, Sample((1, 0), True))
        assert src.drawn == expected
