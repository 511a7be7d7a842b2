"""Biased random bits from asynchronously sampling a ring-oscillator clock.

A bit is 1 when the request lands in the high part of the selected tap's
waveform, so its probability equals that tap's duty cycle as long as request
times are uncorrelated with the oscillator phase.
"""
from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np


class PrbgError(Exception):
    pass


class ProtocolError(PrbgError):
    pass


@dataclass(frozen=True)
class RoModel:
    period: float
    taps: tuple[float, ...]
    phase: float = 0.0
    powered: bool = True

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")
        if not self.taps:
            raise ValueError("at least one tap is required")
        if any(not 0.0 < d < 1.0 for d in self.taps):
            raise ValueError(f"tap duty cycles must lie in (0, 1): {self.taps}")
        if not 0.0 <= self.phase < self.period:
            raise ValueError("phase must lie in [0, period)")

    @classmethod
    def for_threshold(cls, T, period=1.0, phase=0.0):
        """Taps k/(2T) for k = 1..2T-1, one per reachable p2 value."""
        return cls(period, tuple(k / (2 * T) for k in range(1, 2 * T)), phase)


def ro_level(ro: RoModel, tap: int, t: float) -> bool:
    if not ro.powered:
        raise PrbgError("ring oscillator is powered down")
    return ((t + ro.phase) % ro.period) < ro.taps[tap] * ro.period


def next_edge(ro: RoModel, tap: int, t: float) -> float:
    """Time of the first clock edge strictly after ``t``."""
    pos = (t + ro.phase) % ro.period
    high = ro.taps[tap] * ro.period
    return t + (high - pos if pos < high else ro.period - pos)


def power_gate_cycle(ro: RoModel, deterministic_phase: bool, rng=None) -> RoModel:
    """Switch the oscillator off and on again.

    An inverter-only ring restarts at a random phase; a ring gated through a
    NAND/NOR always restarts at phase 0.
    """
    if deterministic_phase:
        phase = 0.0
    else:
        rng = rng if rng is not None else np.random.default_rng()
        phase = float(rng.uniform(0.0, ro.period))
    return replace(ro, phase=phase, powered=True)


def power_down(ro: RoModel) -> RoModel:
    return replace(ro, powered=False)


def tap_for_probability(ro: RoModel, p_target: float) -> int:
    # min() keeps the first of equal distances, i.e. the lower index
    return min(range(len(ro.taps)), key=lambda i: abs(ro.taps[i] - p_target))


class Owner(enum.Enum):
    NONE = "none"
    REQ = "req"
    CLK = "clk"


@dataclass
class SamplerState:
    """Set-dominant latch plus mutex, modelled at the level of their outputs."""

    latch: bool = False
    mutex_owner: Owner = Owner.NONE
    req: bool = False
    clk: bool = False
    ack_p: bool = False
    ack_n: bool = False
    busy_until: float = -math.inf
    trace: list = field(default_factory=list)

    def _check(self):
        if self.ack_p and self.ack_n:
            raise ProtocolError("both acknowledge rails asserted")

    def clock(self, level: bool):
        self.clk = level
        if level:
            self.latch = True  # set input dominates
            if self.mutex_owner is Owner.NONE:
                self.mutex_owner = Owner.CLK
        elif self.mutex_owner is Owner.CLK:
            # reset input is only driven by a request that won the mutex,
            # so the latch holds
            self.mutex_owner = Owner.REQ if self.req and not self.ack_p else Owner.NONE
        self.ack_p = self.req and self.latch and (self.ack_p or self.mutex_owner is Owner.CLK)
        self.ack_n = self.req and self.mutex_owner is Owner.REQ and not self.ack_p
        self.trace.append(("clk", level, self.ack_p, self.ack_n))
        self._check()

    def request(self, level: bool):
        self.req = level
        if level:
            if self.clk:
                self.mutex_owner = Owner.CLK
                self.latch = True
                self.ack_p = True
            else:
                self.mutex_owner = Owner.REQ
                self.latch = False
                self.ack_n = True
        else:
            self.ack_p = self.ack_n = False
            self.mutex_owner = Owner.CLK if self.clk else Owner.NONE
        self.trace.append(("req", level, self.ack_p, self.ack_n))
        self._check()


def sample(ro: RoModel, tap: int, req_time: float, sampler: SamplerState | None = None,
           hold: float = 0.0):
    """One request/acknowledge handshake; returns the dual-rail bit
    ``(ack_p, ack_n)`` resolved at the request.

    The request stays high for ``hold`` time units. Clock edges inside that
    window are applied to the sampler, and the resolved bit must survive them.
    """
    if not ro.powered:
        raise PrbgError("ring oscillator is powered down")
    sampler = sampler if sampler is not None else SamplerState()
    if req_time < sampler.busy_until:
        raise ProtocolError(f"request at {req_time} overlaps the handshake ending at {sampler.busy_until}")
    sampler.clk = ro_level(ro, tap, req_time)
    sampler.latch = sampler.latch or sampler.clk
    sampler.request(True)
    bit = (sampler.ack_p, sampler.ack_n)
    t = req_time
    end = req_time + hold
    while True:
        t = next_edge(ro, tap, t)
        if t >= end:
            break
        sampler.clock(ro_level(ro, tap, t))
        if (sampler.ack_p, sampler.ack_n) != bit:
            raise ProtocolError(f"output changed mid-handshake at t={t}")
    sampler.request(False)
    sampler.busy_until = end
    return bit


class PrbgBits:
    """Bit source for the feedback pipeline backed by one sampled oscillator.

    Consecutive requests are separated by a seeded random gap drawn uniformly
    from ``[0, spread * period)``, which stands in for the asynchronous
    environment being uncorrelated with the oscillator. The requested
    probability is quantised to the nearest tap.
    """

    def __init__(self, ro: RoModel, seed=None, spread: float = 7.0, hold: float = 0.0):
        self.ro = ro
        self.rng = np.random.default_rng(seed)
        self.spread = spread
        self.hold = hold
        self.time = 0.0
        self.sampler = SamplerState()

    def bernoulli(self, p) -> bool:
        if p <= 0.0:
            return False
        if p >= 1.0:
            return True
        self.time += self.hold + float(self.rng.uniform(0.0, self.spread * self.ro.period))
        tap = tap_for_probability(self.ro, p)
        ack_p, _ = sample(self.ro, tap, self.time, self.sampler, self.hold)
        self.sampler.trace.clear()
        return ack_p

    def bernoulli_array(self, p, size):
        p = np.broadcast_to(np.asarray(p, dtype=float), size)
        return np.array([self.bernoulli(v) for v in p.ravel()], dtype=bool).reshape(size)


# --- LFSR reference --------------------------------------------------------

LFSR8_TAPS = (8, 6, 5, 4)  # x^8 + x^6 + x^5 + x^4 + 1


@dataclass(frozen=True)
class LfsrModel:
    state: int
    width: int = 8
    taps: tuple[int, ...] = LFSR8_TAPS

    def __post_init__(self):
        if not 0 < self.state < (1 << self.width):
            raise ValueError(f"LFSR state must be nonzero and fit in {self.width} bits")


def lfsr_next(lfsr: LfsrModel):
    """Fibonacci step; returns the new register and the bit shifted out."""
    if lfsr.state == 0:
        raise ValueError("LFSR state is zero")
    out = lfsr.state & 1
    fb = 0
    for tap in lfsr.taps:
        fb ^= (lfsr.state >> (lfsr.width - tap)) & 1
    state = (lfsr.state >> 1) | (fb << (lfsr.width - 1))
    return replace(lfsr, state=state), out


def lfsr_bits(lfsr: LfsrModel, count: int):
    bits = []
    for _ in range(count):
        lfsr, b = lfsr_next(lfsr)
        bits.append(b)
    return lfsr, bits


# --- statistics ------------------------------------------------------------

@dataclass(frozen=True)
class BiasStats:
    n: int
    ones: int
    p_hat: float
    serial_correlation: float
    entropy_rate: float

    def to_dict(self):
        return {
            "n": self.n,
            "ones": self.ones,
            "p_hat": self.p_hat,
            "serial_correlation": self.serial_correlation,
            "entropy_rate": self.entropy_rate,
        }


def _block_entropy(bits, k):
    if k == 0:
        return 0.0
    counts = Counter(tuple(bits[i:i + k]) for i in range(len(bits) - k + 1))
    total = sum(counts.values())
    return -sum(c / total * math.log2(c / total) for c in counts.values())


def entropy_rate(bits, order: int = 8) -> float:
    """Conditional entropy H(X_{k+1} | X_1..X_k) in bits per sample."""
    bits = [int(b) for b in bits]
    order = min(order, max(len(bits) - 1, 0))
    return max(0.0, _block_entropy(bits, order + 1) - _block_entropy(bits, order))


def serial_correlation(bits) -> float:
    x = np.asarray(bits, dtype=float)
    if x.size < 2:
        return 0.0
    a, b = x[:-1] - x.mean(), x[1:] - x.mean()
    denom = float(np.sum((x - x.mean()) ** 2))
    return 0.0 if denom == 0.0 else float(np.sum(a * b) / denom)


def bias_report(bits, entropy_order: int = 8) -> BiasStats:
    bits = np.asarray(bits, dtype=np.int8)
    if bits.size < 1:
        raise ValueError("need at least one bit")
    ones = int(bits.sum())
    return BiasStats(
        n=int(bits.size),
        ones=ones,
        p_hat=ones / bits.size,
        serial_correlation=serial_correlation(bits),
        entropy_rate=entropy_rate(bits.tolist(), entropy_order),
    )


def gated_sequence(ro: RoModel, tap: int, count: int, deterministic_phase: bool,
                   offset: float = 0.0, rng=None):
    """Power-cycle the oscillator before every request and sample ``offset``
    time units after power-up. This is the start-up correlation hazard when
    ``deterministic_phase`` is set."""
    rng = rng if rng is not None else np.random.default_rng()
    bits = []
    for _ in range(count):
        ro = power_gate_cycle(power_down(ro), deterministic_phase, rng)
        ack_p, _ = sample(ro, tap, offset)
        bits.append(int(ack_p))
    return bits


def periodic_sequence(ro: RoModel, tap: int, count: int, interval: float, offset: float = 0.0):
    """Sample a free-running oscillator at a fixed request interval."""
    sampler = SamplerState()
    bits = []
    for i in range(count):
        ack_p, _ = sample(ro, tap, offset + i * interval, sampler)
        sampler.trace.clear()
        bits.append(int(ack_p))
    return bits


def uncorrelated_sequence(ro: RoModel, tap: int, count: int, rng=None, spread: float = 7.0):
    """Requests separated by random gaps; the phase seen by each is ~uniform."""
    src = PrbgBits(ro, seed=rng, spread=spread)
    tap_duty = ro.taps[tap]
    return [int(src.bernoulli(tap_duty)) for _ in range(count)]
