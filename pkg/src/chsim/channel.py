"""Everything between the source and the recorded counts.

This module handles setting scheduling, detector efficiency and empty
trial windows, readout bit flips, and one-directional information
leakage from Alice's station to Bob's with pluggable forging
strategies.  All transformations are record-wise: each trial's fate
depends only on its own inputs and its own random variates, so records
may be processed in any chunking.

Pipeline order within a simulated experiment is: schedule settings,
sample raw source outcomes, forge Bob's outcome if a leakage strategy
is configured, apply detector losses, then apply bit-flip noise to the
recorded flags.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ContractViolationError, DomainError
from .rng import FieldStreams
from .sources import EntangledPairSource


@dataclass(frozen=True)
class DetectorConfig:
    """Per-side detection efficiency plus the empty-window rate.

    An empty window models a trial slot in which the source emitted
    nothing: the trial is still recorded, with no detection on either
    side.  Efficiencies then thin each side's detections independently.
    """

    eta_alice: float = 1.0
    eta_bob: float = 1.0
    empty_window_rate: float = 0.0

    def __post_init__(self):
        for label in ("eta_alice", "eta_bob", "empty_window_rate"):
            value = getattr(self, label)
            if not np.isfinite(value) or not 0.0 <= value <= 1.0:
                raise DomainError(f"detector.{label} must lie in [0, 1], got {value}")


def schedule_settings(
    n: int, streams: FieldStreams, start: int = 0, threads: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """Independent uniform setting choices (0 or 1) for each side."""
    if n <= 0:
        raise DomainError(f"trial count must be positive, got {n}")
    a = (streams.uniforms("a_setting", n, start, threads) >= 0.5).astype(np.int8)
    b = (streams.uniforms("b_setting", n, start, threads) >= 0.5).astype(np.int8)
    return a, b


def apply_detection(
    a_detect,
    b_detect,
    det: DetectorConfig,
    streams: FieldStreams,
    start: int = 0,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Thin raw outcomes by efficiency and blank out empty windows."""
    a = np.array(a_detect, dtype=bool)
    b = np.array(b_detect, dtype=bool)
    if a.shape != b.shape or a.ndim != 1:
        raise DomainError("outcome arrays must be equal-length 1-d arrays")
    n = len(a)
    if det.eta_alice < 1.0:
        a &= streams.uniforms("det_a", n, start, threads) < det.eta_alice
    if det.eta_bob < 1.0:
        b &= streams.uniforms("det_b", n, start, threads) < det.eta_bob
    if det.empty_window_rate > 0.0:
        emitted = streams.uniforms("empty", n, start, threads) >= det.empty_window_rate
        a &= emitted
        b &= emitted
    return a, b


def bit_flip_noise(
    a_detect,
    b_detect,
    rate: float,
    streams: FieldStreams,
    start: int = 0,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Flip each recorded flag independently with the given probability."""
    if not np.isfinite(rate) or not 0.0 <= rate <= 1.0:
        raise DomainError(f"flip rate must lie in [0, 1], got {rate}")
    a = np.array(a_detect, dtype=bool)
    b = np.array(b_detect, dtype=bool)
    if a.shape != b.shape or a.ndim != 1:
        raise DomainError("outcome arrays must be equal-length 1-d arrays")
    if rate > 0.0:
        n = len(a)
        a ^= streams.uniforms("flip_a", n, start, threads) < rate
        b ^= streams.uniforms("flip_b", n, start, threads) < rate
    return a, b


class LeakageMode(Enum):
    """Which of Alice's data the side channel carries to Bob."""

    NONE = "none"
    OUTCOME_ONLY = "outcome-only"
    SETTING_ONLY = "setting-only"
    BOTH = "both"


@dataclass(frozen=True)
class LeakageChannel:
    """One-directional side channel from Alice's station to Bob's."""

    mode: LeakageMode = LeakageMode.NONE

    @property
    def carries_setting(self) -> bool:
        return self.mode in (LeakageMode.SETTING_ONLY, LeakageMode.BOTH)

    @property
    def carries_outcome(self) -> bool:
        return self.mode in (LeakageMode.OUTCOME_ONLY, LeakageMode.BOTH)


class LeakedSignal:
    """Per-trial data the channel actually delivered to the forger.

    Accessing a field the channel does not carry raises
    :class:`~chsim.errors.ContractViolationError`.
    """

    def __init__(self, setting=None, outcome=None):
        self._setting = setting
        self._outcome = outcome

    @property
    def setting(self) -> np.ndarray:
        if self._setting is None:
            raise ContractViolationError(
                "forging strategy read the remote setting, but the channel "
                "mode does not carry it"
            )
        return self._setting

    @property
    def outcome(self) -> np.ndarray:
        if self._outcome is None:
            raise ContractViolationError(
                "forging strategy read the remote outcome, but the channel "
                "mode does not carry it"
            )
        return self._outcome


class ForgingStrategy:
    """Base class: produce Bob's outcomes from leaked data.

    A strategy sees the leaked signal, Bob's own analyzer angles, and
    one local uniform variate per trial; ``needs_setting`` and
    ``needs_outcome`` declare up front which leaked fields it reads.
    """

    name = "forging-strategy"
    needs_setting = False
    needs_outcome = False

    def forge(self, leaked: LeakedSignal, bob_angles: np.ndarray, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class OutcomeMimicStrategy(ForgingStrategy):
    """Copy Alice's leaked outcome with some probability, else flip a coin."""

    name = "outcome-mimic"
    needs_outcome = True

    def __init__(self, copy_probability: float = 0.9):
        if not 0.0 <= copy_probability <= 1.0:
            raise DomainError(
                f"copy_probability must lie in [0, 1], got {copy_probability}"
            )
        self.copy_probability = float(copy_probability)

    def forge(self, leaked, bob_angles, u):
        q = self.copy_probability
        copy = u < q
        # Trials not copying reuse the same variate, rescaled, as a fair coin.
        coin = u < q + (1.0 - q) / 2.0
        return np.where(copy, leaked.outcome.astype(bool), coin)


class SettingBiasStrategy(ForgingStrategy):
    """Bias Bob's detection rate by the leaked analyzer angle.

    Detection probability is ``1/2 + gain/2 * cos 2(bob - alice)``,
    which keeps Bob's marginal at 1/2 on average while correlating his
    counts with the remote setting.
    """

    name = "setting-bias"
    needs_setting = True

    def __init__(self, gain: float = 1.0):
        if not 0.0 <= gain <= 1.0:
            raise DomainError(f"gain must lie in [0, 1], got {gain}")
        self.gain = float(gain)

    def forge(self, leaked, bob_angles, u):
        p = 0.5 + 0.5 * self.gain * np.cos(2.0 * (bob_angles - leaked.setting))
        return u < p


class TargetCorrelationStrategy(ForgingStrategy):
    """Sample Bob's outcome from a target state's exact conditional.

    Given both the leaked setting and outcome, Bob draws from
    P(B | A, a, b) of the target state, so the forged pair reproduces
    the target's joint distribution whenever Alice's raw marginal
    matches the target marginal.  A conditioning outcome the target
    assigns probability zero falls back to the unconditional marginal.
    """

    name = "target-correlation"
    needs_setting = True
    needs_outcome = True

    def __init__(self, target: EntangledPairSource):
        self.target = target

    def forge(self, leaked, bob_angles, u):
        a_angles = leaked.setting
        a_out = leaked.outcome.astype(bool)
        p11 = np.asarray(self.target.coincidence_probability(a_angles, bob_angles))
        pa = np.asarray(self.target.transmission_probability(a_angles))
        pb = np.asarray(self.target.transmission_probability(bob_angles))
        given_detect = np.divide(p11, pa, out=pb.copy(), where=pa > 0.0)
        given_miss = np.divide(pb - p11, 1.0 - pa, out=pb.copy(), where=pa < 1.0)
        p = np.where(a_out, given_detect, given_miss)
        return u < np.clip(p, 0.0, 1.0)


def leak_and_forge(
    alice_angles,
    alice_outcomes,
    channel: LeakageChannel,
    strategy: ForgingStrategy,
    bob_angles,
    streams: FieldStreams,
    start: int = 0,
    threads: int = 1,
) -> np.ndarray:
    """Bob's forged outcomes for one contiguous range of trials.

    The channel mode selects which of Alice's per-trial data reach the
    strategy; a strategy declaring a need the mode cannot satisfy
    raises :class:`~chsim.errors.ContractViolationError` before any
    trial is processed.
    """
    alice_angles = np.asarray(alice_angles, dtype=np.float64)
    bob_angles = np.asarray(bob_angles, dtype=np.float64)
    alice_outcomes = np.asarray(alice_outcomes, dtype=bool)
    if strategy.needs_setting and not channel.carries_setting:
        raise ContractViolationError(
            f"strategy {strategy.name!r} requires the leaked setting, but "
            f"channel mode {channel.mode.value!r} does not carry it"
        )
    if strategy.needs_outcome and not channel.carries_outcome:
        raise ContractViolationError(
            f"strategy {strategy.name!r} requires the leaked outcome, but "
            f"channel mode {channel.mode.value!r} does not carry it"
        )
    leaked = LeakedSignal(
        setting=alice_angles if channel.carries_setting else None,
        outcome=alice_outcomes if channel.carries_outcome else None,
    )
    u = streams.uniforms("forge", len(bob_angles), start, threads)
    return np.asarray(strategy.forge(leaked, bob_angles, u), dtype=bool)


@dataclass(frozen=True)
class SignalingDemo:
    """Result of the periodic-pattern signaling demonstration."""

    control: int
    bits: np.ndarray
    marginal: float
    decoded: int

    @property
    def accuracy(self) -> float:
        return 1.0 if self.decoded == self.control else 0.0


def signaling_pattern_demo(control: int, length: int) -> SignalingDemo:
    """Deterministic bit sequence whose marginal hides a transmitted bit.

    Control 0 emits period-2 alternation 0101...; control 1 emits the
    period-4 pattern 00110011....  Either way exactly half the bits are
    1, so the single-bit marginal reveals nothing, yet a decoder reading
    two consecutive bits recovers the control bit without error.
    """
    if control not in (0, 1):
        raise DomainError(f"control must be 0 or 1, got {control}")
    if length < 4 or length % 4 != 0:
        raise DomainError(
            f"length must be a positive multiple of 4, got {length}"
        )
    t = np.arange(length, dtype=np.int64)
    bits = (t % 2 if control == 0 else (t // 2) % 2).astype(np.int8)
    decoded = 1 if bits[0] == bits[1] else 0
    return SignalingDemo(
        control=control,
        bits=bits,
        marginal=float(bits.mean()),
        decoded=decoded,
    )
