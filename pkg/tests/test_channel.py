"""Channel stages: scheduling, losses, readout noise, leakage, signaling."""

import numpy as np
import pytest

from chsim import (
    CH_OPTIMAL_ANGLES,
    ContractViolationError,
    DetectorConfig,
    DomainError,
    EntangledPairSource,
    FieldStreams,
    ForgingStrategy,
    LeakageChannel,
    LeakageMode,
    LeakedSignal,
    OutcomeMimicStrategy,
    SettingBiasStrategy,
    TargetCorrelationStrategy,
    apply_detection,
    bit_flip_noise,
    leak_and_forge,
    make_model,
    sample_responses,
    schedule_settings,
    signaling_pattern_demo,
)


# ---------------------------------------------------------------------------
# Detector configuration and setting schedule.


def test_detector_config_validation():
    DetectorConfig()
    for bad in (
        {"eta_alice": -0.1},
        {"eta_bob": 1.5},
        {"empty_window_rate": -0.2},
        {"eta_alice": np.nan},
    ):
        with pytest.raises(DomainError):
            DetectorConfig(**bad)


def test_schedule_rejects_empty_runs():
    streams = FieldStreams(0)
    with pytest.raises(DomainError):
        schedule_settings(0, streams)
    with pytest.raises(DomainError):
        schedule_settings(-3, streams)


def test_schedule_is_balanced_and_independent():
    streams = FieldStreams(101)
    a, b = schedule_settings(100_000, streams)
    assert a.dtype == np.int8 and b.dtype == np.int8
    assert set(np.unique(a)) == {0, 1}
    for i in (0, 1):
        for j in (0, 1):
            assert np.mean((a == i) & (b == j)) == pytest.approx(0.25, abs=0.01)
    again_a, again_b = schedule_settings(100_000, FieldStreams(101))
    np.testing.assert_array_equal(a, again_a)
    np.testing.assert_array_equal(b, again_b)


# ---------------------------------------------------------------------------
# Detection thinning and empty windows.


def test_perfect_detection_is_identity():
    streams = FieldStreams(5)
    a_in = np.array([True, False, True, True])
    b_in = np.array([False, False, True, True])
    a, b = apply_detection(a_in, b_in, DetectorConfig(), streams)
    np.testing.assert_array_equal(a, a_in)
    np.testing.assert_array_equal(b, b_in)


def test_dead_detector_never_fires():
    streams = FieldStreams(5)
    ones = np.ones(1000, dtype=bool)
    a, b = apply_detection(ones, ones, DetectorConfig(eta_alice=0.0), streams)
    assert not a.any()
    assert b.all()


def test_detection_rates_factorize():
    streams = FieldStreams(77)
    n = 100_000
    ones = np.ones(n, dtype=bool)
    det = DetectorConfig(eta_alice=0.75, eta_bob=0.75)
    a, b = apply_detection(ones, ones, det, streams)
    assert a.mean() == pytest.approx(0.75, abs=0.005)
    assert b.mean() == pytest.approx(0.75, abs=0.005)
    assert np.mean(a & b) == pytest.approx(0.5625, abs=0.006)


def test_empty_windows_blank_both_sides_together():
    streams = FieldStreams(78)
    n = 50_000
    ones = np.ones(n, dtype=bool)
    det = DetectorConfig(empty_window_rate=0.3)
    a, b = apply_detection(ones, ones, det, streams)
    np.testing.assert_array_equal(a, b)
    assert a.mean() == pytest.approx(0.7, abs=0.01)


def test_detection_shape_mismatch():
    with pytest.raises(DomainError):
        apply_detection(np.ones(3, bool), np.ones(4, bool), DetectorConfig(), FieldStreams(0))


def test_detection_chunk_invariance():
    det = DetectorConfig(eta_alice=0.8, eta_bob=0.6, empty_window_rate=0.1)
    streams = FieldStreams(9)
    rng = np.random.default_rng(2)
    a_in = rng.random(5000) < 0.7
    b_in = rng.random(5000) < 0.7
    full = apply_detection(a_in, b_in, det, streams)
    cut = 1777
    head = apply_detection(a_in[:cut], b_in[:cut], det, streams)
    tail = apply_detection(a_in[cut:], b_in[cut:], det, streams, start=cut)
    np.testing.assert_array_equal(np.concatenate([head[0], tail[0]]), full[0])
    np.testing.assert_array_equal(np.concatenate([head[1], tail[1]]), full[1])


# ---------------------------------------------------------------------------
# Readout bit flips.


def test_bit_flip_edge_rates():
    streams = FieldStreams(3)
    a_in = np.array([True, False, True])
    b_in = np.array([False, False, True])
    a, b = bit_flip_noise(a_in, b_in, 0.0, streams)
    np.testing.assert_array_equal(a, a_in)
    np.testing.assert_array_equal(b, b_in)
    a, b = bit_flip_noise(a_in, b_in, 1.0, streams)
    np.testing.assert_array_equal(a, ~a_in)
    np.testing.assert_array_equal(b, ~b_in)


def test_bit_flip_rate_statistics():
    streams = FieldStreams(12)
    n = 100_000
    zeros = np.zeros(n, dtype=bool)
    a, b = bit_flip_noise(zeros, zeros, 0.01, streams)
    assert a.mean() == pytest.approx(0.01, abs=0.002)
    assert b.mean() == pytest.approx(0.01, abs=0.002)
    assert not np.array_equal(a, b)


def test_bit_flip_validation():
    streams = FieldStreams(0)
    ones = np.ones(4, dtype=bool)
    for rate in (-0.1, 1.1, np.nan):
        with pytest.raises(DomainError):
            bit_flip_noise(ones, ones, rate, streams)


# ---------------------------------------------------------------------------
# Leakage channel and forging strategies.


def test_channel_mode_capabilities():
    assert not LeakageChannel(LeakageMode.NONE).carries_setting
    assert not LeakageChannel(LeakageMode.NONE).carries_outcome
    assert LeakageChannel(LeakageMode.SETTING_ONLY).carries_setting
    assert not LeakageChannel(LeakageMode.SETTING_ONLY).carries_outcome
    assert LeakageChannel(LeakageMode.BOTH).carries_setting
    assert LeakageChannel(LeakageMode.BOTH).carries_outcome


def test_mode_mismatch_rejected_before_forging():
    streams = FieldStreams(0)
    angles = np.zeros(10)
    outcomes = np.ones(10, dtype=bool)
    cases = [
        (OutcomeMimicStrategy(), LeakageMode.SETTING_ONLY),
        (OutcomeMimicStrategy(), LeakageMode.NONE),
        (SettingBiasStrategy(), LeakageMode.OUTCOME_ONLY),
        (TargetCorrelationStrategy(EntangledPairSource()), LeakageMode.OUTCOME_ONLY),
        (TargetCorrelationStrategy(EntangledPairSource()), LeakageMode.SETTING_ONLY),
    ]
    for strategy, mode in cases:
        with pytest.raises(ContractViolationError, match="does not carry"):
            leak_and_forge(
                angles, outcomes, LeakageChannel(mode), strategy, angles, streams
            )


def test_undeclared_read_caught_at_access():
    """A strategy that lies about its needs still cannot read missing data."""

    class Sneaky(ForgingStrategy):
        name = "sneaky"

        def forge(self, leaked, bob_angles, u):
            return leaked.outcome

    with pytest.raises(ContractViolationError, match="does not carry"):
        leak_and_forge(
            np.zeros(5),
            np.ones(5, dtype=bool),
            LeakageChannel(LeakageMode.NONE),
            Sneaky(),
            np.zeros(5),
            FieldStreams(0),
        )


def test_leaked_signal_accessors():
    signal = LeakedSignal(setting=np.zeros(2), outcome=None)
    np.testing.assert_array_equal(signal.setting, np.zeros(2))
    with pytest.raises(ContractViolationError):
        signal.outcome


def test_outcome_mimic_extremes():
    streams = FieldStreams(21)
    rng = np.random.default_rng(4)
    alice = rng.random(50_000) < 0.5
    angles = np.zeros(50_000)
    channel = LeakageChannel(LeakageMode.OUTCOME_ONLY)
    copied = leak_and_forge(
        angles, alice, channel, OutcomeMimicStrategy(1.0), angles, streams
    )
    np.testing.assert_array_equal(copied, alice)
    coin = leak_and_forge(
        angles, alice, channel, OutcomeMimicStrategy(0.0), angles, streams
    )
    assert coin.mean() == pytest.approx(0.5, abs=0.01)
    assert abs(np.corrcoef(coin, alice)[0, 1]) < 0.02
    with pytest.raises(DomainError):
        OutcomeMimicStrategy(1.5)


def test_setting_bias_extremes():
    streams = FieldStreams(22)
    alice_angles = np.full(1000, 0.3)
    outcomes = np.zeros(1000, dtype=bool)
    channel = LeakageChannel(LeakageMode.SETTING_ONLY)
    aligned = leak_and_forge(
        alice_angles, outcomes, channel, SettingBiasStrategy(1.0), alice_angles, streams
    )
    assert aligned.all()
    crossed = leak_and_forge(
        alice_angles,
        outcomes,
        channel,
        SettingBiasStrategy(1.0),
        alice_angles + np.pi / 2,
        streams,
    )
    assert not crossed.any()
    with pytest.raises(DomainError):
        SettingBiasStrategy(-0.5)


def test_target_correlation_reproduces_target_joint():
    """Forged pairs hit the target state's joint grid at every setting pair."""
    target = EntangledPairSource()
    source = make_model("cosine-sign")
    strategy = TargetCorrelationStrategy(target)
    channel = LeakageChannel(LeakageMode.BOTH)
    streams = FieldStreams(33)
    n = 100_000
    alpha, alpha_prime, beta, beta_prime = CH_OPTIMAL_ANGLES
    start = 0
    for a in (alpha, alpha_prime):
        for b in (beta, beta_prime):
            a_angles = np.full(n, a)
            b_angles = np.full(n, b)
            alice, _ = sample_responses(source, a_angles, b_angles, streams, start=start)
            bob = leak_and_forge(
                a_angles, alice, channel, strategy, b_angles, streams, start=start
            )
            expected = target.coincidence_probability(a, b)
            tol = 4.0 * 0.5 / np.sqrt(n)
            assert np.mean(alice & bob) == pytest.approx(expected, abs=tol)
            assert bob.mean() == pytest.approx(
                target.transmission_probability(b), abs=tol
            )
            start += n


def test_forge_chunk_invariance():
    streams = FieldStreams(44)
    rng = np.random.default_rng(8)
    n = 6000
    a_angles = rng.uniform(0, np.pi, n)
    b_angles = rng.uniform(0, np.pi, n)
    alice = rng.random(n) < 0.5
    channel = LeakageChannel(LeakageMode.BOTH)
    strategy = TargetCorrelationStrategy(EntangledPairSource())
    full = leak_and_forge(a_angles, alice, channel, strategy, b_angles, streams)
    cut = 2500
    head = leak_and_forge(
        a_angles[:cut], alice[:cut], channel, strategy, b_angles[:cut], streams
    )
    tail = leak_and_forge(
        a_angles[cut:], alice[cut:], channel, strategy, b_angles[cut:], streams, start=cut
    )
    np.testing.assert_array_equal(np.concatenate([head, tail]), full)


# ---------------------------------------------------------------------------
# Periodic-pattern signaling demonstration.


def test_signaling_demo_control_zero():
    demo = signaling_pattern_demo(0, 8)
    np.testing.assert_array_equal(demo.bits, [0, 1, 0, 1, 0, 1, 0, 1])
    assert demo.marginal == 0.5
    assert demo.decoded == 0
    assert demo.accuracy == 1.0


def test_signaling_demo_control_one():
    demo = signaling_pattern_demo(1, 8)
    np.testing.assert_array_equal(demo.bits, [0, 0, 1, 1, 0, 0, 1, 1])
    assert demo.marginal == 0.5
    assert demo.decoded == 1
    assert demo.accuracy == 1.0


def test_signaling_demo_minimal_length():
    assert signaling_pattern_demo(0, 4).decoded == 0
    assert signaling_pattern_demo(1, 4).decoded == 1


def test_signaling_demo_validation():
    with pytest.raises(DomainError):
        signaling_pattern_demo(2, 8)
    for length in (0, 3, 6, -4):
        with pytest.raises(DomainError):
            signaling_pattern_demo(0, length)
