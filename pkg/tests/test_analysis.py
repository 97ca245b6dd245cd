"""Counting, estimation, and the partition violation statistic."""

import numpy as np
import pytest

from chsim import (
    CH_OPTIMAL_ANGLES,
    CountsTable,
    DomainError,
    EntangledPairSource,
    FieldStreams,
    InsufficientDataError,
    PartitionReport,
    TrialBatch,
    UndefinedConditionalError,
    accumulate_counts,
    ch_values,
    drop_empty_windows,
    estimate_probabilities,
    make_model,
    oi_residual_from_counts,
    outcome_conditional_marginals,
    partition_and_score,
    pi_residual_from_counts,
    sample_responses,
    schedule_settings,
    settings_conditional_marginals,
)


def model_batch(model, n, seed, angles=CH_OPTIMAL_ANGLES, index_offset=0):
    """End-to-end lossless run of a source model with random settings."""
    streams = FieldStreams(seed)
    a_idx, b_idx = schedule_settings(n, streams)
    a_angles = np.where(a_idx == 0, angles[0], angles[1])
    b_angles = np.where(b_idx == 0, angles[2], angles[3])
    av, bv = sample_responses(model, a_angles, b_angles, streams)
    return TrialBatch(np.arange(n) + index_offset, a_idx, b_idx, av, bv)


# ---------------------------------------------------------------------------
# Trial batches.


def test_batch_validation():
    with pytest.raises(DomainError):
        TrialBatch([0, 0], [0, 0], [0, 0], [True, True], [True, True])
    with pytest.raises(DomainError):
        TrialBatch([0, 1], [0, 2], [0, 0], [True, True], [True, True])
    with pytest.raises(DomainError):
        TrialBatch([0, 1], [0], [0, 0], [True, True], [True, True])


def test_batch_slicing_and_concat():
    batch = TrialBatch([1, 5, 9], [0, 1, 0], [1, 1, 0], [True, False, True], [False, False, True])
    assert len(batch) == 3
    head, tail = batch[:2], batch[2:]
    rebuilt = TrialBatch.concat([head, tail])
    np.testing.assert_array_equal(rebuilt.index, batch.index)
    np.testing.assert_array_equal(rebuilt.b_detect, batch.b_detect)
    assert len(TrialBatch.concat([])) == 0
    assert len(TrialBatch.empty()) == 0


def test_drop_empty_windows():
    batch = TrialBatch(
        [0, 1, 2, 3],
        [0, 0, 1, 1],
        [0, 1, 0, 1],
        [True, False, False, True],
        [False, False, True, False],
    )
    kept = drop_empty_windows(batch)
    np.testing.assert_array_equal(kept.index, [0, 2, 3])


# ---------------------------------------------------------------------------
# Counts.


def test_accumulate_empty_batch_is_zero():
    counts = accumulate_counts(TrialBatch.empty())
    assert counts.total_trials == 0
    np.testing.assert_array_equal(counts.n_coinc, np.zeros((2, 2)))


def test_accumulate_counts_by_hand():
    batch = TrialBatch(
        [0, 1, 2, 3, 4],
        [0, 0, 1, 1, 0],
        [0, 1, 0, 1, 0],
        [True, True, False, True, False],
        [True, False, True, True, True],
    )
    counts = accumulate_counts(batch)
    np.testing.assert_array_equal(counts.n_trials, [[2, 1], [1, 1]])
    np.testing.assert_array_equal(counts.n_coinc, [[1, 0], [0, 1]])
    np.testing.assert_array_equal(counts.n_alice, [[1, 1], [0, 1]])
    np.testing.assert_array_equal(counts.n_bob, [[2, 0], [1, 1]])


def test_counts_merge_matches_whole(rng):
    n = 10_000
    batch = TrialBatch(
        np.arange(n),
        rng.integers(0, 2, n),
        rng.integers(0, 2, n),
        rng.random(n) < 0.6,
        rng.random(n) < 0.6,
    )
    whole = accumulate_counts(batch)
    merged = accumulate_counts(batch[: n // 3]) + accumulate_counts(batch[n // 3 :])
    for name in ("n_trials", "n_coinc", "n_alice", "n_bob"):
        np.testing.assert_array_equal(getattr(whole, name), getattr(merged, name))
    assert whole.total_trials == n


def test_counts_invariants():
    good = np.full((2, 2), 10)
    CountsTable(good, good - 5, good - 2, good - 3)
    with pytest.raises(DomainError):
        CountsTable(good, good - 1, good - 5, good - 5)
    with pytest.raises(DomainError):
        CountsTable(good, good, good + 1, good)
    with pytest.raises(DomainError):
        CountsTable(good, good * 0 - 1, good, good)


# ---------------------------------------------------------------------------
# Probability estimation.


def test_estimate_requires_every_pair():
    counts = accumulate_counts(
        TrialBatch([0, 1], [0, 0], [0, 1], [True, True], [True, True])
    )
    with pytest.raises(InsufficientDataError, match=r"\(alice=1, bob=0\)"):
        estimate_probabilities(counts)


def test_estimate_mode_validation():
    counts = CountsTable(np.full((2, 2), 10), *(np.full((2, 2), 5),) * 3)
    with pytest.raises(DomainError):
        estimate_probabilities(counts, marginal_mode="median")
    with pytest.raises(DomainError):
        estimate_probabilities(counts, alice_partner=2)


def test_estimate_pooled_and_per_pair_by_hand():
    counts = CountsTable(
        n_trials=np.full((2, 2), 10),
        n_coinc=[[6, 2], [2, 2]],
        n_alice=[[6, 2], [4, 4]],
        n_bob=[[6, 4], [2, 4]],
    )
    pooled = estimate_probabilities(counts)
    np.testing.assert_allclose(pooled.alice, [0.4, 0.4])
    np.testing.assert_allclose(pooled.bob, [0.4, 0.4])
    np.testing.assert_allclose(pooled.joint[0, 0], 0.6)
    assert pooled.eps_est == pytest.approx(0.2)
    per_pair = estimate_probabilities(counts, marginal_mode="per-pair")
    np.testing.assert_allclose(per_pair.alice, [0.6, 0.4])
    np.testing.assert_allclose(per_pair.bob, [0.6, 0.4])
    assert per_pair.eps_est == 0.0


def test_estimate_modes_agree_for_quantum_source():
    """Pooled and per-pair marginals coincide when the source respects
    remote-setting independence, up to binomial noise."""
    batch = model_batch(EntangledPairSource(), 400_000, seed=57)
    counts = accumulate_counts(batch)
    pooled = estimate_probabilities(counts)
    per_pair = estimate_probabilities(counts, marginal_mode="per-pair")
    n_min = counts.n_trials.min()
    tol = 3.0 * np.sqrt(0.5 / n_min)
    np.testing.assert_allclose(pooled.alice, per_pair.alice, atol=tol)
    np.testing.assert_allclose(pooled.bob, per_pair.bob, atol=tol)
    np.testing.assert_array_equal(pooled.joint, per_pair.joint)


def test_conditional_marginals_by_hand():
    counts = CountsTable(
        n_trials=np.full((2, 2), 100),
        n_coinc=np.full((2, 2), 50),
        n_alice=np.full((2, 2), 50),
        n_bob=np.full((2, 2), 50),
    )
    alice_given_bob, alice_base, bob_given_alice, bob_base = (
        outcome_conditional_marginals(counts)
    )
    np.testing.assert_allclose(alice_given_bob, np.ones((2, 2)))
    np.testing.assert_allclose(alice_base, np.full((2, 2), 0.5))
    assert oi_residual_from_counts(counts) == pytest.approx(0.5)


def test_conditional_requires_conditioning_events():
    n_bob = np.full((2, 2), 50)
    n_bob[1, 0] = 0
    counts = CountsTable(np.full((2, 2), 100), np.zeros((2, 2)), np.full((2, 2), 50), n_bob)
    with pytest.raises(UndefinedConditionalError, match=r"bob.*\(alice=1, bob=0\)"):
        outcome_conditional_marginals(counts)


def test_pi_residual_from_counts_toy_and_quantum():
    counts = CountsTable(
        np.full((2, 2), 1000),
        np.zeros((2, 2)),
        [[500, 900], [500, 500]],
        [[500, 500], [500, 500]],
    )
    assert pi_residual_from_counts(counts) == pytest.approx(0.4)
    batch = model_batch(EntangledPairSource(), 200_000, seed=58)
    quantum_counts = accumulate_counts(batch)
    bound = 3.0 * np.sqrt(0.5 / quantum_counts.n_trials.min())
    assert pi_residual_from_counts(quantum_counts) <= bound


def test_oi_residual_large_for_entangled_source():
    batch = model_batch(EntangledPairSource(), 100_000, seed=59)
    assert oi_residual_from_counts(accumulate_counts(batch)) > 0.2


def test_settings_conditional_shapes():
    batch = model_batch(make_model("independent-coin"), 4000, seed=60)
    alice, bob = settings_conditional_marginals(accumulate_counts(batch))
    assert alice.shape == (2, 2) and bob.shape == (2, 2)
    np.testing.assert_allclose(alice, 0.5, atol=0.05)


# ---------------------------------------------------------------------------
# Partition statistic.


def test_single_partition_equals_full_batch():
    batch = model_batch(EntangledPairSource(), 5000, seed=61)
    report = partition_and_score(batch, partitions=1, min_trials=1000)
    full = ch_values(estimate_probabilities(accumulate_counts(batch)))
    np.testing.assert_array_equal(report.values[0], full.values)
    assert np.all(np.isnan(report.variant_ses))


def test_partition_block_sizes():
    batch = model_batch(EntangledPairSource(), 10_007, seed=62)
    report = partition_and_score(batch, partitions=10, min_trials=1000)
    sizes = report.trials_per_partition
    assert sizes.sum() == 10_007
    assert sizes.max() - sizes.min() <= 1


def test_partition_insufficient_data():
    batch = model_batch(EntangledPairSource(), 5000, seed=63)
    with pytest.raises(InsufficientDataError, match="below the minimum"):
        partition_and_score(batch, partitions=10, min_trials=1000)
    with pytest.raises(DomainError):
        partition_and_score(batch, partitions=0)
    with pytest.raises(DomainError):
        partition_and_score(batch, partitions=1, min_trials=0)


def test_partition_needs_all_pairs_per_block():
    n = 4000
    batch = TrialBatch(
        np.arange(n),
        np.zeros(n, dtype=np.int8),
        np.zeros(n, dtype=np.int8),
        np.ones(n, dtype=bool),
        np.ones(n, dtype=bool),
    )
    with pytest.raises(InsufficientDataError, match="setting pair"):
        partition_and_score(batch, partitions=2, min_trials=1000)


def test_partition_thread_count_is_inert():
    batch = model_batch(EntangledPairSource(), 40_000, seed=64)
    single = partition_and_score(batch, partitions=20, threads=1)
    multi = partition_and_score(batch, partitions=20, threads=4)
    np.testing.assert_array_equal(single.values, multi.values)


def test_partition_fractions_separate_models():
    quantum = partition_and_score(
        model_batch(EntangledPairSource(), 100_000, seed=65), partitions=50
    )
    assert quantum.variant_fractions[0] >= 0.9
    coin = partition_and_score(
        model_batch(make_model("independent-coin"), 100_000, seed=66), partitions=50
    )
    assert coin.variant_fractions.max() == 0.0
    assert coin.any_fraction == 0.0


def test_violation_can_hide_in_an_aggregate():
    """Six violating blocks mixed with four noise blocks: the pooled
    value respects the bound while the partition fraction exposes it."""
    quantum = model_batch(EntangledPairSource(), 12_000, seed=67)
    noise = model_batch(make_model("independent-coin"), 8_000, seed=68, index_offset=12_000)
    combined = TrialBatch.concat([quantum, noise])
    pooled = ch_values(estimate_probabilities(accumulate_counts(combined)))
    assert pooled.values[0] < 0.0
    report = partition_and_score(combined, partitions=10, min_trials=1000)
    assert report.violated[:6, 0].all()
    assert not report.violated[6:, 0].any()
    assert report.variant_fractions[0] == pytest.approx(0.6)


def test_partition_report_properties():
    values = np.array([[0.1, -0.1, 0.2, -0.5], [-0.2, -0.1, 0.3, -0.5]])
    report = PartitionReport(values, values > 0, [10, 10])
    assert report.k == 2
    np.testing.assert_allclose(report.variant_fractions, [0.5, 0.0, 1.0, 0.0])
    assert report.any_fraction == 1.0
    np.testing.assert_allclose(report.variant_means, values.mean(axis=0))
    assert report.fraction_band == pytest.approx(3.0 * np.sqrt(0.25 / 2))
    with pytest.raises(DomainError):
        PartitionReport(np.zeros((2, 3)), np.zeros((2, 3), bool), [1, 1])
