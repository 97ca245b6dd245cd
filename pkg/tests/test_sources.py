"""Source models: quantum sampler against the projector oracle, local models."""

import inspect

import numpy as np
import pytest

import oracles
from chsim import (
    CH_OPTIMAL_ANGLES,
    DETECTION_BIAS_ANGLES,
    MAXIMAL_R,
    DomainError,
    EntangledPairSource,
    FieldStreams,
    LocalHiddenVariableModel,
    ProbabilityTable,
    TemporalMixtureModel,
    UnknownModelError,
    ValidationError,
    builtin_models,
    ch_values,
    default_angles,
    flash_response,
    make_model,
    quantum_joint_probs,
    sample_responses,
    sample_trial,
    sign_response,
)

LOCAL_NAMES = (
    "cosine-sign",
    "detection-biased",
    "coordinated-flash",
    "independent-coin",
    "alternating-flash",
)


def empirical_table(model, angles, n=100_000, seed=11):
    """Per-pair frequency table from independent trial ranges."""
    streams = FieldStreams(seed)
    joint = np.zeros((2, 2))
    alice = np.zeros(2)
    bob = np.zeros(2)
    start = 0
    for i, a in enumerate(angles[:2]):
        for j, b in enumerate(angles[2:]):
            av, bv = sample_responses(
                model, np.full(n, a), np.full(n, b), streams, start=start
            )
            joint[i, j] = np.mean(av & bv)
            if j == 0:
                alice[i] = av.mean()
            if i == 0:
                bob[j] = bv.mean()
            start += n
    return ProbabilityTable(joint, alice, bob, eps_est=0.01)


# ---------------------------------------------------------------------------
# Quantum source against the brute-force projector oracle.


def test_outcome_probabilities_match_projector_oracle(rng):
    for _ in range(100):
        r = rng.uniform(0.0, MAXIMAL_R)
        a, b = rng.uniform(-np.pi, np.pi, size=2)
        source = EntangledPairSource(r)
        got = source.outcome_probabilities(a, b)
        np.testing.assert_allclose(got, oracles.outcome_probabilities(r, a, b), atol=1e-12)
        assert got.min() >= 0.0
        assert np.sum(got) == pytest.approx(1.0, abs=1e-12)


def test_quantum_joint_probs_wrapper():
    source = EntangledPairSource()
    np.testing.assert_array_equal(
        quantum_joint_probs(source, 0.2, -0.4), source.outcome_probabilities(0.2, -0.4)
    )


def test_maximal_state_coincidence_closed_form(rng):
    source = EntangledPairSource(MAXIMAL_R)
    for _ in range(100):
        a, b = rng.uniform(-np.pi, np.pi, size=2)
        expected = 0.5 * np.cos(a - b) ** 2
        assert source.coincidence_probability(a, b) == pytest.approx(expected, abs=2e-15)
    t = rng.uniform(-np.pi, np.pi)
    assert source.coincidence_probability(t, t) == pytest.approx(0.5, abs=2e-15)
    assert source.coincidence_probability(t, t + np.pi / 2) == pytest.approx(0.0, abs=1e-15)


def test_marginals_ignore_far_setting(rng):
    source = EntangledPairSource(0.31)
    for _ in range(10):
        a, b1, b2 = rng.uniform(-np.pi, np.pi, size=3)
        p1 = source.outcome_probabilities(a, b1)
        p2 = source.outcome_probabilities(a, b2)
        assert p1[0] + p1[1] == pytest.approx(p2[0] + p2[1], abs=1e-12)
        assert p1[0] + p1[1] == pytest.approx(
            source.transmission_probability(a), abs=1e-12
        )


def test_state_parameter_validation():
    with pytest.raises(DomainError):
        EntangledPairSource(-0.1)
    with pytest.raises(DomainError):
        EntangledPairSource(np.pi / 3)
    with pytest.raises(DomainError):
        EntangledPairSource(np.nan)


def test_quantum_sampler_tracks_oracle_frequencies():
    r, a, b = 0.53, 0.37, -0.81
    source = EntangledPairSource(r)
    streams = FieldStreams(42)
    n = 100_000
    av, bv = sample_responses(source, np.full(n, a), np.full(n, b), streams)
    freqs = np.array(
        [
            np.mean(av & bv),
            np.mean(av & ~bv),
            np.mean(~av & bv),
            np.mean(~av & ~bv),
        ]
    )
    expected = oracles.outcome_probabilities(r, a, b)
    np.testing.assert_allclose(freqs, expected, atol=4.0 * 0.5 / np.sqrt(n))


def test_quantum_sampler_crossed_settings_never_coincide():
    source = EntangledPairSource(MAXIMAL_R)
    streams = FieldStreams(1)
    av, bv = sample_responses(
        source, np.zeros(50_000), np.full(50_000, np.pi / 2), streams
    )
    assert not np.any(av & bv)


# ---------------------------------------------------------------------------
# Local models.


def test_sign_response_geometry():
    u = np.zeros(3)
    assert np.all(sign_response(np.full(3, 0.3), np.full(3, 0.3), u))
    assert not np.any(sign_response(np.full(3, 0.3), np.full(3, 0.3 + np.pi / 2), u))


def test_local_responses_take_no_remote_argument():
    """Locality is enforced by shape: responses see only their own side."""
    for name in LOCAL_NAMES:
        model = make_model(name)
        components = (
            model.components if isinstance(model, TemporalMixtureModel) else (model,)
        )
        for comp in components:
            for response in (comp.alice_response, comp.bob_response):
                params = list(inspect.signature(response).parameters)
                assert params == ["setting", "lam", "u"], (name, params)


def test_flash_models_always_agree():
    model = make_model("coordinated-flash", rate=0.4)
    streams = FieldStreams(17)
    angles = FieldStreams(18).uniforms("lam", 5000) * np.pi
    av, bv = sample_responses(model, angles, angles[::-1].copy(), streams)
    np.testing.assert_array_equal(av, bv)
    assert 0.3 < av.mean() < 0.5
    assert flash_response(0.0, np.array([True, False]), np.zeros(2)).tolist() == [
        True,
        False,
    ]


def test_sample_trial_is_one_element_view():
    model = make_model("cosine-sign")
    streams = FieldStreams(9)
    av, bv = sample_responses(model, np.full(20, 0.5), np.full(20, 1.1), streams)
    for t in (0, 7, 19):
        assert sample_trial(model, 0.5, 1.1, streams, index=t) == (
            bool(av[t]),
            bool(bv[t]),
        )


def test_sample_responses_chunk_invariance():
    for model in (EntangledPairSource(), make_model("detection-biased")):
        streams = FieldStreams(23)
        a_angles = FieldStreams(24).uniforms("lam", 4000) * np.pi
        b_angles = FieldStreams(25).uniforms("lam", 4000) * np.pi
        full = sample_responses(model, a_angles, b_angles, streams)
        cut = 1234
        head = sample_responses(model, a_angles[:cut], b_angles[:cut], streams)
        tail = sample_responses(
            model, a_angles[cut:], b_angles[cut:], streams, start=cut
        )
        np.testing.assert_array_equal(np.concatenate([head[0], tail[0]]), full[0])
        np.testing.assert_array_equal(np.concatenate([head[1], tail[1]]), full[1])


def test_angle_arrays_must_match():
    with pytest.raises(DomainError):
        sample_responses(EntangledPairSource(), np.zeros(3), np.zeros(4), FieldStreams(0))


# ---------------------------------------------------------------------------
# Temporal mixtures.


def test_mixture_block_schedule():
    model = make_model("alternating-flash")
    assert model.component_index(0) == 0
    assert model.component_index(999) == 0
    assert model.component_index(1000) == 1
    assert model.component_index(1999) == 1
    assert model.component_index(2000) == 0
    np.testing.assert_array_equal(
        model.component_index(np.array([0, 1000, 2000, 3000])), [0, 1, 0, 1]
    )


def test_mixture_of_identical_components_collapses():
    single = make_model("coordinated-flash", rate=0.3)
    mixture = TemporalMixtureModel(
        name="pair",
        components=(single, make_model("coordinated-flash", rate=0.3)),
        block_length=100,
        pattern=(0, 1),
    )
    streams = FieldStreams(31)
    angles = np.zeros(3000)
    np.testing.assert_array_equal(
        sample_responses(mixture, angles, angles, streams),
        sample_responses(single, angles, angles, streams),
    )


def test_mixture_validation():
    flash = make_model("coordinated-flash")
    with pytest.raises(DomainError):
        TemporalMixtureModel("bad", (), 10, (0,))
    with pytest.raises(DomainError):
        TemporalMixtureModel("bad", (flash,), 0, (0,))
    with pytest.raises(DomainError):
        TemporalMixtureModel("bad", (flash,), 10, ())
    with pytest.raises(DomainError):
        TemporalMixtureModel("bad", (flash,), 10, (0, 1))


# ---------------------------------------------------------------------------
# Catalog.


def test_builtin_catalog_contents():
    catalog = builtin_models()
    assert set(catalog) == set(LOCAL_NAMES) | {"entangled-pair"}
    for name in LOCAL_NAMES:
        assert catalog[name].local
    assert not catalog["entangled-pair"].local
    for info in catalog.values():
        assert info.summary


def test_make_model_validation():
    with pytest.raises(UnknownModelError, match="available"):
        make_model("no-such-model")
    with pytest.raises(ValidationError, match="unknown parameter"):
        make_model("cosine-sign", sharpness=2.0)
    with pytest.raises(DomainError):
        make_model("coordinated-flash", rate=1.5)
    with pytest.raises(DomainError):
        make_model("detection-biased", sharpness=-1.0)
    coin = make_model("independent-coin", p_alice=0.3)
    assert isinstance(coin, LocalHiddenVariableModel)


def test_default_angles_per_model():
    assert default_angles(make_model("cosine-sign")) == CH_OPTIMAL_ANGLES
    assert default_angles(make_model("detection-biased")) == DETECTION_BIAS_ANGLES
    assert default_angles(EntangledPairSource()) == CH_OPTIMAL_ANGLES


# ---------------------------------------------------------------------------
# Statistical behavior of each builtin at its design angles.


def test_quantum_table_violates_variant_zero():
    table = empirical_table(EntangledPairSource(), CH_OPTIMAL_ANGLES)
    report = ch_values(table)
    assert report.values[0] == pytest.approx((np.sqrt(2.0) - 1.0) / 2.0, abs=0.015)
    assert report.violated[0]


def test_local_builtins_respect_the_bound():
    """Every local model stays at or below zero up to sampling noise."""
    for name in LOCAL_NAMES:
        model = make_model(name)
        table = empirical_table(model, default_angles(model))
        assert ch_values(table).values.max() <= 0.012, name


def test_coordinated_flash_saturates_all_variants():
    table = empirical_table(make_model("coordinated-flash"), CH_OPTIMAL_ANGLES)
    np.testing.assert_allclose(ch_values(table).values, np.zeros(4), atol=0.012)


def test_independent_coin_sits_well_inside():
    table = empirical_table(make_model("independent-coin"), CH_OPTIMAL_ANGLES)
    np.testing.assert_allclose(ch_values(table).values, np.full(4, -0.5), atol=0.012)
