"""Trial-outcome generators: a quantum joint sampler and local models.

Two families of sources are provided.  :class:`EntangledPairSource`
samples the joint detection distribution of a pure two-photon state
through single-channel polarizers; it consults both settings at once
and is nonlocal by construction.  :class:`LocalHiddenVariableModel`
draws a hidden value once per trial and evaluates each side's response
from its own setting, the hidden value, and local randomness only; the
response call signature carries no remote-setting argument, so locality
is enforced by interface shape.  :class:`TemporalMixtureModel` switches
between local components on a fixed block schedule and is therefore
itself local trial by trial.

All samplers read named uniform streams from
:class:`~chsim.rng.FieldStreams`, keyed by absolute trial index, so any
range of trials can be regenerated independently of chunking or worker
count.

Outcome convention: ``True`` means the photon was transmitted and
detected; ``False`` covers both absorption and (downstream) detector
loss.  Detection efficiency is not applied here; see the channel
module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, ClassVar

import numpy as np

from .errors import DomainError, UnknownModelError, ValidationError
from .rng import FieldStreams

MAXIMAL_R = np.pi / 4

#: Angle set (alpha, alpha_prime, beta, beta_prime) maximizing variant 0
#: for the maximally entangled state at unit efficiency.
CH_OPTIMAL_ANGLES = (0.0, np.pi / 4, np.pi / 8, 3 * np.pi / 8)

#: Default angle set for the detection-biased model, chosen to maximize
#: the fair-sampled correlator combination rather than a CH variant.
DETECTION_BIAS_ANGLES = (0.0, np.pi / 8, np.pi / 16, -np.pi / 16)


@dataclass(frozen=True)
class EntangledPairSource:
    """Pure two-photon polarization state ``cos(r)|HH> + sin(r)|VV>``.

    ``r`` in [0, pi/4] interpolates from a product state (r = 0) to the
    maximally entangled state (r = pi/4).  Detection means transmission
    through a single-channel polarizer at the given analyzer angle.
    """

    r: float = MAXIMAL_R
    name: ClassVar[str] = "entangled-pair"

    def __post_init__(self):
        if not np.isfinite(self.r) or not 0.0 <= self.r <= MAXIMAL_R:
            raise DomainError(f"state parameter r must lie in [0, pi/4], got {self.r}")

    def coincidence_probability(self, a, b):
        """P(both transmit) for analyzers at angles ``a`` and ``b``.

        The transmission amplitude is the projection of the state onto
        ``|a>|b>``, giving ``(cos r cos a cos b + sin r sin a sin b)^2``.
        For the maximal state this reduces to ``cos^2(a - b) / 2``.
        """
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        amp = np.cos(self.r) * np.cos(a) * np.cos(b) + np.sin(self.r) * np.sin(a) * np.sin(b)
        out = amp * amp
        return float(out) if out.ndim == 0 else out

    def transmission_probability(self, angle):
        """Single-side transmission probability, independent of the far side."""
        angle = np.asarray(angle, dtype=np.float64)
        c, s = np.cos(angle), np.sin(angle)
        out = np.cos(self.r) ** 2 * c * c + np.sin(self.r) ** 2 * s * s
        return float(out) if out.ndim == 0 else out

    def outcome_probabilities(self, a, b):
        """Probabilities of the four outcome pairs, stacked on the last axis.

        Order: (detect, detect), (detect, miss), (miss, detect),
        (miss, miss).  The four entries are nonnegative and sum to 1.
        """
        p11 = np.asarray(self.coincidence_probability(a, b))
        pa = np.asarray(self.transmission_probability(a))
        pb = np.asarray(self.transmission_probability(b))
        p11, pa, pb = np.broadcast_arrays(p11, pa, pb)
        stacked = np.stack([p11, pa - p11, pb - p11, 1.0 - pa - pb + p11], axis=-1)
        return np.clip(stacked, 0.0, 1.0)


def quantum_joint_probs(source: EntangledPairSource, a, b):
    """Outcome-pair distribution for one setting pair; see the method."""
    return source.outcome_probabilities(a, b)


def uniform_polarization(u: np.ndarray) -> np.ndarray:
    """Hidden polarization angle distributed uniformly on [0, pi)."""
    return u * np.pi


def sign_response(setting, lam, u):
    """Detect exactly when the analyzer lies within pi/4 of the hidden angle."""
    return np.cos(2.0 * (np.asarray(setting) - lam)) > 0.0


def make_coin_hidden(rate: float) -> Callable[[np.ndarray], np.ndarray]:
    """Hidden variable that is 1 ("flash") with the given probability."""

    def coin_hidden(u):
        return u < rate

    return coin_hidden


def flash_response(setting, lam, u):
    """Detect exactly on flash trials, regardless of setting."""
    return np.broadcast_to(np.asarray(lam, dtype=bool), np.shape(u)).copy()


def make_biased_response(sharpness: float) -> Callable:
    """Detection probability ``|cos 2(setting - lam)|**sharpness``.

    Large sharpness concentrates detections on trials where the hidden
    polarization nearly matches the local analyzer, which is the
    setting-dependent loss that fair-sampling estimators cannot see.
    """

    def biased_response(setting, lam, u):
        return u < np.abs(np.cos(2.0 * (np.asarray(setting) - lam))) ** sharpness

    return biased_response


def make_constant_response(p: float) -> Callable:
    """Detection with fixed probability, ignoring setting and hidden value."""

    def constant_response(setting, lam, u):
        return u < p

    return constant_response


@dataclass(frozen=True)
class LocalHiddenVariableModel:
    """Local model: shared hidden value, per-side response functions.

    ``hidden_sampler`` maps a uniform variate to the hidden value.  Each
    response function receives ``(setting, lam, u)``: the local analyzer
    angle, the hidden value, and one local uniform variate.  There is no
    slot for the remote setting or outcome.
    """

    name: str
    hidden_sampler: Callable[[np.ndarray], np.ndarray]
    alice_response: Callable
    bob_response: Callable
    default_angles: tuple[float, float, float, float] = CH_OPTIMAL_ANGLES
    summary: str = ""


@dataclass(frozen=True)
class TemporalMixtureModel:
    """Local components activated in fixed-length blocks of trials.

    Trial ``t`` uses component ``pattern[(t // block_length) % len(pattern)]``.
    The active component depends only on the trial index, never on
    settings or outcomes, so the mixture is local whenever every
    component is.
    """

    name: str
    components: tuple[LocalHiddenVariableModel, ...]
    block_length: int
    pattern: tuple[int, ...]
    default_angles: tuple[float, float, float, float] = CH_OPTIMAL_ANGLES
    summary: str = ""

    def __post_init__(self):
        if not self.components:
            raise DomainError("mixture needs at least one component")
        if self.block_length < 1:
            raise DomainError(f"block_length must be positive, got {self.block_length}")
        if not self.pattern:
            raise DomainError("mixture pattern must be nonempty")
        if any(not 0 <= i < len(self.components) for i in self.pattern):
            raise DomainError("mixture pattern indexes a missing component")

    def component_index(self, trial_index):
        """Index of the component active at each absolute trial index."""
        trial_index = np.asarray(trial_index, dtype=np.int64)
        pattern = np.asarray(self.pattern, dtype=np.int64)
        return pattern[(trial_index // self.block_length) % len(pattern)]


SourceModel = EntangledPairSource | LocalHiddenVariableModel | TemporalMixtureModel


def _sample_lhv(
    model: LocalHiddenVariableModel,
    alice_angles: np.ndarray,
    bob_angles: np.ndarray,
    streams: FieldStreams,
    start: int,
    threads: int,
) -> tuple[np.ndarray, np.ndarray]:
    n = len(alice_angles)
    lam = model.hidden_sampler(streams.uniforms("lam", n, start, threads))
    u_a = streams.uniforms("resp_a", n, start, threads)
    u_b = streams.uniforms("resp_b", n, start, threads)
    a = np.asarray(model.alice_response(alice_angles, lam, u_a), dtype=bool)
    b = np.asarray(model.bob_response(bob_angles, lam, u_b), dtype=bool)
    return a, b


def _sample_quantum(
    source: EntangledPairSource,
    alice_angles: np.ndarray,
    bob_angles: np.ndarray,
    streams: FieldStreams,
    start: int,
    threads: int,
) -> tuple[np.ndarray, np.ndarray]:
    n = len(alice_angles)
    p11 = source.coincidence_probability(alice_angles, bob_angles)
    pa = source.transmission_probability(alice_angles)
    pb = source.transmission_probability(bob_angles)
    # One uniform selects among the four outcome pairs by cumulative
    # probability: [0, p11) both, [p11, pa) Alice only, [pa, pa+pb-p11)
    # Bob only, remainder neither.
    u = streams.uniforms("joint", n, start, threads)
    t_both = p11
    t_alice = pa
    t_bob = pa + pb - p11
    a = u < t_alice
    b = (u < t_both) | ((u >= t_alice) & (u < t_bob))
    return a, b


def sample_responses(
    model: SourceModel,
    alice_angles,
    bob_angles,
    streams: FieldStreams,
    start: int = 0,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Raw (pre-loss) detection flags for one contiguous range of trials.

    ``alice_angles`` and ``bob_angles`` are per-trial analyzer angles in
    radians; trial ``i`` of this call has absolute index ``start + i``,
    which determines its random variates.
    """
    alice_angles = np.asarray(alice_angles, dtype=np.float64)
    bob_angles = np.asarray(bob_angles, dtype=np.float64)
    if alice_angles.shape != bob_angles.shape or alice_angles.ndim != 1:
        raise DomainError("angle arrays must be equal-length 1-d arrays")
    if isinstance(model, EntangledPairSource):
        return _sample_quantum(model, alice_angles, bob_angles, streams, start, threads)
    if isinstance(model, LocalHiddenVariableModel):
        return _sample_lhv(model, alice_angles, bob_angles, streams, start, threads)
    if isinstance(model, TemporalMixtureModel):
        n = len(alice_angles)
        indices = np.arange(start, start + n, dtype=np.int64)
        which = model.component_index(indices)
        a = np.empty(n, dtype=bool)
        b = np.empty(n, dtype=bool)
        lam_u = streams.uniforms("lam", n, start, threads)
        u_a = streams.uniforms("resp_a", n, start, threads)
        u_b = streams.uniforms("resp_b", n, start, threads)
        for ci, comp in enumerate(model.components):
            mask = which == ci
            if not mask.any():
                continue
            lam = comp.hidden_sampler(lam_u[mask])
            a[mask] = np.asarray(
                comp.alice_response(alice_angles[mask], lam, u_a[mask]), dtype=bool
            )
            b[mask] = np.asarray(
                comp.bob_response(bob_angles[mask], lam, u_b[mask]), dtype=bool
            )
        return a, b
    raise DomainError(f"unsupported source model type {type(model).__name__}")


def sample_trial(
    model: SourceModel, a: float, b: float, streams: FieldStreams, index: int = 0
) -> tuple[bool, bool]:
    """Outcome pair of the single trial at the given absolute index."""
    av, bv = sample_responses(
        model, np.asarray([a]), np.asarray([b]), streams, start=index
    )
    return bool(av[0]), bool(bv[0])


@dataclass(frozen=True)
class ModelInfo:
    """Catalog entry: construction parameters and locality class."""

    name: str
    summary: str
    local: bool
    defaults: dict


def _make_cosine_sign() -> LocalHiddenVariableModel:
    return LocalHiddenVariableModel(
        name="cosine-sign",
        hidden_sampler=uniform_polarization,
        alice_response=sign_response,
        bob_response=sign_response,
        default_angles=CH_OPTIMAL_ANGLES,
        summary="deterministic: detect iff cos 2(setting - lam) > 0",
    )


def _make_detection_biased(sharpness: float = 8.0) -> LocalHiddenVariableModel:
    if not sharpness > 0:
        raise DomainError(f"sharpness must be positive, got {sharpness}")
    response = make_biased_response(float(sharpness))
    return LocalHiddenVariableModel(
        name="detection-biased",
        hidden_sampler=uniform_polarization,
        alice_response=response,
        bob_response=response,
        default_angles=DETECTION_BIAS_ANGLES,
        summary="detection probability |cos 2(setting - lam)|^sharpness",
    )


def _make_coordinated_flash(rate: float = 0.5) -> LocalHiddenVariableModel:
    if not 0.0 <= rate <= 1.0:
        raise DomainError(f"rate must lie in [0, 1], got {rate}")
    return LocalHiddenVariableModel(
        name="coordinated-flash",
        hidden_sampler=make_coin_hidden(float(rate)),
        alice_response=flash_response,
        bob_response=flash_response,
        default_angles=CH_OPTIMAL_ANGLES,
        summary="both sides detect exactly on shared flash trials; "
        "every variant sits exactly on the zero boundary",
    )


def _make_independent_coin(p_alice: float = 0.5, p_bob: float = 0.5) -> LocalHiddenVariableModel:
    for label, p in (("p_alice", p_alice), ("p_bob", p_bob)):
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"{label} must lie in [0, 1], got {p}")
    return LocalHiddenVariableModel(
        name="independent-coin",
        hidden_sampler=lambda u: np.zeros_like(u),
        alice_response=make_constant_response(float(p_alice)),
        bob_response=make_constant_response(float(p_bob)),
        default_angles=CH_OPTIMAL_ANGLES,
        summary="setting-independent coin flips on each side",
    )


def _make_alternating_flash(
    rate_a: float = 0.75, rate_b: float = 0.25, block_length: int = 1000
) -> TemporalMixtureModel:
    for label, rate in (("rate_a", rate_a), ("rate_b", rate_b)):
        if not 0.0 <= rate <= 1.0:
            raise DomainError(f"{label} must lie in [0, 1], got {rate}")
    return TemporalMixtureModel(
        name="alternating-flash",
        components=(
            _make_coordinated_flash(float(rate_a)),
            _make_coordinated_flash(float(rate_b)),
        ),
        block_length=int(block_length),
        pattern=(0, 1),
        default_angles=CH_OPTIMAL_ANGLES,
        summary="temporal mixture of two boundary-saturating flash components",
    )


_REGISTRY: dict[str, tuple[Callable, ModelInfo]] = {
    "cosine-sign": (
        _make_cosine_sign,
        ModelInfo("cosine-sign", "deterministic sign rule on the hidden angle", True, {}),
    ),
    "detection-biased": (
        _make_detection_biased,
        ModelInfo(
            "detection-biased",
            "setting-dependent detection probability (fair-sampling hazard)",
            True,
            {"sharpness": 8.0},
        ),
    ),
    "coordinated-flash": (
        _make_coordinated_flash,
        ModelInfo(
            "coordinated-flash",
            "shared flash; saturates every variant at the boundary",
            True,
            {"rate": 0.5},
        ),
    ),
    "independent-coin": (
        _make_independent_coin,
        ModelInfo(
            "independent-coin",
            "uncorrelated coins on each side",
            True,
            {"p_alice": 0.5, "p_bob": 0.5},
        ),
    ),
    "alternating-flash": (
        _make_alternating_flash,
        ModelInfo(
            "alternating-flash",
            "block-scheduled mixture of two flash components",
            True,
            {"rate_a": 0.75, "rate_b": 0.25, "block_length": 1000},
        ),
    ),
    "entangled-pair": (
        EntangledPairSource,
        ModelInfo(
            "entangled-pair",
            "quantum joint sampler (consults both settings; not local)",
            False,
            {"r": MAXIMAL_R},
        ),
    ),
}


def builtin_models() -> dict[str, ModelInfo]:
    """Catalog of available source models keyed by name."""
    return {name: info for name, (_, info) in _REGISTRY.items()}


def make_model(name: str, **params) -> SourceModel:
    """Construct a cataloged model, validating parameter names and values."""
    if name not in _REGISTRY:
        known = ", ".join(sorted(_REGISTRY))
        raise UnknownModelError(f"unknown source model {name!r}; available: {known}")
    factory, info = _REGISTRY[name]
    unknown = set(params) - set(info.defaults)
    if unknown:
        raise ValidationError(
            f"source.{sorted(unknown)[0]}: unknown parameter for model {name!r}"
        )
    return factory(**params)


def default_angles(model: SourceModel) -> tuple[float, float, float, float]:
    """Angle set a model was designed around; quantum sources use the
    variant-0 optimum of the maximal state."""
    return getattr(model, "default_angles", CH_OPTIMAL_ANGLES)
