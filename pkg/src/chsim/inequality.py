"""Numerical evaluation of Clauser-Horne style inequality expressions.

Conventions used throughout the package:

* Each side of the experiment chooses between two analyzer settings.
  Index 0 is the unprimed setting, index 1 the primed one.
* ``joint[i, j]`` is the probability that both sides register a count
  with Alice at setting ``i`` and Bob at setting ``j``; ``alice[i]`` and
  ``bob[j]`` are the corresponding single-side probabilities.
* A variant value is the left-hand side of one rearranged inequality,
  so nonpositive means satisfied and strictly positive means violated.

The four variants are the distinct ways of placing the minus sign among
the joint terms.  With ``J = joint``, ``A = alice``, ``B = bob``::

    variant 0:  J00 - J01 + J10 + J11 - A1 - B0
    variant 1: -J00 + J01 + J10 + J11 - A1 - B1
    variant 2:  J00 + J01 - J10 + J11 - A0 - B1
    variant 3:  J00 + J01 + J10 - J11 - A0 - B0

Each is algebraically nonpositive whenever the eight inputs arise from
factorizable probabilities, which is the content of the tautology
checked by :func:`ch_tautology_lhs`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UndefinedCorrelatorError

#: Position (i, j) of the negated joint term in each variant.
MINUS_POSITIONS = ((0, 1), (0, 0), (1, 0), (1, 1))

#: Sign grid over joint[i, j] for each variant, derived from the minus
#: position; the subtracted marginals are alice[1 - i] and bob[1 - j].
VARIANT_JOINT_SIGNS = np.ones((4, 2, 2))
for _v, (_i, _j) in enumerate(MINUS_POSITIONS):
    VARIANT_JOINT_SIGNS[_v, _i, _j] = -1.0
VARIANT_JOINT_SIGNS.setflags(write=False)

VARIANT_LABELS = tuple(
    "{}J00 {}J01 {}J10 {}J11 - A{} - B{}".format(
        *("-" if VARIANT_JOINT_SIGNS[v, i, j] < 0 else "+" for i in (0, 1) for j in (0, 1)),
        1 - MINUS_POSITIONS[v][0],
        1 - MINUS_POSITIONS[v][1],
    )
    for v in range(4)
)

_SLACK = 1e-9


def _checked_unit_interval(name: str, value) -> np.ndarray:
    arr = np.array(value, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    if np.any(arr < -_SLACK) or np.any(arr > 1.0 + _SLACK):
        raise DomainError(f"{name} has entries outside [0, 1]: {arr!r}")
    return np.clip(arr, 0.0, 1.0)


def _checked_probability(name: str, value, shape: tuple[int, ...]) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != shape:
        raise DomainError(f"{name} must have shape {shape}, got {arr.shape}")
    return _checked_unit_interval(name, arr)


@dataclass(frozen=True)
class ProbabilityTable:
    """Joint and single-side detection probabilities for a 2x2 design.

    ``joint[i, j]`` refers to Alice setting ``i`` with Bob setting ``j``.
    All nine entries must lie in [0, 1]; values within a small rounding
    slack of the interval are clipped onto it.  ``eps_est`` is the
    producer's declared estimation tolerance: every joint entry must
    stay within ``eps_est`` of the bound set by its two marginals.
    Exact tables declare 0; estimators declare the mismatch their
    sampling noise (or genuine marginal/setting dependence) produced.
    """

    joint: np.ndarray
    alice: np.ndarray
    bob: np.ndarray
    eps_est: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "joint", _checked_probability("joint", self.joint, (2, 2)))
        object.__setattr__(self, "alice", _checked_probability("alice", self.alice, (2,)))
        object.__setattr__(self, "bob", _checked_probability("bob", self.bob, (2,)))
        if not np.isfinite(self.eps_est) or self.eps_est < 0.0:
            raise DomainError(f"eps_est must be a nonnegative real, got {self.eps_est}")
        cap = np.minimum(self.alice[:, None], self.bob[None, :])
        if np.any(self.joint > cap + self.eps_est + _SLACK):
            raise DomainError(
                "joint probability exceeds its marginals beyond the declared "
                f"tolerance {self.eps_est}"
            )

    def factorized(self) -> np.ndarray:
        """Product approximation ``alice[i] * bob[j]`` of the joint grid."""
        return np.outer(self.alice, self.bob)


@dataclass(frozen=True)
class CHReport:
    """Values of the four inequality variants plus violation flags.

    ``chsh_raw`` and ``chsh_fair``, when present, carry the correlator
    combination computed without and with the fair-sampling assumption.
    """

    values: np.ndarray
    violated: np.ndarray
    chsh_raw: float | None = None
    chsh_fair: float | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (4,):
            raise DomainError(f"variant values must have shape (4,), got {values.shape}")
        violated = np.asarray(self.violated, dtype=bool)
        if violated.shape != (4,):
            raise DomainError(f"violation flags must have shape (4,), got {violated.shape}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "violated", violated)

    @property
    def any_violated(self) -> bool:
        return bool(self.violated.any())

    @classmethod
    def from_values(cls, values, **extra) -> "CHReport":
        values = np.asarray(values, dtype=np.float64)
        return cls(values=values, violated=values > 0.0, **extra)


def ch_tautology_lhs(p_a, p_a_prime, p_b, p_b_prime):
    """Left-hand side of the inequality for independent detection events.

    Substituting the product form ``J(x, y) = p_x * p_y`` into variant 0
    gives::

        pa*pb - pa*pb' + pa'*pb + pa'*pb' - pa' - pb

    which is nonpositive for every choice of the four probabilities in
    [0, 1].  Inputs broadcast; scalars in give a scalar out.
    """
    args = []
    for name, value in (
        ("p_a", p_a),
        ("p_a_prime", p_a_prime),
        ("p_b", p_b),
        ("p_b_prime", p_b_prime),
    ):
        args.append(_checked_unit_interval(name, value))
    pa, pap, pb, pbp = args
    lhs = pa * pb - pa * pbp + pap * pb + pap * pbp - pap - pb
    if lhs.ndim == 0:
        return float(lhs)
    return lhs


def ch_values(table: ProbabilityTable) -> CHReport:
    """Evaluate all four inequality variants on a probability table."""
    values = np.empty(4)
    for v, (i, j) in enumerate(MINUS_POSITIONS):
        values[v] = (
            float(np.sum(VARIANT_JOINT_SIGNS[v] * table.joint))
            - table.alice[1 - i]
            - table.bob[1 - j]
        )
    return CHReport.from_values(values)


def chsh_value(table: ProbabilityTable, fair_sampling: bool = False) -> float:
    """Correlator combination ``E00 + E01 + E10 - E11`` from the table.

    With ``fair_sampling`` off, undetected trials count as outcome 0 and
    the correlators follow directly from the detection probabilities.
    With it on, each correlator is renormalized to the coincidence
    ensemble, dividing the joint term by the product of the mean
    single-side rates; this reproduces the ideal correlations when
    losses are outcome-independent, and is exactly the assumption a
    lossy local model can exploit.  A setting pair with zero joint
    probability makes the renormalized correlator meaningless and raises
    :class:`~chsim.errors.UndefinedCorrelatorError`.
    """
    if fair_sampling:
        if np.any(table.joint == 0.0):
            bad = np.argwhere(table.joint == 0.0)[0]
            raise UndefinedCorrelatorError(
                "fair-sampling correlator undefined: no coincidences for "
                f"setting pair ({bad[0]}, {bad[1]})"
            )
        mean_a = float(table.alice.mean())
        mean_b = float(table.bob.mean())
        if mean_a == 0.0 or mean_b == 0.0:
            raise UndefinedCorrelatorError(
                "fair-sampling correlator undefined: a side never detects"
            )
        corr = (
            table.joint / (mean_a * mean_b)
            - table.alice[:, None] / mean_a
            - table.bob[None, :] / mean_b
            + 1.0
        )
    else:
        corr = 4.0 * table.joint - 2.0 * table.alice[:, None] - 2.0 * table.bob[None, :] + 1.0
    return float(corr[0, 0] + corr[0, 1] + corr[1, 0] - corr[1, 1])


def factorizability_residual(table: ProbabilityTable) -> float:
    """Largest deviation of the joint grid from the product of marginals."""
    return float(np.max(np.abs(table.joint - table.factorized())))


def pi_residual(alice_given_settings, bob_given_settings) -> float:
    """Largest dependence of either side's detection rate on the remote setting.

    ``alice_given_settings[i, j]`` is P(Alice detects | settings i, j),
    and symmetrically for Bob.  A model whose rates depend only on the
    local setting gives residual 0.
    """
    a = _checked_probability("alice_given_settings", alice_given_settings, (2, 2))
    b = _checked_probability("bob_given_settings", bob_given_settings, (2, 2))
    return float(
        max(
            np.max(np.abs(a[:, 0] - a[:, 1])),
            np.max(np.abs(b[0, :] - b[1, :])),
        )
    )


def oi_residual(
    alice_given_remote,
    alice_base,
    bob_given_remote,
    bob_base,
) -> float:
    """Largest shift of a detection rate from conditioning on the remote count.

    ``alice_given_remote[i, j]`` is P(Alice detects | Bob detects) at
    settings (i, j) and ``alice_base`` the same rate without the
    conditioning; symmetrically for Bob.  Outcome-independent models
    give residual 0.
    """
    agr = _checked_probability("alice_given_remote", alice_given_remote, (2, 2))
    ab = _checked_probability("alice_base", alice_base, (2, 2))
    bgr = _checked_probability("bob_given_remote", bob_given_remote, (2, 2))
    bb = _checked_probability("bob_base", bob_base, (2, 2))
    return float(max(np.max(np.abs(agr - ab)), np.max(np.abs(bgr - bb))))
