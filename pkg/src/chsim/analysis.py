"""Counts accumulation, probability estimation, and partition scoring.

The central statistic is the partition violation fraction: split a long
run into ``k`` contiguous equal-count blocks, evaluate every inequality
variant on each block, and report the fraction of blocks violating each
variant.  A source sitting exactly on the classical boundary violates
in about half the blocks by chance alone, so only fractions well above
one half (beyond the binomial fluctuation band for the chosen ``k``)
indicate a real effect.  No block is ever discarded.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    InsufficientDataError,
    UndefinedConditionalError,
)
from .inequality import (
    CHReport,
    ProbabilityTable,
    ch_values,
    oi_residual,
    pi_residual,
)

_MARGINAL_MODES = ("pooled", "per-pair")


@dataclass(frozen=True)
class TrialBatch:
    """Column-oriented stream of trial records.

    ``index`` must be strictly increasing; settings are 0 or 1; detect
    flags are booleans.  Instances are immutable views over their
    arrays; slicing with ``batch[lo:hi]`` keeps records contiguous.
    """

    index: np.ndarray
    a_setting: np.ndarray
    b_setting: np.ndarray
    a_detect: np.ndarray
    b_detect: np.ndarray

    def __post_init__(self):
        index = np.asarray(self.index, dtype=np.int64)
        a_setting = np.asarray(self.a_setting, dtype=np.int8)
        b_setting = np.asarray(self.b_setting, dtype=np.int8)
        a_detect = np.asarray(self.a_detect, dtype=bool)
        b_detect = np.asarray(self.b_detect, dtype=bool)
        n = len(index)
        for name, arr in (
            ("a_setting", a_setting),
            ("b_setting", b_setting),
            ("a_detect", a_detect),
            ("b_detect", b_detect),
        ):
            if arr.ndim != 1 or len(arr) != n:
                raise DomainError(f"{name} must be 1-d with {n} entries")
        if n and np.any(np.diff(index) <= 0):
            raise DomainError("trial indices must be strictly increasing")
        for name, arr in (("a_setting", a_setting), ("b_setting", b_setting)):
            if n and (arr.min() < 0 or arr.max() > 1):
                raise DomainError(f"{name} entries must be 0 or 1")
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "a_setting", a_setting)
        object.__setattr__(self, "b_setting", b_setting)
        object.__setattr__(self, "a_detect", a_detect)
        object.__setattr__(self, "b_detect", b_detect)

    def __len__(self) -> int:
        return len(self.index)

    def __getitem__(self, select) -> "TrialBatch":
        return TrialBatch(
            self.index[select],
            self.a_setting[select],
            self.b_setting[select],
            self.a_detect[select],
            self.b_detect[select],
        )

    @classmethod
    def concat(cls, batches) -> "TrialBatch":
        batches = list(batches)
        if not batches:
            return cls.empty()
        return cls(
            np.concatenate([b.index for b in batches]),
            np.concatenate([b.a_setting for b in batches]),
            np.concatenate([b.b_setting for b in batches]),
            np.concatenate([b.a_detect for b in batches]),
            np.concatenate([b.b_detect for b in batches]),
        )

    @classmethod
    def empty(cls) -> "TrialBatch":
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z, z, z, z)


def drop_empty_windows(batch: TrialBatch) -> TrialBatch:
    """Remove records with no detection on either side.

    Excluding empty windows shrinks every denominator and so inflates
    every estimated probability; it exists to reproduce that
    normalization effect, not as a recommended practice.
    """
    return batch[batch.a_detect | batch.b_detect]


@dataclass(frozen=True)
class CountsTable:
    """Per-setting-pair tallies: trials, coincidences, and singles.

    All four fields are (2, 2) arrays indexed by (alice setting, bob
    setting).  Tables from disjoint record chunks add elementwise.
    """

    n_trials: np.ndarray
    n_coinc: np.ndarray
    n_alice: np.ndarray
    n_bob: np.ndarray

    def __post_init__(self):
        arrays = {}
        for name in ("n_trials", "n_coinc", "n_alice", "n_bob"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            if arr.shape != (2, 2):
                raise DomainError(f"{name} must have shape (2, 2), got {arr.shape}")
            if np.any(arr < 0):
                raise DomainError(f"{name} contains negative counts")
            arrays[name] = arr
        singles_cap = np.minimum(arrays["n_alice"], arrays["n_bob"])
        if np.any(arrays["n_coinc"] > singles_cap):
            raise DomainError("coincidence count exceeds a singles count")
        if np.any(arrays["n_alice"] > arrays["n_trials"]) or np.any(
            arrays["n_bob"] > arrays["n_trials"]
        ):
            raise DomainError("singles count exceeds the trial count")
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    def __add__(self, other: "CountsTable") -> "CountsTable":
        return CountsTable(
            self.n_trials + other.n_trials,
            self.n_coinc + other.n_coinc,
            self.n_alice + other.n_alice,
            self.n_bob + other.n_bob,
        )

    @property
    def total_trials(self) -> int:
        return int(self.n_trials.sum())

    @classmethod
    def zero(cls) -> "CountsTable":
        z = np.zeros((2, 2), dtype=np.int64)
        return cls(z, z, z, z)


def accumulate_counts(batch: TrialBatch) -> CountsTable:
    """Tally one record chunk; chunks merge by adding tables."""
    cell = batch.a_setting.astype(np.int64) * 2 + batch.b_setting
    coinc = batch.a_detect & batch.b_detect
    return CountsTable(
        np.bincount(cell, minlength=4).reshape(2, 2),
        np.bincount(cell[coinc], minlength=4).reshape(2, 2),
        np.bincount(cell[batch.a_detect], minlength=4).reshape(2, 2),
        np.bincount(cell[batch.b_detect], minlength=4).reshape(2, 2),
    )


def _require_all_pairs(counts: CountsTable) -> None:
    if np.any(counts.n_trials == 0):
        i, j = np.argwhere(counts.n_trials == 0)[0]
        raise InsufficientDataError(
            f"no trials recorded for setting pair (alice={i}, bob={j})"
        )


def estimate_probabilities(
    counts: CountsTable,
    marginal_mode: str = "pooled",
    alice_partner: int = 0,
    bob_partner: int = 0,
) -> ProbabilityTable:
    """Empirical probability table from counts.

    Joint entries are per-pair coincidence fractions.  Marginals are
    either pooled over both remote settings (``pooled``) or taken from
    the designated partner setting only (``per-pair``); the two agree
    in expectation exactly when the source respects parameter
    independence.  The returned table declares how far its joint
    entries exceed their marginal caps (zero unless noise or genuine
    remote-setting dependence produced a mismatch).
    """
    if marginal_mode not in _MARGINAL_MODES:
        raise DomainError(
            f"marginal_mode must be one of {_MARGINAL_MODES}, got {marginal_mode!r}"
        )
    if alice_partner not in (0, 1) or bob_partner not in (0, 1):
        raise DomainError("partner settings must be 0 or 1")
    _require_all_pairs(counts)
    joint = counts.n_coinc / counts.n_trials
    if marginal_mode == "pooled":
        alice = counts.n_alice.sum(axis=1) / counts.n_trials.sum(axis=1)
        bob = counts.n_bob.sum(axis=0) / counts.n_trials.sum(axis=0)
    else:
        alice = counts.n_alice[:, alice_partner] / counts.n_trials[:, alice_partner]
        bob = counts.n_bob[bob_partner, :] / counts.n_trials[bob_partner, :]
    cap = np.minimum(alice[:, None], bob[None, :])
    eps_est = float(max(0.0, np.max(joint - cap)))
    return ProbabilityTable(joint=joint, alice=alice, bob=bob, eps_est=eps_est)


def settings_conditional_marginals(
    counts: CountsTable,
) -> tuple[np.ndarray, np.ndarray]:
    """P(detect | both settings) per side, as two (2, 2) grids."""
    _require_all_pairs(counts)
    return counts.n_alice / counts.n_trials, counts.n_bob / counts.n_trials


def outcome_conditional_marginals(
    counts: CountsTable,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Detection rates with and without conditioning on the remote count.

    Returns (alice | bob detected, alice unconditional, bob | alice
    detected, bob unconditional), each a (2, 2) grid over settings.
    A setting pair where the conditioning side never detected leaves
    the conditional undefined and raises
    :class:`~chsim.errors.UndefinedConditionalError`.
    """
    _require_all_pairs(counts)
    for name, conditioning in (("bob", counts.n_bob), ("alice", counts.n_alice)):
        if np.any(conditioning == 0):
            i, j = np.argwhere(conditioning == 0)[0]
            raise UndefinedConditionalError(
                f"cannot condition on {name} detecting at setting pair "
                f"(alice={i}, bob={j}): no such events"
            )
    alice_given_bob = counts.n_coinc / counts.n_bob
    bob_given_alice = counts.n_coinc / counts.n_alice
    alice_base = counts.n_alice / counts.n_trials
    bob_base = counts.n_bob / counts.n_trials
    return alice_given_bob, alice_base, bob_given_alice, bob_base


def pi_residual_from_counts(counts: CountsTable) -> float:
    """Empirical remote-setting dependence of the detection rates."""
    return pi_residual(*settings_conditional_marginals(counts))


def oi_residual_from_counts(counts: CountsTable) -> float:
    """Empirical remote-outcome dependence of the detection rates."""
    return oi_residual(*outcome_conditional_marginals(counts))


@dataclass(frozen=True)
class PartitionReport:
    """Per-block inequality values and violation fractions.

    ``values[p, v]`` is variant ``v`` evaluated on block ``p``.  The
    any-variant fraction counts blocks violating at least one variant;
    its chance baseline exceeds one half at the boundary (four chances
    per block), so it is reported with that caveat attached.
    """

    values: np.ndarray
    violated: np.ndarray
    trials_per_partition: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != 4 or values.shape[0] < 1:
            raise DomainError(f"values must have shape (k, 4), got {values.shape}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "violated", np.asarray(self.violated, dtype=bool))
        object.__setattr__(
            self,
            "trials_per_partition",
            np.asarray(self.trials_per_partition, dtype=np.int64),
        )

    @property
    def k(self) -> int:
        return self.values.shape[0]

    @property
    def variant_fractions(self) -> np.ndarray:
        return self.violated.mean(axis=0)

    @property
    def any_fraction(self) -> float:
        return float(self.violated.any(axis=1).mean())

    @property
    def variant_means(self) -> np.ndarray:
        return self.values.mean(axis=0)

    @property
    def variant_ses(self) -> np.ndarray:
        """Standard error of each variant mean across blocks."""
        if self.k < 2:
            return np.full(4, np.nan)
        return self.values.std(axis=0, ddof=1) / np.sqrt(self.k)

    @property
    def fraction_band(self) -> float:
        """Binomial 3-sigma half-width around 1/2 for this block count."""
        return 3.0 * np.sqrt(0.25 / self.k)


def partition_and_score(
    batch: TrialBatch,
    partitions: int = 100,
    min_trials: int = 1000,
    marginal_mode: str = "pooled",
    alice_partner: int = 0,
    bob_partner: int = 0,
    threads: int = 1,
) -> PartitionReport:
    """Split a stream into contiguous blocks and score each one.

    Blocks differ in size by at most one record.  Every block must hold
    at least ``min_trials`` records, and every block must contain all
    four setting pairs, else the data are insufficient for the
    requested partitioning.
    """
    if partitions < 1:
        raise DomainError(f"partition count must be positive, got {partitions}")
    if min_trials < 1:
        raise DomainError(f"minimum block size must be positive, got {min_trials}")
    n = len(batch)
    if n // partitions < min_trials:
        raise InsufficientDataError(
            f"{n} records across {partitions} partitions leaves "
            f"{n // partitions} per partition, below the minimum {min_trials}"
        )
    edges = np.linspace(0, n, partitions + 1, dtype=np.int64)

    def score(p: int) -> np.ndarray:
        block = batch[edges[p] : edges[p + 1]]
        table = estimate_probabilities(
            accumulate_counts(block), marginal_mode, alice_partner, bob_partner
        )
        return ch_values(table).values

    if threads > 1 and partitions > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(score, range(partitions)))
    else:
        rows = [score(p) for p in range(partitions)]
    values = np.vstack(rows)
    return PartitionReport(
        values=values,
        violated=values > 0.0,
        trials_per_partition=np.diff(edges),
    )


@dataclass(frozen=True)
class ScanCell:
    """One (state, efficiency) cell of an efficiency scan."""

    r: float
    eta: float
    angles: tuple[float, float, float, float]
    oracle_values: np.ndarray
    mc_means: np.ndarray
    mc_ses: np.ndarray
    fractions: np.ndarray
    persistent: np.ndarray


@dataclass(frozen=True)
class ScanReport:
    """Efficiency scan results over a (state, efficiency) grid.

    A cell's variant is flagged persistent when its violation fraction
    clears one half by more than the binomial 3-sigma band for the
    block count used, the partition statistic's analogue of a
    significant violation.
    """

    r_values: tuple
    eta_values: tuple
    trials_per_cell: int
    partitions: int
    cells: tuple[ScanCell, ...]

    def cell(self, r_index: int, eta_index: int) -> ScanCell:
        return self.cells[r_index * len(self.eta_values) + eta_index]

    def oracle_grid(self, variant: int = 0) -> np.ndarray:
        """Exact variant values arranged (len(r_values), len(eta_values))."""
        out = np.array([c.oracle_values[variant] for c in self.cells])
        return out.reshape(len(self.r_values), len(self.eta_values))
