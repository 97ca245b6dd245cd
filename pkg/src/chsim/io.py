"""Experiment configuration, trial persistence, and report export.

The configuration file is TOML with sections ``[source]``,
``[detector]``, ``[leakage]``, ``[angles]``, ``[run]``, and optionally
``[scan]``.  Unknown sections or keys are rejected outright, naming the
offending path, so a typo can never silently fall back to a default.
Angles are radians; a string with a ``deg`` suffix (``"22.5deg"``) is
converted on input.

Trial records persist as line-oriented text in two interchangeable
formats: comma-delimited ``index,a_setting,b_setting,a_detect,b_detect``
with 0/1 flags, and JSON lines with the same field names.  Reports
export as comma-delimited tables with a header row.  All writes go
through a temporary file renamed into place, so readers never observe
a partial file.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .analysis import PartitionReport, ScanReport, TrialBatch
from .channel import (
    DetectorConfig,
    ForgingStrategy,
    LeakageChannel,
    LeakageMode,
    OutcomeMimicStrategy,
    SettingBiasStrategy,
    TargetCorrelationStrategy,
)
from .errors import (
    ChsimError,
    DomainError,
    TrialFormatError,
    UnknownKeyError,
    ValidationError,
)
from .inequality import CHReport
from .sources import (
    EntangledPairSource,
    SourceModel,
    default_angles,
    make_model,
)

_MARGINAL_MODES = ("pooled", "per-pair")


@dataclass(frozen=True)
class ScanSettings:
    """Grid specification for an efficiency scan."""

    r_values: tuple
    eta_values: tuple
    trials_per_cell: int = 100_000
    partitions: int = 100
    angles: object = "optimal"
    min_partition_trials: int = 1000

    def __post_init__(self):
        if len(self.r_values) == 0:
            raise ValidationError("scan.r_values: grid must be nonempty")
        if len(self.eta_values) == 0:
            raise ValidationError("scan.eta_values: grid must be nonempty")
        if self.trials_per_cell < 1:
            raise ValidationError("scan.trials_per_cell: must be positive")
        if self.partitions < 1:
            raise ValidationError("scan.partitions: must be positive")
        if self.min_partition_trials < 1:
            raise ValidationError("scan.min_partition_trials: must be positive")
        if self.angles != "optimal":
            angles = tuple(float(a) for a in self.angles)
            if len(angles) != 4:
                raise ValidationError("scan.angles: expected 'optimal' or 4 angles")
            object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "r_values", tuple(float(r) for r in self.r_values))
        object.__setattr__(self, "eta_values", tuple(float(e) for e in self.eta_values))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a single simulated run depends on.

    The seed fully determines every random stream, so two runs with
    equal configs produce identical trial records on any worker count.
    """

    source: SourceModel
    angles: tuple[float, float, float, float]
    detector: DetectorConfig = DetectorConfig()
    flip_rate: float = 0.0
    leakage: LeakageChannel = LeakageChannel(LeakageMode.NONE)
    strategy: ForgingStrategy | None = None
    n_trials: int = 100_000
    partitions: int = 100
    seed: int = 0
    marginal_mode: str = "pooled"
    alice_partner: int = 0
    bob_partner: int = 0
    include_empty_windows: bool = True
    min_partition_trials: int = 1000
    scan: ScanSettings | None = None

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        if len(angles) != 4 or not all(math.isfinite(a) for a in angles):
            raise ValidationError("angles: expected 4 finite values")
        object.__setattr__(self, "angles", angles)
        if not 0.0 <= self.flip_rate <= 1.0:
            raise ValidationError(f"detector.flip_rate: must lie in [0, 1], got {self.flip_rate}")
        if self.n_trials < 1:
            raise ValidationError(f"run.n_trials: must be positive, got {self.n_trials}")
        if self.partitions < 1:
            raise ValidationError(f"run.partitions: must be positive, got {self.partitions}")
        if self.min_partition_trials < 1:
            raise ValidationError("run.min_partition_trials: must be positive")
        if self.seed < 0:
            raise ValidationError(f"run.seed: must be nonnegative, got {self.seed}")
        if self.marginal_mode not in _MARGINAL_MODES:
            raise ValidationError(
                f"run.marginal_mode: must be one of {_MARGINAL_MODES}, got {self.marginal_mode!r}"
            )
        if self.alice_partner not in (0, 1) or self.bob_partner not in (0, 1):
            raise ValidationError("run.alice_partner / run.bob_partner: must be 0 or 1")
        if (self.leakage.mode is LeakageMode.NONE) != (self.strategy is None):
            raise ValidationError(
                "leakage: a forging strategy requires a channel mode other "
                "than 'none', and vice versa"
            )
        if self.strategy is not None:
            if self.strategy.needs_setting and not self.leakage.carries_setting:
                raise ValidationError(
                    f"leakage.strategy: {self.strategy.name!r} reads the leaked "
                    f"setting, which mode {self.leakage.mode.value!r} does not carry"
                )
            if self.strategy.needs_outcome and not self.leakage.carries_outcome:
                raise ValidationError(
                    f"leakage.strategy: {self.strategy.name!r} reads the leaked "
                    f"outcome, which mode {self.leakage.mode.value!r} does not carry"
                )


def _check_keys(section: str, data: dict, allowed) -> None:
    for key in data:
        if key not in allowed:
            raise UnknownKeyError(f"{section}.{key}: unknown key")


def _number(section: str, key: str, value, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        kind = "an integer" if integer else "a number"
        raise ValidationError(f"{section}.{key}: expected {kind}, got {value!r}")
    if integer and not isinstance(value, int):
        raise ValidationError(f"{section}.{key}: expected an integer, got {value!r}")
    return value


def _parse_angle(path: str, value) -> float:
    if isinstance(value, bool):
        raise ValidationError(f"{path}: expected an angle, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        text = value.strip()
        if text.endswith("deg"):
            try:
                return math.radians(float(text[: -len("deg")]))
            except ValueError:
                pass
        raise ValidationError(
            f"{path}: expected radians or a 'deg'-suffixed string, got {value!r}"
        )
    raise ValidationError(f"{path}: expected an angle, got {value!r}")


_ANGLE_KEYS = ("alpha", "alpha_prime", "beta", "beta_prime")

_STRATEGY_PARAMS = {
    "outcome-mimic": ("copy_probability",),
    "setting-bias": ("gain",),
    "target-correlation": ("target_r",),
}


def _build_strategy(name: str, params: dict) -> ForgingStrategy:
    if name == "outcome-mimic":
        return OutcomeMimicStrategy(**params)
    if name == "setting-bias":
        return SettingBiasStrategy(**params)
    if name == "target-correlation":
        r = params.get("target_r", np.pi / 4)
        return TargetCorrelationStrategy(EntangledPairSource(r))
    raise ValidationError(
        f"leakage.strategy: unknown strategy {name!r}; "
        f"available: {', '.join(sorted(_STRATEGY_PARAMS))}"
    )


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build a validated config from parsed TOML data."""
    if not isinstance(data, dict):
        raise ValidationError("config root must be a table of sections")
    _check_keys("config", data, ("source", "detector", "leakage", "angles", "run", "scan"))
    for section in data:
        if not isinstance(data[section], dict):
            raise ValidationError(f"{section}: expected a section, got {data[section]!r}")

    scan = None
    if "scan" in data:
        sec = dict(data["scan"])
        _check_keys(
            "scan",
            sec,
            (
                "r_values",
                "eta_values",
                "trials_per_cell",
                "partitions",
                "angles",
                "min_partition_trials",
            ),
        )
        for key in ("r_values", "eta_values"):
            if key in sec and not isinstance(sec[key], list):
                raise ValidationError(f"scan.{key}: expected a list of numbers")
        if "angles" in sec and sec["angles"] != "optimal":
            if not isinstance(sec["angles"], list):
                raise ValidationError("scan.angles: expected 'optimal' or a list of 4 angles")
            sec["angles"] = [
                _parse_angle(f"scan.angles[{i}]", v) for i, v in enumerate(sec["angles"])
            ]
        for key in ("trials_per_cell", "partitions", "min_partition_trials"):
            if key in sec:
                _number("scan", key, sec[key], integer=True)
        missing = [k for k in ("r_values", "eta_values") if k not in sec]
        if missing:
            raise ValidationError(f"scan.{missing[0]}: required for a scan")
        scan = ScanSettings(**sec)

    source_sec = dict(data.get("source", {}))
    if "kind" not in source_sec:
        if scan is not None and not source_sec:
            source = EntangledPairSource()
        else:
            raise ValidationError("source.kind: required")
    else:
        kind = source_sec.pop("kind")
        if not isinstance(kind, str):
            raise ValidationError(f"source.kind: expected a string, got {kind!r}")
        for key, value in source_sec.items():
            _number("source", key, value)
        source = make_model(kind, **source_sec)

    det_sec = dict(data.get("detector", {}))
    _check_keys("detector", det_sec, ("eta_alice", "eta_bob", "empty_window_rate", "flip_rate"))
    flip_rate = _number("detector", "flip_rate", det_sec.pop("flip_rate", 0.0))
    for key, value in det_sec.items():
        _number("detector", key, value)
    try:
        detector = DetectorConfig(**det_sec)
    except DomainError as exc:
        raise ValidationError(str(exc)) from exc

    leak_sec = dict(data.get("leakage", {}))
    _check_keys(
        "leakage", leak_sec, ("mode", "strategy") + sum(_STRATEGY_PARAMS.values(), ())
    )
    mode_name = leak_sec.pop("mode", "none")
    try:
        mode = LeakageMode(mode_name)
    except ValueError:
        raise ValidationError(
            f"leakage.mode: unknown mode {mode_name!r}; available: "
            f"{', '.join(m.value for m in LeakageMode)}"
        ) from None
    strategy = None
    strategy_name = leak_sec.pop("strategy", None)
    if strategy_name is not None:
        if not isinstance(strategy_name, str):
            raise ValidationError("leakage.strategy: expected a string")
        allowed = _STRATEGY_PARAMS.get(strategy_name, ())
        for key in leak_sec:
            if key not in allowed:
                raise ValidationError(
                    f"leakage.{key}: not a parameter of strategy {strategy_name!r}"
                )
            _number("leakage", key, leak_sec[key])
        try:
            strategy = _build_strategy(strategy_name, leak_sec)
        except DomainError as exc:
            raise ValidationError(str(exc)) from exc
    elif leak_sec:
        raise ValidationError(
            f"leakage.{sorted(leak_sec)[0]}: strategy parameters given without a strategy"
        )

    if "angles" in data:
        ang_sec = dict(data["angles"])
        _check_keys("angles", ang_sec, _ANGLE_KEYS)
        missing = [k for k in _ANGLE_KEYS if k not in ang_sec]
        if missing:
            raise ValidationError(f"angles.{missing[0]}: all four angles are required")
        angles = tuple(_parse_angle(f"angles.{k}", ang_sec[k]) for k in _ANGLE_KEYS)
    else:
        angles = default_angles(source)

    run_sec = dict(data.get("run", {}))
    _check_keys(
        "run",
        run_sec,
        (
            "n_trials",
            "partitions",
            "seed",
            "marginal_mode",
            "alice_partner",
            "bob_partner",
            "include_empty_windows",
            "min_partition_trials",
        ),
    )
    for key in ("n_trials", "partitions", "seed", "alice_partner", "bob_partner",
                "min_partition_trials"):
        if key in run_sec:
            _number("run", key, run_sec[key], integer=True)
    if "marginal_mode" in run_sec and not isinstance(run_sec["marginal_mode"], str):
        raise ValidationError("run.marginal_mode: expected a string")
    if "include_empty_windows" in run_sec and not isinstance(
        run_sec["include_empty_windows"], bool
    ):
        raise ValidationError("run.include_empty_windows: expected a boolean")

    return ExperimentConfig(
        source=source,
        angles=angles,
        detector=detector,
        flip_rate=flip_rate,
        leakage=LeakageChannel(mode),
        strategy=strategy,
        scan=scan,
        **run_sec,
    )


def load_config(path) -> ExperimentConfig:
    """Parse and validate a TOML experiment configuration file."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ChsimError(f"cannot read config file {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"config file {path} is not valid TOML: {exc}") from exc
    return config_from_dict(data)


def _atomic_write(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=False)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


_TRIAL_FORMATS = ("csv", "jsonl")
_JSON_KEYS = ("index", "a_setting", "b_setting", "a_detect", "b_detect")


def write_trials(batch: TrialBatch, path, fmt: str = "csv") -> None:
    """Persist records, one per line, in delimited or JSON-lines form."""
    if fmt not in _TRIAL_FORMATS:
        raise DomainError(f"trial format must be one of {_TRIAL_FORMATS}, got {fmt!r}")
    lines = []
    if fmt == "csv":
        for i in range(len(batch)):
            lines.append(
                f"{batch.index[i]},{batch.a_setting[i]},{batch.b_setting[i]},"
                f"{int(batch.a_detect[i])},{int(batch.b_detect[i])}"
            )
    else:
        for i in range(len(batch)):
            lines.append(
                json.dumps(
                    {
                        "index": int(batch.index[i]),
                        "a_setting": int(batch.a_setting[i]),
                        "b_setting": int(batch.b_setting[i]),
                        "a_detect": bool(batch.a_detect[i]),
                        "b_detect": bool(batch.b_detect[i]),
                    },
                    separators=(",", ":"),
                )
            )
    text = "\n".join(lines)
    if lines:
        text += "\n"
    _atomic_write(path, text)


def _parse_csv_line(line: str, lineno: int) -> tuple:
    parts = line.split(",")
    if len(parts) != 5:
        raise TrialFormatError(f"expected 5 comma-separated fields, got {len(parts)}", lineno)
    try:
        values = [int(p) for p in parts]
    except ValueError:
        raise TrialFormatError(f"non-integer field in {line!r}", lineno) from None
    index, a_s, b_s, a_d, b_d = values
    for label, v in (("a_setting", a_s), ("b_setting", b_s), ("a_detect", a_d), ("b_detect", b_d)):
        if v not in (0, 1):
            raise TrialFormatError(f"{label} must be 0 or 1, got {v}", lineno)
    return index, a_s, b_s, bool(a_d), bool(b_d)


def _parse_json_line(line: str, lineno: int) -> tuple:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TrialFormatError(f"invalid JSON: {exc}", lineno) from None
    if not isinstance(record, dict) or set(record) != set(_JSON_KEYS):
        raise TrialFormatError(
            f"record must be an object with exactly the keys {_JSON_KEYS}", lineno
        )
    index = record["index"]
    if isinstance(index, bool) or not isinstance(index, int):
        raise TrialFormatError("index must be an integer", lineno)
    out = [index]
    for key in ("a_setting", "b_setting"):
        v = record[key]
        if isinstance(v, bool) or v not in (0, 1):
            raise TrialFormatError(f"{key} must be 0 or 1", lineno)
        out.append(v)
    for key in ("a_detect", "b_detect"):
        v = record[key]
        if not isinstance(v, bool):
            raise TrialFormatError(f"{key} must be a boolean", lineno)
        out.append(v)
    return tuple(out)


def read_trials(path, fmt: str | None = None) -> TrialBatch:
    """Read records written by :func:`write_trials`.

    The format defaults from the file extension.  Any malformed line
    aborts with its 1-based line number; an empty file is an empty
    stream, not an error.
    """
    if fmt is None:
        name = str(path)
        fmt = "jsonl" if name.endswith(".jsonl") else "csv"
    if fmt not in _TRIAL_FORMATS:
        raise DomainError(f"trial format must be one of {_TRIAL_FORMATS}, got {fmt!r}")
    parse = _parse_csv_line if fmt == "csv" else _parse_json_line
    rows = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                rows.append(parse(line, lineno))
    except OSError as exc:
        raise ChsimError(f"cannot read trials file {path}: {exc}") from exc
    if not rows:
        return TrialBatch.empty()
    columns = list(zip(*rows))
    return TrialBatch(
        np.asarray(columns[0], dtype=np.int64),
        np.asarray(columns[1], dtype=np.int8),
        np.asarray(columns[2], dtype=np.int8),
        np.asarray(columns[3], dtype=bool),
        np.asarray(columns[4], dtype=bool),
    )


def _fmt(value) -> str:
    """Shortest round-trip decimal text for one numeric value."""
    return repr(float(value))


def _ch_report_text(report: CHReport) -> str:
    lines = ["variant,value,violated"]
    for v in range(4):
        lines.append(f"{v},{_fmt(report.values[v])},{int(report.violated[v])}")
    if report.chsh_raw is not None:
        lines.append(f"chsh_raw,{_fmt(report.chsh_raw)},")
    if report.chsh_fair is not None:
        lines.append(f"chsh_fair,{_fmt(report.chsh_fair)},")
    return "\n".join(lines) + "\n"


def _partition_report_text(report: PartitionReport) -> str:
    lines = ["row,partition,variant_0,variant_1,variant_2,variant_3,any"]
    for p in range(report.k):
        vals = ",".join(_fmt(v) for v in report.values[p])
        lines.append(f"partition,{p},{vals},{int(report.violated[p].any())}")
    fr = ",".join(_fmt(f) for f in report.variant_fractions)
    lines.append(f"fraction,,{fr},{_fmt(report.any_fraction)}")
    means = ",".join(_fmt(m) for m in report.variant_means)
    lines.append(f"mean,,{means},")
    ses = ",".join(_fmt(s) for s in report.variant_ses)
    lines.append(f"se,,{ses},")
    return "\n".join(lines) + "\n"


def _scan_report_text(report: ScanReport) -> str:
    lines = [
        "r,eta,variant,oracle,mc_mean,mc_se,fraction,persistent,"
        "alpha,alpha_prime,beta,beta_prime"
    ]
    for cell in report.cells:
        angle_text = ",".join(_fmt(a) for a in cell.angles)
        for v in range(4):
            lines.append(
                f"{_fmt(cell.r)},{_fmt(cell.eta)},{v},{_fmt(cell.oracle_values[v])},"
                f"{_fmt(cell.mc_means[v])},{_fmt(cell.mc_ses[v])},"
                f"{_fmt(cell.fractions[v])},{int(cell.persistent[v])},{angle_text}"
            )
    return "\n".join(lines) + "\n"


def export_report(report, path) -> None:
    """Write a report as a delimited table with a header row.

    Accepts a :class:`~chsim.inequality.CHReport`,
    :class:`~chsim.analysis.PartitionReport`, or
    :class:`~chsim.analysis.ScanReport`.
    """
    if isinstance(report, CHReport):
        text = _ch_report_text(report)
    elif isinstance(report, PartitionReport):
        text = _partition_report_text(report)
    elif isinstance(report, ScanReport):
        text = _scan_report_text(report)
    else:
        raise DomainError(f"cannot export report of type {type(report).__name__}")
    try:
        _atomic_write(path, text)
    except OSError as exc:
        raise ChsimError(f"cannot write report to {path}: {exc}") from exc
