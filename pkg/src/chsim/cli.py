"""Command-line front end.

Subcommands: ``simulate`` (run a configured experiment), ``analyze``
(recompute reports from a stored trial file), ``scan`` (efficiency
sweep), ``demo`` (printed demonstrations), and ``fuzz`` (tautology
property check).  Human-readable summaries go to standard output;
machine-readable files are written only under ``--out``.

Exit codes: 0 success, 1 usage error, 2 bad data or configuration,
3 structurally valid but insufficient data.  The worker count comes
from ``--threads`` or the ``CHSIM_THREADS`` environment variable and
never affects results, only wall time.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np

from . import experiment
from .analysis import PartitionReport
from .channel import signaling_pattern_demo
from .errors import ChsimError, UsageError, ValidationError
from .inequality import CHReport, ch_tautology_lhs
from .io import export_report, load_config, read_trials, write_trials
from .sources import make_model

THREADS_ENV = "CHSIM_THREADS"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _resolve_threads(value: int | None) -> int:
    if value is None:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            value = int(raw)
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise UsageError(f"thread count must be positive, got {value}")
    return value


def _print_summary(report: CHReport, partition: PartitionReport) -> None:
    band = partition.fraction_band
    fractions = partition.variant_fractions
    for v in range(4):
        verdict = "VIOLATED" if report.violated[v] else "ok"
        print(
            f"variant {v}: value={report.values[v]:+.6f} [{verdict}]  "
            f"fraction={fractions[v]:.3f} of {partition.k} partitions "
            f"(chance band 0.5 +/- {band:.3f})"
        )
    print(
        f"any-variant fraction={partition.any_fraction:.3f} "
        "(chance baseline exceeds 1/2: four variants per block)"
    )
    if report.chsh_raw is not None:
        fair = "n/a" if report.chsh_fair is None else f"{report.chsh_fair:+.4f}"
        print(f"chsh: raw={report.chsh_raw:+.4f} fair-sampled={fair}")


def _write_reports(out_dir: str, report: CHReport, partition: PartitionReport) -> None:
    os.makedirs(out_dir, exist_ok=True)
    ch_path = os.path.join(out_dir, "ch_report.csv")
    part_path = os.path.join(out_dir, "partition_report.csv")
    export_report(report, ch_path)
    export_report(partition, part_path)
    print(f"wrote {ch_path}")
    print(f"wrote {part_path}")


def _cmd_simulate(args) -> int:
    threads = _resolve_threads(args.threads)
    config = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["n_trials"] = args.trials
    if args.partitions is not None:
        overrides["partitions"] = args.partitions
    if overrides:
        config = dataclasses.replace(config, **overrides)
    result = experiment.run_experiment(config, threads)
    model_name = getattr(config.source, "name", type(config.source).__name__)
    print(
        f"simulate: source={model_name} trials={config.n_trials} "
        f"partitions={config.partitions} seed={config.seed} threads={threads}"
    )
    _print_summary(result.ch, result.partition)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        trials_path = os.path.join(args.out, f"trials.{args.format}")
        write_trials(result.batch, trials_path, args.format)
        print(f"wrote {trials_path}")
        _write_reports(args.out, result.ch, result.partition)
    return 0


def _cmd_analyze(args) -> int:
    threads = _resolve_threads(args.threads)
    batch = read_trials(args.trials_file, args.format)
    counts, table, report, partition = experiment.analyze_batch(
        batch,
        include_empty_windows=not args.exclude_empty,
        marginal_mode=args.marginal_mode,
        partitions=args.partitions,
        min_partition_trials=args.min_partition_trials,
        threads=threads,
    )
    print(
        f"analyze: records={len(batch)} partitions={args.partitions} "
        f"marginals={args.marginal_mode} threads={threads}"
    )
    _print_summary(report, partition)
    if args.out:
        _write_reports(args.out, report, partition)
    return 0


def _cmd_scan(args) -> int:
    threads = _resolve_threads(args.threads)
    config = load_config(args.config)
    if config.scan is None:
        raise ValidationError("scan: config file has no [scan] section")
    settings = config.scan
    if args.trials is not None:
        settings = dataclasses.replace(settings, trials_per_cell=args.trials)
    if args.partitions is not None:
        settings = dataclasses.replace(settings, partitions=args.partitions)
    seed = config.seed if args.seed is None else args.seed
    report = experiment.scan_from_settings(settings, seed=seed, threads=threads)
    n_cells = len(report.cells)
    persistent = sum(bool(c.persistent.any()) for c in report.cells)
    print(
        f"scan: {len(report.r_values)}x{len(report.eta_values)} grid, "
        f"{settings.trials_per_cell} trials/cell, seed={seed}"
    )
    print(f"cells with a persistent violation: {persistent} of {n_cells}")
    for cell in report.cells:
        if cell.persistent.any():
            print(
                f"  r={cell.r:.5f} eta={cell.eta:.2f} "
                f"fraction={cell.fractions.max():.2f} "
                f"oracle={cell.oracle_values.max():+.5f}"
            )
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "scan.csv")
        export_report(report, path)
        print(f"wrote {path}")
    return 0


def _demo_signaling() -> int:
    print("deterministic responder with hidden control bit:")
    for control in (0, 1):
        demo = signaling_pattern_demo(control, 100)
        head = "".join(str(b) for b in demo.bits[:12])
        print(
            f"  control={control}: bits {head}...  "
            f"marginal of 1s = {demo.marginal:.2f}, decoded = {demo.decoded}, "
            f"accuracy = {demo.accuracy:.0f}"
        )
    print(
        "each single-bit marginal is exactly 1/2, so setting-marginal "
        "statistics pass while two consecutive bits recover the control "
        "bit with certainty"
    )
    return 0


def _demo_detection_loophole(trials: int, seed: int, threads: int) -> int:
    from .io import ExperimentConfig

    model = make_model("detection-biased")
    config = ExperimentConfig(
        source=model,
        angles=model.default_angles,
        n_trials=trials,
        partitions=max(1, min(100, trials // 1000)),
        seed=seed,
    )
    result = experiment.run_experiment(config, threads)
    print(f"detection-biased local model, {trials} trials, seed={seed}")
    fair = result.ch.chsh_fair
    print(f"  chsh raw (misses count as -1): S = {result.ch.chsh_raw:+.4f}")
    if fair is None:
        print("  chsh fair-sampled: undefined (a pair had no coincidences)")
    else:
        print(f"  chsh fair-sampled:           S = {fair:+.4f}")
    for v in range(4):
        print(f"  ch variant {v}: {result.ch.values[v]:+.6f}")
    print(
        "the fair-sampled correlator exceeds the classical bound 2 while "
        "every event-probability variant stays at or below 0: detection "
        "losses alone fake the correlator version, not these"
    )
    return 0


def _cmd_demo(args) -> int:
    threads = _resolve_threads(args.threads)
    if args.name == "signaling":
        return _demo_signaling()
    if args.name == "detection-loophole":
        trials = args.trials if args.trials is not None else 500_000
        seed = args.seed if args.seed is not None else 0
        return _demo_detection_loophole(trials, seed, threads)
    raise UsageError(
        f"unknown demo {args.name!r}; available: signaling, detection-loophole"
    )


def _cmd_fuzz(args) -> int:
    samples = args.samples
    if samples <= 0:
        raise ValidationError(f"fuzz: samples must be positive, got {samples}")
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    u = rng.random((samples, 4))
    lhs = ch_tautology_lhs(u[:, 0], u[:, 1], u[:, 2], u[:, 3])
    slack = 4.0 * np.spacing(1.0)
    violations = int(np.count_nonzero(lhs > slack))
    print(f"tautology: {samples} samples, max lhs = {lhs.max():.3e}, "
          f"violations beyond 4-ulp slack = {violations}")
    m = rng.random(samples) * rng.integers(1, 1000, samples)
    n = rng.random(samples) * rng.integers(1, 1000, samples)
    total = m + n
    sum_violations = int(np.count_nonzero((total < m) | (total < n)))
    print(f"sum bound: {samples} samples, m+n >= max(m, n) violations = {sum_violations}")
    if violations or sum_violations:
        print("FUZZ FAILURE: a guaranteed inequality was violated")
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chsim", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=False):
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=None,
                       help=f"worker threads (default ${THREADS_ENV} or 1)")
        p.add_argument("--out", default=None, help="directory for machine-readable files")
        if config:
            p.add_argument("--config", required=True, help="TOML experiment config")

    p_sim = sub.add_parser("simulate", help="run a configured experiment")
    common(p_sim, config=True)
    p_sim.add_argument("--trials", type=int, default=None, help="override run.n_trials")
    p_sim.add_argument("--partitions", type=int, default=None,
                       help="override run.partitions")
    p_sim.add_argument("--format", choices=("csv", "jsonl"), default="csv",
                       help="trial file format under --out")
    p_sim.set_defaults(func=_cmd_simulate)

    p_an = sub.add_parser("analyze", help="recompute reports from a trials file")
    common(p_an)
    p_an.add_argument("trials_file", help="file written by simulate")
    p_an.add_argument("--format", choices=("csv", "jsonl"), default=None,
                      help="trial file format (default: by extension)")
    p_an.add_argument("--partitions", type=int, default=100)
    p_an.add_argument("--min-partition-trials", type=int, default=1000)
    p_an.add_argument("--marginal-mode", choices=("pooled", "per-pair"),
                      default="pooled")
    p_an.add_argument("--exclude-empty", action="store_true",
                      help="drop records with no detection on either side")
    p_an.set_defaults(func=_cmd_analyze)

    p_scan = sub.add_parser("scan", help="state-parameter / efficiency sweep")
    common(p_scan, config=True)
    p_scan.add_argument("--trials", type=int, default=None,
                        help="override scan.trials_per_cell")
    p_scan.add_argument("--partitions", type=int, default=None,
                        help="override scan.partitions")
    p_scan.set_defaults(func=_cmd_scan)

    p_demo = sub.add_parser("demo", help="printed demonstrations")
    common(p_demo)
    p_demo.add_argument("name", help="signaling or detection-loophole")
    p_demo.add_argument("--trials", type=int, default=None)
    p_demo.set_defaults(func=_cmd_demo)

    p_fuzz = sub.add_parser("fuzz", help="random checks of the guaranteed inequalities")
    common(p_fuzz)
    p_fuzz.add_argument("--samples", type=int, default=1_000_000)
    p_fuzz.set_defaults(func=_cmd_fuzz)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ChsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
