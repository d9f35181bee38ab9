"""Batch experiment runner.

Reads a line-oriented ``key = value`` config (documented in the README),
runs the Monte-Carlo campaign, and writes ``results.csv`` plus
``meta.json`` into the output directory. Output rows are deterministic
for a fixed config and seed at any thread count; wall-clock timing
columns are only populated when ``--timings`` is passed, so the default
CSV is byte-reproducible.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from .methods import METHOD_DESCRIPTIONS, METHOD_TAGS, MethodSpec
from .scenario import SCENARIO_KINDS, ScenarioConfig, run_monte_carlo

try:  # pragma: no cover - metadata lookup
    from importlib.metadata import version as _pkg_version

    BUILD_VERSION = _pkg_version("covlearn")
except Exception:  # pragma: no cover
    BUILD_VERSION = "unknown"

CSV_COLUMNS = (
    "method",
    "snr_db",
    "trials",
    "per",
    "rmse_theta_deg",
    "nmse_gamma",
    "mean_iters",
    "mean_runtime_s",
)

EMIT_FORMATS = ("csv", "json")

_SCALAR_KEYS = {
    "kind": str,
    "n": int,
    "m": int,
    "l": int,
    "k": int,
    "rho": float,
    "noise_var": float,
    "seed": int,
    "trials": int,
    "peak": bool,
    "max_iter": int,
    "tol": float,
    "known_sigma2": float,
    "output_dir": str,
}
_LIST_KEYS = {
    "snr_db": float,
    "source_offsets_db": float,
    "true_doas_deg": float,
    "methods": str,
    "emit": str,
}
_REQUIRED_KEYS = ("kind", "n", "m", "l", "k", "snr_db", "methods")
_OVERRIDE_FIELDS = {
    "max_iter": int,
    "tol": float,
    "b": float,
    "known_sigma2": float,
    "prune_threshold": float,
}


@dataclass(frozen=True)
class ExperimentSpec:
    """A validated experiment: scenario, method list, output destination/formats."""

    scenario: ScenarioConfig
    methods: tuple
    output_dir: str = "results"
    emit: tuple = ("csv", "json")


class SpecError(ValueError):
    """Config file failed to parse or validate."""


def _parse_value(kind, raw, where):
    if kind is bool:
        lowered = raw.lower()
        if lowered in ("true", "yes", "1"):
            return True
        if lowered in ("false", "no", "0"):
            return False
        raise SpecError(f"{where}: expected a boolean, got {raw!r}")
    try:
        return kind(raw)
    except ValueError:
        raise SpecError(f"{where}: expected {kind.__name__}, got {raw!r}") from None


def parse_spec(path) -> ExperimentSpec:
    """Parse and validate a config file into an ExperimentSpec.

    Every diagnostic names the offending key and its line number.
    """
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise SpecError(f"cannot read config {path}: {exc}") from exc

    entries: dict[str, tuple[str, int]] = {}
    for ln, line in enumerate(lines, start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, value = stripped.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if not sep or not key:
            raise SpecError(f"{path}:{ln}: expected 'key = value', got {line.strip()!r}")
        if not value:
            raise SpecError(f"{path}:{ln}: key {key!r} has no value")
        if key in entries:
            raise SpecError(f"{path}:{ln}: key {key!r} already set on line {entries[key][1]}")
        entries[key] = (value, ln)

    scalars: dict = {}
    lists: dict = {}
    overrides: dict[str, dict] = {}
    for key, (value, ln) in entries.items():
        where = f"{path}:{ln}: key {key!r}"
        if key in _SCALAR_KEYS:
            scalars[key] = _parse_value(_SCALAR_KEYS[key], value, where)
        elif key in _LIST_KEYS:
            items = [v.strip() for v in value.split(",") if v.strip()]
            if not items:
                raise SpecError(f"{where}: empty list")
            lists[key] = tuple(_parse_value(_LIST_KEYS[key], v, where) for v in items)
        elif key.startswith("method."):
            parts = key.split(".")
            if len(parts) != 3:
                raise SpecError(f"{where}: method overrides look like method.<tag>.<field>")
            _, tag, fieldname = parts
            if tag not in METHOD_TAGS:
                raise SpecError(
                    f"{where}: unknown method tag {tag!r}; supported: {', '.join(METHOD_TAGS)}"
                )
            if fieldname not in _OVERRIDE_FIELDS:
                raise SpecError(
                    f"{where}: unknown override field {fieldname!r}; "
                    f"supported: {', '.join(_OVERRIDE_FIELDS)}"
                )
            overrides.setdefault(tag, {})[fieldname] = _parse_value(
                _OVERRIDE_FIELDS[fieldname], value, where
            )
        else:
            raise SpecError(f"{where}: unknown key")

    for key in _REQUIRED_KEYS:
        if key not in scalars and key not in lists:
            raise SpecError(f"{path}: missing required key {key!r}")

    if scalars.get("kind") not in SCENARIO_KINDS:
        raise SpecError(
            f"{path}: key 'kind' must be one of {', '.join(SCENARIO_KINDS)}"
        )

    emit = lists.get("emit", EMIT_FORMATS)
    for fmt in emit:
        if fmt not in EMIT_FORMATS:
            raise SpecError(f"{path}: key 'emit' entries must be in {EMIT_FORMATS}")

    try:
        scenario = ScenarioConfig(
            kind=scalars["kind"],
            n_sensors=scalars["n"],
            n_atoms=scalars["m"],
            n_snapshots=scalars["l"],
            k=scalars["k"],
            snr_db=lists["snr_db"],
            source_offsets_db=lists.get("source_offsets_db"),
            rho=scalars.get("rho", 0.0),
            noise_var=scalars.get("noise_var", 1.0),
            true_doas_deg=lists.get("true_doas_deg"),
            seed=scalars.get("seed", 0),
            trials=scalars.get("trials", 100),
            peak=scalars.get("peak"),
        )
    except ValueError as exc:
        raise SpecError(f"{path}: {exc}") from exc

    base = {
        "max_iter": scalars.get("max_iter", 500),
        "tol": scalars.get("tol", 0.5e-4),
        "known_sigma2": scalars.get("known_sigma2"),
    }
    methods = []
    for tag in lists["methods"]:
        if tag not in METHOD_TAGS:
            raise SpecError(
                f"{path}: unknown method tag {tag!r}; supported: {', '.join(METHOD_TAGS)}"
            )
        methods.append(MethodSpec(tag=tag, **{**base, **overrides.pop(tag, {})}))
    if overrides:
        stray = ", ".join(sorted(overrides))
        raise SpecError(f"{path}: overrides for methods not in the run: {stray}")

    return ExperimentSpec(
        scenario=scenario,
        methods=tuple(methods),
        output_dir=scalars.get("output_dir", "results"),
        emit=tuple(emit),
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _record_row(rec, timings: bool) -> list:
    return [
        rec.method,
        _fmt(rec.snr_db),
        str(rec.trials),
        _fmt(rec.per),
        _fmt(rec.rmse_theta_deg),
        _fmt(rec.nmse_gamma),
        _fmt(rec.mean_iters),
        _fmt(rec.mean_runtime_s) if timings else "",
    ]


def run_experiment(
    spec: ExperimentSpec,
    out_dir,
    threads: int = 1,
    timings: bool = False,
) -> int:
    """Execute the campaign and write results.csv / results.json / meta.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    records = run_monte_carlo(spec.scenario, spec.methods, threads=threads)
    wall = time.perf_counter() - started

    if "csv" in spec.emit:
        with open(out / "results.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for rec in records:
                writer.writerow(_record_row(rec, timings))

    if "json" in spec.emit:
        rows = []
        for rec in records:
            row = asdict(rec)
            if not timings:
                row["mean_runtime_s"] = None
            rows.append(row)
        with open(out / "results.json", "w") as fh:
            json.dump(rows, fh, indent=2)
            fh.write("\n")

    meta = {
        "scenario": asdict(spec.scenario),
        "methods": [asdict(m) for m in spec.methods],
        "emit": list(spec.emit),
        "seed": spec.scenario.seed,
        "build_version": BUILD_VERSION,
        "wall_time_s": wall,
        "threads": threads,
        "timings": timings,
        "failures": {
            f"{rec.method}@{rec.snr_db}": rec.failures for rec in records if rec.failures
        },
    }
    with open(out / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return 0


def _default_threads() -> int:
    env = os.environ.get("COVLEARN_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covlearn", description="covariance-learning sparse recovery benchmarks"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a Monte-Carlo experiment from a config file")
    run_p.add_argument("--config", required=True, help="path to the experiment config")
    run_p.add_argument("--out", default=None, help="output directory (default: the config's output_dir)")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--trials", type=int, default=None, help="override the trial count")
    run_p.add_argument(
        "--threads",
        type=int,
        default=None,
        help="trial-level parallelism (default: $COVLEARN_THREADS or 1); results are invariant to it",
    )
    run_p.add_argument(
        "--timings",
        action="store_true",
        help="populate wall-clock columns (forfeits byte-reproducible CSV output)",
    )

    sub.add_parser("list-methods", help="list supported method tags")

    val_p = sub.add_parser("validate", help="parse and validate a config file")
    val_p.add_argument("--config", required=True, help="path to the experiment config")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "list-methods":
        for tag in METHOD_TAGS:
            print(f"{tag:8s} {METHOD_DESCRIPTIONS[tag]}")
        return 0

    try:
        spec = parse_spec(args.config)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate":
        print(f"{args.config}: ok")
        return 0

    scenario = spec.scenario
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    if args.trials is not None:
        try:
            scenario = replace(scenario, trials=args.trials)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    spec = replace(spec, scenario=scenario)

    threads = args.threads if args.threads is not None else _default_threads()
    out_dir = args.out if args.out is not None else spec.output_dir
    try:
        return run_experiment(spec, out_dir, threads=threads, timings=args.timings)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
