"""Command-line front end: classify, experiment, sweep, label.

Emits CSV artifacts with fixed column layouts. Exit codes: 0 success,
1 usage error, 2 validation error (bad file or parameter), 3 runtime
error (degenerate evidence, position not covered).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from threatfuse.fusion import (
    DegenerateEvidenceError,
    Detection,
    DetectionSet,
    Scenario,
    baseline_classify,
    map_classify,
)
from threatfuse.metrics import confusion, report
from threatfuse.regions import (
    RegionFileError,
    RegionNotCoveredError,
    load_region_file,
    lookup,
)
from threatfuse.scenario import ScenarioError, resolve_scenario
from threatfuse.simulate import (
    ConfidenceModel,
    EMISSION_MODES,
    SWEEP_KINDS,
    TrialConfig,
    run_trials,
    sweep,
)


class InputError(ValueError):
    """Malformed command input file (detections, positions)."""


def _fmt(value: float) -> str:
    return f"{value:.10g}"


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the CLI contract reserves 2
    # for validation errors and uses 1 for usage
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_position(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise InputError(f"position {text!r} is not of the form X,Y")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise InputError(f"position {text!r} has non-numeric coordinates") from None


def _load_detections(path: str, scenario: Scenario) -> DetectionSet:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read detections file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed detections file {path!r}: {exc}") from exc
    if isinstance(data, dict):
        data = data.get("detections", [])
    if not isinstance(data, list):
        raise InputError(f"{path}: expected a list under 'detections'")
    detections = []
    for k, entry in enumerate(data):
        context = f"{path}: detection #{k}"
        if not isinstance(entry, dict):
            raise InputError(f"{context}: not an object")
        sensor_id = entry.get("sensor")
        if not isinstance(sensor_id, str):
            raise InputError(f"{context}: missing 'sensor' string")
        scenario.sensor(sensor_id)  # unknown ids fail here with a clear message
        confidence = entry.get("confidence")
        if not isinstance(confidence, (int, float)) or isinstance(confidence, bool):
            raise InputError(f"{context}: missing numeric 'confidence'")
        predicted = None
        if "predicted_type" in entry:
            label = entry["predicted_type"]
            if not isinstance(label, str):
                raise InputError(f"{context}: 'predicted_type' must be a type label")
            predicted = scenario.type_by_label(label)
        detections.append(Detection(sensor_id, float(confidence), predicted))
    return DetectionSet(tuple(detections))


def _write_csv(out: Optional[str], header: Sequence[str], rows: Sequence[Sequence[str]]) -> None:
    def write(stream) -> None:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)

    if out is None:
        write(sys.stdout)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as stream:
            write(stream)
    except OSError as exc:
        raise InputError(f"cannot write output file {out!r}: {exc}") from exc


# === command handlers ===


def cmd_classify(args: argparse.Namespace) -> int:
    scenario = resolve_scenario(args.scenario)
    if (args.region is None) == (args.position is None):
        raise InputError("pass exactly one of --region or --position with --region-file")
    if args.region is not None:
        region = scenario.region_by_label(args.region)
    else:
        if args.region_file is None:
            raise InputError("--position requires --region-file")
        index = load_region_file(
            args.region_file, scenario, default_region=args.default_region
        )
        region = lookup(index, _parse_position(args.position))
    detections = _load_detections(args.detections, scenario)
    map_type, post = map_classify(detections, region, scenario)
    vote_type = baseline_classify(detections, region, scenario)
    print(f"region {region.label}")
    for t, p in zip(scenario.types, post.probs):
        print(f"posterior {t.label} {p:.12g}")
    print(f"map {map_type.label} {post.probs[map_type.index]:.12g}")
    print(f"baseline {vote_type.label}")
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    names = args.scenario or ["basic", "cbrne"]
    scenarios = [resolve_scenario(name) for name in names]
    classifiers = [c.strip().lower() for c in args.classifiers.split(",") if c.strip()]
    for c in classifiers:
        if c not in ("proposed", "baseline"):
            raise InputError(f"unknown classifier {c!r}; choose from proposed, baseline")
    type_labels: list[str] = []
    for scn in scenarios:
        for t in scn.types:
            if t.label not in type_labels:
                type_labels.append(t.label)
    header = ["method", "scenario", "accuracy", "f1", *type_labels]
    rows = []
    for scn in scenarios:
        for classifier in classifiers:
            config = TrialConfig(
                scenario=scn,
                runs=args.runs,
                seed=args.seed,
                classifier=classifier,
                emission=args.emission,
                confidence_model=ConfidenceModel.from_scenario(scn),
            )
            records = run_trials(config, threads=args.threads)
            rep = report(confusion(records, scn.types))
            per_class = {t.label: f1 for t, f1 in zip(scn.types, rep.per_class_f1)}
            row = [classifier.capitalize(), scn.name, _fmt(rep.accuracy), _fmt(rep.macro_f1)]
            # types absent from a scenario stay empty, like the table's n.a.
            row.extend(
                _fmt(per_class[label]) if label in per_class else ""
                for label in type_labels
            )
            rows.append(row)
    _write_csv(args.out, header, rows)
    return 0


_DEFAULT_CLUTTER_GRID = "0.001,0.003,0.01,0.03,0.1,0.3,1,3,10"
_DEFAULT_PRIOR_GRID = "0,0.125,0.25,0.375,0.5,0.625,0.75,0.875,1"


def cmd_sweep(args: argparse.Namespace) -> int:
    scenario = resolve_scenario(args.scenario)
    if args.grid is not None:
        grid_text = args.grid
    elif args.kind == "sensors":
        grid_text = ",".join(str(n) for n in range(len(scenario.sensors) + 1))
    elif args.kind == "clutter":
        grid_text = _DEFAULT_CLUTTER_GRID
    else:
        grid_text = _DEFAULT_PRIOR_GRID
    try:
        grid = [float(x) for x in grid_text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"grid {grid_text!r} has non-numeric entries") from None
    base = TrialConfig(
        scenario=scenario,
        runs=args.runs,
        seed=args.seed,
        emission=args.emission,
        confidence_model=ConfidenceModel.from_scenario(scenario),
    )
    table = sweep(args.kind, base, grid, threads=args.threads)
    rows = [[_fmt(v) for v in row] for row in table.rows]
    _write_csv(args.out, table.columns, rows)
    return 0


def cmd_label(args: argparse.Namespace) -> int:
    scenario = resolve_scenario(args.scenario)
    index = load_region_file(args.region_file, scenario, default_region=args.default_region)
    region = lookup(index, _parse_position(args.position))
    print(region.label)
    return 0


# === parser ===


def _build_parser() -> _Parser:
    parser = _Parser(prog="threatfuse", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[], help="classify one detection set")
    p.add_argument("--scenario", default="basic", help="built-in name or scenario file")
    p.add_argument("--detections", required=True, help="JSON detections file")
    p.add_argument("--region", help="region label for the contextual prior")
    p.add_argument("--position", help="X,Y position, resolved via --region-file")
    p.add_argument("--region-file", help="GeoJSON region file")
    p.add_argument("--default-region", help="fallback label for uncovered positions")
    p.set_defaults(handler=cmd_classify)

    p = sub.add_parser("experiment", help="Monte Carlo accuracy/F1 table")
    p.add_argument(
        "--scenario", action="append",
        help="built-in name or file; repeatable (default: basic and cbrne)",
    )
    p.add_argument("--runs", type=int, default=10000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--emission", choices=EMISSION_MODES, default="one-per-sensor")
    p.add_argument("--classifiers", default="proposed,baseline")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.set_defaults(handler=cmd_experiment)

    p = sub.add_parser("sweep", help="ablation sweep CSV")
    p.add_argument("--kind", choices=SWEEP_KINDS, required=True)
    p.add_argument("--scenario", default="basic", help="built-in name or scenario file")
    p.add_argument("--grid", help="comma-separated grid values (default per kind)")
    p.add_argument("--runs", type=int, default=10000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--emission", choices=EMISSION_MODES, default="one-per-sensor")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("label", help="resolve a position to a region label")
    p.add_argument("--region-file", required=True, help="GeoJSON region file")
    p.add_argument("--position", required=True, help="X,Y position")
    p.add_argument("--scenario", default="cbrne", help="scenario providing labels/aliases")
    p.add_argument("--default-region", help="fallback label for uncovered positions")
    p.set_defaults(handler=cmd_label)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except (DegenerateEvidenceError, RegionNotCoveredError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ScenarioError, RegionFileError, InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
