"""Command-line front end: read fixtures, evaluate batches, generate scenes.

Thin shell over the library; reports go to stdout as JSON (one document per
line), diagnostics to stderr. Exit codes: 0 success, 1 reading failure on at
least one input, 2 usage or I/O error, 3 schema/spec error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (
    FixtureSyntaxError,
    GaugeKitError,
    MissingGroundTruth,
    SchemaError,
    SpecError,
)
from .fixtures import parse_fixture, serialize_fixture, serialize_report
from .pipeline import PipelineConfig, evaluate_batch, read_gauge, serialize_summary
from .synthgauge import generate_scene, parse_perturbation_spec, parse_scene_spec, perturb_scene

EXIT_OK = 0
EXIT_READING_FAILURE = 1
EXIT_IO = 2
EXIT_SCHEMA = 3


def _fail(code: int, message: str) -> int:
    print(f"gaugekit: {message}", file=sys.stderr)
    return code


def _load_config(path) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    return PipelineConfig.from_file(path)


def _cmd_read(args) -> int:
    try:
        cfg = _load_config(args.config)
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot read config: {exc}")
    any_reading_failure = False
    for path in args.paths:
        try:
            data = Path(path).read_bytes()
        except OSError as exc:
            return _fail(EXIT_IO, f"{path}: {exc}")
        try:
            fixture = parse_fixture(data)
        except (FixtureSyntaxError, SchemaError) as exc:
            return _fail(EXIT_SCHEMA, f"{path}: {exc}")
        report = read_gauge(fixture, cfg)
        if not report.readings:
            any_reading_failure = True
        if args.table:
            readings = (
                ", ".join(f"{r.scale.value}={r.value:.6g}" for r in report.readings) or "-"
            )
            stages = "; ".join(
                f"{stage.value}:{'ok' if st.ok else st.reason}"
                for stage, st in report.stage_statuses.items()
            )
            print(f"{path}\t{readings}\t{report.unit or '-'}\t{stages}")
        else:
            sys.stdout.buffer.write(serialize_report(report) + b"\n")
    return EXIT_READING_FAILURE if any_reading_failure else EXIT_OK


def _cmd_eval(args) -> int:
    try:
        cfg = _load_config(args.config)
        manifest_path = Path(args.manifest)
        doc = json.loads(manifest_path.read_text(encoding="utf-8"))
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot read inputs: {exc}")
    except json.JSONDecodeError as exc:
        return _fail(EXIT_SCHEMA, f"{args.manifest}: invalid JSON: {exc}")
    paths = doc.get("fixtures")
    if not isinstance(paths, list):
        return _fail(EXIT_SCHEMA, f"{args.manifest}: expected a 'fixtures' array")

    fixtures = []
    for rel in paths:
        fpath = manifest_path.parent / rel
        try:
            fixtures.append(parse_fixture(fpath.read_bytes()))
        except OSError as exc:
            return _fail(EXIT_IO, f"{fpath}: {exc}")
        except (FixtureSyntaxError, SchemaError) as exc:
            return _fail(EXIT_SCHEMA, f"{fpath}: {exc}")
    try:
        summary = evaluate_batch(fixtures, cfg)
    except MissingGroundTruth as exc:
        return _fail(EXIT_SCHEMA, str(exc))

    payload = serialize_summary(summary)
    if args.out:
        try:
            Path(args.out).write_bytes(payload + b"\n")
        except OSError as exc:
            return _fail(EXIT_IO, f"cannot write {args.out}: {exc}")
        print(args.out)
    else:
        sys.stdout.buffer.write(payload + b"\n")
    print(summary.to_table(), file=sys.stderr)
    return EXIT_OK


def _scene_pairs(doc) -> list[tuple[dict, dict | None]]:
    if "scenes" in doc:
        entries = doc["scenes"]
        if not isinstance(entries, list):
            raise SpecError("'scenes' must be an array")
        return [
            (entry.get("spec", entry), entry.get("perturbation")) for entry in entries
        ]
    if "spec" in doc:
        return [(doc["spec"], doc.get("perturbation"))]
    return [(doc, None)]


def _cmd_generate(args) -> int:
    try:
        doc = json.loads(Path(args.source).read_text(encoding="utf-8"))
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot read {args.source}: {exc}")
    except json.JSONDecodeError as exc:
        return _fail(EXIT_SCHEMA, f"{args.source}: invalid JSON: {exc}")

    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot create {out_dir}: {exc}")

    try:
        pairs = _scene_pairs(doc if isinstance(doc, dict) else {})
        names = []
        for index, (spec_doc, pert_doc) in enumerate(pairs):
            spec = parse_scene_spec(spec_doc)
            fixture, truth = generate_scene(spec)
            if pert_doc is not None:
                pert = parse_perturbation_spec(pert_doc)
                if args.seed is not None:
                    pert = parse_perturbation_spec(
                        {**pert_doc, "seed": args.seed + index}
                    )
                fixture = perturb_scene(fixture, truth, pert)
            name = f"scene_{index:03d}.json"
            (out_dir / name).write_bytes(serialize_fixture(fixture) + b"\n")
            names.append(name)
            print(out_dir / name)
        manifest = {"schema": 1, "fixtures": names}
        (out_dir / "manifest.json").write_bytes(
            json.dumps(manifest, ensure_ascii=False).encode("utf-8") + b"\n"
        )
    except SpecError as exc:
        return _fail(EXIT_SCHEMA, str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaugekit", description="Analog gauge reading from detection fixtures."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_read = sub.add_parser("read", help="read gauge fixtures and print reports")
    p_read.add_argument("paths", nargs="+", help="fixture JSON files")
    p_read.add_argument("--config", help="pipeline config JSON")
    p_read.add_argument(
        "--table", action="store_true", help="human-readable table instead of JSON"
    )

    p_eval = sub.add_parser("eval", help="evaluate a manifest of fixtures with ground truth")
    p_eval.add_argument("manifest", help="JSON manifest with a 'fixtures' array")
    p_eval.add_argument("--config", help="pipeline config JSON")
    p_eval.add_argument("--out", help="write the summary JSON here instead of stdout")

    p_gen = sub.add_parser("generate", help="generate fixture files from scene specs")
    p_gen.add_argument("source", help="scene spec or manifest JSON")
    p_gen.add_argument(
        "--seed", type=int, default=None, help="override perturbation seeds as seed+index"
    )
    p_gen.add_argument("--out-dir", default=".", help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "read":
            return _cmd_read(args)
        if args.command == "eval":
            return _cmd_eval(args)
        return _cmd_generate(args)
    except GaugeKitError as exc:  # pragma: no cover - safety net
        return _fail(EXIT_SCHEMA, str(exc))


if __name__ == "__main__":
    sys.exit(main())
