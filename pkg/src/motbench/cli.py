"""Command-line front end.

Exit status: 0 on success, 1 for bad input (every defect is listed on stderr,
each naming its file), 2 for internal errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

from . import __version__
from .assignment import MatchConfig
from .benchmark import emit_report, evaluate_benchmark, evaluate_detection_benchmark, rank_trackers
from .core_types import BoxTable, SequenceMeta
from .errors import InputError, InvalidSubmission, MotEvalError
from .io_formats import (
    FileKind,
    find_sequences,
    load_ground_truth,
    load_result_files,
    serialize_entries,
    validate_submission,
    write_seqinfo,
)
from .synth import assignment_cases, generate, random_spec, spec_from_dict

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2


class _Reported(Exception):
    """Diagnostics already printed; just exit with status 1."""


def _error(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _config(args) -> MatchConfig:
    return MatchConfig(
        iou_threshold=args.iou_threshold,
        distractor_threshold=args.distractor_threshold,
        distractor_overlap=args.distractor_overlap,
        min_visibility=args.min_visibility,
    )


def _seq_filter(args) -> list[str] | None:
    if not args.seq:
        return None
    return [s for chunk in args.seq for s in chunk.split(",") if s]


def _load_gt(args) -> tuple[dict[str, SequenceMeta], dict[str, BoxTable]]:
    seqs = find_sequences(args.gt, _seq_filter(args))
    if not seqs:
        raise InputError(f"{args.gt}: no sequence directories with ground truth found")
    metas, tables, errors = {}, {}, []
    for name, path in seqs.items():
        try:
            meta, table = load_ground_truth(path)
        except InputError as e:
            errors.append(e)
            continue
        metas[name] = SequenceMeta(name, meta.frame_count, meta.fps, meta.resolution)
        tables[name] = table
    _report_all(errors)
    return metas, tables


def _report_all(errors) -> None:
    if errors:
        for e in errors:
            _error(str(e))
        raise _Reported()


def _load_results(path, metas, kind) -> dict[str, BoxTable]:
    tables, errors, warnings = load_result_files(path, metas.values(), kind)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    _report_all(errors)
    return tables


def _write(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _single_res(args) -> None:
    if len(args.res) != 1:
        raise InputError("--res takes exactly one path for this command")


def cmd_eval_track(args) -> int:
    _single_res(args)
    metas, gt = _load_gt(args)
    results = _load_results(args.res[0], metas, FileKind.TRACKER_RESULT)
    report = evaluate_benchmark(gt, results, _config(args), metas=metas, workers=args.workers)
    _write(emit_report(report, args.format), args.out)
    return EXIT_OK


def cmd_eval_det(args) -> int:
    if args.det_confidence is None:
        raise InputError("--det-confidence is required for detection evaluation")
    _single_res(args)
    metas, gt = _load_gt(args)
    dets = _load_results(args.res[0], metas, FileKind.DETECTION)
    report = evaluate_detection_benchmark(gt, dets, args.det_confidence, _config(args), metas=metas)
    _write(emit_report(report, args.format), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    seqs = find_sequences(args.gt, _seq_filter(args))
    metas = []
    for name, path in seqs.items():
        meta, _ = load_ground_truth(path)
        metas.append(SequenceMeta(name, meta.frame_count, meta.fps, meta.resolution))
    archive = Path(args.res[0])
    if not archive.is_file():
        raise InputError(f"{archive}: no such archive")
    try:
        manifest = validate_submission(archive, metas)
    except InvalidSubmission as e:
        for w in e.warnings:
            print(f"warning: {w}", file=sys.stderr)
        for err in e.errors:
            _error(f"{archive}: {err}")
        return EXIT_INPUT
    for w in manifest.warnings:
        print(f"warning: {w}", file=sys.stderr)
    for name in sorted(manifest.tables):
        print(f"ok: {name}.txt ({len(manifest.tables[name])} boxes)")
    return EXIT_OK


def cmd_rank(args) -> int:
    metas, gt = _load_gt(args)
    config = _config(args)
    reports = {}
    for spec in args.res:
        name, _, path = spec.rpartition("=")
        name = name or Path(path).stem
        if name in reports:
            raise InputError(f"tracker name {name!r} given twice")
        results = _load_results(path, metas, FileKind.TRACKER_RESULT)
        reports[name] = evaluate_benchmark(gt, results, config, metas=metas, workers=args.workers)
    metrics = args.metrics.split(",") if args.metrics else None
    table = rank_trackers(reports, metrics) if metrics else rank_trackers(reports)
    _write(emit_report(table, args.format), args.out)
    return EXIT_OK


def _write_case(root: Path, name: str, gt, results, expected, frame_count: int) -> None:
    seq = root / name
    seq.mkdir(parents=True, exist_ok=True)
    (seq / "gt.txt").write_text(serialize_entries(gt, FileKind.GROUND_TRUTH), encoding="utf-8")
    write_seqinfo(SequenceMeta(name, frame_count), seq / "seqinfo.ini")
    (seq / "expected.json").write_text(json.dumps(expected.as_dict(), indent=2) + "\n", encoding="utf-8")
    res_dir = root / "results"
    res_dir.mkdir(exist_ok=True)
    (res_dir / f"{name}.txt").write_text(serialize_entries(results, FileKind.TRACKER_RESULT), encoding="utf-8")


def cmd_synth(args) -> int:
    root = Path(args.out or "synth_out")
    root.mkdir(parents=True, exist_ok=True)
    if args.scenario == "cases":
        for case in assignment_cases():
            last = max(e.frame for e in case.gt + case.results)
            _write_case(root, case.name, case.gt, case.results, case.expected, last)
    elif args.scenario == "random":
        for k in range(args.count):
            spec = random_spec(args.seed + k, frame_count=args.frames)
            gt, res, expected = generate(spec)
            _write_case(root, f"scenario_{k:03d}", gt, res, expected, spec.frame_count)
    else:
        path = Path(args.scenario)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise InputError(f"{path}: cannot read scenario ({e})") from None
        if args.seed_given:
            doc["seed"] = args.seed
        spec = spec_from_dict(doc)
        gt, res, expected = generate(spec)
        _write_case(root, path.stem, gt, res, expected, spec.frame_count)
    print(f"wrote fixtures to {root}")
    return EXIT_OK


def _add_eval_flags(p: argparse.ArgumentParser, res_help: str) -> None:
    p.add_argument("--gt", required=True, help="directory with one sub-directory per sequence (gt.txt, seqinfo.ini)")
    p.add_argument("--res", required=True, action="append", help=res_help)
    p.add_argument("--seq", action="append", help="restrict to these sequences (comma separated, repeatable)")
    p.add_argument("--iou-threshold", type=float, default=0.5)
    p.add_argument("--distractor-threshold", type=float, default=0.75)
    p.add_argument("--distractor-overlap", choices=("iou", "ioa"), default="iou")
    p.add_argument("--min-visibility", type=float, default=None)
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="motbench", description="Multi-object tracking benchmark evaluation")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval-track", help="CLEAR MOT and track quality metrics")
    _add_eval_flags(p, "result directory (<Sequence>.txt files) or submission ZIP")
    p.set_defaults(func=cmd_eval_track)

    p = sub.add_parser("eval-det", help="detection metrics (AP, MODA, ...)")
    _add_eval_flags(p, "directory or ZIP of <Sequence>.txt detection files")
    p.add_argument("--det-confidence", type=float, default=None, help="operating confidence threshold")
    p.set_defaults(func=cmd_eval_det)

    p = sub.add_parser("validate", help="check a submission ZIP")
    p.add_argument("--gt", required=True)
    p.add_argument("--res", required=True, action="append", help="submission ZIP")
    p.add_argument("--seq", action="append")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("rank", help="rank trackers by average rank over metrics")
    _add_eval_flags(p, "NAME=PATH of one tracker's results; repeat for each tracker")
    p.add_argument("--metrics", help="comma separated metric columns to rank on")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("synth", help="write synthetic fixtures with expected outcomes")
    p.add_argument("--out", help="output directory")
    p.add_argument("--scenario", default="cases", help="'cases', 'random' or a JSON scenario file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--count", type=int, default=4, help="number of random scenarios")
    p.add_argument("--frames", type=int, default=30, help="frames per random scenario")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "command", None) == "synth":
        args.seed_given = args.seed is not None
        args.seed = 0 if args.seed is None else args.seed
    try:
        return args.func(args)
    except _Reported:
        return EXIT_INPUT
    except (MotEvalError, ValueError) as e:
        _error(str(e))
        return EXIT_INPUT
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
