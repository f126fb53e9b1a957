"""Benchmark-level aggregation, tracker ranking and report output."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .assignment.matching import (
    MatchConfig,
    MatchTimeline,
    Removal,
    concatenate_timelines,
    match_sequence,
    preprocess_results,
    split_ground_truth,
)
from .core_types import BoxTable, SequenceMeta
from .errors import SequenceSetMismatch
from .metrics import (
    ClearMetrics,
    DetectionMetrics,
    TrackQualityMetrics,
    _detection_frames,
    compute_clear,
    compute_track_quality,
    detection_metrics_for_frames,
)

# Detection-style columns first, then the tracking measures.
TRACKING_COLUMNS = (
    "Rcll", "Prcn", "FAR", "GT", "TP", "FP", "FN", "MODA", "MODP",
    "MOTA", "MOTP", "IDSW", "IDSWr", "MT", "PT", "ML", "MTr", "MLr", "FM", "FMr", "GTtraj", "Frames",
)  # fmt: skip
DETECTION_COLUMNS = ("AP", "Rcll", "Prcn", "FAR", "GT", "TP", "FP", "FN", "MODA", "MODP", "Frames")

_INT_COLUMNS = {"GT", "TP", "FP", "FN", "IDSW", "MT", "PT", "ML", "FM", "GTtraj", "Frames"}


@dataclass(frozen=True)
class MetricReport:
    name: str
    clear: ClearMetrics
    quality: TrackQualityMetrics

    def row(self) -> dict:
        c, q = self.clear, self.quality
        return {
            "Rcll": c.recall,
            "Prcn": c.precision,
            "FAR": c.faf,
            "GT": c.gt_total,
            "TP": c.tp,
            "FP": c.fp,
            "FN": c.fn,
            "MODA": c.moda,
            "MODP": c.motp,
            "MOTA": c.mota,
            "MOTP": c.motp,
            "IDSW": c.idsw,
            "IDSWr": c.relative_idsw,
            "MT": q.mt,
            "PT": q.pt,
            "ML": q.ml,
            "MTr": q.mt_ratio,
            "MLr": q.ml_ratio,
            "FM": q.fm,
            "FMr": q.relative_fm,
            "GTtraj": q.total,
            "Frames": c.frame_count,
        }


@dataclass
class SequenceEvaluation:
    report: MetricReport
    timeline: MatchTimeline
    removals: list[Removal]


@dataclass
class BenchmarkReport:
    sequences: list[MetricReport]
    overall: MetricReport | None
    mota_std: float
    config: MatchConfig
    removals: dict[str, int] = field(default_factory=dict)


def evaluate_sequence(
    gt: BoxTable, results: BoxTable, config: MatchConfig | None = None, meta: SequenceMeta | None = None, name: str = ""
) -> SequenceEvaluation:
    """Full pipeline for one sequence: split classes, drop distractor hits, match, score."""
    config = config or MatchConfig()
    name = meta.name if meta is not None else name
    targets = split_ground_truth(gt, config).targets
    filtered, removals = preprocess_results(gt, results, config)
    frame_count = meta.frame_count if meta is not None else None
    timeline = match_sequence(targets, filtered, config, frame_count=frame_count, name=name)
    clear = compute_clear(timeline)
    quality = compute_track_quality(targets, timeline, recall=clear.recall)
    return SequenceEvaluation(MetricReport(name, clear, quality), timeline, removals)


def _evaluate_job(args):
    return evaluate_sequence(*args)


def _check_names(gt_names, res_names):
    missing = set(gt_names) - set(res_names)
    extra = set(res_names) - set(gt_names)
    if missing or extra:
        raise SequenceSetMismatch(missing, extra)


def evaluate_benchmark(
    gt_by_sequence: Mapping[str, BoxTable],
    results_by_sequence: Mapping[str, BoxTable],
    config: MatchConfig | None = None,
    metas: Mapping[str, SequenceMeta] | None = None,
    workers: int = 1,
) -> BenchmarkReport:
    """Per-sequence metrics plus an overall row over the concatenated sequences.

    The overall row sums events across sequences instead of averaging
    per-sequence scores. The MOTA spread is the population standard
    deviation of the per-sequence values.
    """
    config = config or MatchConfig()
    _check_names(gt_by_sequence, results_by_sequence)
    names = sorted(gt_by_sequence)
    metas = metas or {}
    jobs = [(gt_by_sequence[n], results_by_sequence[n], config, metas.get(n), n) for n in names]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            evaluations = list(pool.map(_evaluate_job, jobs))
    else:
        evaluations = [_evaluate_job(j) for j in jobs]

    rows = [e.report for e in evaluations]
    if not rows:
        return BenchmarkReport([], None, 0.0, config)
    timeline = concatenate_timelines(e.timeline for e in evaluations)
    clear = compute_clear(timeline)
    quality = TrackQualityMetrics.combine((r.quality for r in rows), clear.recall)
    overall = MetricReport("OVERALL", clear, quality)
    mota_std = float(np.std([r.clear.mota for r in rows]))
    removals = {e.report.name: len(e.removals) for e in evaluations}
    return BenchmarkReport(rows, overall, mota_std, config, removals)


# -- detection benchmark -----------------------------------------------------------


@dataclass
class DetectionReport:
    sequences: list[tuple[str, DetectionMetrics]]
    overall: DetectionMetrics | None
    config: MatchConfig
    operating_confidence: float


def evaluate_detection_benchmark(
    gt_by_sequence: Mapping[str, BoxTable],
    dets_by_sequence: Mapping[str, BoxTable],
    operating_confidence: float,
    config: MatchConfig | None = None,
    metas: Mapping[str, SequenceMeta] | None = None,
) -> DetectionReport:
    config = config or MatchConfig()
    _check_names(gt_by_sequence, dets_by_sequence)
    metas = metas or {}
    rows = []
    all_frames = []
    total_frames = 0
    for name in sorted(gt_by_sequence):
        gt, dets = gt_by_sequence[name], dets_by_sequence[name]
        meta = metas.get(name)
        if meta is not None:
            frame_count = meta.frame_count
        else:
            last = [int(t.frame.max()) for t in (gt, dets) if len(t)]
            frame_count = max(last) if last else 1
        frames = _detection_frames(gt, dets, config)
        rows.append((name, detection_metrics_for_frames(frames, config, operating_confidence, frame_count)))
        all_frames.extend(frames)
        total_frames += frame_count
    overall = (
        detection_metrics_for_frames(all_frames, config, operating_confidence, total_frames) if rows else None
    )
    return DetectionReport(rows, overall, config, operating_confidence)


def detection_row(m: DetectionMetrics) -> dict:
    return {
        "AP": m.ap,
        "Rcll": m.recall,
        "Prcn": m.precision,
        "FAR": m.far,
        "GT": m.gt,
        "TP": m.tp,
        "FP": m.fp,
        "FN": m.fn,
        "MODA": m.moda,
        "MODP": m.modp,
        "Frames": m.frame_count,
    }


# -- ranking -----------------------------------------------------------------------

HIGHER_IS_BETTER = {"MOTA", "MOTP", "MT", "MTr", "Rcll", "Prcn", "MODA", "MODP"}
LOWER_IS_BETTER = {"FP", "FN", "IDSW", "IDSWr", "FM", "FMr", "ML", "MLr", "FAR"}
DEFAULT_RANK_METRICS = ("MOTA", "MOTP", "MTr", "MLr", "FP", "FN", "IDSW", "FM")


@dataclass
class RankingTable:
    metrics: tuple[str, ...]
    trackers: list[str]  # sorted by average rank
    values: dict[str, dict[str, float]]
    ranks: dict[str, dict[str, float]]
    average_rank: dict[str, float]


def rank_trackers(
    reports: Mapping[str, BenchmarkReport], metrics: Sequence[str] = DEFAULT_RANK_METRICS
) -> RankingTable:
    """Rank trackers on each overall metric and average the ranks.

    Ties share the mean of the ranks they span. Undefined values rank last.
    """
    if not reports:
        raise ValueError("need at least one tracker to rank")
    metrics = tuple(metrics)
    for m in metrics:
        if m not in HIGHER_IS_BETTER and m not in LOWER_IS_BETTER:
            raise ValueError(f"unknown ranking metric {m!r}")
    names = sorted(reports)
    seqs = {n: sorted(r.name for r in reports[n].sequences) for n in names}
    ref = seqs[names[0]]
    for n in names[1:]:
        if seqs[n] != ref:
            raise SequenceSetMismatch(set(ref) - set(seqs[n]), set(seqs[n]) - set(ref))

    values = {}
    for n in names:
        overall = reports[n].overall
        if overall is None:
            raise ValueError(f"tracker {n!r} has an empty report")
        row = overall.row()
        values[n] = {m: float(row[m]) for m in metrics}

    ranks: dict[str, dict[str, float]] = {n: {} for n in names}
    for m in metrics:
        col = np.array([values[n][m] for n in names])
        key = -col if m in HIGHER_IS_BETTER else col
        key = np.where(np.isnan(key), np.inf, key)
        for n, r in zip(names, rankdata(key, method="average")):
            ranks[n][m] = float(r)
    average = {n: float(np.mean([ranks[n][m] for m in metrics])) for n in names}
    order = sorted(names, key=lambda n: (average[n], n))
    return RankingTable(metrics, order, values, ranks, average)


# -- emission ------------------------------------------------------------------------


def _fmt_plain(col: str, v) -> str:
    if col in _INT_COLUMNS:
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.2f}" if col not in ("AP", "MTr", "MLr") else f"{v:.3f}"


def _fmt_exact(col: str, v) -> str:
    if col in _INT_COLUMNS:
        return str(int(v))
    return repr(float(v))


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return _json_value(float(v))
    return v


def _table(header: Sequence[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(r[k]) for r in rows)) if rows else len(h) for k, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) if k else h.ljust(w) for k, (h, w) in enumerate(zip(header, widths)))]
    for r in rows:
        lines.append("  ".join(c.rjust(w) if k else c.ljust(w) for k, (c, w) in enumerate(zip(r, widths))))
    return "\n".join(lines) + "\n"


def _named_rows(report) -> tuple[tuple[str, ...], list[tuple[str, dict]]]:
    if isinstance(report, BenchmarkReport):
        rows = [(r.name, r.row()) for r in report.sequences]
        if report.overall is not None:
            rows.append(("OVERALL", report.overall.row()))
        return TRACKING_COLUMNS, rows
    if isinstance(report, DetectionReport):
        rows = [(name, detection_row(m)) for name, m in report.sequences]
        if report.overall is not None:
            rows.append(("OVERALL", detection_row(report.overall)))
        return DETECTION_COLUMNS, rows
    raise TypeError(f"cannot emit {type(report).__name__}")


def _config_echo(report) -> dict:
    echo = report.config.as_dict()
    if isinstance(report, DetectionReport):
        echo["operating_confidence"] = report.operating_confidence
    return echo


def _emit_ranking(table: RankingTable, fmt: str) -> str:
    header = ["Tracker", *table.metrics, "AvgRank"]
    if fmt == "json":
        doc = {
            "metrics": list(table.metrics),
            "trackers": [
                {
                    "name": n,
                    "average_rank": table.average_rank[n],
                    "values": {m: _json_value(table.values[n][m]) for m in table.metrics},
                    "ranks": table.ranks[n],
                }
                for n in table.trackers
            ],
        }
        return json.dumps(doc, indent=2) + "\n"
    rows = [[n, *(repr(table.ranks[n][m]) for m in table.metrics), repr(table.average_rank[n])] for n in table.trackers]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return buf.getvalue()
    rows = [[n, *(f"{table.ranks[n][m]:g}" for m in table.metrics), f"{table.average_rank[n]:.3f}"] for n in table.trackers]
    return _table(header, rows)


def emit_report(report: BenchmarkReport | DetectionReport | RankingTable, fmt: str = "table") -> str:
    """Render a report as ``table``, ``csv`` or ``json``; output is deterministic.

    CSV and JSON carry full float precision (``repr``) so that re-parsing
    reproduces the numbers; the table rounds for reading.
    """
    if fmt not in ("table", "csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    if isinstance(report, RankingTable):
        return _emit_ranking(report, fmt)
    columns, rows = _named_rows(report)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["Sequence", *columns])
        for name, row in rows:
            w.writerow([name, *(_fmt_exact(c, row[c]) for c in columns)])
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "config": {k: _json_value(v) for k, v in _config_echo(report).items()},
            "columns": list(columns),
            "sequences": [
                {"name": name, **{c: _json_value(row[c]) for c in columns}} for name, row in rows if name != "OVERALL"
            ],
            "overall": next(
                ({c: _json_value(row[c]) for c in columns} for name, row in rows if name == "OVERALL"), None
            ),
        }
        if isinstance(report, BenchmarkReport):
            doc["mota_std"] = report.mota_std
            doc["removed_results"] = report.removals
        return json.dumps(doc, indent=2) + "\n"
    echo = ", ".join(f"{k}={v}" for k, v in _config_echo(report).items())
    text = f"# config: {echo}\n"
    text += _table(["Sequence", *columns], [[name, *(_fmt_plain(c, row[c]) for c in columns)] for name, row in rows])
    if isinstance(report, BenchmarkReport) and report.overall is not None:
        text += f"MOTA std over sequences: {report.mota_std:.2f}\n"
    return text


def parse_csv_report(text: str) -> dict[str, dict[str, float]]:
    """Read back a CSV report; numbers come back as floats."""
    reader = csv.DictReader(io.StringIO(text))
    return {row.pop("Sequence"): {k: float(v) for k, v in row.items()} for row in reader}
