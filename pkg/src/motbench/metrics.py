"""Scalar metrics computed from match timelines.

Percentages are on a 0-100 scale, AP on 0-1. Relative IDSW and FM divide by
recall as a fraction, so a tracker with full recall reports the raw count.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .assignment.matching import (
    MatchConfig,
    MatchTimeline,
    _frame_removals,
    _paired_frames,
    as_table,
    split_ground_truth,
)
from .assignment.solver import solve_min_cost_assignment
from .core_types import BoxTable, EntryRecord, Trajectory
from .errors import ZeroGroundTruth
from .geometry import iou_matrix


def _precision(tp: int, fp: int) -> float:
    return 100.0 if tp + fp == 0 else 100.0 * tp / (tp + fp)


def _relative(count: int, recall_pct: float) -> float:
    if recall_pct == 0:
        return 0.0 if count == 0 else math.inf
    return count / (recall_pct / 100.0)


@dataclass(frozen=True)
class ClearMetrics:
    mota: float
    motp: float
    moda: float
    tp: int
    fp: int
    fn: int
    idsw: int
    gt_total: int
    frame_count: int
    faf: float
    recall: float
    precision: float
    relative_idsw: float
    overlap_sum: float

    def as_dict(self) -> dict:
        return asdict(self)


def compute_motp_components(timeline: MatchTimeline) -> tuple[float, int]:
    """Raw ``(sum of matched overlaps, number of matches)``.

    Aggregating these sums across sequences, rather than averaging per
    sequence MOTP values, weights every match equally.
    """
    return float(timeline.match_overlap.sum()), int(timeline.num_matches.sum())


def compute_clear(
    timeline: MatchTimeline, gt_total: int | None = None, frame_count: int | None = None
) -> ClearMetrics:
    gt_total = timeline.gt_total if gt_total is None else int(gt_total)
    frame_count = timeline.frame_count if frame_count is None else int(frame_count)
    if gt_total <= 0:
        raise ZeroGroundTruth("CLEAR metrics")
    if frame_count < 1:
        raise ValueError("frame_count must be >= 1")
    fn, fp, idsw = timeline.total_fn, timeline.total_fp, timeline.total_idsw
    overlap, tp = compute_motp_components(timeline)
    recall = 100.0 * tp / gt_total
    return ClearMetrics(
        mota=100.0 * (1.0 - (fn + fp + idsw) / gt_total),
        motp=100.0 * overlap / tp if tp else math.nan,
        moda=100.0 * (1.0 - (fn + fp) / gt_total),
        tp=tp,
        fp=fp,
        fn=fn,
        idsw=idsw,
        gt_total=gt_total,
        frame_count=frame_count,
        faf=fp / frame_count,
        recall=recall,
        precision=_precision(tp, fp),
        relative_idsw=_relative(idsw, recall),
        overlap_sum=overlap,
    )


# -- track quality --------------------------------------------------------------


@dataclass(frozen=True)
class TrackQualityMetrics:
    mt: int
    pt: int
    ml: int
    fm: int
    relative_fm: float

    @property
    def total(self) -> int:
        return self.mt + self.pt + self.ml

    @property
    def mt_ratio(self) -> float:
        return self.mt / self.total if self.total else 0.0

    @property
    def pt_ratio(self) -> float:
        return self.pt / self.total if self.total else 0.0

    @property
    def ml_ratio(self) -> float:
        return self.ml / self.total if self.total else 0.0

    @classmethod
    def combine(cls, parts: Iterable["TrackQualityMetrics"], recall: float) -> "TrackQualityMetrics":
        parts = list(parts)
        fm = sum(p.fm for p in parts)
        return cls(
            mt=sum(p.mt for p in parts),
            pt=sum(p.pt for p in parts),
            ml=sum(p.ml for p in parts),
            fm=fm,
            relative_fm=_relative(fm, recall),
        )

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(total=self.total, mt_ratio=self.mt_ratio, pt_ratio=self.pt_ratio, ml_ratio=self.ml_ratio)
        return d


def trajectory_status(gt: BoxTable | Mapping[int, Trajectory], timeline: MatchTimeline):
    """Per target identity: ``(length, matched frames, fragmentations)``.

    A trajectory's status runs from its first to its last annotated frame.
    Frames where it is unannotated count as untracked, so an interrupted
    annotation yields a fragmentation when tracking resumes afterwards.
    """
    if len(timeline.sequence_names) > 1:
        raise ValueError("track quality is computed per sequence; got a concatenated timeline")
    gt = as_table(gt)
    ids, lengths = np.unique(gt.identity, return_counts=True)
    mg, mf = timeline.match_gt, timeline.match_frame
    pos = np.searchsorted(ids, mg)
    if len(mg) and ((pos >= len(ids)) | (ids[np.minimum(pos, len(ids) - 1)] != mg)).any():
        raise ValueError("timeline contains matches for identities missing from the ground truth")
    matched = np.bincount(pos, minlength=len(ids))[: len(ids)]
    order = np.lexsort((mf, mg))
    sg, sf = mg[order], mf[order]
    gaps = (sg[1:] == sg[:-1]) & (np.diff(sf) > 1)
    frag = np.bincount(pos[order][1:][gaps], minlength=len(ids))[: len(ids)]
    return ids, lengths, matched, frag


def compute_track_quality(
    gt: BoxTable | Mapping[int, Trajectory], timeline: MatchTimeline, recall: float | None = None
) -> TrackQualityMetrics:
    """Mostly tracked (>= 80% covered), mostly lost (< 20%) and fragmentations.

    Which hypothesis covers a frame does not matter here.
    """
    ids, lengths, matched, frag = trajectory_status(gt, timeline)
    mt = int(np.count_nonzero(5 * matched >= 4 * lengths))
    ml = int(np.count_nonzero(5 * matched < lengths))
    fm = int(frag.sum())
    if recall is None:
        gt_total = int(lengths.sum())
        recall = 100.0 * int(matched.sum()) / gt_total if gt_total else 0.0
    return TrackQualityMetrics(mt=mt, pt=len(ids) - mt - ml, ml=ml, fm=fm, relative_fm=_relative(fm, recall))


# -- detection --------------------------------------------------------------------


@dataclass(frozen=True)
class DetectionMetrics:
    ap: float
    recall: float
    precision: float
    far: float
    gt: int
    tp: int
    fp: int
    fn: int
    moda: float
    modp: float
    frame_count: int
    operating_confidence: float

    def as_dict(self) -> dict:
        return asdict(self)


class _DetFrame:
    """One frame of detection evaluation, re-evaluated as the threshold drops."""

    __slots__ = ("gt_boxes", "roles", "n_targets", "det_boxes", "det_scores")

    def __init__(self, gt_boxes, roles, det_boxes, det_scores):
        self.gt_boxes = gt_boxes
        self.roles = roles
        self.n_targets = int(np.count_nonzero(roles == 0))
        self.det_boxes = det_boxes
        self.det_scores = det_scores

    def evaluate(self, threshold: float, config: MatchConfig) -> tuple[int, int, float]:
        """``(tp, fp, overlap sum)`` using detections scoring at least ``threshold``."""
        dets = self.det_boxes[self.det_scores >= threshold]
        if len(dets) == 0:
            return 0, 0, 0.0
        keep, _ = _frame_removals(self.gt_boxes, self.roles, dets, config)
        dets = dets[keep]
        if self.n_targets == 0 or len(dets) == 0:
            return 0, len(dets), 0.0
        ov = iou_matrix(self.gt_boxes[self.roles == 0], dets)
        pairs = solve_min_cost_assignment(np.where(ov >= config.iou_threshold, 1.0 - ov, np.inf))
        return len(pairs), len(dets) - len(pairs), float(sum(ov[r, c] for r, c in pairs))


def _detection_frames(gt: BoxTable, dets: BoxTable, config: MatchConfig) -> list[_DetFrame]:
    split = split_ground_truth(gt, config)
    cgt = split.considered
    dets = dets.take(np.lexsort((dets.identity, dets.frame)))
    return [
        _DetFrame(cgt.boxes[gs], split.roles[gs], dets.boxes[ds], dets.score[ds])
        for _, gs, ds in _paired_frames(cgt, dets)
    ]


def eleven_point_ap(tp: Sequence[int], fp: Sequence[int], gt_total: int) -> float:
    """11-point interpolated AP from cumulative counts along a threshold sweep."""
    tp = np.asarray(tp, dtype=np.int64)
    fp = np.asarray(fp, dtype=np.int64)
    if len(tp) == 0:
        return 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(tp + fp > 0, tp / (tp + fp), 1.0)
    total = 0.0
    for level in range(11):
        reach = 10 * tp >= level * gt_total
        total += float(precision[reach].max()) if reach.any() else 0.0
    return total / 11.0


def _as_det_table(detections) -> BoxTable:
    if isinstance(detections, BoxTable):
        return detections
    return BoxTable.from_entries(detections)


def detection_metrics_for_frames(
    frames: list[_DetFrame], config: MatchConfig, operating_confidence: float, frame_count: int
) -> DetectionMetrics:
    gt_total = sum(f.n_targets for f in frames)
    if gt_total == 0:
        raise ZeroGroundTruth("detection metrics")

    tp = fp = 0
    overlap = 0.0
    for f in frames:
        a, b, o = f.evaluate(operating_confidence, config)
        tp, fp, overlap = tp + a, fp + b, overlap + o
    fn = gt_total - tp

    # threshold sweep: only frames holding a detection at the new score change
    by_score: dict[float, list[int]] = {}
    for k, f in enumerate(frames):
        for s in np.unique(f.det_scores).tolist():
            by_score.setdefault(s, []).append(k)
    state = [(0, 0)] * len(frames)
    cum_tp = cum_fp = 0
    curve_tp, curve_fp = [], []
    for s in sorted(by_score, reverse=True):
        for k in by_score[s]:
            a, b, _ = frames[k].evaluate(s, config)
            cum_tp += a - state[k][0]
            cum_fp += b - state[k][1]
            state[k] = (a, b)
        curve_tp.append(cum_tp)
        curve_fp.append(cum_fp)

    return DetectionMetrics(
        ap=eleven_point_ap(curve_tp, curve_fp, gt_total),
        recall=100.0 * tp / gt_total,
        precision=_precision(tp, fp),
        far=fp / frame_count,
        gt=gt_total,
        tp=tp,
        fp=fp,
        fn=fn,
        moda=100.0 * (1.0 - (fn + fp) / gt_total),
        modp=100.0 * overlap / tp if tp else math.nan,
        frame_count=frame_count,
        operating_confidence=operating_confidence,
    )


def compute_detection_metrics(
    gt: BoxTable | Mapping[int, Trajectory],
    detections: BoxTable | Iterable[EntryRecord],
    config: MatchConfig | None = None,
    operating_confidence: float = -math.inf,
    frame_count: int | None = None,
) -> DetectionMetrics:
    """Frame-independent detection metrics restricted to pedestrians.

    Detections on neutral annotations are removed the same way tracker
    results are. Counts, MODA and MODP use detections scoring at least
    ``operating_confidence``; AP sweeps every distinct score.
    """
    config = config or MatchConfig()
    gt = as_table(gt)
    dets = _as_det_table(detections)
    if frame_count is None:
        last = [int(t.frame.max()) for t in (gt, dets) if len(t)]
        frame_count = max(last) if last else 1
    return detection_metrics_for_frames(_detection_frames(gt, dets, config), config, operating_confidence, frame_count)
