"""Temporal tracker-to-target matching.

Per frame:

1. pairs matched in the previous frame stay matched while their IoU is at
   least the threshold, even if a closer hypothesis exists;
2. remaining objects and hypotheses are matched by minimum cost
   ``1 - IoU``, with pairs under the threshold forbidden;
3. unmatched ground truth is a miss (FN), an unmatched hypothesis a false
   positive (FP);
4. a match whose object was last assigned to a different hypothesis is an
   identity switch. The last assignment is remembered for the whole
   sequence, across gaps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple

import numpy as np

from ..core_types import BoxTable, Trajectory, class_roles
from ..geometry import ioa_matrix, iou_matrix
from .solver import solve_min_cost_assignment

OVERLAP_KINDS = ("iou", "ioa")


@dataclass(frozen=True)
class MatchConfig:
    iou_threshold: float = 0.5
    distractor_threshold: float = 0.75
    distractor_overlap: str = "iou"
    min_visibility: float | None = None

    def __post_init__(self):
        if not 0 < self.iou_threshold <= 1:
            raise ValueError(f"iou_threshold must lie in (0, 1], got {self.iou_threshold}")
        if not 0 < self.distractor_threshold <= 1:
            raise ValueError(f"distractor_threshold must lie in (0, 1], got {self.distractor_threshold}")
        if self.distractor_overlap not in OVERLAP_KINDS:
            raise ValueError(f"distractor_overlap must be one of {OVERLAP_KINDS}")
        if self.min_visibility is not None and not 0 <= self.min_visibility <= 1:
            raise ValueError("min_visibility must lie in [0, 1]")

    def as_dict(self) -> dict:
        return {
            "iou_threshold": self.iou_threshold,
            "distractor_threshold": self.distractor_threshold,
            "distractor_overlap": self.distractor_overlap,
            "min_visibility": self.min_visibility,
        }


def as_table(data: BoxTable | Mapping[int, Trajectory]) -> BoxTable:
    if isinstance(data, BoxTable):
        return data
    return BoxTable.from_trajectories(data)


# -- ground-truth roles -------------------------------------------------------


class GroundTruthSplit(NamedTuple):
    considered: BoxTable  # every flag-1 row, any class
    roles: np.ndarray  # per considered row: 0 target, 1 neutral, 2 other
    targets: BoxTable


def split_ground_truth(gt: BoxTable | Mapping[int, Trajectory], config: MatchConfig | None = None) -> GroundTruthSplit:
    """Drop flag-0 rows and classify the rest as target, neutral or other.

    With ``min_visibility`` set, pedestrians below it are demoted to neutral.
    """
    config = config or MatchConfig()
    gt = as_table(gt)
    considered = gt.take(gt.score == 1.0).sorted()
    roles = class_roles(considered.class_id)
    if config.min_visibility is not None:
        roles[(roles == 0) & (considered.visibility < config.min_visibility)] = 1
    return GroundTruthSplit(considered, roles, considered.take(roles == 0))


def select_targets(gt, config: MatchConfig | None = None) -> BoxTable:
    return split_ground_truth(gt, config).targets


# -- distractor preprocessing -------------------------------------------------


class Removal(NamedTuple):
    frame: int
    hypothesis: int
    gt_identity: int
    gt_class: int
    cause: str  # "matched" or "overlap"
    overlap: float


def _frame_removals(gt_boxes, gt_roles, hyp_boxes, config: MatchConfig):
    """Decide which hypotheses of one frame fall on neutral annotations.

    Returns ``(keep_mask, [(hyp_index, gt_index, cause, overlap)])``.
    """
    nh = len(hyp_boxes)
    keep = np.ones(nh, dtype=bool)
    if nh == 0 or not (gt_roles == 1).any():
        return keep, []
    log = []
    ov = iou_matrix(gt_boxes, hyp_boxes)
    cost = np.where(ov >= config.iou_threshold, 1.0 - ov, np.inf)
    matched_target = np.zeros(nh, dtype=bool)
    for r, c in solve_min_cost_assignment(cost):
        if gt_roles[r] == 1:
            keep[c] = False
            log.append((c, r, "matched", float(ov[r, c])))
        elif gt_roles[r] == 0:
            matched_target[c] = True

    neutral = np.flatnonzero(gt_roles == 1)
    if config.distractor_overlap == "iou":
        nov = ov[neutral].T
    else:
        nov = ioa_matrix(hyp_boxes, gt_boxes[neutral])
    for c in np.flatnonzero(keep & ~matched_target):
        k = int(np.argmax(nov[c]))
        if nov[c, k] > config.distractor_threshold:
            keep[c] = False
            log.append((int(c), int(neutral[k]), "overlap", float(nov[c, k])))
    log.sort()
    return keep, log


def _paired_frames(a: BoxTable, b: BoxTable) -> Iterator[tuple[int, slice, slice]]:
    """Walk two frame-sorted tables together, yielding ``(frame, slice_a, slice_b)``."""
    sa = dict(a.frame_slices())
    sb = dict(b.frame_slices())
    empty = slice(0, 0)
    for f in sorted(sa.keys() | sb.keys()):
        yield f, sa.get(f, empty), sb.get(f, empty)


def preprocess_results(
    gt: BoxTable | Mapping[int, Trajectory],
    results: BoxTable | Mapping[int, Trajectory],
    config: MatchConfig | None = None,
) -> tuple[BoxTable, list[Removal]]:
    """Remove result boxes that only cover neutral annotations.

    Per frame, results are first matched against every considered ground
    truth box. A result matched to a neutral box is removed. A result not
    matched to a pedestrian is also removed when it overlaps some neutral box
    by strictly more than ``config.distractor_threshold``.
    """
    config = config or MatchConfig()
    split = split_ground_truth(gt, config)
    res = as_table(results).sorted()
    keep = np.ones(len(res), dtype=bool)
    removals: list[Removal] = []
    cgt = split.considered
    for f, gs, hs in _paired_frames(cgt, res):
        if hs.start == hs.stop or gs.start == gs.stop:
            continue
        k, log = _frame_removals(cgt.boxes[gs], split.roles[gs], res.boxes[hs], config)
        keep[hs] = k
        for c, r, cause, value in log:
            removals.append(
                Removal(
                    f,
                    int(res.identity[hs.start + c]),
                    int(cgt.identity[gs.start + r]),
                    int(cgt.class_id[gs.start + r]),
                    cause,
                    value,
                )
            )
    return res.take(keep), removals


# -- temporal matching --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MatchTimeline:
    """Per-frame matching events for one or more sequences.

    Frame-level arrays are aligned with ``frames``; match-level arrays with
    ``match_gt``. ``sequence`` / ``match_sequence`` index into
    ``sequence_names`` so identities from different sequences never mix.
    """

    sequence_names: tuple[str, ...]
    frame_counts: tuple[int, ...]
    frames: np.ndarray
    sequence: np.ndarray
    num_gt: np.ndarray
    num_hyp: np.ndarray
    num_matches: np.ndarray
    fn: np.ndarray
    fp: np.ndarray
    idsw: np.ndarray
    match_frame: np.ndarray
    match_sequence: np.ndarray
    match_gt: np.ndarray
    match_hyp: np.ndarray
    match_overlap: np.ndarray
    match_switch: np.ndarray
    last_assignment: tuple[dict, ...] = field(default=())

    @property
    def total_fn(self) -> int:
        return int(self.fn.sum())

    @property
    def total_fp(self) -> int:
        return int(self.fp.sum())

    @property
    def total_idsw(self) -> int:
        return int(self.idsw.sum())

    @property
    def total_matches(self) -> int:
        return int(self.num_matches.sum())

    @property
    def gt_total(self) -> int:
        return int(self.num_gt.sum())

    @property
    def frame_count(self) -> int:
        return int(sum(self.frame_counts))

    @property
    def overlap_sum(self) -> float:
        return float(self.match_overlap.sum())

    def frame_events(self, frame: int, sequence: int = 0) -> dict:
        """Events of one frame, handy when inspecting a fixture."""
        k = np.flatnonzero((self.frames == frame) & (self.sequence == sequence))
        m = (self.match_frame == frame) & (self.match_sequence == sequence)
        pairs = list(zip(self.match_gt[m].tolist(), self.match_hyp[m].tolist(), self.match_overlap[m].tolist()))
        if len(k) == 0:
            return {"matches": pairs, "fn": 0, "fp": 0, "idsw": 0}
        k = k[0]
        return {"matches": pairs, "fn": int(self.fn[k]), "fp": int(self.fp[k]), "idsw": int(self.idsw[k])}


def _match_frames(gt: BoxTable, hyp: BoxTable, tau: float, temporal: bool):
    """Shared frame loop; yields per-frame results as plain lists."""
    prev: dict[int, int] = {}
    last_frame = None
    last_assignment: dict[int, int] = {}
    frame_rows = []
    match_rows = []
    for f, gs, hs in _paired_frames(gt, hyp):
        if last_frame is None or f != last_frame + 1:
            prev = {}
        last_frame = f
        gid = gt.identity[gs].tolist()
        hid = hyp.identity[hs].tolist()
        ng, nh = len(gid), len(hid)
        pairs: list[tuple[int, int]] = []
        if ng and nh:
            ov = iou_matrix(gt.boxes[gs], hyp.boxes[hs])
            free_r = np.ones(ng, dtype=bool)
            free_c = np.ones(nh, dtype=bool)
            if temporal and prev:
                col_of = {h: c for c, h in enumerate(hid)}
                for r, g in enumerate(gid):
                    c = col_of.get(prev.get(g, -1))
                    if c is not None and ov[r, c] >= tau:
                        pairs.append((r, c))
                        free_r[r] = free_c[c] = False
            rows = np.flatnonzero(free_r)
            cols = np.flatnonzero(free_c)
            if len(rows) and len(cols):
                sub = ov[np.ix_(rows, cols)]
                cost = np.where(sub >= tau, 1.0 - sub, np.inf)
                pairs.extend((int(rows[r]), int(cols[c])) for r, c in solve_min_cost_assignment(cost))
            pairs.sort()
        else:
            ov = None

        switches = 0
        current = {}
        for r, c in pairs:
            g, h = gid[r], hid[c]
            before = last_assignment.get(g)
            switched = temporal and before is not None and before != h
            switches += switched
            last_assignment[g] = h
            current[g] = h
            match_rows.append((f, g, h, float(ov[r, c]), switched))
        prev = current
        n = len(pairs)
        frame_rows.append((f, ng, nh, n, ng - n, nh - n, switches))
    return frame_rows, match_rows, last_assignment


def _timeline(name, frame_count, frame_rows, match_rows, last_assignment) -> MatchTimeline:
    fr = np.array(frame_rows, dtype=np.int64).reshape(-1, 7)
    mr_int = np.array([m[:3] for m in match_rows], dtype=np.int64).reshape(-1, 3)
    return MatchTimeline(
        sequence_names=(name,),
        frame_counts=(int(frame_count),),
        frames=fr[:, 0],
        sequence=np.zeros(len(fr), dtype=np.int64),
        num_gt=fr[:, 1],
        num_hyp=fr[:, 2],
        num_matches=fr[:, 3],
        fn=fr[:, 4],
        fp=fr[:, 5],
        idsw=fr[:, 6],
        match_frame=mr_int[:, 0],
        match_sequence=np.zeros(len(mr_int), dtype=np.int64),
        match_gt=mr_int[:, 1],
        match_hyp=mr_int[:, 2],
        match_overlap=np.array([m[3] for m in match_rows], dtype=np.float64),
        match_switch=np.array([m[4] for m in match_rows], dtype=bool),
        last_assignment=(dict(last_assignment),),
    )


def match_sequence(
    gt: BoxTable | Mapping[int, Trajectory],
    results: BoxTable | Mapping[int, Trajectory],
    config: MatchConfig | None = None,
    frame_count: int | None = None,
    name: str = "",
    temporal: bool = True,
) -> MatchTimeline:
    """Match preprocessed results against target ground truth, frame by frame.

    Every row of ``gt`` is treated as a target; use :func:`select_targets`
    and :func:`preprocess_results` first for raw annotation files. With
    ``temporal=False`` each frame is matched independently and no identity
    switches are counted (detection evaluation).
    """
    config = config or MatchConfig()
    gt = as_table(gt).sorted()
    res = as_table(results).sorted()
    gt.check_unique_frame_identity()
    if temporal:
        res.check_unique_frame_identity()
    if frame_count is None:
        last = [int(t.frame.max()) for t in (gt, res) if len(t)]
        frame_count = max(last) if last else 1
    frame_rows, match_rows, last_assignment = _match_frames(gt, res, config.iou_threshold, temporal)
    return _timeline(name, frame_count, frame_rows, match_rows, last_assignment)


def concatenate_timelines(timelines: Iterable[MatchTimeline]) -> MatchTimeline:
    """Stack timelines of distinct sequences; counts and overlap sums add up."""
    timelines = list(timelines)
    if len(timelines) == 1:
        return timelines[0]
    names, counts, last = [], [], []
    seq_frames, seq_matches = [], []
    offset = 0
    for t in timelines:
        names.extend(t.sequence_names)
        counts.extend(t.frame_counts)
        last.extend(t.last_assignment)
        seq_frames.append(t.sequence + offset)
        seq_matches.append(t.match_sequence + offset)
        offset += len(t.sequence_names)

    def cat(attr, dtype):
        parts = [getattr(t, attr) for t in timelines]
        return np.concatenate(parts) if parts else np.zeros(0, dtype=dtype)

    return MatchTimeline(
        sequence_names=tuple(names),
        frame_counts=tuple(counts),
        frames=cat("frames", np.int64),
        sequence=np.concatenate(seq_frames) if seq_frames else np.zeros(0, np.int64),
        num_gt=cat("num_gt", np.int64),
        num_hyp=cat("num_hyp", np.int64),
        num_matches=cat("num_matches", np.int64),
        fn=cat("fn", np.int64),
        fp=cat("fp", np.int64),
        idsw=cat("idsw", np.int64),
        match_frame=cat("match_frame", np.int64),
        match_sequence=np.concatenate(seq_matches) if seq_matches else np.zeros(0, np.int64),
        match_gt=cat("match_gt", np.int64),
        match_hyp=cat("match_hyp", np.int64),
        match_overlap=cat("match_overlap", np.float64),
        match_switch=cat("match_switch", bool),
        last_assignment=tuple(last),
    )
