"""Synthetic scenarios with exactly known evaluation outcomes.

Ground-truth tracks move along straight lines. The simulated tracker
reproduces each box (optionally with a little positional noise) unless an
injected error says otherwise. Expected counts are derived from the
*intended* coverage, frame by frame and track by track, without running the
matcher, so they serve as an independent oracle for it.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .core_types import BoundingBox, EntryRecord
from .errors import ConflictingInjections
from .geometry import iou_matrix

MATCH_THRESHOLD = 0.5
MAX_JITTER = 0.1


@dataclass(frozen=True)
class TrackTemplate:
    identity: int
    start: tuple[float, float]
    velocity: tuple[float, float] = (0.0, 0.0)
    size: tuple[float, float] = (10.0, 10.0)
    first_frame: int = 1
    last_frame: int | None = None
    ignored_frames: tuple[int, ...] = ()  # written with consider flag 0

    def box(self, frame: int) -> BoundingBox:
        dt = frame - self.first_frame
        return BoundingBox(
            self.start[0] + self.velocity[0] * dt, self.start[1] + self.velocity[1] * dt, self.size[0], self.size[1]
        )


@dataclass(frozen=True)
class Drop:
    identity: int
    first: int
    last: int


@dataclass(frozen=True)
class Spurious:
    start: tuple[float, float]
    first: int
    last: int
    velocity: tuple[float, float] = (0.0, 0.0)
    size: tuple[float, float] = (10.0, 10.0)


@dataclass(frozen=True)
class Swap:
    a: int
    b: int
    frame: int


@dataclass(frozen=True)
class Shift:
    identity: int
    offset: tuple[float, float]
    first: int
    last: int


@dataclass(frozen=True)
class ScenarioSpec:
    frame_count: int
    tracks: tuple[TrackTemplate, ...]
    injections: tuple = ()
    seed: int = 0
    jitter: float = 0.0  # max positional noise, as a fraction of box size


@dataclass(frozen=True)
class ExpectedOutcome:
    fn: int
    fp: int
    idsw: int
    fm: int
    mt: int
    pt: int
    ml: int
    tp: int
    gt_total: int

    @property
    def mota(self) -> float:
        return 100.0 * (1.0 - (self.fn + self.fp + self.idsw) / self.gt_total)

    def as_dict(self) -> dict:
        return asdict(self)


class Case(NamedTuple):
    name: str
    gt: list[EntryRecord]
    results: list[EntryRecord]
    expected: ExpectedOutcome


@dataclass
class _Layout:
    """Concrete boxes plus the coverage the tracker is meant to achieve."""

    gt: dict[tuple[int, int], BoundingBox] = field(default_factory=dict)  # (id, frame)
    ignored: set[tuple[int, int]] = field(default_factory=set)
    results: dict[tuple[int, int], BoundingBox] = field(default_factory=dict)  # (hyp, frame)
    cover: dict[tuple[int, int], int] = field(default_factory=dict)  # (gt id, frame) -> hyp

    def entries(self) -> tuple[list[EntryRecord], list[EntryRecord]]:
        gt = [
            EntryRecord(f, i, b, 0.0 if (i, f) in self.ignored else 1.0, 1, 1.0)
            for (i, f), b in sorted(self.gt.items(), key=lambda kv: (kv[0][1], kv[0][0]))
        ]
        res = [
            EntryRecord(f, h, b, 1.0, None, None)
            for (h, f), b in sorted(self.results.items(), key=lambda kv: (kv[0][1], kv[0][0]))
        ]
        return gt, res

    def check_geometry(self) -> None:
        """Every feasible pair must be an intended one, so the outcome is unambiguous."""
        frames = sorted({f for _, f in self.gt} | {f for _, f in self.results})
        for f in frames:
            gids = sorted(i for i, g in self.gt if g == f and (i, f) not in self.ignored)
            hids = sorted(h for h, g in self.results if g == f)
            if not gids or not hids:
                continue
            ov = iou_matrix(
                [self.gt[(i, f)].as_tuple() for i in gids], [self.results[(h, f)].as_tuple() for h in hids]
            )
            for r, i in enumerate(gids):
                for c, h in enumerate(hids):
                    intended = self.cover.get((i, f)) == h
                    if intended != (ov[r, c] >= MATCH_THRESHOLD):
                        raise ConflictingInjections(
                            f"frame {f}: gt {i} / hypothesis {h} overlap {ov[r, c]:.3f} contradicts the intended coverage"
                        )

    def expected(self) -> ExpectedOutcome:
        frames_of: dict[int, list[int]] = {}
        for i, f in self.gt:
            if (i, f) not in self.ignored:
                frames_of.setdefault(i, []).append(f)
        fn = tp = idsw = fm = mt = ml = 0
        for i, frames in frames_of.items():
            last_hyp = None
            covered = []
            for f in sorted(frames):
                h = self.cover.get((i, f))
                if h is None:
                    fn += 1
                    continue
                tp += 1
                if last_hyp is not None and h != last_hyp:
                    idsw += 1
                last_hyp = h
                covered.append(f)
            fm += sum(1 for a, b in zip(covered, covered[1:]) if b - a > 1)
            n, k = len(frames), len(covered)
            mt += 5 * k >= 4 * n
            ml += 5 * k < n
        fp = len(self.results) - tp
        total = sum(len(v) for v in frames_of.values())
        return ExpectedOutcome(fn, fp, idsw, fm, mt, len(frames_of) - mt - ml, ml, tp, total)

    def case(self, name: str) -> Case:
        self.check_geometry()
        gt, res = self.entries()
        return Case(name, gt, res, self.expected())


def _life(t: TrackTemplate, frame_count: int) -> range:
    return range(t.first_frame, (t.last_frame or frame_count) + 1)


def _validate(spec: ScenarioSpec) -> dict[int, TrackTemplate]:
    if spec.frame_count < 1:
        raise ConflictingInjections("frame_count must be >= 1")
    if not 0 <= spec.jitter <= MAX_JITTER:
        raise ConflictingInjections(f"jitter must lie in [0, {MAX_JITTER}]")
    tracks = {}
    for t in spec.tracks:
        if t.identity in tracks or t.identity < 0:
            raise ConflictingInjections(f"duplicate or negative track identity {t.identity}")
        life = _life(t, spec.frame_count)
        if len(life) == 0 or life.stop - 1 > spec.frame_count:
            raise ConflictingInjections(f"track {t.identity} lies outside frames 1..{spec.frame_count}")
        tracks[t.identity] = t

    touched: dict[tuple[int, int], object] = {}
    for inj in spec.injections:
        if isinstance(inj, (Drop, Shift)):
            if inj.identity not in tracks:
                raise ConflictingInjections(f"{inj} references an unknown identity")
            life = _life(tracks[inj.identity], spec.frame_count)
            if inj.first > inj.last or inj.first not in life or inj.last not in life:
                raise ConflictingInjections(f"{inj} lies outside the track's life")
            for f in range(inj.first, inj.last + 1):
                if (inj.identity, f) in touched:
                    raise ConflictingInjections(f"{inj} overlaps {touched[(inj.identity, f)]} at frame {f}")
                touched[(inj.identity, f)] = inj
        elif isinstance(inj, Swap):
            for i in (inj.a, inj.b):
                if i not in tracks:
                    raise ConflictingInjections(f"{inj} references an unknown identity")
            if inj.a == inj.b or not 1 <= inj.frame <= spec.frame_count:
                raise ConflictingInjections(f"bad swap {inj}")
        elif isinstance(inj, Spurious):
            if not 1 <= inj.first <= inj.last <= spec.frame_count:
                raise ConflictingInjections(f"{inj} lies outside frames 1..{spec.frame_count}")
        else:
            raise ConflictingInjections(f"unknown injection {inj!r}")
    for inj in spec.injections:
        if isinstance(inj, Swap):
            for i in (inj.a, inj.b):
                if (i, inj.frame) in touched:
                    raise ConflictingInjections(f"{inj} coincides with {touched[(i, inj.frame)]}")
    return tracks


def _layout(spec: ScenarioSpec) -> _Layout:
    tracks = _validate(spec)
    rng = np.random.default_rng(spec.seed)
    ids = sorted(tracks)
    n_spurious = sum(isinstance(i, Spurious) for i in spec.injections)
    hyp_ids = (rng.permutation(10 * (len(ids) + n_spurious) + 10)[: len(ids) + n_spurious] + 1).tolist()
    base = dict(zip(ids, hyp_ids))
    swaps = sorted((i for i in spec.injections if isinstance(i, Swap)), key=lambda s: s.frame)
    dropped = {(d.identity, f) for d in spec.injections if isinstance(d, Drop) for f in range(d.first, d.last + 1)}
    shifts = {
        (s.identity, f): s.offset for s in spec.injections if isinstance(s, Shift) for f in range(s.first, s.last + 1)
    }

    lay = _Layout()
    for f in range(1, spec.frame_count + 1):
        owner = dict(base)
        for s in swaps:
            if s.frame <= f:
                owner[s.a], owner[s.b] = owner[s.b], owner[s.a]
        for i in ids:
            t = tracks[i]
            if f not in _life(t, spec.frame_count):
                continue
            box = t.box(f)
            lay.gt[(i, f)] = box
            if f in t.ignored_frames:
                lay.ignored.add((i, f))
                continue
            if (i, f) in dropped:
                continue
            left, top = box.left, box.top
            if spec.jitter:
                dx, dy = rng.uniform(-spec.jitter, spec.jitter, 2)
                left, top = left + dx * box.width, top + dy * box.height
            if (i, f) in shifts:
                left, top = left + shifts[(i, f)][0], top + shifts[(i, f)][1]
            h = owner[i]
            lay.results[(h, f)] = BoundingBox(left, top, box.width, box.height)
            shifted = BoundingBox(left, top, box.width, box.height)
            if iou_matrix([box.as_tuple()], [shifted.as_tuple()])[0, 0] >= MATCH_THRESHOLD:
                lay.cover[(i, f)] = h

    spurious = [i for i in spec.injections if isinstance(i, Spurious)]
    for s, h in zip(spurious, hyp_ids[len(ids):]):
        t = TrackTemplate(h, s.start, s.velocity, s.size, s.first, s.last)
        for f in range(s.first, s.last + 1):
            lay.results[(h, f)] = t.box(f)
    return lay


def generate(spec: ScenarioSpec) -> tuple[list[EntryRecord], list[EntryRecord], ExpectedOutcome]:
    """Ground truth, tracker output and the outcome a correct evaluator must report.

    Rules: a dropped frame is one FN; a spurious box one FP; a shift that
    pushes IoU under the threshold one FN plus one FP; a swap one identity
    switch per swapped track that was tracked before; a gap in a track's
    coverage that is later resumed one fragmentation.
    """
    case = _layout(spec).case("scenario")
    return case.gt, case.results, case.expected


# -- the four reference assignment cases ------------------------------------------


def _cell(col: int, row: int) -> BoundingBox:
    return BoundingBox(1.0 + 20.0 * col, 1.0 + 20.0 * row, 10.0, 10.0)


def _case_layout(gt_tracks, hyp_tracks, ignored=()) -> _Layout:
    """Tracks given as ``{id: {frame: (col, row)}}``; a hypothesis covers a target when their cells coincide."""
    lay = _Layout()
    for i, path in gt_tracks.items():
        for f, cell in path.items():
            lay.gt[(i, f)] = _cell(*cell)
    lay.ignored = set(ignored)
    for h, path in hyp_tracks.items():
        for f, cell in path.items():
            lay.results[(h, f)] = _cell(*cell)
            for i, gpath in gt_tracks.items():
                if gpath.get(f) == cell and (i, f) not in lay.ignored:
                    lay.cover[(i, f)] = h
    return lay


RED, BLUE = 1, 2


def assignment_cases() -> list[Case]:
    """Four small cases exercising identity switches, fragmentation and carry-over.

    a. coverage of one target passes from hypothesis RED to BLUE: 1 IDSW
    b. RED tracks frames 1-2, nobody frame 3, BLUE from frame 4: 1 FM, 1 IDSW
    c. the frame-1 pairing holds until each target is lost for good:
       5 FN, 4 FP, no FM
    d. target 1 is unannotated in frames 3-4 while RED moves to a new
       target 2; BLUE picks target 1 up in frame 5: 1 FM, 1 IDSW
    """
    a = _case_layout(
        {1: {f: (f, 0) for f in range(1, 5)}},
        {RED: {1: (1, 0), 2: (2, 0), 3: (3, 1), 4: (4, 1)}, BLUE: {3: (3, 0), 4: (4, 0)}},
    )
    b = _case_layout(
        {1: {f: (f, 0) for f in range(1, 7)}},
        {RED: {1: (1, 0), 2: (2, 0)}, BLUE: {f: (f, 0) for f in range(4, 7)}},
    )
    c = _case_layout(
        {1: {f: (f, 0) for f in range(1, 7)}, 2: {f: (f, 2) for f in range(1, 7)}},
        {
            RED: {**{f: (f, 0) for f in (1, 2)}, **{f: (f, 1) for f in range(3, 7)}},
            BLUE: {f: (f, 2) for f in range(1, 6)},
        },
    )
    d = _case_layout(
        {1: {f: (f, 0) for f in range(1, 7)}, 2: {f: (f, 2) for f in range(3, 7)}},
        {RED: {1: (1, 0), 2: (2, 0), **{f: (f, 2) for f in range(3, 7)}}, BLUE: {5: (5, 0), 6: (6, 0)}},
        ignored={(1, 3), (1, 4)},
    )
    return [lay.case(name) for name, lay in zip(("case_a", "case_b", "case_c", "case_d"), (a, b, c, d))]


# -- random scenarios ------------------------------------------------------------------


def random_spec(
    seed: int, frame_count: int = 30, max_tracks: int = 6, max_injections: int = 6, jitter: float = 0.0
) -> ScenarioSpec:
    """A random but valid :class:`ScenarioSpec`.

    Tracks occupy separate rows 40 px apart and move right; spurious boxes
    use rows of their own, and shifts move a box half a row down, so no two
    unrelated boxes ever overlap.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, max_tracks + 1))
    tracks = []
    for k in range(n):
        first = int(rng.integers(1, frame_count + 1))
        last = int(rng.integers(first, frame_count + 1))
        tracks.append(
            TrackTemplate(
                identity=k + 1,
                start=(1.0 + float(rng.integers(0, 50)), 1.0 + 40.0 * k),
                velocity=(float(rng.integers(0, 4)), 0.0),
                size=(10.0, 10.0 + float(rng.integers(0, 10))),
                first_frame=first,
                last_frame=last,
            )
        )

    injections: list = []
    used: set[tuple[int, int]] = set()
    swap_frames: set[tuple[int, int]] = set()
    for _ in range(int(rng.integers(0, max_injections + 1))):
        kind = rng.choice(["drop", "spurious", "swap", "shift"])
        t = tracks[int(rng.integers(0, n))]
        lo, hi = t.first_frame, t.last_frame
        if kind == "spurious":
            first = int(rng.integers(1, frame_count + 1))
            last = int(rng.integers(first, frame_count + 1))
            row = 40.0 * (n + len(injections)) + 1.0
            injections.append(Spurious((1.0 + float(rng.integers(0, 50)), row), first, last, (1.0, 0.0)))
        elif kind == "swap":
            if n < 2:
                continue
            other = tracks[int(rng.integers(0, n))]
            f = int(rng.integers(1, frame_count + 1))
            if other.identity == t.identity or (t.identity, f) in used or (other.identity, f) in used:
                continue
            injections.append(Swap(t.identity, other.identity, f))
            swap_frames |= {(t.identity, f), (other.identity, f)}
        else:
            first = int(rng.integers(lo, hi + 1))
            last = int(rng.integers(first, min(hi, first + 5) + 1))
            span = {(t.identity, f) for f in range(first, last + 1)}
            if span & (used | swap_frames):
                continue
            used |= span
            if kind == "drop":
                injections.append(Drop(t.identity, first, last))
            else:
                injections.append(Shift(t.identity, (0.0, 20.0), first, last))
    return ScenarioSpec(frame_count, tuple(tracks), tuple(injections), seed=seed, jitter=jitter)


# -- spec (de)serialization for the CLI --------------------------------------------------

_INJECTIONS = {"drop": Drop, "spurious": Spurious, "swap": Swap, "shift": Shift}


def spec_from_dict(doc: dict) -> ScenarioSpec:
    def tup(v):
        return tuple(v) if isinstance(v, list) else v

    tracks = tuple(TrackTemplate(**{k: tup(v) for k, v in t.items()}) for t in doc.get("tracks", []))
    injections = []
    for inj in doc.get("injections", []):
        inj = dict(inj)
        kind = inj.pop("type")
        if kind not in _INJECTIONS:
            raise ConflictingInjections(f"unknown injection type {kind!r}")
        injections.append(_INJECTIONS[kind](**{k: tup(v) for k, v in inj.items()}))
    return ScenarioSpec(
        frame_count=int(doc["frame_count"]),
        tracks=tracks,
        injections=tuple(injections),
        seed=int(doc.get("seed", 0)),
        jitter=float(doc.get("jitter", 0.0)),
    )
