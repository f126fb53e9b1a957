"""Value types shared across the toolkit.

Two representations coexist. The record types (:class:`EntryRecord`,
:class:`Trajectory`) are convenient for small inputs and tests; the columnar
:class:`BoxTable` is what the evaluator actually walks, since a benchmark can
hold millions of boxes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import DuplicateFramePerIdentity, InputError, NegativeIdentity


@dataclass(frozen=True, slots=True)
class BoundingBox:
    """Axis-aligned box in 1-based pixel coordinates.

    Coordinates may lie outside the image; annotations are allowed to extend
    past the frame border.
    """

    left: float
    top: float
    width: float
    height: float

    def __post_init__(self):
        for name in ("left", "top", "width", "height"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"box {name} must be finite")
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"box width and height must be positive, got {self.width}x{self.height}")

    @property
    def right(self) -> float:
        return self.left + self.width

    @property
    def bottom(self) -> float:
        return self.top + self.height

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.left, self.top, self.width, self.height)


class ClassLabel(enum.IntEnum):
    UNKNOWN = 0  # any id outside 1-12, e.g. crowd regions
    PEDESTRIAN = 1
    PERSON_ON_VEHICLE = 2
    CAR = 3
    BICYCLE = 4
    MOTORBIKE = 5
    NON_MOTORIZED_VEHICLE = 6
    STATIC_PERSON = 7
    DISTRACTOR = 8
    OCCLUDER = 9
    OCCLUDER_ON_GROUND = 10
    OCCLUDER_FULL = 11
    REFLECTION = 12

    @classmethod
    def from_id(cls, class_id: int) -> "ClassLabel":
        if 1 <= class_id <= 12:
            return cls(class_id)
        return cls.UNKNOWN


class Role(enum.Enum):
    TARGET = "target"
    NEUTRAL = "neutral"
    OTHER = "other"


NEUTRAL_LABELS = frozenset(
    {
        ClassLabel.PERSON_ON_VEHICLE,
        ClassLabel.STATIC_PERSON,
        ClassLabel.DISTRACTOR,
        ClassLabel.REFLECTION,
        ClassLabel.UNKNOWN,
    }
)


def classify_label(label: ClassLabel | int) -> Role:
    """Pedestrians are targets; look-alike classes are neither rewarded nor penalized."""
    if not isinstance(label, ClassLabel):
        label = ClassLabel.from_id(int(label))
    if label is ClassLabel.PEDESTRIAN:
        return Role.TARGET
    if label in NEUTRAL_LABELS:
        return Role.NEUTRAL
    return Role.OTHER


def class_roles(class_ids: np.ndarray) -> np.ndarray:
    """Vectorized :func:`classify_label`: 0 target, 1 neutral, 2 other."""
    class_ids = np.asarray(class_ids)
    known = (class_ids >= 1) & (class_ids <= 12)
    neutral_ids = [int(c) for c in NEUTRAL_LABELS if c is not ClassLabel.UNKNOWN]
    roles = np.full(class_ids.shape, 2, dtype=np.int8)
    roles[np.isin(class_ids, neutral_ids) | ~known] = 1
    roles[class_ids == ClassLabel.PEDESTRIAN] = 0
    return roles


@dataclass(frozen=True, slots=True)
class EntryRecord:
    """One line of a detection, ground-truth or tracker-result file.

    ``score`` is the detector confidence for detections and the 0/1
    consider flag for ground truth. ``class_id`` and ``visibility`` are
    ``None`` where the file carries ``-1``.
    """

    frame: int
    identity: int
    box: BoundingBox
    score: float
    class_id: int | None = None
    visibility: float | None = None

    def __post_init__(self):
        if self.frame < 1:
            raise ValueError(f"frame must be >= 1, got {self.frame}")
        if self.visibility is not None and not 0.0 <= self.visibility <= 1.0:
            raise ValueError(f"visibility must lie in [0, 1], got {self.visibility}")

    @property
    def label(self) -> ClassLabel | None:
        return None if self.class_id is None else ClassLabel.from_id(self.class_id)


@dataclass(frozen=True)
class Trajectory:
    """All boxes of one identity, keyed by frame in increasing order."""

    identity: int
    boxes: Mapping[int, BoundingBox]
    label: ClassLabel | None = None
    class_id: int | None = None
    scores: Mapping[int, float] = field(default_factory=dict)
    visibility: Mapping[int, float | None] = field(default_factory=dict)

    @property
    def frames(self) -> list[int]:
        return sorted(self.boxes)

    def __len__(self):
        return len(self.boxes)

    def records(self) -> Iterator[EntryRecord]:
        for f in self.frames:
            yield EntryRecord(
                f, self.identity, self.boxes[f], self.scores.get(f, 1.0), self.class_id, self.visibility.get(f)
            )


@dataclass(frozen=True)
class SequenceMeta:
    name: str
    frame_count: int
    fps: float = 30.0
    resolution: tuple[int, int] = (1920, 1080)

    def __post_init__(self):
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")
        if not self.fps > 0:
            raise ValueError("fps must be positive")


def build_trajectories(entries: Iterable[EntryRecord]) -> dict[int, Trajectory]:
    """Group records by identity, rejecting two boxes for one identity in one frame."""
    grouped: dict[int, list[EntryRecord]] = {}
    for e in entries:
        if e.identity < 0:
            raise NegativeIdentity(e.identity, e.frame)
        grouped.setdefault(e.identity, []).append(e)

    out = {}
    for identity in sorted(grouped):
        rows = sorted(grouped[identity], key=lambda r: r.frame)
        class_ids = {r.class_id for r in rows}
        if len(class_ids) > 1:
            raise InputError(f"identity {identity} carries several classes {sorted(map(str, class_ids))}")
        boxes, scores, vis = {}, {}, {}
        for r in rows:
            if r.frame in boxes:
                raise DuplicateFramePerIdentity(identity, r.frame)
            boxes[r.frame] = r.box
            scores[r.frame] = r.score
            vis[r.frame] = r.visibility
        class_id = rows[0].class_id
        out[identity] = Trajectory(
            identity,
            boxes,
            label=None if class_id is None else ClassLabel.from_id(class_id),
            class_id=class_id,
            scores=scores,
            visibility=vis,
        )
    return out


@dataclass(frozen=True, eq=False)
class BoxTable:
    """Columnar store of file rows.

    ``boxes`` is ``(n, 4)`` as left, top, width, height. ``class_id`` and
    ``visibility`` use -1 for "absent", as in the file format.
    """

    frame: np.ndarray
    identity: np.ndarray
    boxes: np.ndarray
    score: np.ndarray
    class_id: np.ndarray
    visibility: np.ndarray

    def __post_init__(self):
        n = len(self.frame)
        for name in ("identity", "score", "class_id", "visibility"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name} has length {len(getattr(self, name))}, expected {n}")
        if self.boxes.shape != (n, 4):
            raise ValueError(f"boxes must have shape ({n}, 4), got {self.boxes.shape}")

    def __len__(self) -> int:
        return len(self.frame)

    @classmethod
    def empty(cls) -> "BoxTable":
        return cls.from_columns([], [], np.empty((0, 4)), [], [], [])

    @classmethod
    def from_columns(cls, frame, identity, boxes, score, class_id, visibility) -> "BoxTable":
        return cls(
            np.asarray(frame, dtype=np.int64),
            np.asarray(identity, dtype=np.int64),
            np.asarray(boxes, dtype=np.float64).reshape(-1, 4),
            np.asarray(score, dtype=np.float64),
            np.asarray(class_id, dtype=np.int64),
            np.asarray(visibility, dtype=np.float64),
        )

    @classmethod
    def from_entries(cls, entries: Iterable[EntryRecord]) -> "BoxTable":
        entries = list(entries)
        return cls.from_columns(
            [e.frame for e in entries],
            [e.identity for e in entries],
            [e.box.as_tuple() for e in entries],
            [e.score for e in entries],
            [-1 if e.class_id is None else e.class_id for e in entries],
            [-1.0 if e.visibility is None else e.visibility for e in entries],
        )

    @classmethod
    def from_trajectories(cls, trajectories: Mapping[int, Trajectory]) -> "BoxTable":
        return cls.from_entries(r for t in trajectories.values() for r in t.records())

    def to_entries(self) -> list[EntryRecord]:
        out = []
        for f, i, b, s, c, v in zip(
            self.frame.tolist(),
            self.identity.tolist(),
            self.boxes.tolist(),
            self.score.tolist(),
            self.class_id.tolist(),
            self.visibility.tolist(),
        ):
            out.append(EntryRecord(f, i, BoundingBox(*b), s, None if c == -1 else c, None if v == -1 else v))
        return out

    def trajectories(self) -> dict[int, Trajectory]:
        return build_trajectories(self.to_entries())

    def take(self, index) -> "BoxTable":
        return BoxTable(
            self.frame[index],
            self.identity[index],
            self.boxes[index],
            self.score[index],
            self.class_id[index],
            self.visibility[index],
        )

    @staticmethod
    def concat(tables: Iterable["BoxTable"]) -> "BoxTable":
        tables = list(tables)
        if not tables:
            return BoxTable.empty()
        return BoxTable(*(np.concatenate([getattr(t, name) for t in tables]) for name in _COLUMNS))

    def sorted(self) -> "BoxTable":
        """Rows ordered by (frame, identity); stable for equal keys."""
        return self.take(np.lexsort((self.identity, self.frame)))

    def frame_slices(self) -> Iterator[tuple[int, slice]]:
        """Yield ``(frame, slice)`` runs. Only valid on a :meth:`sorted` table."""
        if len(self) == 0:
            return
        starts = np.flatnonzero(np.diff(self.frame)) + 1
        bounds = [0, *starts.tolist(), len(self)]
        frames = self.frame[bounds[:-1]].tolist()
        for f, a, b in zip(frames, bounds[:-1], bounds[1:]):
            yield f, slice(a, b)

    def check_unique_frame_identity(self) -> None:
        if len(self) == 0:
            return
        order = np.lexsort((self.frame, self.identity))
        f, i = self.frame[order], self.identity[order]
        dup = np.flatnonzero((f[1:] == f[:-1]) & (i[1:] == i[:-1]))
        if len(dup):
            k = dup[0]
            raise DuplicateFramePerIdentity(int(i[k]), int(f[k]))


_COLUMNS = ("frame", "identity", "boxes", "score", "class_id", "visibility")
