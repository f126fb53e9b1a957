"""Reading and writing the nine-column MOTChallenge text format.

Each non-blank line is::

    frame, id, left, top, width, height, score/flag, class, visibility

Detections carry ``-1`` for id, class and visibility. For ground truth the
seventh column is a 0/1 consider flag. Parsing is a single pass over the
line stream; :func:`read_table` never holds more than one line of text at a
time and accumulates typed columns.
"""

from __future__ import annotations

import configparser
import enum
import io
import math
import os
import zipfile
from array import array
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator

import numpy as np

from .core_types import BoundingBox, BoxTable, EntryRecord, SequenceMeta
from .errors import (
    FrameOutOfRange,
    InputError,
    InvalidSubmission,
    LineErrors,
    MalformedLine,
    MissingSequenceFile,
    NonPositiveBoxDimension,
    NonPositiveFrame,
    UnparseableFile,
)


class FileKind(enum.Enum):
    DETECTION = "det"
    GROUND_TRUTH = "gt"
    TRACKER_RESULT = "res"


Row = tuple  # (frame, identity, left, top, width, height, score, class_id, visibility)


def _as_int(value: float, what: str, lineno: int, source) -> int:
    if not value.is_integer():
        raise MalformedLine(lineno, f"{what} must be an integer, got {value!r}", source)
    return int(value)


def _parse_line(line: str, lineno: int, kind: FileKind, source) -> Row:
    parts = line.split(",")
    if len(parts) != 9:
        raise MalformedLine(lineno, f"expected 9 comma-separated fields, got {len(parts)}", source)
    try:
        v = [float(p) for p in parts]
    except ValueError:
        bad = next(p for p in parts if not _is_number(p))
        raise MalformedLine(lineno, f"non-numeric field {bad.strip()!r}", source) from None
    if not all(math.isfinite(x) for x in v):
        raise MalformedLine(lineno, "non-finite field", source)

    frame = _as_int(v[0], "frame", lineno, source)
    if frame < 1:
        raise NonPositiveFrame(lineno, f"frame must be >= 1, got {frame}", source)
    left, top, width, height = v[2], v[3], v[4], v[5]
    if not (width > 0 and height > 0):
        raise NonPositiveBoxDimension(lineno, f"box width/height must be positive, got {width}x{height}", source)

    if kind is FileKind.DETECTION:
        return (frame, -1, left, top, width, height, v[6], -1, -1.0)

    identity = _as_int(v[1], "identity", lineno, source)
    if identity < 0:
        raise MalformedLine(lineno, f"identity must be >= 0, got {identity}", source)
    if kind is FileKind.GROUND_TRUTH:
        flag = v[6]
        if flag != 0.0 and flag != 1.0:
            raise MalformedLine(lineno, f"consider flag must be 0 or 1, got {flag!r}", source)
        class_id = _as_int(v[7], "class", lineno, source)
        if class_id == -1:
            raise MalformedLine(lineno, "ground truth requires a class id", source)
        vis = v[8]
        if not 0.0 <= vis <= 1.0:
            raise MalformedLine(lineno, f"visibility must lie in [0, 1], got {vis!r}", source)
        return (frame, identity, left, top, width, height, flag, class_id, vis)

    class_id = _as_int(v[7], "class", lineno, source)
    vis = v[8]
    if vis != -1.0 and not 0.0 <= vis <= 1.0:
        raise MalformedLine(lineno, f"visibility must be -1 or lie in [0, 1], got {vis!r}", source)
    return (frame, identity, left, top, width, height, v[6], class_id, vis)


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def iter_rows(lines: Iterable[str], kind: FileKind, source: str | None = None) -> Iterator[Row]:
    """Yield validated row tuples in file order.

    Ground-truth and detection files stop at the first bad line. Tracker
    results are checked to the end and every bad line is reported together in
    one :class:`LineErrors`, so a submitter can fix all defects at once.
    """
    collect = kind is FileKind.TRACKER_RESULT
    errors: list[MalformedLine] = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        try:
            row = _parse_line(line, lineno, kind, source)
        except MalformedLine as e:
            if not collect:
                raise
            errors.append(e)
            continue
        if not errors:
            yield row
    if errors:
        raise LineErrors(errors, source)


def _lines(text) -> Iterable[str]:
    if isinstance(text, str):
        return io.StringIO(text)
    return text


def parse_entries(text, kind: FileKind, source: str | None = None) -> list[EntryRecord]:
    """Parse a string or line iterable into records."""
    out = []
    for f, i, l, t, w, h, s, c, vis in iter_rows(_lines(text), kind, source):
        out.append(
            EntryRecord(
                f,
                i,
                BoundingBox(l, t, w, h),
                s,
                None if c == -1 else c,
                None if vis == -1.0 else vis,
            )
        )
    return out


def read_table(text, kind: FileKind, source: str | None = None) -> BoxTable:
    """Parse straight into a columnar :class:`BoxTable`."""
    cols = [array("q"), array("q")] + [array("d") for _ in range(5)] + [array("q"), array("d")]
    appends = [c.append for c in cols]
    for row in iter_rows(_lines(text), kind, source):
        for app, x in zip(appends, row):
            app(x)
    n = len(cols[0])
    boxes = np.empty((n, 4))
    for k in range(4):
        boxes[:, k] = np.frombuffer(cols[2 + k], dtype=np.float64) if n else []
    return BoxTable.from_columns(
        np.frombuffer(cols[0], dtype=np.int64) if n else [],
        np.frombuffer(cols[1], dtype=np.int64) if n else [],
        boxes,
        np.frombuffer(cols[6], dtype=np.float64) if n else [],
        np.frombuffer(cols[7], dtype=np.int64) if n else [],
        np.frombuffer(cols[8], dtype=np.float64) if n else [],
    )


def read_file(path, kind: FileKind) -> BoxTable:
    with open(path, encoding="utf-8") as fh:
        return read_table(fh, kind, source=str(path))


def _num(x: float) -> str:
    # repr gives the shortest string that parses back to the same double
    return repr(float(x))


def _format_row(frame, identity, box, score, class_id, vis, kind: FileKind) -> str:
    l, t, w, h = box
    head = f"{int(frame)},{int(identity) if kind is not FileKind.DETECTION else -1},{_num(l)},{_num(t)},{_num(w)},{_num(h)}"
    if kind is FileKind.DETECTION:
        return f"{head},{_num(score)},-1,-1\n"
    if kind is FileKind.GROUND_TRUTH:
        return f"{head},{int(score)},{int(class_id)},{_num(vis)}\n"
    c = -1 if class_id is None else int(class_id)
    v = "-1" if vis is None or vis == -1 else _num(vis)
    return f"{head},{_num(score)},{c},{v}\n"


def serialize_entries(entries: Iterable[EntryRecord], kind: FileKind) -> str:
    return "".join(
        _format_row(e.frame, e.identity, e.box.as_tuple(), e.score, e.class_id, e.visibility, kind) for e in entries
    )


def serialize_table(table: BoxTable, kind: FileKind) -> str:
    parts = []
    for f, i, b, s, c, v in zip(
        table.frame.tolist(),
        table.identity.tolist(),
        table.boxes.tolist(),
        table.score.tolist(),
        table.class_id.tolist(),
        table.visibility.tolist(),
    ):
        parts.append(_format_row(f, i, b, s, None if c == -1 else c, v, kind))
    return "".join(parts)


# -- sequence metadata -------------------------------------------------------

SEQINFO_NAME = "seqinfo.ini"


def write_seqinfo(meta: SequenceMeta, path) -> None:
    cfg = configparser.ConfigParser()
    cfg.optionxform = str
    cfg["Sequence"] = {
        "name": meta.name,
        "seqLength": str(meta.frame_count),
        "frameRate": _num(meta.fps) if not float(meta.fps).is_integer() else str(int(meta.fps)),
        "imWidth": str(meta.resolution[0]),
        "imHeight": str(meta.resolution[1]),
    }
    with open(path, "w", encoding="utf-8") as fh:
        cfg.write(fh)


def read_seqinfo(path) -> SequenceMeta:
    cfg = configparser.ConfigParser()
    cfg.optionxform = str
    if not cfg.read(path, encoding="utf-8"):
        raise InputError(f"{path}: cannot read sequence metadata")
    try:
        sec = cfg["Sequence"]
        return SequenceMeta(
            name=sec["name"],
            frame_count=int(sec["seqLength"]),
            fps=float(sec.get("frameRate", "30")),
            resolution=(int(sec.get("imWidth", "1920")), int(sec.get("imHeight", "1080"))),
        )
    except (KeyError, ValueError) as e:
        raise InputError(f"{path}: bad sequence metadata ({e})") from None


# -- on-disk layouts ---------------------------------------------------------


def _gt_file(seq_dir: Path) -> Path | None:
    for candidate in (seq_dir / "gt.txt", seq_dir / "gt" / "gt.txt"):
        if candidate.is_file():
            return candidate
    return None


def find_sequences(gt_root, names: Iterable[str] | None = None) -> dict[str, Path]:
    """Sequence directories under ``gt_root`` that hold an annotation file."""
    root = Path(gt_root)
    if not root.is_dir():
        raise InputError(f"{root}: ground-truth root is not a directory")
    found = {p.name: p for p in sorted(root.iterdir()) if p.is_dir() and _gt_file(p) is not None}
    if names is not None:
        names = list(names)
        missing = [n for n in names if n not in found]
        if missing:
            raise InputError(f"{root}: no ground truth for sequence(s) {', '.join(missing)}")
        found = {n: found[n] for n in names}
    return found


def load_sequence_meta(seq_dir) -> SequenceMeta | None:
    p = Path(seq_dir) / SEQINFO_NAME
    return read_seqinfo(p) if p.is_file() else None


def load_ground_truth(seq_dir) -> tuple[SequenceMeta, BoxTable]:
    seq_dir = Path(seq_dir)
    gt_path = _gt_file(seq_dir)
    if gt_path is None:
        raise InputError(f"{seq_dir}: no gt.txt")
    table = read_file(gt_path, FileKind.GROUND_TRUTH)
    meta = load_sequence_meta(seq_dir)
    if meta is None:
        last = int(table.frame.max()) if len(table) else 1
        meta = SequenceMeta(seq_dir.name, last)
    return meta, table


def load_result_files(res_path, metas: Iterable[SequenceMeta], kind: FileKind = FileKind.TRACKER_RESULT):
    """Load ``<Sequence>.txt`` files from a directory or a ZIP archive.

    Returns ``(tables, errors, warnings)``; every problem is collected so
    callers can report all of them.
    """
    metas = list(metas)
    res_path = Path(res_path)
    if res_path.is_file() and zipfile.is_zipfile(res_path):
        try:
            manifest = validate_submission(res_path, metas, kind=kind)
        except InvalidSubmission as e:
            return {}, e.errors, e.warnings
        return manifest.tables, [], manifest.warnings
    if not res_path.is_dir():
        return {}, [InputError(f"{res_path}: result path is neither a directory nor a ZIP archive")], []

    tables, errors = {}, []
    for meta in metas:
        p = res_path / f"{meta.name}.txt"
        if not p.is_file():
            errors.append(MissingSequenceFile(meta.name))
            continue
        try:
            table = read_file(p, kind)
        except InputError as e:
            errors.append(UnparseableFile(str(p), e))
            continue
        bad = _first_out_of_range(table, meta)
        if bad is not None:
            errors.append(FrameOutOfRange(str(p), bad, meta.frame_count))
            continue
        tables[meta.name] = table
    return tables, errors, []


def _first_out_of_range(table: BoxTable, meta: SequenceMeta) -> int | None:
    over = np.flatnonzero(table.frame > meta.frame_count)
    return int(table.frame[over[0]]) if len(over) else None


# -- submission archives -----------------------------------------------------


@dataclass
class SubmissionManifest:
    archive: str
    tables: dict[str, BoxTable]
    warnings: list[str] = field(default_factory=list)

    @property
    def sequences(self) -> dict[str, list[EntryRecord]]:
        return {name: t.to_entries() for name, t in self.tables.items()}


def _open_zip(archive) -> tuple[zipfile.ZipFile, str]:
    if isinstance(archive, (bytes, bytearray)):
        return zipfile.ZipFile(io.BytesIO(archive)), "<bytes>"
    if isinstance(archive, (str, os.PathLike)):
        return zipfile.ZipFile(archive), os.fspath(archive)
    return zipfile.ZipFile(archive), getattr(archive, "name", "<stream>")


def validate_submission(
    archive: bytes | str | os.PathLike | BinaryIO,
    expected: Iterable[SequenceMeta],
    kind: FileKind = FileKind.TRACKER_RESULT,
) -> SubmissionManifest:
    """Check a ZIP holding one ``<Sequence-Name>.txt`` per expected sequence.

    Files may sit at the archive root or inside one top-level folder.
    Unexpected files become warnings. All errors are raised together as
    :class:`InvalidSubmission`.
    """
    try:
        zf, name = _open_zip(archive)
    except zipfile.BadZipFile as e:
        raise InvalidSubmission([InputError(f"not a ZIP archive: {e}")]) from None
    expected = list(expected)
    with zf:
        files = [i.filename for i in zf.infolist() if not i.is_dir()]
        tops = {f.split("/", 1)[0] for f in files}
        prefix = ""
        if files and len(tops) == 1 and all("/" in f for f in files):
            prefix = next(iter(tops)) + "/"

        by_name: dict[str, str] = {}
        warnings: list[str] = []
        wanted = {f"{m.name}.txt" for m in expected}
        for f in files:
            rel = f[len(prefix):]
            if rel in wanted:
                by_name[rel[:-4]] = f
            else:
                warnings.append(f"UnexpectedExtraFile: {f}")

        tables: dict[str, BoxTable] = {}
        errors: list[InputError] = []
        for meta in expected:
            member = by_name.get(meta.name)
            if member is None:
                errors.append(MissingSequenceFile(meta.name))
                continue
            try:
                with zf.open(member) as raw:
                    text = io.TextIOWrapper(raw, encoding="utf-8")
                    table = read_table(text, kind, source=member)
            except (InputError, UnicodeDecodeError) as e:
                errors.append(UnparseableFile(member, e))
                continue
            bad = _first_out_of_range(table, meta)
            if bad is not None:
                errors.append(FrameOutOfRange(member, bad, meta.frame_count))
                continue
            tables[meta.name] = table

    if errors:
        raise InvalidSubmission(errors, warnings)
    return SubmissionManifest(name, tables, warnings)


def write_submission(tables: dict[str, BoxTable], path=None, folder: str | None = None) -> bytes:
    """Pack result tables into a submission ZIP; returns the archive bytes."""
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
        for seq in sorted(tables):
            arcname = f"{folder}/{seq}.txt" if folder else f"{seq}.txt"
            zf.writestr(arcname, serialize_table(tables[seq], FileKind.TRACKER_RESULT))
    data = buf.getvalue()
    if path is not None:
        Path(path).write_bytes(data)
    return data
