"""Exception hierarchy shared by the toolkit."""

from __future__ import annotations


class MotEvalError(Exception):
    """Base class for every error raised by motbench."""


class InputError(MotEvalError, ValueError):
    """Bad input data. The CLI maps these to exit status 1."""


class MalformedLine(InputError):
    def __init__(self, line: int, reason: str, source: str | None = None):
        self.line = line
        self.reason = reason
        self.source = source
        where = f"{source}:{line}" if source else f"line {line}"
        super().__init__(f"{where}: {reason}")


class NonPositiveFrame(MalformedLine):
    pass


class NonPositiveBoxDimension(MalformedLine):
    pass


class LineErrors(InputError):
    """Several malformed lines collected in a single pass over a file."""

    def __init__(self, errors: list[MalformedLine], source: str | None = None):
        self.errors = list(errors)
        self.source = source
        head = f"{len(self.errors)} malformed line(s)"
        if source:
            head += f" in {source}"
        super().__init__("\n".join([head] + [str(e) for e in self.errors]))


class DuplicateFramePerIdentity(InputError):
    def __init__(self, identity: int, frame: int):
        self.identity = identity
        self.frame = frame
        super().__init__(f"identity {identity} has more than one box in frame {frame}")


class NegativeIdentity(InputError):
    def __init__(self, identity: int, frame: int | None = None):
        self.identity = identity
        self.frame = frame
        super().__init__(f"negative identity {identity}" + (f" in frame {frame}" if frame else ""))


class MissingSequenceFile(InputError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"{name}.txt: missing result file for sequence {name!r}")


class UnparseableFile(InputError):
    def __init__(self, name: str, cause: Exception):
        self.name = name
        self.cause = cause
        super().__init__(f"{name}: {cause}")


class FrameOutOfRange(InputError):
    def __init__(self, name: str, frame: int, frame_count: int | None = None):
        self.name = name
        self.frame = frame
        self.frame_count = frame_count
        limit = f" (sequence has {frame_count} frames)" if frame_count is not None else ""
        super().__init__(f"{name}: frame {frame} out of range{limit}")


class InvalidSubmission(InputError):
    """All problems found while validating a submission archive."""

    def __init__(self, errors: list[InputError], warnings: list[str] | None = None):
        self.errors = list(errors)
        self.warnings = list(warnings or [])
        super().__init__("\n".join(str(e) for e in self.errors))


class SequenceSetMismatch(InputError):
    def __init__(self, missing, extra):
        self.missing = sorted(missing)
        self.extra = sorted(extra)
        super().__init__(f"sequence sets differ: missing={self.missing} extra={self.extra}")


class ZeroGroundTruth(InputError):
    def __init__(self, what: str = "evaluation"):
        super().__init__(f"{what}: no ground-truth target boxes, metrics undefined")


class ConflictingInjections(InputError):
    pass
