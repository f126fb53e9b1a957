"""motbench: evaluation toolkit for multi-object tracking benchmarks."""

__version__ = "0.1.0"

from .assignment import MatchConfig, match_sequence, preprocess_results, solve_min_cost_assignment
from .benchmark import emit_report, evaluate_benchmark, evaluate_sequence, rank_trackers
from .core_types import BoundingBox, BoxTable, ClassLabel, EntryRecord, Role, SequenceMeta, Trajectory
from .io_formats import FileKind, parse_entries, read_table, serialize_entries, validate_submission
from .metrics import compute_clear, compute_detection_metrics, compute_track_quality

__all__ = [
    "BoundingBox",
    "BoxTable",
    "ClassLabel",
    "EntryRecord",
    "FileKind",
    "MatchConfig",
    "Role",
    "SequenceMeta",
    "Trajectory",
    "compute_clear",
    "compute_detection_metrics",
    "compute_track_quality",
    "emit_report",
    "evaluate_benchmark",
    "evaluate_sequence",
    "match_sequence",
    "parse_entries",
    "preprocess_results",
    "rank_trackers",
    "read_table",
    "serialize_entries",
    "solve_min_cost_assignment",
    "validate_submission",
]
