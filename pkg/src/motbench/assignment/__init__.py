"""Distractor preprocessing, per-frame assignment and temporal matching."""

from .matching import (
    GroundTruthSplit,
    MatchConfig,
    MatchTimeline,
    Removal,
    concatenate_timelines,
    match_sequence,
    preprocess_results,
    select_targets,
    split_ground_truth,
)
from .solver import FORBIDDEN, AssignmentProblem, assignment_cost, solve_min_cost_assignment

__all__ = [
    "FORBIDDEN",
    "AssignmentProblem",
    "GroundTruthSplit",
    "MatchConfig",
    "MatchTimeline",
    "Removal",
    "assignment_cost",
    "concatenate_timelines",
    "match_sequence",
    "preprocess_results",
    "select_targets",
    "solve_min_cost_assignment",
    "split_ground_truth",
]
