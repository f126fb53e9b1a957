import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motbench.assignment import (
    MatchConfig,
    concatenate_timelines,
    match_sequence,
    preprocess_results,
    select_targets,
    split_ground_truth,
)
from motbench.core_types import ClassLabel
from motbench.errors import DuplicateFramePerIdentity
from conftest import results, table
from oracles import reference_clear


def _track(identity, frames, dx=0.0, y=0.0, w=10.0):
    return [(f, identity, 10.0 * f + dx, y, w, 10.0) for f in frames]


def test_perfect_tracker():
    rows = _track(1, range(1, 11)) + _track(2, range(3, 9), y=50)
    tl = match_sequence(table(rows), results(rows))
    assert (tl.total_fn, tl.total_fp, tl.total_idsw) == (0, 0, 0)
    assert tl.total_matches == len(rows) == tl.gt_total
    assert tl.overlap_sum == len(rows)


def test_empty_inputs():
    tl = match_sequence(table([]), results([]))
    assert tl.gt_total == 0 and tl.frame_count == 1
    tl = match_sequence(table(_track(1, range(1, 4))), results([]))
    assert tl.total_fn == 3 and tl.total_fp == 0


def test_carry_over_beats_better_overlap():
    gt = table(_track(1, range(1, 4)))
    # A matches exactly in frame 1, then drifts to IoU 0.6; B is exact from frame 2
    hyp = results(_track(7, [1]) + _track(7, [2, 3], dx=2.5) + _track(9, [2, 3]))
    tl = match_sequence(gt, hyp)
    assert tl.total_idsw == 0
    assert tl.match_hyp.tolist() == [7, 7, 7]
    assert tl.match_overlap.tolist() == pytest.approx([1.0, 0.6, 0.6])
    assert tl.total_fp == 2
    # frame-independent matching takes the closer box instead
    free = match_sequence(gt, hyp, temporal=False)
    assert free.match_hyp.tolist() == [7, 9, 9]


def test_carry_over_stops_below_threshold():
    gt = table(_track(1, range(1, 4)))
    # A drifts to IoU 1/3 in frame 2 (unusable), B exact takes over
    hyp = results(_track(7, [1]) + _track(7, [2, 3], dx=5.0) + _track(9, [2, 3]))
    tl = match_sequence(gt, hyp)
    assert tl.match_hyp.tolist() == [7, 9, 9]
    assert tl.total_idsw == 1


def test_threshold_is_inclusive():
    gt = table([(1, 1, 0, 0, 10, 10)])
    # IoU exactly 0.5: 10x10 vs 10x5 inside it
    hyp = results([(1, 5, 0, 0, 10, 5)])
    assert match_sequence(gt, hyp).total_matches == 1
    hyp = results([(1, 5, 0, 0, 10, 4.99)])
    assert match_sequence(gt, hyp).total_matches == 0


def test_switch_remembered_across_gaps():
    gt = table(_track(1, range(1, 7)))
    hyp = results(_track(3, [1, 2]) + _track(4, [5, 6]))
    tl = match_sequence(gt, hyp)
    assert tl.total_idsw == 1 and tl.total_fn == 2
    assert tl.match_switch.tolist() == [False, False, True, False]
    assert tl.last_assignment == ({1: 4},)


def test_returning_hypothesis_is_not_a_switch():
    gt = table(_track(1, range(1, 6)))
    hyp = results(_track(3, [1, 2, 4, 5]))
    tl = match_sequence(gt, hyp)
    assert tl.total_idsw == 0 and tl.total_fn == 1


def test_duplicate_identity_in_frame():
    with pytest.raises(DuplicateFramePerIdentity):
        match_sequence(table(_track(1, [1])), results(_track(2, [1]) + _track(2, [1], y=30)))


def test_frame_events():
    gt = table(_track(1, range(1, 3)))
    hyp = results(_track(3, [1]) + _track(4, [2]) + _track(5, [2], y=40))
    tl = match_sequence(gt, hyp)
    assert tl.frame_events(2) == {"matches": [(1, 4, 1.0)], "fn": 0, "fp": 1, "idsw": 1}
    assert tl.frame_events(9)["matches"] == []


def _random_frames(rng, frames=8, n_gt=4, pool=5):
    gt, hyp = [], []
    for f in range(1, frames + 1):
        for g in range(1, n_gt + 1):
            if rng.random() < 0.85:
                x, y = 12.0 * g + rng.normal(0, 2), rng.normal(0, 2)
                gt.append((f, g, x, y, 10 + rng.random(), 10 + rng.random()))
        ids = rng.permutation(pool)[: rng.integers(0, pool + 1)] + 1
        for h in ids:
            x = 12.0 * rng.integers(1, n_gt + 1) + rng.normal(0, 3)
            hyp.append((f, int(h), x, rng.normal(0, 3), 10 + rng.random(), 10 + rng.random()))
    return gt, hyp


def test_against_reference_matcher(rng):
    for _ in range(150):
        gt, hyp = _random_frames(rng)
        tl = match_sequence(table(gt), results(hyp))
        fn, fp, idsw, matches, overlap = reference_clear(gt, hyp)
        assert (tl.total_fn, tl.total_fp, tl.total_idsw, tl.total_matches) == (fn, fp, idsw, matches)
        assert tl.overlap_sum == pytest.approx(overlap, abs=1e-9)


def test_hypothesis_renaming_invariance(rng):
    for _ in range(30):
        gt, hyp = _random_frames(rng)
        perm = rng.permutation(100) + 1000
        renamed = [(r[0], int(perm[r[1]]),) + r[2:] for r in hyp]
        a = match_sequence(table(gt), results(hyp))
        b = match_sequence(table(gt), results(renamed))
        assert (a.total_fn, a.total_fp, a.total_idsw) == (b.total_fn, b.total_fp, b.total_idsw)
        assert a.overlap_sum == pytest.approx(b.overlap_sum)


def test_unrelated_box_adds_one_fp(rng):
    for _ in range(30):
        gt, hyp = _random_frames(rng)
        a = match_sequence(table(gt), results(hyp))
        b = match_sequence(table(gt), results(hyp + [(3, 999, 5000.0, 5000.0, 10, 10)]))
        assert b.total_fp == a.total_fp + 1
        assert (b.total_fn, b.total_idsw) == (a.total_fn, a.total_idsw)


def test_concatenation_adds_counts(rng):
    parts = []
    for k in range(3):
        gt, hyp = _random_frames(rng)
        parts.append(match_sequence(table(gt), results(hyp), name=f"s{k}"))
    whole = concatenate_timelines(parts)
    assert whole.sequence_names == ("s0", "s1", "s2")
    for attr in ("total_fn", "total_fp", "total_idsw", "total_matches", "gt_total", "frame_count"):
        assert getattr(whole, attr) == sum(getattr(p, attr) for p in parts)
    assert whole.overlap_sum == pytest.approx(sum(p.overlap_sum for p in parts))
    assert set(whole.sequence.tolist()) == {0, 1, 2}
    assert concatenate_timelines(parts[:1]) is parts[0]


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.lists(st.tuples(st.integers(1, 6), st.floats(-4, 4)), max_size=20))
def test_counts_balance(n_frames, noise):
    gt = _track(1, range(1, n_frames + 1))
    hyp = [(f, 1, 10.0 * f + dx, 0.0, 10.0, 10.0) for f, dx in dict(noise).items()]
    tl = match_sequence(table(gt), results(hyp))
    assert tl.total_matches + tl.total_fn == tl.gt_total
    assert tl.total_matches + tl.total_fp == len(hyp)
    assert 0 <= tl.total_idsw <= tl.total_matches


# -- distractor preprocessing ----------------------------------------------------


def _gt_with(class_id, box=(0, 0, 10, 20), flag=1, vis=1.0):
    return table([(1, 1, 100, 0, 10, 20, 1, 1, 1.0), (1, 2) + box + (flag, class_id, vis)])


def test_static_person_removed_car_kept():
    res = results([(1, 1, 100, 0, 10, 20), (1, 2, 0, 0, 10, 20)])
    kept, removed = preprocess_results(_gt_with(ClassLabel.STATIC_PERSON), res)
    assert kept.identity.tolist() == [1]
    assert [(r.hypothesis, r.gt_class, r.cause) for r in removed] == [(2, 7, "matched")]
    kept, removed = preprocess_results(_gt_with(ClassLabel.CAR), res)
    assert kept.identity.tolist() == [1, 2] and removed == []


@pytest.mark.parametrize("label", [2, 7, 8, 12, 0, 77])
def test_neutral_labels_absorb_matches(label):
    res = results([(1, 5, 0, 0, 10, 20)])
    kept, removed = preprocess_results(_gt_with(label), res)
    assert len(kept) == 0 and len(removed) == 1


@pytest.mark.parametrize("label", [3, 4, 5, 6, 9, 10, 11])
def test_other_labels_do_not(label):
    kept, _ = preprocess_results(_gt_with(label), results([(1, 5, 0, 0, 10, 20)]))
    assert len(kept) == 1


def test_ignored_rows_do_not_absorb():
    kept, _ = preprocess_results(_gt_with(ClassLabel.STATIC_PERSON, flag=0), results([(1, 5, 0, 0, 10, 20)]))
    assert len(kept) == 1


def test_partial_overlap_with_reflection():
    gt = _gt_with(ClassLabel.REFLECTION, box=(0, 0, 10, 10))
    # IoU 0.6 matches the reflection in the first step
    kept, removed = preprocess_results(gt, results([(1, 5, 2.5, 0, 10, 10)]))
    assert len(kept) == 0 and removed[0].overlap == pytest.approx(0.6)
    # IoU 0.4 neither matches nor exceeds the overlap threshold
    kept, _ = preprocess_results(gt, results([(1, 5, 0, 0, 10, 4)]))
    assert len(kept) == 1


def test_overlap_kind_ioa():
    # small result inside a large neutral box: IoU 0.25, IoA 1.0
    gt = _gt_with(ClassLabel.DISTRACTOR, box=(0, 0, 20, 20))
    res = results([(1, 5, 5, 5, 10, 10)])
    kept, _ = preprocess_results(gt, res)
    assert len(kept) == 1
    kept, removed = preprocess_results(gt, res, MatchConfig(distractor_overlap="ioa"))
    assert len(kept) == 0 and removed[0].cause == "overlap"


def test_result_on_pedestrian_is_protected():
    # pedestrian and a reflection of it almost on top of each other
    gt = table([(1, 1, 0, 0, 10, 10, 1, 1, 1.0), (1, 2, 0.5, 0, 10, 10, 1, 12, 1.0)])
    kept, _ = preprocess_results(gt, results([(1, 5, 0, 0, 10, 10), (1, 6, 0.5, 0, 10, 10)]))
    assert kept.identity.tolist() == [5]


def test_min_visibility_demotes_targets():
    gt = table([(1, 1, 0, 0, 10, 10, 1, 1, 0.1), (1, 2, 50, 0, 10, 10, 1, 1, 0.9)])
    split = split_ground_truth(gt, MatchConfig(min_visibility=0.5))
    assert split.roles.tolist() == [1, 0]
    kept, _ = preprocess_results(gt, results([(1, 5, 0, 0, 10, 10)]), MatchConfig(min_visibility=0.5))
    assert len(kept) == 0
    assert len(select_targets(gt)) == 2


@pytest.mark.parametrize(
    "kwargs",
    [{"iou_threshold": 0}, {"iou_threshold": 1.5}, {"distractor_threshold": 0}, {"distractor_overlap": "dice"}, {"min_visibility": 2}],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        MatchConfig(**kwargs)
