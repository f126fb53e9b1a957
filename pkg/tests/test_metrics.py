import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motbench.assignment import MatchConfig, match_sequence
from motbench.errors import ZeroGroundTruth
from motbench.metrics import (
    TrackQualityMetrics,
    compute_clear,
    compute_detection_metrics,
    compute_motp_components,
    compute_track_quality,
    eleven_point_ap,
)
from conftest import results, table
from oracles import eleven_point_reference, track_status_scan


def _line(identity, frames, y=0.0):
    return [(f, identity, 20.0 * f, y, 10.0, 10.0) for f in frames]


def _far(frame, identity):
    return (frame, identity, -1000.0 - 20 * identity, -1000.0, 10.0, 10.0)


def test_mota_from_counts():
    # 100 objects, 5 misses, 10 false positives, 1 switch
    gt, hyp = [], []
    for g in range(1, 21):
        gt += _line(g, range(1, 6), y=20.0 * g)
    for g in range(1, 21):
        frames = range(1, 6) if g > 5 else range(2, 6)
        hyp += _line(100 + g, frames, y=20.0 * g)
    hyp = [r for r in hyp if not (r[1] == 120 and r[0] >= 4)]
    hyp += _line(300, [4, 5], y=400.0)
    hyp += [_far(f, 500 + k) for f in range(1, 6) for k in range(2)]
    m = compute_clear(match_sequence(table(gt), results(hyp)))
    assert (m.fn, m.fp, m.idsw, m.gt_total) == (5, 10, 1, 100)
    assert m.mota == pytest.approx(84.0, abs=1e-9)
    assert m.moda == pytest.approx(85.0, abs=1e-9)
    assert m.faf == 2.0
    assert m.recall == 95.0
    assert m.precision == pytest.approx(100 * 95 / 105)
    assert m.relative_idsw == pytest.approx(1 / 0.95)


def test_mota_can_be_negative():
    gt = _line(1, range(1, 11))
    hyp = [_far(f, k) for f in range(1, 11) for k in range(13)]
    m = compute_clear(match_sequence(table(gt), results(hyp)))
    assert m.mota == pytest.approx(100 * (1 - (10 + 130) / 10))
    assert m.mota == -1300.0
    assert math.isnan(m.motp)
    assert m.relative_idsw == 0.0


def test_motp_components():
    gt = table([(1, 1, 0, 0, 10, 10), (2, 1, 0, 0, 10, 10)])
    hyp = results([(1, 1, 0, 0, 10, 10), (2, 1, 0, 0, 10, 4)])
    tl = match_sequence(gt, hyp, MatchConfig(iou_threshold=0.3))
    total, count = compute_motp_components(tl)
    assert (total, count) == (pytest.approx(1.4), 2)
    assert compute_clear(tl).motp == pytest.approx(70.0)


def test_zero_ground_truth():
    with pytest.raises(ZeroGroundTruth):
        compute_clear(match_sequence(table([]), results([(1, 1, 0, 0, 5, 5)])))


def test_precision_without_output():
    m = compute_clear(match_sequence(table(_line(1, [1])), results([])))
    assert m.precision == 100.0 and m.recall == 0.0


def test_mt_and_fragmentation():
    gt = _line(1, range(1, 11))
    hyp = _line(9, [1, 2, 4, 5, 6, 7, 8, 9, 10])
    tl = match_sequence(table(gt), results(hyp))
    q = compute_track_quality(table(gt), tl)
    assert (q.mt, q.pt, q.ml, q.fm) == (1, 0, 0, 1)
    assert q.relative_fm == pytest.approx(1 / 0.9)


def test_partially_and_mostly_lost():
    gt = _line(1, range(1, 11)) + _line(2, range(1, 11), y=50)
    hyp = _line(5, range(1, 6)) + _line(6, [1], y=50)
    q = compute_track_quality(table(gt), match_sequence(table(gt), results(hyp)))
    assert (q.mt, q.pt, q.ml, q.fm) == (0, 1, 1, 0)
    assert (q.mt_ratio, q.pt_ratio, q.ml_ratio) == (0.0, 0.5, 0.5)


def test_boundaries_are_exact():
    # 8 of 10 is mostly tracked, 2 of 10 is not mostly lost
    gt = _line(1, range(1, 11)) + _line(2, range(1, 11), y=50)
    hyp = _line(5, range(1, 9)) + _line(6, [1, 2], y=50)
    q = compute_track_quality(table(gt), match_sequence(table(gt), results(hyp)))
    assert (q.mt, q.pt, q.ml) == (1, 1, 0)


def test_unannotated_gap_counts_as_fragmentation():
    gt = _line(1, [1, 2, 5, 6])
    tl = match_sequence(table(gt), results(gt))
    assert compute_track_quality(table(gt), tl).fm == 1


def test_track_quality_against_scan(rng):
    for _ in range(100):
        gt, hyp = [], []
        for g in range(1, 5):
            frames = sorted(set(rng.integers(1, 25, size=rng.integers(1, 20)).tolist()))
            gt += _line(g, frames, y=40.0 * g)
            hyp += [r for r in _line(50 + g, frames, y=40.0 * g) if rng.random() < 0.6]
        tl = match_sequence(table(gt), results(hyp))
        q = compute_track_quality(table(gt), tl)
        pairs = list(zip(tl.match_frame.tolist(), tl.match_gt.tolist()))
        assert (q.mt, q.pt, q.ml, q.fm) == track_status_scan(gt, pairs)


def test_combine():
    a = TrackQualityMetrics(1, 2, 3, 4, 0.0)
    b = TrackQualityMetrics(0, 1, 0, 2, 0.0)
    c = TrackQualityMetrics.combine([a, b], recall=50.0)
    assert (c.mt, c.pt, c.ml, c.fm, c.relative_fm) == (1, 3, 3, 6, 12.0)
    assert TrackQualityMetrics.combine([], recall=0.0).relative_fm == 0.0
    assert TrackQualityMetrics.combine([b], recall=0.0).relative_fm == math.inf


# -- detection ---------------------------------------------------------------------------


def _dets(rows):
    """(frame, left, top, w, h, score) -> detection table."""
    return table([(f, -1, x, y, w, h, s, -1, -1) for f, x, y, w, h, s in rows])


def test_detection_perfect():
    gt = _line(1, range(1, 6)) + _line(2, range(1, 6), y=50)
    dets = _dets([(f, x, y, w, h, 0.9) for f, _, x, y, w, h in gt])
    m = compute_detection_metrics(table(gt), dets)
    assert (m.ap, m.moda, m.recall, m.precision, m.modp) == (1.0, 100.0, 100.0, 100.0, 100.0)


def test_detection_empty():
    m = compute_detection_metrics(table(_line(1, range(1, 6))), _dets([]))
    assert (m.ap, m.recall, m.tp, m.fp, m.fn) == (0.0, 0.0, 0, 0, 5)
    assert m.precision == 100.0 and math.isnan(m.modp)


def test_detection_counts_exact():
    gt = [r for g in range(1, 11) for r in _line(g, range(1, 6), y=30.0 * g)]
    hits = [(f, x, y, w, h, 0.9) for f, g, x, y, w, h in gt if g <= 8]
    misses = [(f, -500.0, -500.0 - 30 * k, 10, 10, 0.8) for f in range(1, 6) for k in range(2)]
    m = compute_detection_metrics(table(gt), _dets(hits + misses))
    assert (m.tp, m.fp, m.fn, m.gt) == (40, 10, 10, 50)
    assert (m.recall, m.precision, m.moda) == (80.0, 80.0, 60.0)
    assert m.far == 2.0
    # operating threshold above the misses: precision 100
    m = compute_detection_metrics(table(gt), _dets(hits + misses), operating_confidence=0.85)
    assert (m.tp, m.fp) == (40, 0)
    assert m.ap == pytest.approx((9 * 1.0 + 0 + 0) / 11)


def test_detection_skips_neutral_annotations():
    gt = table([(1, 1, 0, 0, 10, 10, 1, 1, 1.0), (1, 2, 50, 0, 10, 10, 1, 8, 1.0)])
    dets = _dets([(1, 0, 0, 10, 10, 0.5), (1, 50, 0, 10, 10, 0.5)])
    m = compute_detection_metrics(gt, dets)
    assert (m.tp, m.fp, m.gt) == (1, 0, 1)


def _sweep_reference(gt_rows, det_rows, tau=0.5):
    """Re-evaluate from scratch at every distinct score."""
    curve = []
    for s in sorted({d[5] for d in det_rows}, reverse=True):
        kept = [d for d in det_rows if d[5] >= s]
        m = compute_detection_metrics(table(gt_rows), _dets(kept))
        curve.append((m.tp, m.fp))
    return curve


def test_ap_against_full_reevaluation(rng):
    for _ in range(25):
        gt = [r for g in range(1, 5) for r in _line(g, range(1, 7), y=30.0 * g) if rng.random() < 0.8]
        dets = []
        for f, g, x, y, w, h in gt:
            if rng.random() < 0.7:
                dets.append((f, x + rng.normal(0, 2), y + rng.normal(0, 2), w, h, float(rng.integers(0, 6))))
        dets += [(int(rng.integers(1, 7)), 300 + 20 * k, 0.0, 10, 10, float(rng.integers(0, 6))) for k in range(4)]
        if not gt:
            continue
        m = compute_detection_metrics(table(gt), _dets(dets))
        assert m.ap == pytest.approx(eleven_point_reference(_sweep_reference(gt, dets), len(gt)), abs=1e-12)


def test_ap_invariant_under_monotone_score_map(rng):
    gt = [r for g in range(1, 5) for r in _line(g, range(1, 7), y=30.0 * g)]
    dets = [(f, x + rng.normal(0, 2), y, w, h, float(rng.random())) for f, g, x, y, w, h in gt if rng.random() < 0.7]
    dets += [(1, 500 + 20 * k, 0.0, 10, 10, float(rng.random())) for k in range(5)]
    a = compute_detection_metrics(table(gt), _dets(dets)).ap
    b = compute_detection_metrics(table(gt), _dets([d[:5] + (math.exp(3 * d[5]) - 7,) for d in dets])).ap
    assert a == b


@settings(max_examples=100)
@given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 20)), min_size=1, max_size=12), st.integers(1, 30))
def test_eleven_point_ap_matches_reference(steps, gt_total):
    tp = np.cumsum([a for a, _ in steps])
    fp = np.cumsum([b for _, b in steps])
    tp = np.minimum(tp, gt_total)
    ap = eleven_point_ap(tp, fp, gt_total)
    assert ap == pytest.approx(eleven_point_reference(list(zip(tp.tolist(), fp.tolist())), gt_total), abs=1e-12)
    assert 0.0 <= ap <= 1.0
