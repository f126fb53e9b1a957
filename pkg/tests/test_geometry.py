import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from motbench.core_types import BoundingBox
from motbench.geometry import intersection_over_first, ioa_matrix, iou, iou_matrix


def grid_areas(a: BoundingBox, b: BoundingBox, step=0.25):
    """Count cell centres of a fine grid falling inside each box and their overlap."""
    lo = min(a.left, b.left) - 1
    hi_x = max(a.right, b.right) + 1
    top = min(a.top, b.top) - 1
    hi_y = max(a.bottom, b.bottom) + 1
    xs = np.arange(lo, hi_x, step) + step / 2
    ys = np.arange(top, hi_y, step) + step / 2
    X, Y = np.meshgrid(xs, ys)
    ina = (X > a.left) & (X < a.right) & (Y > a.top) & (Y < a.bottom)
    inb = (X > b.left) & (X < b.right) & (Y > b.top) & (Y < b.bottom)
    return ina.sum(), inb.sum(), (ina & inb).sum()


def test_trivial_overlaps():
    a = BoundingBox(794.2, 47.5, 71.2, 174.8)
    assert iou(a, a) == 1.0
    assert intersection_over_first(a, a) == 1.0
    assert iou(a, BoundingBox(1, 1, 5, 5)) == 0.0
    assert intersection_over_first(BoundingBox(3, 3, 2, 2), BoundingBox(1, 1, 10, 10)) == 1.0


def test_half_shift_against_pixel_grid():
    a, b = BoundingBox(1, 1, 10, 10), BoundingBox(6, 1, 10, 10)
    na, nb, ni = grid_areas(a, b)
    assert iou(a, b) == pytest.approx(ni / (na + nb - ni)) == pytest.approx(1 / 3)
    assert intersection_over_first(a, b) == pytest.approx(ni / na) == pytest.approx(0.5)


boxes = st.builds(
    BoundingBox,
    st.integers(-20, 20).map(float),
    st.integers(-20, 20).map(float),
    st.integers(1, 15).map(float),
    st.integers(1, 15).map(float),
)


@given(boxes, boxes)
def test_pixel_grid_oracle(a, b):
    na, nb, ni = grid_areas(a, b, step=0.5)
    assert iou(a, b) == pytest.approx(ni / (na + nb - ni), abs=1e-12)
    assert intersection_over_first(a, b) == pytest.approx(ni / na, abs=1e-12)


@given(boxes, boxes, st.floats(-100, 100), st.floats(-100, 100))
def test_properties(a, b, dx, dy):
    assert iou(a, b) == pytest.approx(iou(b, a))
    assert iou(a, b) <= min(intersection_over_first(a, b), intersection_over_first(b, a)) + 1e-12
    ta = BoundingBox(a.left + dx, a.top + dy, a.width, a.height)
    tb = BoundingBox(b.left + dx, b.top + dy, b.width, b.height)
    assert iou(ta, tb) == pytest.approx(iou(a, b), abs=1e-9)
    assert 0.0 <= iou(a, b) <= 1.0


@given(st.lists(boxes, min_size=1, max_size=5), st.lists(boxes, min_size=1, max_size=5))
def test_matrices_match_scalar(xs, ys):
    m = iou_matrix([x.as_tuple() for x in xs], [y.as_tuple() for y in ys])
    r = ioa_matrix([x.as_tuple() for x in xs], [y.as_tuple() for y in ys])
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            assert m[i, j] == pytest.approx(iou(x, y), abs=1e-12)
            assert r[i, j] == pytest.approx(intersection_over_first(x, y), abs=1e-12)


def test_self_overlap_is_exact_for_decimal_boxes(rng):
    b = rng.uniform(0, 2000, (200, 4))
    b[:, 2:] += 1
    assert (np.diag(iou_matrix(b, b)) == 1.0).all()
