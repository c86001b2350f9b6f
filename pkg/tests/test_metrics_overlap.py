from fractions import Fraction

import numpy as np
import pytest

from posterforge.metrics import Rect, overlap


def pixel_oracle(rects):
    """Count-the-pixels overlap for integer rects: independent of the
    rational-arithmetic path."""
    live = [(l, t, w, h) for (l, t, w, h) in rects if w > 0 and h > 0]
    total = 0.0
    for i, (li, ti, wi, hi) in enumerate(live):
        area_i = wi * hi
        for j, (lj, tj, wj, hj) in enumerate(live):
            if i == j:
                continue
            grid_w = max(li + wi, lj + wj)
            grid_h = max(ti + ti, tj + hj)
            a = np.zeros((max(ti + hi, tj + hj), max(li + wi, lj + wj)), dtype=bool)
            a[ti:ti + hi, li:li + wi] = True
            b = np.zeros_like(a)
            b[tj:tj + hj, lj:lj + wj] = True
            total += float((a & b).sum()) / area_i
    return total


def test_two_disjoint_boxes():
    assert overlap([(0, 0, 10, 10), (20, 20, 5, 5)]).value == 0.0


def test_worked_example_half():
    # Two 10x10 boxes, corners (0,0) and (5,5): intersection 25, each area
    # 100, so 25/100 + 25/100 = 0.5 exactly.
    rects = [(0, 0, 10, 10), (5, 5, 10, 10)]
    report = overlap(rects)
    assert report.value == 0.5
    assert report.value == pytest.approx(pixel_oracle(rects), abs=1e-12)
    assert report.per_element == (0.25, 0.25)


def test_single_element_is_zero():
    assert overlap([(3, 3, 7, 7)]).value == 0.0


def test_zero_area_elements_skipped():
    report = overlap([(0, 0, 10, 10), (0, 0, 0, 5), (2, 2, 4, 0)])
    assert report.value == 0.0
    assert report.per_element == (0.0, 0.0, 0.0)


def test_value_equals_per_element_sum(rng):
    for _ in range(50):
        rects = [(rng.randint(0, 64), rng.randint(0, 64), rng.randint(0, 16), rng.randint(0, 16))
                 for _ in range(rng.randint(1, 8))]
        report = overlap(rects)
        assert report.value == pytest.approx(sum(report.per_element), abs=1e-12)


def test_translation_and_scale_invariance(rng):
    for _ in range(25):
        rects = [(rng.randint(0, 40), rng.randint(0, 40), rng.randint(1, 12), rng.randint(1, 12))
                 for _ in range(rng.randint(2, 6))]
        base = overlap(rects).value
        shifted = overlap([(l + 17, t + 5, w, h) for l, t, w, h in rects]).value
        scaled = overlap([Rect.of(Fraction(l, 2), Fraction(t, 2), Fraction(w, 2), Fraction(h, 2))
                          for l, t, w, h in rects]).value
        assert shifted == pytest.approx(base, abs=1e-12)
        assert scaled == pytest.approx(base, abs=1e-12)


def test_matches_pixel_oracle_random(rng):
    for _ in range(60):
        rects = [(rng.randint(0, 128), rng.randint(0, 128), rng.randint(0, 24), rng.randint(0, 24))
                 for _ in range(rng.randint(2, 10))]
        assert overlap(rects).value == pytest.approx(pixel_oracle(rects), abs=1e-9)
