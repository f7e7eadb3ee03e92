"""Geometry: box conversions and overlap measures."""

import numpy as np
import pytest

from detgeom import (
    Box,
    area,
    coverage,
    giou,
    ics,
    intersection_area,
    iou,
    overlap_report,
)
from conftest import COVERING_PRED, UNIT_GT
from oracles import (
    pixel_count_intersection,
    random_box,
    sample_overlapping_pair,
    sample_pixel_oracle_pair,
)

G_HALF = Box.from_corners(0.0, 0.0, 2.0, 2.0)
P_HALF = Box.from_corners(1.0, 0.0, 3.0, 2.0)  # overlaps the right half of G_HALF


class TestBox:
    def test_corner_round_trip(self):
        rng = np.random.default_rng(11)
        for _ in range(500):
            b = random_box(rng)
            back = Box.from_corners(*b.corners())
            for orig, rt in zip((b.cx, b.cy, b.w, b.h), (back.cx, back.cy, back.w, back.h)):
                assert rt == pytest.approx(orig, abs=1e-12)

    def test_negative_extent_rejected(self):
        with pytest.raises(ValueError):
            Box(0.5, 0.5, -0.1, 1.0)
        with pytest.raises(ValueError):
            Box.from_corners(1.0, 0.0, 0.0, 1.0)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            Box(float("nan"), 0.5, 1.0, 1.0)
        with pytest.raises(ValueError):
            Box(0.5, 0.5, float("inf"), 1.0)

    def test_area(self):
        assert area(Box(0.5, 0.5, 1.0, 1.0)) == 1.0
        assert area(Box(0.0, 0.0, 0.0, 3.0)) == 0.0
        assert area(Box(1.0, 1.0, 2.0, 0.5)) == 1.0


class TestIntersection:
    def test_self_intersection(self):
        b = Box(0.5, 0.5, 1.0, 1.0)
        assert intersection_area(b, b) == 1.0

    def test_disjoint(self):
        a = Box.from_corners(0.0, 0.0, 1.0, 1.0)
        b = Box.from_corners(2.0, 2.0, 3.0, 3.0)
        assert intersection_area(a, b) == 0.0

    def test_half_overlap(self):
        assert intersection_area(G_HALF, P_HALF) == pytest.approx(2.0)
        oracle = pixel_count_intersection(G_HALF, P_HALF, lo=0.0, hi=3.0)
        assert intersection_area(G_HALF, P_HALF) == pytest.approx(oracle, rel=0.01)

    def test_pixel_counting_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            a, b = sample_pixel_oracle_pair(rng)
            exact = intersection_area(a, b)
            counted = pixel_count_intersection(a, b)
            assert exact == pytest.approx(counted, rel=0.01)


class TestIoU:
    def test_identical(self):
        b = Box(0.3, 0.7, 0.25, 0.4)
        assert iou(b, b) == 1.0

    def test_half_overlap(self):
        assert iou(G_HALF, P_HALF) == pytest.approx(1.0 / 3.0)

    def test_enlarged_covering_box(self):
        # 1 / 1.14^2 for a box padded by 0.07 on every side of the unit square
        assert iou(UNIT_GT, COVERING_PRED) == pytest.approx(1.0 / 1.14**2, abs=1e-12)
        assert iou(UNIT_GT, COVERING_PRED) == pytest.approx(0.7695, abs=0.0005)

    def test_both_degenerate_is_zero(self):
        z = Box(0.5, 0.5, 0.0, 0.0)
        assert iou(z, z) == 0.0


class TestCoverage:
    def test_identical(self):
        b = Box(0.3, 0.7, 0.25, 0.4)
        assert coverage(b, b) == (1.0, 1.0)

    def test_half_overlap(self):
        assert coverage(G_HALF, P_HALF) == (0.5, 0.5)

    def test_covering_box(self):
        gt_cov, pred_cov = coverage(UNIT_GT, COVERING_PRED)
        assert gt_cov == 1.0
        assert pred_cov == pytest.approx(0.7695, abs=0.0005)

    def test_zero_area_errors(self):
        z = Box(0.5, 0.5, 0.0, 1.0)
        ok = Box(0.5, 0.5, 1.0, 1.0)
        with pytest.raises(ValueError):
            coverage(z, ok)
        with pytest.raises(ValueError):
            coverage(ok, z)

    def test_containment_iff_full_coverage(self):
        outer = Box(0.5, 0.5, 0.6, 0.6)
        inner = Box(0.5, 0.5, 0.2, 0.3)
        shifted = Box(0.75, 0.5, 0.2, 0.3)  # pokes out of outer on the right
        # ground truth contained in the prediction: gt coverage exactly 1
        gt_cov, pred_cov = coverage(inner, outer)
        assert gt_cov == 1.0
        assert pred_cov == pytest.approx(area(inner) / area(outer))
        # prediction contained in the ground truth: pred coverage exactly 1
        assert coverage(outer, inner)[1] == 1.0
        # no containment in either direction: both strictly below 1
        assert coverage(shifted, outer)[0] < 1.0
        assert coverage(outer, shifted)[1] < 1.0


class TestIcs:
    def test_identical_any_weight(self):
        b = Box(0.4, 0.4, 0.5, 0.5)
        for lam in (0.0, 0.25, 0.5, 1.0):
            assert ics(b, b, lam) == pytest.approx(1.0, abs=1e-15)

    def test_half_overlap(self):
        assert ics(G_HALF, P_HALF, 0.5) == pytest.approx(0.5)

    def test_disjoint(self):
        a = Box.from_corners(0.0, 0.0, 1.0, 1.0)
        b = Box.from_corners(2.0, 2.0, 3.0, 3.0)
        assert ics(a, b, 0.5) == 0.0

    def test_weight_out_of_range(self):
        b = Box(0.5, 0.5, 1.0, 1.0)
        with pytest.raises(ValueError):
            ics(b, b, -0.1)
        with pytest.raises(ValueError):
            ics(b, b, 1.1)

    def test_swap_symmetry(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            g, p = sample_overlapping_pair(rng)
            lam = rng.uniform(0.0, 1.0)
            assert ics(g, p, lam) == pytest.approx(ics(p, g, 1.0 - lam), abs=1e-12)

    def test_dominance(self):
        rng = np.random.default_rng(8)
        for _ in range(300):
            g, p = sample_overlapping_pair(rng)
            lam = rng.uniform(0.0, 1.0)
            gt_cov, pred_cov = coverage(g, p)
            j = iou(g, p)
            assert j <= min(gt_cov, pred_cov) + 1e-15
            assert ics(g, p, lam) >= j - 1e-15


class TestGiou:
    def test_identical(self):
        b = Box(0.3, 0.7, 0.25, 0.4)
        assert giou(b, b) == 1.0

    def test_disjoint_penalty(self):
        g = Box.from_corners(0.0, 0.0, 1.0, 1.0)
        p = Box.from_corners(2.0, 0.0, 3.0, 1.0)
        assert giou(g, p) == pytest.approx(-1.0 / 3.0)

    def test_nested_equals_iou(self):
        g = Box(0.5, 0.5, 0.8, 0.8)
        p = Box(0.5, 0.45, 0.3, 0.2)
        assert giou(g, p) == iou(g, p)

    def test_bounds_and_ordering(self):
        rng = np.random.default_rng(9)
        for _ in range(300):
            g = random_box(rng)
            p = random_box(rng)
            v = giou(g, p)
            assert -1.0 < v <= 1.0
            assert v <= iou(g, p) + 1e-15

    def test_zero_area_errors(self):
        with pytest.raises(ValueError):
            giou(Box(0.5, 0.5, 0.0, 1.0), Box(0.5, 0.5, 1.0, 1.0))


class TestOverlapReport:
    def test_identical(self):
        b = Box(0.5, 0.5, 1.0, 1.0)
        r = overlap_report(b, b, 0.5)
        assert (r.iou, r.gt_coverage, r.pred_coverage, r.ics, r.giou) == (1.0,) * 5

    def test_half_overlap(self):
        r = overlap_report(G_HALF, P_HALF, 0.5)
        assert r.intersection == pytest.approx(2.0)
        assert r.union == pytest.approx(6.0)
        assert r.iou == pytest.approx(1.0 / 3.0)
        assert (r.gt_coverage, r.pred_coverage) == (0.5, 0.5)
        assert r.ics == pytest.approx(0.5)

    def test_reciprocal_identity(self):
        # 1/IoU = 1/GT_cov + 1/Pred_cov - 1 whenever the boxes intersect
        rng = np.random.default_rng(10)
        for _ in range(10_000):
            g, p = sample_overlapping_pair(rng)
            r = overlap_report(g, p, 0.5)
            lhs = 1.0 / r.iou
            rhs = 1.0 / r.gt_coverage + 1.0 / r.pred_coverage - 1.0
            assert abs(lhs - rhs) <= 1e-9

    def test_mix_definition(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            g, p = sample_overlapping_pair(rng)
            lam = rng.uniform(0.0, 1.0)
            r = overlap_report(g, p, lam)
            assert r.ics == pytest.approx(lam * r.gt_coverage + (1 - lam) * r.pred_coverage,
                                          abs=1e-15)


def test_scale_invariance():
    rng = np.random.default_rng(13)
    for _ in range(200):
        g, p = sample_overlapping_pair(rng)
        s = rng.uniform(0.1, 50.0)
        gs, ps = g.scaled(s), p.scaled(s)
        assert iou(gs, ps) == pytest.approx(iou(g, p), abs=1e-9)
        assert giou(gs, ps) == pytest.approx(giou(g, p), abs=1e-9)
        assert coverage(gs, ps) == pytest.approx(coverage(g, p), abs=1e-9)
        assert ics(gs, ps, 0.3) == pytest.approx(ics(g, p, 0.3), abs=1e-9)
