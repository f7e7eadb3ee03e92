"""Axis-aligned bounding boxes and overlap measures.

The canonical box representation is center form (cx, cy, w, h); corner
form (x1, y1, x2, y2) is provided for I/O. Overlap measures are IoU,
ground-truth coverage, prediction coverage, their convex mix (ICS), and
GIoU. Everything here is a pure function over immutable values, safe for
unrestricted parallel use.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in center form.

    Coordinates are typically normalized image units, but nothing here
    assumes a particular scale. Width and height must be finite and
    non-negative.
    """

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for name in ("cx", "cy", "w", "h"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"box field {name} must be finite")
        if self.w < 0 or self.h < 0:
            raise ValueError(f"box extent must be non-negative, got w={self.w}, h={self.h}")

    @classmethod
    def from_corners(cls, x1: float, y1: float, x2: float, y2: float) -> Box:
        """Build a box from corner form; corners must satisfy x1 <= x2, y1 <= y2."""
        if x2 < x1 or y2 < y1:
            raise ValueError(f"corners out of order: ({x1}, {y1}, {x2}, {y2})")
        return cls((x1 + x2) / 2.0, (y1 + y2) / 2.0, x2 - x1, y2 - y1)

    def corners(self) -> tuple[float, float, float, float]:
        """Return (x1, y1, x2, y2)."""
        hw = self.w / 2.0
        hh = self.h / 2.0
        return (self.cx - hw, self.cy - hh, self.cx + hw, self.cy + hh)

    def scaled(self, factor: float) -> Box:
        """Scale the box about the origin by a positive factor."""
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return Box(self.cx * factor, self.cy * factor, self.w * factor, self.h * factor)


@dataclass(frozen=True)
class OverlapReport:
    """All overlap measures for one (ground truth, prediction) pair."""

    intersection: float
    union: float
    iou: float
    gt_coverage: float
    pred_coverage: float
    ics: float
    giou: float

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


def area(b: Box) -> float:
    """Area w * h of a box."""
    return b.w * b.h


def _corner_terms(a: Box, b: Box) -> tuple[float, float, float]:
    """(area_a, area_b, intersection), all derived from corner form.

    Using corner-derived widths for every term keeps the ratios exact at
    their boundaries: identical boxes give intersection == area bit for
    bit, and the intersection never exceeds either area, so IoU and the
    coverage ratios stay inside [0, 1] under floating point.
    """
    ax1, ay1, ax2, ay2 = a.corners()
    bx1, by1, bx2, by2 = b.corners()
    area_a = (ax2 - ax1) * (ay2 - ay1)
    area_b = (bx2 - bx1) * (by2 - by1)
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    inter = iw * ih if iw > 0.0 and ih > 0.0 else 0.0
    return area_a, area_b, inter


def intersection_area(a: Box, b: Box) -> float:
    """Area of the geometric intersection, 0 if the boxes are disjoint."""
    return _corner_terms(a, b)[2]


def union_area(a: Box, b: Box) -> float:
    """Area of the union |A| + |B| - |A n B|."""
    area_a, area_b, inter = _corner_terms(a, b)
    return area_a + (area_b - inter)


def iou(g: Box, p: Box) -> float:
    """Intersection over union, in [0, 1].

    Two zero-area boxes have no meaningful ratio; that case is defined
    as 0 so downstream metrics never see NaN.
    """
    ag, ap, inter = _corner_terms(g, p)
    union = ag + (ap - inter)
    if union <= 0.0:
        return 0.0
    return inter / union


def coverage(g: Box, p: Box) -> tuple[float, float]:
    """Return (gt_coverage, pred_coverage) = (|GnP|/|G|, |GnP|/|P|).

    Raises ValueError if either box has zero area, since the ratios are
    undefined there.
    """
    ag, ap, inter = _corner_terms(g, p)
    if ag <= 0.0 or ap <= 0.0:
        raise ValueError("coverage requires both boxes to have positive area")
    return inter / ag, inter / ap


def ics(g: Box, p: Box, gt_weight: float = 0.5) -> float:
    """Convex mix of coverage terms: gt_weight * gt_cov + (1 - gt_weight) * pred_cov.

    gt_weight must lie in [0, 1]. A value of 1 scores only how much of
    the ground truth the prediction covers; 0 scores only how tight the
    prediction is.
    """
    if not 0.0 <= gt_weight <= 1.0:
        raise ValueError(f"gt_weight must be in [0, 1], got {gt_weight}")
    gt_cov, pred_cov = coverage(g, p)
    return gt_weight * gt_cov + (1.0 - gt_weight) * pred_cov


def enclosing_area(a: Box, b: Box) -> float:
    """Area of the smallest axis-aligned box containing both inputs."""
    ax1, ay1, ax2, ay2 = a.corners()
    bx1, by1, bx2, by2 = b.corners()
    return (max(ax2, bx2) - min(ax1, bx1)) * (max(ay2, by2) - min(ay1, by1))


def giou(g: Box, p: Box) -> float:
    """Generalized IoU: iou - (|C| - |A u B|) / |C| with C the enclosing box.

    Lies in (-1, 1]; equals plain IoU whenever one box contains the
    other. Requires positive areas.
    """
    ag, ap, inter = _corner_terms(g, p)
    if ag <= 0.0 or ap <= 0.0:
        raise ValueError("giou requires both boxes to have positive area")
    union = ag + (ap - inter)
    enclosing = enclosing_area(g, p)
    return inter / union - (enclosing - union) / enclosing


def overlap_report(g: Box, p: Box, gt_weight: float = 0.5) -> OverlapReport:
    """Bundle every overlap measure for one (ground truth, prediction) pair."""
    if not 0.0 <= gt_weight <= 1.0:
        raise ValueError(f"gt_weight must be in [0, 1], got {gt_weight}")
    gt_cov, pred_cov = coverage(g, p)
    inter = intersection_area(g, p)
    return OverlapReport(
        intersection=inter,
        union=union_area(g, p),
        iou=iou(g, p),
        gt_coverage=gt_cov,
        pred_coverage=pred_cov,
        ics=gt_weight * gt_cov + (1.0 - gt_weight) * pred_cov,
        giou=giou(g, p),
    )
