"""Differentiable box losses and classification losses.

Box losses return both the scalar value and the analytic gradient with
respect to the prediction's center-form parameters (cx, cy, w, h). The
overlap terms are piecewise linear in the box edges; where two edges
coincide, the gradient takes the one-sided derivative from the
overlapping side. That choice only matters on a measure-zero set and is
excluded from finite-difference verification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

from .geometry import Box, area

if TYPE_CHECKING:
    from .assignment import AssignmentResult, GtRecord, PredRecord

PROB_EPS = 1e-7

Grad = tuple[float, float, float, float]


@dataclass(frozen=True)
class LossValue:
    """Scalar loss plus d(loss)/d(cx, cy, w, h) of the prediction box."""

    value: float
    grad: Grad


@dataclass(frozen=True)
class ClassProb:
    """Per-class probabilities with the index of the true class.

    Probabilities are clamped away from {0, 1} by PROB_EPS before any
    logarithm, so every classification loss stays finite.
    """

    probs: tuple[float, ...]
    target: int

    def __post_init__(self) -> None:
        if not 0 <= self.target < len(self.probs):
            raise ValueError(f"target index {self.target} out of range for {len(self.probs)} classes")

    def target_prob(self) -> float:
        return clamp_prob(self.probs[self.target])


def clamp_prob(p: float) -> float:
    return min(max(p, PROB_EPS), 1.0 - PROB_EPS)


def _overlap_terms(g: Box, p: Box):
    """Areas of both boxes, their intersection, and the enclosing box,
    with gradients for the prediction-dependent terms.

    Returns (ag, inter, d_inter, ap, d_ap, enclosing, d_enclosing); each
    gradient is with respect to the prediction's (cx, cy, w, h). All
    widths derive from corner form so the ratios built on top stay
    exactly inside their bounds (see geometry._corner_terms).
    """
    gx1, gy1, gx2, gy2 = g.corners()
    px1, py1, px2, py2 = p.corners()

    ag = (gx2 - gx1) * (gy2 - gy1)

    iw = min(px2, gx2) - max(px1, gx1)
    ih = min(py2, gy2) - max(py1, gy1)
    overlapping = iw > 0.0 and ih > 0.0
    inter = iw * ih if overlapping else 0.0

    # Corner derivatives of the intersection; a prediction edge contributes
    # only while it is the binding edge of the max/min.
    if overlapping:
        d_px1 = -ih if px1 >= gx1 else 0.0
        d_px2 = ih if px2 <= gx2 else 0.0
        d_py1 = -iw if py1 >= gy1 else 0.0
        d_py2 = iw if py2 <= gy2 else 0.0
    else:
        d_px1 = d_px2 = d_py1 = d_py2 = 0.0
    # Chain rule into center form: px1 = cx - w/2, px2 = cx + w/2, etc.
    d_inter = (
        d_px1 + d_px2,
        d_py1 + d_py2,
        0.5 * (d_px2 - d_px1),
        0.5 * (d_py2 - d_py1),
    )

    pw = px2 - px1
    ph = py2 - py1
    ap = pw * ph
    d_ap = (0.0, 0.0, ph, pw)

    cw = max(px2, gx2) - min(px1, gx1)
    ch = max(py2, gy2) - min(py1, gy1)
    enclosing = cw * ch
    e_px1 = -ch if px1 <= gx1 else 0.0
    e_px2 = ch if px2 >= gx2 else 0.0
    e_py1 = -cw if py1 <= gy1 else 0.0
    e_py2 = cw if py2 >= gy2 else 0.0
    d_enclosing = (
        e_px1 + e_px2,
        e_py1 + e_py2,
        0.5 * (e_px2 - e_px1),
        0.5 * (e_py2 - e_py1),
    )

    return ag, inter, d_inter, ap, d_ap, enclosing, d_enclosing


def _require_positive_areas(g: Box, p: Box) -> None:
    if area(g) <= 0.0 or area(p) <= 0.0:
        raise ValueError("box losses require both boxes to have positive area")


def iou_loss(g: Box, p: Box) -> LossValue:
    """1 - IoU. The gradient vanishes when the boxes are disjoint."""
    _require_positive_areas(g, p)
    ag, inter, d_inter, ap, d_ap, _, _ = _overlap_terms(g, p)
    union = ag + (ap - inter)
    grad = []
    for k in range(4):
        d_union = d_ap[k] - d_inter[k]
        d_iou = (d_inter[k] * union - inter * d_union) / (union * union)
        grad.append(-d_iou)
    return LossValue(1.0 - inter / union, tuple(grad))


def ics_loss(g: Box, p: Box, gt_weight: float = 0.5) -> LossValue:
    """1 - ICS, the coverage-mix counterpart of the IoU loss.

    Like the IoU loss, the intersection term has zero gradient for
    disjoint boxes; that plateau is reported honestly rather than
    patched.
    """
    if not 0.0 <= gt_weight <= 1.0:
        raise ValueError(f"gt_weight must be in [0, 1], got {gt_weight}")
    _require_positive_areas(g, p)
    ag, inter, d_inter, ap, d_ap, _, _ = _overlap_terms(g, p)
    value = 1.0 - (gt_weight * (inter / ag) + (1.0 - gt_weight) * (inter / ap))
    grad = []
    for k in range(4):
        d_gtc = d_inter[k] / ag
        d_pc = (d_inter[k] * ap - inter * d_ap[k]) / (ap * ap)
        grad.append(-(gt_weight * d_gtc + (1.0 - gt_weight) * d_pc))
    return LossValue(value, tuple(grad))


def giou_loss(g: Box, p: Box) -> LossValue:
    """1 - GIoU, in [0, 2]. Keeps a useful gradient for disjoint boxes."""
    _require_positive_areas(g, p)
    ag, inter, d_inter, ap, d_ap, enclosing, d_enc = _overlap_terms(g, p)
    union = ag + (ap - inter)
    value = 1.0 - (inter / union - (enclosing - union) / enclosing)
    grad = []
    for k in range(4):
        d_union = d_ap[k] - d_inter[k]
        d_iou = (d_inter[k] * union - inter * d_union) / (union * union)
        # d of (C - U)/C = (U * dC - C * dU) / C^2, negated into giou
        d_giou = d_iou + (d_union * enclosing - union * d_enc[k]) / (enclosing * enclosing)
        grad.append(-d_giou)
    return LossValue(value, tuple(grad))


def l1_cost(g: Box, p: Box) -> LossValue:
    """Sum of |g_i - p_i| over the center-form parameters.

    The gradient is the sign pattern, with 0 at exact ties (subgradient
    choice).
    """
    gp = (g.cx, g.cy, g.w, g.h)
    pp = (p.cx, p.cy, p.w, p.h)
    value = sum(abs(a - b) for a, b in zip(gp, pp))
    grad = tuple(0.0 if b == a else (1.0 if b > a else -1.0) for a, b in zip(gp, pp))
    return LossValue(value, grad)


def cross_entropy(cp: ClassProb) -> float:
    """-log p of the target class, after clamping."""
    return -math.log(cp.target_prob())


def focal_loss(cp: ClassProb, alpha: float = 0.25, gamma: float = 2.0) -> float:
    """-alpha * (1 - p)^gamma * log(p) for the target class.

    With gamma = 0 and alpha = 1 this degenerates to plain cross
    entropy.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    if gamma < 0.0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    p = cp.target_prob()
    return -alpha * (1.0 - p) ** gamma * math.log(p)


def _cls_term(probs: Sequence[float], target: int | None, kind: str,
              alpha: float, gamma: float) -> float:
    """Per-prediction classification loss under sigmoid semantics.

    Each class probability is treated as an independent foreground
    probability. A positive prediction is pushed toward 1 on its target
    class and toward 0 on the rest; a negative (target None) is pushed
    toward 0 everywhere.
    """
    total = 0.0
    for idx, raw in enumerate(probs):
        p = clamp_prob(raw)
        if target is not None and idx == target:
            if kind == "focal":
                total += -alpha * (1.0 - p) ** gamma * math.log(p)
            else:
                total += -math.log(p)
        else:
            if kind == "focal":
                total += -(1.0 - alpha) * p ** gamma * math.log(1.0 - p)
            else:
                total += -math.log(1.0 - p)
    return total


def head_loss(
    gts: Sequence["GtRecord"],
    preds: Sequence["PredRecord"],
    assignment: "AssignmentResult",
    weights: tuple[float, float, float] = (2.0, 5.0, 2.0),
    use_ics: bool = False,
    gt_weight: float = 0.5,
    cls_loss: str = "ce",
    focal_alpha: float = 0.25,
    focal_gamma: float = 2.0,
) -> float:
    """Weighted loss of one refinement head given its label assignment.

    weights are (w_cls, w_l1, w_box). Regression terms are averaged over
    the positive pairs; the classification term sums over all predictions
    and divides by the number of positives (at least 1, so an assignment
    with no positives still penalizes confident false alarms). When
    use_ics is set, the GIoU regression term is replaced by the ICS loss
    with the given gt_weight. cls_loss selects "ce" or "focal".
    """
    if cls_loss not in ("ce", "focal"):
        raise ValueError(f"cls_loss must be 'ce' or 'focal', got {cls_loss}")
    w_cls, w_l1, w_box = weights
    positives = assignment.positives
    n_pos = max(1, len(positives))

    target_of = {pred_idx: gt_idx for pred_idx, gt_idx, _ in positives}

    cls_total = 0.0
    for j, pred in enumerate(preds):
        gt_idx = target_of.get(j)
        target = gts[gt_idx].category if gt_idx is not None else None
        cls_total += _cls_term(pred.probs, target, cls_loss, focal_alpha, focal_gamma)

    l1_total = 0.0
    box_total = 0.0
    for pred_idx, gt_idx, _ in positives:
        gbox = gts[gt_idx].box
        pbox = preds[pred_idx].box
        l1_total += l1_cost(gbox, pbox).value
        if use_ics:
            box_total += ics_loss(gbox, pbox, gt_weight).value
        else:
            box_total += giou_loss(gbox, pbox).value

    return (w_cls * cls_total + w_l1 * l1_total + w_box * box_total) / n_pos


def total_loss(head_losses: Sequence[float]) -> float:
    """Sum of per-head losses over the refinement cascade."""
    return float(sum(head_losses))
