"""Label assignment between predictions and ground truths.

Three strategies live here: a many-to-one assignment with a per-head
schedule for the number of positives (simota_assign), minimum-cost
one-to-one matching as the baseline (hungarian_assign), and greedy
non-maximum suppression for post-processing (nms).

The many-to-one rules, in order:
  1. Candidates for a ground truth are the predictions whose centers lie
     inside it (boundary counts as inside). A ground truth with no such
     candidate falls back to all predictions, with a logged warning.
  2. Each ground truth i gets k = floor(sum of its q highest candidate
     IoUs) positives, where q = floor(n - 0.5 * (N - t)) for head t of N;
     both q and k are clamped to [1, number of candidates].
  3. The k lowest-cost candidates become positives. A prediction claimed
     by several ground truths keeps only the lowest-cost one (ties to the
     lowest ground-truth index); the losers do not backfill.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import Box, area, giou, ics, iou
from .losses import clamp_prob, l1_cost

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GtRecord:
    """A ground-truth box with its class label."""

    box: Box
    category: int = 0


@dataclass(frozen=True)
class PredRecord:
    """A predicted box with per-class probabilities."""

    box: Box
    probs: tuple[float, ...] = (1.0,)


@dataclass(frozen=True)
class CostConfig:
    """Weights of the matching cost terms.

    The cost of pairing prediction j with ground truth i is
    w_cls * (-log p_j[class_i]) + w_l1 * l1 + w_box * (1 - giou)
    + w_center * penalty, where the box term switches to 1 - ics when
    use_ics is set and the penalty applies only to predictions whose
    centers fall outside the ground truth.
    """

    lambda_cls: float = 2.0
    lambda_l1: float = 5.0
    lambda_giou: float = 2.0
    lambda_center: float = 1.0
    center_penalty: float = 1e5
    use_ics: bool = False
    ics_gt_weight: float = 0.5

    def __post_init__(self) -> None:
        for name in ("lambda_cls", "lambda_l1", "lambda_giou", "lambda_center"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if self.center_penalty < 1e4:
            raise ValueError(f"center_penalty must be >= 1e4, got {self.center_penalty}")
        if not 0.0 <= self.ics_gt_weight <= 1.0:
            raise ValueError("ics_gt_weight must be in [0, 1]")


@dataclass(frozen=True)
class SchedulerConfig:
    """Positive-count schedule across the refinement heads.

    n is the tuning knob; num_heads is the cascade depth N. Later heads
    see better boxes and are scheduled more positives. The defaults are
    n=8, N=6.
    """

    n: float = 8.0
    num_heads: int = 6

    def __post_init__(self) -> None:
        if self.n <= 0.0:
            raise ValueError(f"n must be positive, got {self.n}")
        if self.num_heads < 1:
            raise ValueError(f"num_heads must be >= 1, got {self.num_heads}")
        if self.n - 0.5 * (self.num_heads - 1) < 1.0:
            raise ValueError("schedule would drop below one candidate at the first head")


@dataclass(frozen=True)
class AssignmentResult:
    """Outcome of one (image, head) assignment.

    positives holds (prediction index, ground-truth index, cost); every
    prediction appears either there or in negatives, never both.
    k_per_gt[i] is the final number of positives of ground truth i.
    """

    positives: tuple[tuple[int, int, float], ...]
    negatives: tuple[int, ...]
    k_per_gt: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "positives": [[p, g, c] for p, g, c in self.positives],
            "negatives": list(self.negatives),
            "k_per_gt": list(self.k_per_gt),
        }


def _center_inside(p: Box, g: Box) -> bool:
    gx1, gy1, gx2, gy2 = g.corners()
    return gx1 <= p.cx <= gx2 and gy1 <= p.cy <= gy2


def cost_matrix(gts: Sequence[GtRecord], preds: Sequence[PredRecord],
                cfg: CostConfig) -> np.ndarray:
    """Pairwise matching costs, shape (len(gts), len(preds)).

    Raises ValueError on an empty prediction list or any zero-area box.
    """
    if not preds:
        raise ValueError("cost_matrix requires at least one prediction")
    for rec in list(gts) + list(preds):
        if area(rec.box) <= 0.0:
            raise ValueError("cost_matrix requires positive-area boxes")

    out = np.empty((len(gts), len(preds)), dtype=float)
    for i, gt in enumerate(gts):
        for j, pred in enumerate(preds):
            cls_cost = -math.log(clamp_prob(pred.probs[gt.category]))
            reg_l1 = l1_cost(gt.box, pred.box).value
            if cfg.use_ics:
                reg_box = 1.0 - ics(gt.box, pred.box, cfg.ics_gt_weight)
            else:
                reg_box = 1.0 - giou(gt.box, pred.box)
            center = 0.0 if _center_inside(pred.box, gt.box) else cfg.center_penalty
            out[i, j] = (cfg.lambda_cls * cls_cost
                         + cfg.lambda_l1 * reg_l1
                         + cfg.lambda_giou * reg_box
                         + cfg.lambda_center * center)
    return out


def dynamic_k(iou_row: Sequence[float], t: int, sched: SchedulerConfig) -> int:
    """Scheduled positive count for one ground truth at head t (1-based).

    k = floor(sum of the q largest IoUs) with q = floor(n - 0.5 * (N - t)),
    both clamped to [1, len(iou_row)], so every ground truth is scheduled
    at least one positive.
    """
    if len(iou_row) == 0:
        raise ValueError("dynamic_k requires a non-empty IoU row")
    if not 1 <= t <= sched.num_heads:
        raise ValueError(f"head index {t} outside [1, {sched.num_heads}]")
    for v in iou_row:
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"IoU values must lie in [0, 1], got {v}")
    q = int(math.floor(sched.n - 0.5 * (sched.num_heads - t)))
    q = min(max(q, 1), len(iou_row))
    top_q = sorted(iou_row, reverse=True)[:q]
    k = int(math.floor(sum(top_q)))
    return min(max(k, 1), len(iou_row))


def simota_assign(gts: Sequence[GtRecord], preds: Sequence[PredRecord], t: int,
                  cfg: CostConfig, sched: SchedulerConfig) -> AssignmentResult:
    """Many-to-one assignment for head t; see the module docstring for rules."""
    if not gts:
        return AssignmentResult((), tuple(range(len(preds))), ())
    if not preds:
        return AssignmentResult((), (), (0,) * len(gts))

    cost = cost_matrix(gts, preds, cfg)
    ious = np.array([[iou(gt.box, pred.box) for pred in preds] for gt in gts])

    claims: dict[int, list[tuple[float, int]]] = {}  # pred -> [(cost, gt)]
    for i, gt in enumerate(gts):
        eligible = [j for j, pred in enumerate(preds) if _center_inside(pred.box, gt.box)]
        if not eligible:
            logger.warning("ground truth %d has no center-inside candidate; "
                           "falling back to all predictions", i)
            eligible = list(range(len(preds)))
        k = dynamic_k([float(ious[i, j]) for j in eligible], t, sched)
        chosen = sorted(eligible, key=lambda j: (cost[i, j], j))[:k]
        for j in chosen:
            claims.setdefault(j, []).append((float(cost[i, j]), i))

    positives = []
    for j in sorted(claims):
        best_cost, best_gt = min(claims[j])
        positives.append((j, best_gt, best_cost))

    k_per_gt = [0] * len(gts)
    for _, gt_idx, _ in positives:
        k_per_gt[gt_idx] += 1
    positive_preds = {j for j, _, _ in positives}
    negatives = tuple(j for j in range(len(preds)) if j not in positive_preds)
    return AssignmentResult(tuple(positives), negatives, tuple(k_per_gt))


def hungarian_assign(cost: np.ndarray | Sequence[Sequence[float]]) -> list[tuple[int, int]]:
    """Minimum-total-cost one-to-one matching of min(rows, cols) pairs.

    Raises ValueError on non-finite entries.
    """
    c = np.asarray(cost, dtype=float)
    if c.ndim != 2 or c.size == 0:
        raise ValueError("cost matrix must be 2-D and non-empty")
    if not np.isfinite(c).all():
        raise ValueError("cost matrix entries must be finite")
    rows, cols = linear_sum_assignment(c)
    return [(int(r), int(col)) for r, col in zip(rows, cols)]


def nms(dets: Sequence[tuple[Box, float]], iou_threshold: float) -> list[tuple[Box, float]]:
    """Greedy non-maximum suppression.

    Boxes are visited in descending score order (stable for ties); a box
    is dropped iff its IoU with an already kept box exceeds the
    threshold. The output keeps that descending-score order.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    order = sorted(range(len(dets)), key=lambda idx: -dets[idx][1])
    kept: list[tuple[Box, float]] = []
    for idx in order:
        box, score = dets[idx]
        if all(iou(box, kb) <= iou_threshold for kb, _ in kept):
            kept.append((box, score))
    return kept
