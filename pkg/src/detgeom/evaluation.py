"""Dataset-level detection evaluation.

Detections are matched one-to-one to ground truths per image with a
greedy, score-ordered protocol, under either an IoU threshold or a
ground-truth-coverage threshold. Counts are micro-aggregated across
images, and the headline number is the threshold-weighted average of the
per-threshold F1 scores.

Precision, recall, and F1 are reported on the 0-100 scale.

Matching is deterministic and independent of input record order: ground
truths are ordered by box corners then category, detections by score
descending, best overlap descending, then corners; per-detection ties on
overlap go to the lowest ground-truth index.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Hashable, Sequence

from .geometry import Box, area, intersection_area, iou

METRIC_IOU = "iou"
METRIC_GTC = "gtc"

DEFAULT_THRESHOLDS = (0.6, 0.7, 0.8, 0.9)
DEFAULT_SCORE_FLOOR = 0.05


class EmptyGroundTruthError(ValueError):
    """Raised when evaluating against an empty ground-truth set."""


@dataclass(frozen=True)
class GroundTruth:
    image_id: Hashable
    box: Box
    category: Hashable = 0

    def __post_init__(self) -> None:
        if area(self.box) <= 0.0:
            raise ValueError("ground-truth boxes must have positive area")


@dataclass(frozen=True)
class Detection:
    image_id: Hashable
    box: Box
    category: Hashable = 0
    score: float = 1.0

    def __post_init__(self) -> None:
        if area(self.box) <= 0.0:
            raise ValueError("detection boxes must have positive area")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {self.score}")


@dataclass(frozen=True)
class ThresholdMetrics:
    threshold: float
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    per_threshold: tuple[ThresholdMetrics, ...]
    weighted_avg_f1: float
    metric_kind: str
    thresholds: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "metric_kind": self.metric_kind,
            "thresholds": list(self.thresholds),
            "per_threshold": [
                {
                    "threshold": m.threshold,
                    "tp": m.tp,
                    "fp": m.fp,
                    "fn": m.fn,
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                }
                for m in self.per_threshold
            ],
            "weighted_avg_f1": self.weighted_avg_f1,
        }


def overlap_measure(g: Box, p: Box, metric_kind: str) -> float:
    """IoU or ground-truth coverage of the pair, per metric_kind."""
    if metric_kind == METRIC_IOU:
        return iou(g, p)
    if metric_kind == METRIC_GTC:
        ag = area(g)
        if ag <= 0.0:
            raise ValueError("ground-truth coverage requires positive ground-truth area")
        return intersection_area(g, p) / ag
    raise ValueError(f"unknown metric kind: {metric_kind!r}")


def _box_key(box: Box) -> tuple[float, float, float, float]:
    return box.corners()


def match_image(gts: Sequence[GroundTruth], dets: Sequence[Detection],
                threshold: float, metric_kind: str = METRIC_IOU,
                ) -> tuple[int, int, int, list[tuple[int, int, float]]]:
    """Greedy one-to-one matching within a single image.

    Detections are visited in descending score order; each one matches
    the unmatched ground truth with the highest overlap measure, if that
    measure reaches the threshold. Returns (tp, fp, fn, pairs) where
    pairs holds (gt index, det index, measure) into the input sequences.
    Records must all carry the same image_id; category filtering, if
    any, happens upstream.
    """
    ids = {r.image_id for r in list(gts) + list(dets)}
    if len(ids) > 1:
        raise ValueError(f"match_image got records from multiple images: {sorted(map(str, ids))}")

    measures = [[overlap_measure(gt.box, det.box, metric_kind) for gt in gts] for det in dets]
    best_static = [max(row, default=0.0) for row in measures]
    det_order = sorted(
        range(len(dets)),
        key=lambda j: (-dets[j].score, -best_static[j], _box_key(dets[j].box), str(dets[j].category)),
    )

    matched_gt: set[int] = set()
    pairs: list[tuple[int, int, float]] = []
    for j in det_order:
        best_i, best_m = -1, -1.0
        for i in range(len(gts)):
            if i in matched_gt:
                continue
            m = measures[j][i]
            if m > best_m:
                best_i, best_m = i, m
        if best_i >= 0 and best_m >= threshold:
            matched_gt.add(best_i)
            pairs.append((best_i, j, best_m))

    tp = len(pairs)
    fp = len(dets) - tp
    fn = len(gts) - tp
    return tp, fp, fn, pairs


def weighted_f1(f1s: Sequence[float], thresholds: Sequence[float]) -> float:
    """Threshold-weighted average of F1 scores: sum(t_i * f1_i) / sum(t_i)."""
    if len(f1s) != len(thresholds):
        raise ValueError(f"length mismatch: {len(f1s)} F1 values vs {len(thresholds)} thresholds")
    if not f1s:
        raise ValueError("weighted_f1 requires at least one value")
    total_w = float(sum(thresholds))
    if total_w <= 0.0:
        raise ValueError("threshold weights must sum to a positive value")
    return sum(t * f for t, f in zip(thresholds, f1s)) / total_w


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = 100.0 * tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = 100.0 * tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def _sorted_group(gts: list[GroundTruth], dets: list[Detection], metric_kind: str,
                  nms_threshold: float | None) -> tuple[list[GroundTruth], list[Detection]]:
    gts = sorted(gts, key=lambda g: (_box_key(g.box), str(g.category)))
    static = {id(d): max((overlap_measure(g.box, d.box, metric_kind) for g in gts), default=0.0)
              for d in dets}
    dets = sorted(dets, key=lambda d: (-d.score, -static[id(d)], _box_key(d.box), str(d.category)))
    if nms_threshold is not None:
        # Same greedy rule as assignment.nms; dets are already in
        # descending-score order, so suppression is a single pass.
        kept: list[Detection] = []
        for d in dets:
            if all(iou(d.box, k.box) <= nms_threshold for k in kept):
                kept.append(d)
        dets = kept
    return gts, dets


def evaluate(gts: Sequence[GroundTruth], dets: Sequence[Detection],
             thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
             metric_kind: str = METRIC_IOU,
             nms_threshold: float | None = None,
             score_floor: float = DEFAULT_SCORE_FLOOR,
             allow_empty: bool = False,
             ignore_category: bool = False,
             max_workers: int = 1) -> EvalReport:
    """Evaluate detections against ground truths over a threshold sweep.

    Detections scoring below score_floor are discarded up front; NMS is
    then applied per image (and per category unless ignore_category)
    when nms_threshold is given. Counts are summed over images at each
    threshold before computing precision/recall/F1, and the same fixed
    detection set is used at every threshold.

    Raises EmptyGroundTruthError when gts is empty, unless allow_empty.
    """
    thresholds = tuple(float(t) for t in thresholds)
    if not thresholds:
        raise ValueError("at least one threshold is required")
    for t in thresholds:
        if not 0.0 < t <= 1.0:
            raise ValueError(f"thresholds must lie in (0, 1], got {t}")
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be strictly increasing")
    if metric_kind not in (METRIC_IOU, METRIC_GTC):
        raise ValueError(f"unknown metric kind: {metric_kind!r}")
    if nms_threshold is not None and not 0.0 < nms_threshold <= 1.0:
        raise ValueError(f"nms_threshold must lie in (0, 1], got {nms_threshold}")
    if not gts and not allow_empty:
        raise EmptyGroundTruthError("no ground truths; recall is undefined "
                                    "(pass allow_empty to force a report)")

    dets = [d for d in dets if d.score >= score_floor]

    def group_key(rec) -> tuple:
        if ignore_category:
            return (rec.image_id,)
        return (rec.image_id, rec.category)

    groups: dict[tuple, tuple[list[GroundTruth], list[Detection]]] = {}
    for g in gts:
        groups.setdefault(group_key(g), ([], []))[0].append(g)
    for d in dets:
        groups.setdefault(group_key(d), ([], []))[1].append(d)

    prepared = [_sorted_group(g_list, d_list, metric_kind, nms_threshold)
                for g_list, d_list in groups.values()]

    def count_group(pair) -> list[tuple[int, int, int]]:
        g_list, d_list = pair
        return [match_image(g_list, d_list, t, metric_kind)[:3] for t in thresholds]

    if max_workers > 1 and len(prepared) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            per_group = list(pool.map(count_group, prepared))
    else:
        per_group = [count_group(p) for p in prepared]

    rows = []
    f1s = []
    for ti, t in enumerate(thresholds):
        tp = sum(counts[ti][0] for counts in per_group)
        fp = sum(counts[ti][1] for counts in per_group)
        fn = sum(counts[ti][2] for counts in per_group)
        precision, recall, f1 = _prf(tp, fp, fn)
        rows.append(ThresholdMetrics(t, tp, fp, fn, precision, recall, f1))
        f1s.append(f1)

    return EvalReport(
        per_threshold=tuple(rows),
        weighted_avg_f1=weighted_f1(f1s, thresholds),
        metric_kind=metric_kind,
        thresholds=thresholds,
    )
