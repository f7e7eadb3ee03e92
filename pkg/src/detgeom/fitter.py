"""Gradient-descent box fitting.

Optimizes a prediction box toward a fixed target under a chosen loss,
recording the loss and overlap measures at every step. This is a small
harness for comparing how different losses move a box, not an optimizer
benchmark.

The update is steepest descent with backtracking: each step starts from
the configured learning rate and halves it until the loss decreases
(Armijo condition). Plain fixed-step descent cannot settle at these
losses' optima, where the gradient magnitude stays bounded away from
zero, so backtracking is what makes the traces converge instead of
orbiting. Everything is deterministic: the same config always produces
the same trace.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .geometry import Box, coverage, intersection_area, iou
from .losses import LossValue, giou_loss, ics_loss, iou_loss, l1_cost

logger = logging.getLogger(__name__)

LOSS_KINDS = ("iou", "giou", "ics", "l1")

MIN_EXTENT = 1e-4

# Sufficient-decrease constant and halving budget for the backtracking
# line search; 60 halvings take the step below double-precision noise.
ARMIJO_C = 1e-4
MAX_BACKTRACKS = 60

TRACE_FIELDS = ("step", "cx", "cy", "w", "h", "loss", "iou", "gt_coverage", "pred_coverage")


class FitDivergedError(RuntimeError):
    """Raised when the loss turns non-finite; carries the trace so far."""

    def __init__(self, message: str, trace: "FitTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class FitConfig:
    loss_kind: str
    init_box: Box
    target_box: Box
    gt_weight: float = 0.5
    steps: int = 500
    learning_rate: float = 0.05
    seed: int = 0  # reserved for config-file compatibility; fitting is deterministic

    def __post_init__(self) -> None:
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"loss_kind must be one of {LOSS_KINDS}, got {self.loss_kind!r}")
        if self.target_box.w * self.target_box.h <= 0.0:
            raise ValueError("target box must have positive area")
        if self.init_box.w * self.init_box.h <= 0.0:
            raise ValueError("initial box must have positive area")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError(f"learning_rate must lie in (0, 1], got {self.learning_rate}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if not 0.0 <= self.gt_weight <= 1.0:
            raise ValueError(f"gt_weight must lie in [0, 1], got {self.gt_weight}")


@dataclass(frozen=True)
class FitStep:
    step: int
    box: Box
    loss: float
    iou: float
    gt_coverage: float
    pred_coverage: float


@dataclass(frozen=True)
class FitTrace:
    config: FitConfig
    records: tuple[FitStep, ...]

    def final(self) -> FitStep:
        return self.records[-1]

    def csv_rows(self) -> list[list]:
        rows = [list(TRACE_FIELDS)]
        for r in self.records:
            rows.append([r.step, r.box.cx, r.box.cy, r.box.w, r.box.h,
                         r.loss, r.iou, r.gt_coverage, r.pred_coverage])
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(self.csv_rows())
        return buf.getvalue()


def _loss_fn(cfg: FitConfig) -> Callable[[Box], LossValue]:
    target = cfg.target_box
    if cfg.loss_kind == "iou":
        return lambda p: iou_loss(target, p)
    if cfg.loss_kind == "giou":
        return lambda p: giou_loss(target, p)
    if cfg.loss_kind == "ics":
        return lambda p: ics_loss(target, p, cfg.gt_weight)
    return lambda p: l1_cost(target, p)


def _apply_step(p: Box, grad, eta: float) -> Box:
    return Box(
        p.cx - eta * grad[0],
        p.cy - eta * grad[1],
        max(p.w - eta * grad[2], MIN_EXTENT),
        max(p.h - eta * grad[3], MIN_EXTENT),
    )


def _record(step: int, box: Box, loss: float, target: Box) -> FitStep:
    gt_cov, pred_cov = coverage(target, box)
    return FitStep(step, box, loss, iou(target, box), gt_cov, pred_cov)


def fit(cfg: FitConfig) -> FitTrace:
    """Descend the configured loss from init_box toward target_box.

    Returns a trace of steps + 1 records including the initial state.
    Raises FitDivergedError if the loss ever turns non-finite.
    """
    if (cfg.loss_kind in ("iou", "ics")
            and intersection_area(cfg.init_box, cfg.target_box) == 0.0):
        logger.warning("disjoint start under %s loss: the intersection gradient "
                       "vanishes, so the trace will record a flat plateau", cfg.loss_kind)

    loss = _loss_fn(cfg)
    p = cfg.init_box
    current = loss(p)
    records = [_record(0, p, current.value, cfg.target_box)]

    for step in range(1, cfg.steps + 1):
        if not math.isfinite(current.value) or not all(map(math.isfinite, current.grad)):
            raise FitDivergedError(
                f"non-finite loss at step {step}",
                FitTrace(cfg, tuple(records)),
            )
        grad_sq = sum(g * g for g in current.grad)
        if grad_sq > 0.0:
            eta = cfg.learning_rate
            for _ in range(MAX_BACKTRACKS):
                candidate = _apply_step(p, current.grad, eta)
                cand_loss = loss(candidate)
                if cand_loss.value <= current.value - ARMIJO_C * eta * grad_sq:
                    p, current = candidate, cand_loss
                    break
                eta *= 0.5
            # No acceptable step means the iterate sits at a local optimum
            # (typically the kink where the boxes coincide); stay put.
        records.append(_record(step, p, current.value, cfg.target_box))

    return FitTrace(cfg, tuple(records))


@dataclass(frozen=True)
class CompareResult:
    """Side-by-side traces of several losses from one starting point.

    coverage_milestones[kind] is the first step index at which the
    ground-truth coverage reaches 0.95, or None if it never does. The
    comparison is reported, not judged.
    """

    traces: dict[str, FitTrace]
    coverage_milestones: dict[str, int | None]

    def csv_rows(self) -> list[list]:
        kinds = list(self.traces)
        header = ["step"]
        for kind in kinds:
            header += [f"{kind}_{name}" for name in TRACE_FIELDS[1:]]
        rows = [header]
        n = max(len(t.records) for t in self.traces.values())
        for idx in range(n):
            row: list = [idx]
            for kind in kinds:
                r = self.traces[kind].records[idx]
                row += [r.box.cx, r.box.cy, r.box.w, r.box.h,
                        r.loss, r.iou, r.gt_coverage, r.pred_coverage]
            rows.append(row)
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(self.csv_rows())
        return buf.getvalue()


COVERAGE_MILESTONE = 0.95


def compare_losses(cfg_base: FitConfig, kinds: Sequence[str]) -> CompareResult:
    """Run fit once per loss kind from the same start and collect traces."""
    if not kinds:
        raise ValueError("at least one loss kind is required")
    traces: dict[str, FitTrace] = {}
    milestones: dict[str, int | None] = {}
    for kind in kinds:
        if kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {kind!r}")
        cfg = FitConfig(
            loss_kind=kind,
            init_box=cfg_base.init_box,
            target_box=cfg_base.target_box,
            gt_weight=cfg_base.gt_weight,
            steps=cfg_base.steps,
            learning_rate=cfg_base.learning_rate,
            seed=cfg_base.seed,
        )
        trace = fit(cfg)
        traces[kind] = trace
        milestones[kind] = next(
            (r.step for r in trace.records if r.gt_coverage >= COVERAGE_MILESTONE), None)
    return CompareResult(traces, milestones)
