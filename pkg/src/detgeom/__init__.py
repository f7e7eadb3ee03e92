"""detgeom: detection-geometry toolkit.

Box overlap measures (IoU, coverage terms, their mix, GIoU), losses with
analytic gradients, noise-augmented image-size proposals, many-to-one
and one-to-one label assignment, threshold-swept evaluation with
weighted-average F1, and a gradient-descent box-fitting harness.
"""

__version__ = "0.1.0"

from .assignment import (
    AssignmentResult,
    CostConfig,
    GtRecord,
    PredRecord,
    SchedulerConfig,
    cost_matrix,
    dynamic_k,
    hungarian_assign,
    nms,
    simota_assign,
)
from .evaluation import (
    Detection,
    EmptyGroundTruthError,
    EvalReport,
    GroundTruth,
    ThresholdMetrics,
    evaluate,
    match_image,
    weighted_f1,
)
from .fitter import CompareResult, FitConfig, FitDivergedError, FitStep, FitTrace, compare_losses, fit
from .geometry import (
    Box,
    OverlapReport,
    area,
    coverage,
    enclosing_area,
    giou,
    ics,
    intersection_area,
    iou,
    overlap_report,
    union_area,
)
from .losses import (
    ClassProb,
    LossValue,
    cross_entropy,
    focal_loss,
    giou_loss,
    head_loss,
    ics_loss,
    iou_loss,
    l1_cost,
    total_loss,
)
from .proposals import IMAGE_BOX, ProposalConfig, augment_box, draw_noise, generate_proposals

__all__ = [
    "__version__",
    "AssignmentResult", "CostConfig", "GtRecord", "PredRecord", "SchedulerConfig",
    "cost_matrix", "dynamic_k", "hungarian_assign", "nms", "simota_assign",
    "Detection", "EmptyGroundTruthError", "EvalReport", "GroundTruth", "ThresholdMetrics",
    "evaluate", "match_image", "weighted_f1",
    "CompareResult", "FitConfig", "FitDivergedError", "FitStep", "FitTrace",
    "compare_losses", "fit",
    "Box", "OverlapReport", "area", "coverage", "enclosing_area", "giou", "ics",
    "intersection_area", "iou", "overlap_report", "union_area",
    "ClassProb", "LossValue", "cross_entropy", "focal_loss", "giou_loss", "head_loss",
    "ics_loss", "iou_loss", "l1_cost", "total_loss",
    "IMAGE_BOX", "ProposalConfig", "augment_box", "draw_noise", "generate_proposals",
]
