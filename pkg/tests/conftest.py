"""Shared fixtures: the preference-flip scenario and dataset file builders.

The flip scenario pairs one unit-square ground truth with two detector
variants: an enlarged box that fully covers the target (IoU just under
0.77, coverage 1.0) and a cropping box that cuts away part of it
(IoU exactly 0.82, coverage 0.82). At a 0.8 threshold the covering box
fails under IoU but passes under ground-truth coverage.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from detgeom import Box

UNIT_GT = Box.from_corners(0.0, 0.0, 1.0, 1.0)
COVERING_PRED = Box.from_corners(-0.07, -0.07, 1.07, 1.07)   # IoU 1/1.14^2 ~ 0.7695
CROPPING_PRED = Box.from_corners(0.18, 0.0, 1.0, 1.0)        # IoU = coverage = 0.82

# Same scenario in absolute pixels on a 1000 x 1000 page.
FIG_GT_BBOX = [0.0, 0.0, 1000.0, 1000.0]
FIG_COVERING_BBOX = [-70.0, -70.0, 1140.0, 1140.0]
FIG_CROPPING_BBOX = [180.0, 0.0, 820.0, 1000.0]


def make_dataset_obj(annotations=None, images=None, categories=None) -> dict:
    if images is None:
        images = [{"id": 1, "width": 1000, "height": 1000, "file_name": "page1.png"}]
    if categories is None:
        categories = [{"id": 1, "name": "table"}]
    if annotations is None:
        annotations = [{"id": 1, "image_id": 1, "category_id": 1, "bbox": FIG_GT_BBOX}]
    return {"images": images, "annotations": annotations, "categories": categories}


def make_prediction_obj(bbox, score=0.9, image_id=1, category_id=1) -> dict:
    return {"image_id": image_id, "category_id": category_id,
            "bbox": list(bbox), "score": score}


def write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2) + "\n")
    return path


@pytest.fixture
def flip_files(tmp_path):
    """(gt, covering, cropping) file paths for the flip scenario."""
    gt = write_json(tmp_path / "gt.json", make_dataset_obj())
    covering = write_json(tmp_path / "pred_covering.json",
                          [make_prediction_obj(FIG_COVERING_BBOX, score=0.9)])
    cropping = write_json(tmp_path / "pred_cropping.json",
                          [make_prediction_obj(FIG_CROPPING_BBOX, score=0.9)])
    return gt, covering, cropping
