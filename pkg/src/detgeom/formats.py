"""On-disk formats: dataset files, prediction files, and report files.

Dataset files are a COCO-compatible subset: an object with "images"
(id, width, height, optional file_name), "annotations" (id, image_id,
category_id, bbox as corner-origin [x, y, w, h] in absolute pixels), and
"categories" (id, name). Prediction files are a JSON array of
{image_id, category_id, bbox, score} in the same bbox convention.
Boxes are converted to normalized center form internally using the image
dimensions.

Schema problems raise InputError with enough context to find the bad
record; JSON syntax errors keep their line numbers.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .evaluation import Detection, EvalReport, GroundTruth
from .geometry import Box


class InputError(ValueError):
    """A malformed input file: bad JSON, bad schema, or dangling references."""


@dataclass(frozen=True)
class ImageInfo:
    id: Any
    width: float
    height: float
    file_name: str | None = None


@dataclass(frozen=True)
class Annotation:
    id: Any
    image_id: Any
    category_id: Any
    bbox: tuple[float, float, float, float]


@dataclass(frozen=True)
class PredictionRecord:
    image_id: Any
    category_id: Any
    bbox: tuple[float, float, float, float]
    score: float


@dataclass(frozen=True)
class Dataset:
    images: tuple[ImageInfo, ...]
    annotations: tuple[Annotation, ...]
    categories: dict[Any, str]

    def image_by_id(self) -> dict[Any, ImageInfo]:
        return {img.id: img for img in self.images}

    def ground_truths(self) -> list[GroundTruth]:
        by_id = self.image_by_id()
        return [
            GroundTruth(
                image_id=ann.image_id,
                box=_normalize_bbox(ann.bbox, by_id[ann.image_id]),
                category=ann.category_id,
            )
            for ann in self.annotations
        ]


def _normalize_bbox(bbox: tuple[float, float, float, float], img: ImageInfo) -> Box:
    x, y, w, h = bbox
    return Box(
        (x + w / 2.0) / img.width,
        (y + h / 2.0) / img.height,
        w / img.width,
        h / img.height,
    )


def _load_json(path: str | Path):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: "
                         f"{exc.msg}") from exc


def _check_bbox(raw, where: str) -> tuple[float, float, float, float]:
    if (not isinstance(raw, (list, tuple)) or len(raw) != 4
            or not all(isinstance(v, (int, float)) for v in raw)):
        raise InputError(f"{where}: bbox must be [x, y, w, h] numbers, got {raw!r}")
    x, y, w, h = (float(v) for v in raw)
    if w <= 0 or h <= 0:
        raise InputError(f"{where}: bbox extent must be positive, got w={w}, h={h}")
    return x, y, w, h


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise InputError(f"{where}: missing required key {key!r}")
    return obj[key]


def parse_dataset(data, source: str = "<dataset>") -> Dataset:
    """Validate a parsed dataset object; see the module docstring for the schema."""
    if not isinstance(data, dict):
        raise InputError(f"{source}: dataset root must be an object")
    images = []
    for idx, raw in enumerate(_require(data, "images", source)):
        where = f"{source}: images[{idx}]"
        width = float(_require(raw, "width", where))
        height = float(_require(raw, "height", where))
        if width <= 0 or height <= 0:
            raise InputError(f"{where}: image dimensions must be positive")
        images.append(ImageInfo(
            id=_require(raw, "id", where),
            width=width,
            height=height,
            file_name=raw.get("file_name"),
        ))
    image_ids = {img.id for img in images}
    if len(image_ids) != len(images):
        raise InputError(f"{source}: duplicate image ids")

    categories = {}
    for idx, raw in enumerate(_require(data, "categories", source)):
        where = f"{source}: categories[{idx}]"
        categories[_require(raw, "id", where)] = str(_require(raw, "name", where))

    annotations = []
    for idx, raw in enumerate(_require(data, "annotations", source)):
        where = f"{source}: annotations[{idx}]"
        image_id = _require(raw, "image_id", where)
        if image_id not in image_ids:
            raise InputError(f"{where}: image_id {image_id!r} not present in images")
        category_id = _require(raw, "category_id", where)
        if category_id not in categories:
            raise InputError(f"{where}: category_id {category_id!r} not present in categories")
        annotations.append(Annotation(
            id=_require(raw, "id", where),
            image_id=image_id,
            category_id=category_id,
            bbox=_check_bbox(_require(raw, "bbox", where), where),
        ))

    return Dataset(tuple(images), tuple(annotations), categories)


def load_dataset(path: str | Path) -> Dataset:
    return parse_dataset(_load_json(path), source=str(path))


def parse_predictions(data, dataset: Dataset, source: str = "<predictions>") -> list[PredictionRecord]:
    """Validate a parsed prediction array against its dataset."""
    if not isinstance(data, list):
        raise InputError(f"{source}: prediction file root must be an array")
    image_ids = {img.id for img in dataset.images}
    records = []
    for idx, raw in enumerate(data):
        where = f"{source}: [{idx}]"
        image_id = _require(raw, "image_id", where)
        if image_id not in image_ids:
            raise InputError(f"{where}: image_id {image_id!r} not present in the dataset")
        score = float(_require(raw, "score", where))
        if not 0.0 <= score <= 1.0:
            raise InputError(f"{where}: score must lie in [0, 1], got {score}")
        records.append(PredictionRecord(
            image_id=image_id,
            category_id=_require(raw, "category_id", where),
            bbox=_check_bbox(_require(raw, "bbox", where), where),
            score=score,
        ))
    return records


def load_predictions(path: str | Path, dataset: Dataset) -> list[PredictionRecord]:
    return parse_predictions(_load_json(path), dataset, source=str(path))


def detections_from_records(records: list[PredictionRecord], dataset: Dataset) -> list[Detection]:
    by_id = dataset.image_by_id()
    return [
        Detection(
            image_id=rec.image_id,
            box=_normalize_bbox(rec.bbox, by_id[rec.image_id]),
            category=rec.category_id,
            score=rec.score,
        )
        for rec in records
    ]


def dump_dataset(dataset: Dataset) -> dict:
    """Dataset back to its JSON object form, with stable key order."""
    return {
        "images": [
            {"id": img.id, "width": img.width, "height": img.height}
            | ({"file_name": img.file_name} if img.file_name is not None else {})
            for img in dataset.images
        ],
        "annotations": [
            {"id": ann.id, "image_id": ann.image_id,
             "category_id": ann.category_id, "bbox": list(ann.bbox)}
            for ann in dataset.annotations
        ],
        "categories": [
            {"id": cid, "name": name} for cid, name in dataset.categories.items()
        ],
    }


def dump_predictions(records: list[PredictionRecord]) -> list[dict]:
    return [
        {"image_id": rec.image_id, "category_id": rec.category_id,
         "bbox": list(rec.bbox), "score": rec.score}
        for rec in records
    ]


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def report_file_dict(report: EvalReport, *, tool_version: str,
                     nms_threshold: float | None, score_floor: float,
                     input_hashes: dict[str, str]) -> dict:
    """EvalReport plus the metadata needed to reproduce it exactly."""
    return {
        "tool_version": tool_version,
        "metric_kind": report.metric_kind,
        "thresholds": list(report.thresholds),
        "nms_threshold": nms_threshold,
        "score_floor": score_floor,
        "input_hashes": dict(sorted(input_hashes.items())),
        "report": report.to_dict(),
    }


def dumps_json(obj) -> str:
    """Canonical JSON serialization used for every file this tool writes."""
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"
