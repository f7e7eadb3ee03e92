"""File formats: schema validation, normalization, round trips."""

import json

import pytest

from detgeom import Box
from detgeom.formats import (
    InputError,
    detections_from_records,
    dump_dataset,
    dump_predictions,
    dumps_json,
    load_dataset,
    load_predictions,
    parse_dataset,
    parse_predictions,
)
from conftest import FIG_COVERING_BBOX, make_dataset_obj, make_prediction_obj, write_json


class TestDatasetParsing:
    def test_valid_dataset(self, tmp_path):
        path = write_json(tmp_path / "gt.json", make_dataset_obj())
        ds = load_dataset(path)
        assert len(ds.images) == 1
        assert len(ds.annotations) == 1
        assert ds.categories == {1: "table"}

    def test_normalization_to_center_form(self, tmp_path):
        obj = make_dataset_obj(
            annotations=[{"id": 1, "image_id": 1, "category_id": 1,
                          "bbox": [100, 200, 400, 600]}])
        ds = parse_dataset(obj)
        box = ds.ground_truths()[0].box
        assert box == Box(0.3, 0.5, 0.4, 0.6)

    def test_invalid_json_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "images": [,]\n}')
        with pytest.raises(InputError, match="line 2"):
            load_dataset(path)

    @pytest.mark.parametrize("mutate, message", [
        (lambda o: o.pop("images"), "missing required key 'images'"),
        (lambda o: o["annotations"][0].pop("bbox"), "missing required key 'bbox'"),
        (lambda o: o["annotations"][0].update(image_id=99), "not present in images"),
        (lambda o: o["annotations"][0].update(category_id=99), "not present in categories"),
        (lambda o: o["annotations"][0].update(bbox=[0, 0, -5, 10]), "must be positive"),
        (lambda o: o["images"].append(dict(o["images"][0])), "duplicate image ids"),
        (lambda o: o["images"][0].update(width=0), "dimensions must be positive"),
    ])
    def test_schema_violations(self, mutate, message):
        obj = make_dataset_obj()
        mutate(obj)
        with pytest.raises(InputError, match=message):
            parse_dataset(obj)


class TestPredictionParsing:
    def test_valid_predictions(self, tmp_path):
        ds = parse_dataset(make_dataset_obj())
        path = write_json(tmp_path / "pred.json",
                          [make_prediction_obj(FIG_COVERING_BBOX, 0.9)])
        records = load_predictions(path, ds)
        dets = detections_from_records(records, ds)
        assert dets[0].score == 0.9
        assert dets[0].box.w == pytest.approx(1.14)

    @pytest.mark.parametrize("mutate, message", [
        (lambda r: r.update(image_id=42), "not present in the dataset"),
        (lambda r: r.update(score=1.5), "score must lie in"),
        (lambda r: r.update(bbox=[0, 0, 10]), "must be"),
        (lambda r: r.pop("score"), "missing required key 'score'"),
    ])
    def test_schema_violations(self, mutate, message):
        ds = parse_dataset(make_dataset_obj())
        rec = make_prediction_obj(FIG_COVERING_BBOX, 0.9)
        mutate(rec)
        with pytest.raises(InputError, match=message):
            parse_predictions([rec], ds)

    def test_root_must_be_array(self):
        ds = parse_dataset(make_dataset_obj())
        with pytest.raises(InputError, match="must be an array"):
            parse_predictions({"oops": 1}, ds)


class TestRoundTrip:
    def test_dataset_round_trip_is_stable(self):
        obj = make_dataset_obj(
            annotations=[{"id": 1, "image_id": 1, "category_id": 1,
                          "bbox": [10.25, 20.5, 333.125, 444.0]}])
        first = dumps_json(dump_dataset(parse_dataset(obj)))
        second = dumps_json(dump_dataset(parse_dataset(json.loads(first))))
        assert first == second

    def test_predictions_round_trip_is_stable(self):
        ds = parse_dataset(make_dataset_obj())
        recs = [make_prediction_obj([1.5, 2.25, 98.125, 55.5], 0.375)]
        first = dumps_json(dump_predictions(parse_predictions(recs, ds)))
        second = dumps_json(dump_predictions(parse_predictions(json.loads(first), ds)))
        assert first == second
