"""Command-line interface.

Subcommands:
  score    overlap measures for one box pair
  propose  noise-augmented image-size proposals
  assign   many-to-one label assignment for one head
  fit      gradient-descent box fitting, CSV trace
  eval     evaluate a prediction file against a dataset file

Exit codes: 0 success, 2 malformed input or bad flags, 3 evaluation
domain error (empty ground truth). All commands are deterministic given
their flags (and seed, where applicable). DETGEOM_THREADS caps the
evaluation worker count; default is the logical processor count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .assignment import AssignmentResult, CostConfig, GtRecord, PredRecord, SchedulerConfig, simota_assign
from .evaluation import (
    DEFAULT_SCORE_FLOOR,
    EmptyGroundTruthError,
    EvalReport,
    evaluate,
)
from .fitter import FitConfig, compare_losses, fit
from .formats import (
    InputError,
    detections_from_records,
    dumps_json,
    file_sha256,
    load_dataset,
    load_predictions,
    report_file_dict,
)
from .geometry import Box, overlap_report
from .proposals import ProposalConfig, generate_proposals

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_EVAL_DOMAIN = 3


def _parse_thresholds(text: str) -> tuple[float, ...]:
    """Accept fractions or percentages: '0.6,0.7' and '60,70' agree."""
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise InputError(f"could not parse thresholds {text!r}: {exc}") from exc
    if not values:
        raise InputError("at least one threshold is required")
    return tuple(v / 100.0 if v > 1.0 else v for v in values)


def _parse_nms(text: str) -> float | None:
    if text.lower() == "off":
        return None
    try:
        return float(text)
    except ValueError as exc:
        raise InputError(f"--nms expects a float or 'off', got {text!r}") from exc


def _max_workers() -> int:
    raw = os.environ.get("DETGEOM_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _write_output(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _corner_box(values, name: str) -> Box:
    x1, y1, x2, y2 = values
    try:
        return Box.from_corners(x1, y1, x2, y2)
    except ValueError as exc:
        raise InputError(f"{name}: {exc}") from exc


def _center_box(values, name: str) -> Box:
    cx, cy, w, h = values
    try:
        return Box(cx, cy, w, h)
    except ValueError as exc:
        raise InputError(f"{name}: {exc}") from exc


def _format_table(report: EvalReport, nms_threshold, score_floor) -> str:
    label = "IoU" if report.metric_kind == "iou" else "GT_C"
    headers = [f"{label}@{t * 100:g}%" for t in report.thresholds]
    names = ["tp", "fp", "fn", "precision", "recall", "f1"]
    rows = []
    for name in names:
        cells = []
        for m in report.per_threshold:
            v = getattr(m, name)
            cells.append(f"{v}" if isinstance(v, int) else f"{v:.2f}")
        rows.append((name, cells))

    width = max(len(h) for h in headers) + 2
    left = max(len(n) for n in names) + 2
    nms_text = "off" if nms_threshold is None else f"{nms_threshold:g}"
    lines = [
        f"metric: {report.metric_kind}    nms: {nms_text}    score floor: {score_floor:g}",
        "",
        " " * left + "".join(h.rjust(width) for h in headers),
    ]
    for name, cells in rows:
        lines.append(name.ljust(left) + "".join(c.rjust(width) for c in cells))
    lines.append("")
    lines.append(f"weighted average F1: {report.weighted_avg_f1:.2f}")
    return "\n".join(lines) + "\n"


def cmd_eval(args) -> int:
    thresholds = _parse_thresholds(args.thresholds)
    nms_threshold = _parse_nms(args.nms)

    dataset = load_dataset(args.gt)
    records = load_predictions(args.pred, dataset)
    gts = dataset.ground_truths()
    dets = detections_from_records(records, dataset)

    report = evaluate(
        gts, dets,
        thresholds=thresholds,
        metric_kind=args.metric,
        nms_threshold=nms_threshold,
        score_floor=args.score_floor,
        allow_empty=args.allow_empty_gt,
        ignore_category=args.ignore_category,
        max_workers=_max_workers(),
    )

    report_doc = report_file_dict(
        report,
        tool_version=__version__,
        nms_threshold=nms_threshold,
        score_floor=args.score_floor,
        input_hashes={"gt": file_sha256(args.gt), "pred": file_sha256(args.pred)},
    )
    if args.out:
        Path(args.out).write_text(dumps_json(report_doc))
    if args.format == "json":
        sys.stdout.write(dumps_json(report_doc))
    else:
        sys.stdout.write(_format_table(report, nms_threshold, args.score_floor))
    return EXIT_OK


def cmd_propose(args) -> int:
    cfg = ProposalConfig(num_proposals=args.num, mu=args.mu, sigma2=args.sigma2,
                         seed=args.seed)
    boxes = [list(b.corners()) for b in generate_proposals(cfg)]
    _write_output(dumps_json(boxes), args.out)
    return EXIT_OK


def _parse_assign_doc(path: str) -> tuple[list[GtRecord], list[PredRecord], dict]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or "gts" not in doc or "preds" not in doc:
        raise InputError(f"{path}: expected an object with 'gts' and 'preds'")

    def to_box(raw, where):
        if not isinstance(raw, (list, tuple)) or len(raw) != 4:
            raise InputError(f"{where}: box must be [x1, y1, x2, y2]")
        return _corner_box([float(v) for v in raw], where)

    gts = [GtRecord(box=to_box(rec.get("box"), f"{path}: gts[{i}]"),
                    category=int(rec.get("category", 0)))
           for i, rec in enumerate(doc["gts"])]
    preds = []
    for i, rec in enumerate(doc["preds"]):
        where = f"{path}: preds[{i}]"
        probs = rec.get("probs")
        if probs is None and "score" in rec:
            probs = [rec["score"]]
        if probs is None:
            raise InputError(f"{where}: needs 'probs' (or 'score')")
        preds.append(PredRecord(box=to_box(rec.get("box"), where),
                                probs=tuple(float(p) for p in probs)))
    return gts, preds, doc


def cmd_assign(args) -> int:
    gts, preds, doc = _parse_assign_doc(args.input)

    doc_cfg = doc.get("config", {})
    head = args.head if args.head is not None else doc.get("head_index")
    if head is None:
        raise InputError("head index required: pass --head or put 'head_index' in the document")

    try:
        cost_cfg = CostConfig(
            lambda_cls=args.lambda_cls, lambda_l1=args.lambda_l1,
            lambda_giou=args.lambda_giou, lambda_center=args.lambda_center,
            center_penalty=args.center_penalty,
            use_ics=args.use_ics or bool(doc_cfg.get("use_ics", False)),
            ics_gt_weight=args.ics_weight,
        )
        sched = SchedulerConfig(n=args.n, num_heads=args.heads)
        result: AssignmentResult = simota_assign(gts, preds, int(head), cost_cfg, sched)
    except ValueError as exc:
        raise InputError(str(exc)) from exc

    _write_output(dumps_json(result.to_dict()), args.out)
    return EXIT_OK


def cmd_fit(args) -> int:
    init_box = _center_box(args.init, "--init")
    target_box = _center_box(args.target, "--target")
    try:
        cfg = FitConfig(
            loss_kind=args.loss,
            init_box=init_box,
            target_box=target_box,
            gt_weight=args.ics_weight,
            steps=args.steps,
            learning_rate=args.lr,
            seed=args.seed,
        )
        if args.compare:
            kinds = [k.strip() for k in args.compare.split(",") if k.strip()]
            text = compare_losses(cfg, kinds).to_csv()
        else:
            text = fit(cfg).to_csv()
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _write_output(text, args.out)
    return EXIT_OK


def cmd_score(args) -> int:
    a = _corner_box(args.a, "--a")
    b = _corner_box(args.b, "--b")
    try:
        report = overlap_report(a, b, args.ics_weight)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _write_output(dumps_json(report.to_dict()), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detgeom",
        description="Detection-geometry toolkit: overlap scoring, proposals, "
                    "label assignment, box fitting, and evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"detgeom {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="evaluate predictions against a dataset")
    p_eval.add_argument("--gt", required=True, help="dataset JSON file")
    p_eval.add_argument("--pred", required=True, help="prediction JSON file")
    p_eval.add_argument("--metric", choices=["iou", "gtc"], default="iou",
                        help="matching measure: IoU or ground-truth coverage")
    p_eval.add_argument("--thresholds", default="0.6,0.7,0.8,0.9",
                        help="comma-separated; fractions or percentages")
    p_eval.add_argument("--nms", default="0.9", help="NMS IoU threshold, or 'off'")
    p_eval.add_argument("--score-floor", type=float, default=DEFAULT_SCORE_FLOOR,
                        help="discard detections scoring below this")
    p_eval.add_argument("--out", help="write the report file here")
    p_eval.add_argument("--format", choices=["table", "json"], default="table")
    p_eval.add_argument("--ignore-category", action="store_true",
                        help="match across categories")
    p_eval.add_argument("--allow-empty-gt", action="store_true",
                        help="report zeros instead of failing on an empty ground-truth set")
    p_eval.set_defaults(func=cmd_eval)

    p_prop = sub.add_parser("propose", help="emit noise-augmented image-size proposals")
    p_prop.add_argument("--num", type=int, default=300)
    p_prop.add_argument("--sigma2", type=float, default=0.01, help="noise variance")
    p_prop.add_argument("--mu", type=float, default=0.0, help="noise mean")
    p_prop.add_argument("--seed", type=int, default=0)
    p_prop.add_argument("--out")
    p_prop.set_defaults(func=cmd_propose)

    p_assign = sub.add_parser("assign", help="many-to-one label assignment for one head")
    p_assign.add_argument("--input", required=True,
                          help="JSON document with 'gts' and 'preds' (normalized corner boxes)")
    p_assign.add_argument("--head", type=int, default=None, help="head index, 1-based")
    p_assign.add_argument("--n", type=float, default=8.0, help="schedule knob")
    p_assign.add_argument("--heads", type=int, default=6, help="number of heads")
    p_assign.add_argument("--lambda-cls", type=float, default=2.0)
    p_assign.add_argument("--lambda-l1", type=float, default=5.0)
    p_assign.add_argument("--lambda-giou", type=float, default=2.0)
    p_assign.add_argument("--lambda-center", type=float, default=1.0)
    p_assign.add_argument("--center-penalty", type=float, default=1e5)
    p_assign.add_argument("--use-ics", action="store_true",
                          help="use the coverage-mix cost instead of GIoU")
    p_assign.add_argument("--lambda", dest="ics_weight", type=float, default=0.5,
                          help="ground-truth-coverage weight of the mix")
    p_assign.add_argument("--out")
    p_assign.set_defaults(func=cmd_assign)

    p_fit = sub.add_parser("fit", help="gradient-descent box fitting, CSV trace")
    p_fit.add_argument("--loss", choices=["iou", "giou", "ics", "l1"], default="giou")
    p_fit.add_argument("--lambda", dest="ics_weight", type=float, default=0.5,
                       help="ground-truth-coverage weight of the mix")
    p_fit.add_argument("--steps", type=int, default=500)
    p_fit.add_argument("--lr", type=float, default=0.05)
    p_fit.add_argument("--init", type=float, nargs=4, required=True,
                       metavar=("CX", "CY", "W", "H"), help="initial box, center form")
    p_fit.add_argument("--target", type=float, nargs=4, required=True,
                       metavar=("CX", "CY", "W", "H"), help="target box, center form")
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--compare", help="comma-separated loss kinds for a side-by-side trace")
    p_fit.add_argument("--out", help="trace CSV path (default stdout)")
    p_fit.set_defaults(func=cmd_fit)

    p_score = sub.add_parser("score", help="overlap measures for one box pair")
    p_score.add_argument("--a", type=float, nargs=4, required=True,
                         metavar=("X1", "Y1", "X2", "Y2"), help="first box (ground truth), corners")
    p_score.add_argument("--b", type=float, nargs=4, required=True,
                         metavar=("X1", "Y1", "X2", "Y2"), help="second box (prediction), corners")
    p_score.add_argument("--lambda", dest="ics_weight", type=float, default=0.5,
                         help="ground-truth-coverage weight of the mix")
    p_score.add_argument("--out")
    p_score.set_defaults(func=cmd_score)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags and 0 on --help; keep its code.
        return int(exc.code or 0)
    try:
        return args.func(args)
    except EmptyGroundTruthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EVAL_DOMAIN
    except (InputError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
