"""Command-line pipeline: train, detect, eval, roc, netlist.

Exit codes: 0 success, 1 usage or configuration validation, 2 data errors
(unreadable/mismatched inputs), 3 internal invariant violation.  All
output is deterministic for fixed inputs and flags, independent of
``--threads``.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import frameio
from .cell import HARD, SOFT, CellParams
from .detector import (
    DetectorModel,
    detect,
    extract_blobs,
    match_blobs,
    roc_sweep,
    train_detector,
)
from .errors import (
    BprtError,
    ConductanceRangeError,
    DimensionError,
    InvalidInputError,
    ModelFormatError,
    NonConvergenceError,
    ParseError,
    SingularThresholdError,
    UndefinedRateError,
)
from .memristor import PulseSpec
from .metrics import ConfusionCounts, metrics_from_counts
from .network import global_similarity


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: A003 - argparse API
        raise UsageError(message)


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--block", type=int, default=2, help="pixels per cell side (default 2)")
    p.add_argument("--ta", type=float, default=0.5, help="threshold voltage (default 0.5)")
    p.add_argument("--wh", type=float, default=1e-7, help="above-average conductance, S")
    p.add_argument("--wl", type=float, default=1e-5, help="below-average conductance, S")
    p.add_argument("--w0", type=float, default=2e-5, help="constant divider leg, S")
    p.add_argument("--vref", type=float, default=1.0, help="full-scale voltage (default 1.0)")
    p.add_argument("--crop", action="store_true", help="crop frames down to a block multiple")
    p.add_argument("--soft", action="store_true", help="use the logistic threshold")
    p.add_argument("--b", type=float, default=100.0, help="weight logistic steepness")
    p.add_argument("--b1", type=float, default=100.0, help="threshold logistic steepness")
    p.add_argument("--threads", type=int, default=1, help="frame-level worker threads")
    p.add_argument("--program", action="store_true", help="realize weights via pulse programming")
    p.add_argument("--pulse-amp", type=float, default=1.0, help="pulse amplitude, V")
    p.add_argument("--pulse-width", type=float, default=10e-9, help="pulse width, s")
    p.add_argument("--pulse-max", type=int, default=1_000_000, help="pulse budget")
    p.add_argument("--pulse-tol", type=float, default=0.01, help="relative conductance tolerance")


def build_parser() -> _Parser:
    parser = _Parser(prog="bprt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a detector from a template frame")
    p_train.add_argument("template", help="template PGM")
    p_train.add_argument("-o", "--out", default="model.bprt", help="model output path")
    p_train.add_argument("--json", dest="json_path", help="also write the report as JSON")
    p_train.add_argument(
        "--warnings-as-errors",
        action="store_true",
        help="exit 2 when any cell has a zero baseline",
    )
    _add_common_flags(p_train)

    p_detect = sub.add_parser("detect", help="run change detection over frames")
    p_detect.add_argument("frames", help="test frame PGM or directory of PGMs")
    p_detect.add_argument("-m", "--model", help="trained model path")
    p_detect.add_argument(
        "--template-from-first",
        action="store_true",
        help="train on the first frame instead of loading a model",
    )
    p_detect.add_argument("--out-dir", default=".", help="where to write maps and overlays")
    p_detect.add_argument("--no-overlay", action="store_true", help="skip PPM overlays")
    _add_common_flags(p_detect)

    p_eval = sub.add_parser("eval", help="score detections against ground-truth maps")
    p_eval.add_argument("frames", help="directory of test PGMs")
    p_eval.add_argument("truth", help="directory of ground-truth change-map PGMs")
    p_eval.add_argument("-m", "--model", required=True, help="trained model path")
    p_eval.add_argument("--json", dest="json_path", help="also write the report as JSON")
    p_eval.add_argument("--iou", type=float, default=0.5, help="blob match IoU threshold")
    _add_common_flags(p_eval)

    p_roc = sub.add_parser("roc", help="sweep the threshold and emit (fpr, tpr) points")
    p_roc.add_argument("frames", help="directory of test PGMs")
    p_roc.add_argument("truth", help="directory of ground-truth change-map PGMs")
    p_roc.add_argument("--template", required=True, help="template PGM")
    p_roc.add_argument(
        "--thresholds", required=True, help="comma-separated threshold grid, e.g. 0,0.25,0.5"
    )
    p_roc.add_argument("--blob-mode", action="store_true", help="blob-level true-positive rate")
    p_roc.add_argument("--iou", type=float, default=0.5, help="blob match IoU threshold")
    _add_common_flags(p_roc)

    p_net = sub.add_parser("netlist", help="export the resistor network as SPICE text")
    p_net.add_argument("-m", "--model", required=True, help="trained model path")
    p_net.add_argument("-o", "--out", help="netlist output path (default stdout)")

    return parser


def _params_from(args) -> CellParams:
    return CellParams(
        w_h=args.wh,
        w_l=args.wl,
        w_0=args.w0,
        t_a=args.ta,
        b=args.b,
        b1=args.b1,
        mode=SOFT if args.soft else HARD,
    )


def _pulse_from(args) -> PulseSpec | None:
    if not args.program:
        return None
    return PulseSpec(
        amplitude=args.pulse_amp,
        width=args.pulse_width,
        max_pulses=args.pulse_max,
        tolerance=args.pulse_tol,
    )


def _load_frame(path: Path, args) -> frameio.GrayFrame:
    frame = frameio.load_pgm(path.read_bytes())
    if args.crop:
        w = frame.width - frame.width % args.block
        h = frame.height - frame.height % args.block
        if w < args.block or h < args.block:
            raise DimensionError(f"{path}: too small to crop to block {args.block}")
        if (w, h) != (frame.width, frame.height):
            print(
                f"warning: {path.name} cropped from {frame.width}x{frame.height} to {w}x{h}",
                file=sys.stderr,
            )
            frame = frameio.GrayFrame(pixels=frame.pixels[:h, :w])
    return frame


def _list_frames(path: Path) -> list[Path]:
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix.lower() == ".pgm")
        if not files:
            raise FileNotFoundError(f"no .pgm frames in {path}")
        return files
    if not path.exists():
        raise FileNotFoundError(f"{path} does not exist")
    return [path]


def _load_model(path: str) -> DetectorModel:
    return frameio.load_model(Path(path).read_bytes())


def _train_model(template: frameio.GrayFrame, args) -> DetectorModel:
    voltage = frameio.normalize(template, args.vref)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        model = train_detector(
            voltage, args.block, _params_from(args), args.vref, programming=_pulse_from(args)
        )
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return model


def cmd_train(args) -> int:
    template = _load_frame(Path(args.template), args)
    model = _train_model(template, args)
    Path(args.out).write_bytes(frameio.save_model(model))

    m1, m2 = model.module1, model.module2
    zero1, zero2 = m1.zero_baseline_cells, m2.zero_baseline_cells
    report = {
        "x_a_module1": m1.x_a,
        "x_a_module2": m2.x_a,
        "cells_w": m1.cells_w,
        "cells_h": m1.cells_h,
        "cells": m1.cells_w * m1.cells_h,
        "zero_baseline_cells_module1": [list(rc) for rc in zero1],
        "zero_baseline_cells_module2": [list(rc) for rc in zero2],
        "model": args.out,
    }
    print(f"x_a module1: {m1.x_a:.17g}")
    print(f"x_a module2: {m2.x_a:.17g}")
    print(f"cells: {m1.cells_w}x{m1.cells_h} ({m1.cells_w * m1.cells_h})")
    print(f"zero-baseline cells: module1 {len(zero1)}, module2 {len(zero2)}")
    print(f"model written: {args.out}")
    if args.json_path:
        Path(args.json_path).write_text(json.dumps(report, indent=2) + "\n")
    if args.warnings_as_errors and (zero1 or zero2):
        print("error: zero-baseline cells present", file=sys.stderr)
        return 2
    return 0


def _detect_one(model: DetectorModel, path: Path, args):
    try:
        frame = _load_frame(path, args)
        change = detect(model, frameio.normalize(frame, model.v_ref))
        map_bytes = frameio.write_change_map(change)
        overlay_bytes = None if args.no_overlay else frameio.overlay(change, frame)
        s_g = global_similarity((~change).astype(np.uint8))
        return path, map_bytes, overlay_bytes, s_g, int(np.count_nonzero(change)), None
    except (BprtError, OSError) as err:
        return path, None, None, None, None, err


def cmd_detect(args) -> int:
    if args.template_from_first == bool(args.model):
        raise UsageError("need exactly one of --model or --template-from-first")
    paths = _list_frames(Path(args.frames))
    if args.template_from_first:
        model = _train_model(_load_frame(paths[0], args), args)
    else:
        model = _load_model(args.model)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    failures = 0
    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        results = list(pool.map(lambda p: _detect_one(model, p, args), paths))
    for path, map_bytes, overlay_bytes, s_g, changed, err in results:
        if err is not None:
            print(f"{path.name} error: {err}", file=sys.stderr)
            failures += 1
            continue
        (out_dir / f"{path.stem}_map.pgm").write_bytes(map_bytes)
        if overlay_bytes is not None:
            (out_dir / f"{path.stem}_overlay.ppm").write_bytes(overlay_bytes)
        print(f"{path.name} s_g={s_g:.17g} changed={changed}")
    return 2 if failures else 0


def cmd_eval(args) -> int:
    model = _load_model(args.model)
    frame_paths = _list_frames(Path(args.frames))
    truth_dir = Path(args.truth)
    counts = np.zeros(4, dtype=np.int64)  # tp, fp, tn, fn
    blob_tp = blob_fn = blob_fp = 0
    for path in frame_paths:
        truth_path = truth_dir / path.name
        if not truth_path.exists():
            raise FileNotFoundError(f"missing ground truth for {path.name}: {truth_path}")
        frame = _load_frame(path, args)
        truth = frameio.read_change_map(truth_path.read_bytes())
        pred = detect(model, frameio.normalize(frame, model.v_ref))
        if pred.shape != truth.shape:
            raise DimensionError(
                f"{path.name}: prediction grid {pred.shape} vs truth {truth.shape}"
            )
        counts += (
            int(np.count_nonzero(pred & truth)),
            int(np.count_nonzero(pred & ~truth)),
            int(np.count_nonzero(~pred & ~truth)),
            int(np.count_nonzero(~pred & truth)),
        )
        hits, misses, spurious = match_blobs(
            extract_blobs(pred), extract_blobs(truth), args.iou
        )
        blob_tp, blob_fn, blob_fp = blob_tp + hits, blob_fn + misses, blob_fp + spurious

    report = metrics_from_counts(
        ConfusionCounts(tp=int(counts[0]), fp=int(counts[1]), tn=int(counts[2]), fn=int(counts[3]))
    )
    doc = report.as_dict()
    doc.update(
        {
            "tp": int(counts[0]),
            "fp": int(counts[1]),
            "tn": int(counts[2]),
            "fn": int(counts[3]),
            "blob_true_positives": blob_tp,
            "blob_false_negatives": blob_fn,
            "blob_false_positives": blob_fp,
        }
    )
    for key, value in doc.items():
        print(f"{key}: {value:.17g}" if isinstance(value, float) else f"{key}: {value}")
    if args.json_path:
        safe = {k: ("inf" if v == float("inf") else v) for k, v in doc.items()}
        Path(args.json_path).write_text(json.dumps(safe, indent=2) + "\n")
    return 0


def cmd_roc(args) -> int:
    tokens = [t for t in args.thresholds.split(",") if t.strip()]
    if not tokens:
        raise UsageError("threshold grid is empty")
    thresholds = [float(t) for t in tokens]
    template = frameio.normalize(_load_frame(Path(args.template), args), args.vref)
    tests = []
    truth_dir = Path(args.truth)
    for path in _list_frames(Path(args.frames)):
        truth_path = truth_dir / path.name
        if not truth_path.exists():
            raise FileNotFoundError(f"missing ground truth for {path.name}: {truth_path}")
        tests.append(
            (
                frameio.normalize(_load_frame(path, args), args.vref),
                frameio.read_change_map(truth_path.read_bytes()),
            )
        )
    points = roc_sweep(
        template,
        tests,
        thresholds,
        args.block,
        _params_from(args),
        args.vref,
        blob_mode=args.blob_mode,
        iou_threshold=args.iou,
    )
    for pt in points:
        print(f"t_a={pt.t_a:.17g} fpr={pt.fpr:.17g} tpr={pt.tpr:.17g}")
    return 0


def cmd_netlist(args) -> int:
    text = frameio.export_netlist(_load_model(args.model))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


_COMMANDS = {
    "train": cmd_train,
    "detect": cmd_detect,
    "eval": cmd_eval,
    "roc": cmd_roc,
    "netlist": cmd_netlist,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except (InvalidInputError, SingularThresholdError, ConductanceRangeError) as err:
        print(f"invalid configuration: {err}", file=sys.stderr)
        return 1
    except (
        ParseError,
        ModelFormatError,
        DimensionError,
        UndefinedRateError,
        NonConvergenceError,
        FileNotFoundError,
        IsADirectoryError,
        PermissionError,
    ) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except BprtError as err:
        print(f"internal error: {err}", file=sys.stderr)
        return 3
    except Exception as err:  # pragma: no cover - last resort
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
