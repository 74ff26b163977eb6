"""Dual-module change detector with blob extraction and threshold sweeps.

One trained network only reacts to blocks that turn brighter than the
template mean, so the detector runs two in parallel: module 1 trained on
the template, module 2 on the photographic inverse of it (and fed the
inverse of each test frame).  A cell counts as changed when either module
drops its output to 0, i.e. when the pixel-wise AND of the two output
grids is 0.  The resulting change map has one entry per block: an N x N
frame with block size 2 reduces to N/2 x N/2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import ndimage

from .cell import CellParams
from .errors import DimensionError, InvalidInputError, UndefinedRateError
from .network import (
    TrainedNetwork,
    VoltageFrame,
    evaluate_network,
    train_network,
)

# Boolean cell grid, True where a change was detected.
ChangeMap = np.ndarray

_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass
class DetectorModel:
    """Twin networks: module 1 on the template, module 2 on its inverse."""

    module1: TrainedNetwork
    module2: TrainedNetwork
    v_ref: float

    def __post_init__(self):
        m1, m2 = self.module1, self.module2
        if (
            m1.block != m2.block
            or m1.weights.shape != m2.weights.shape
            or m1.params != m2.params
        ):
            raise InvalidInputError("detector modules must share block size, dimensions, and params")
        if not self.v_ref > 0:
            raise InvalidInputError(f"v_ref must be positive, got {self.v_ref}")


@dataclass
class Blob:
    """One 4-connected component of changed cells.

    cells are (row, col) pairs in raster order; bbox is
    (row_min, col_min, row_max, col_max), inclusive.
    """

    cells: list[tuple[int, int]]
    bbox: tuple[int, int, int, int]

    @property
    def size(self) -> int:
        return len(self.cells)


@dataclass
class RocPoint:
    t_a: float
    fpr: float
    tpr: float


def invert_frame(frame: VoltageFrame, v_ref: float) -> VoltageFrame:
    """Photographic inverse: every voltage v becomes v_ref - v."""
    if np.any(frame.v > v_ref):
        raise InvalidInputError(f"frame contains voltages above v_ref={v_ref}")
    return VoltageFrame(v=v_ref - frame.v)


def train_detector(
    template: VoltageFrame,
    block: int,
    params: CellParams | None = None,
    v_ref: float = 1.0,
    programming=None,
) -> DetectorModel:
    """Train both modules from one template frame.

    Module 2 gets the inverted template and therefore its own x_a
    (v_ref minus the template mean).
    """
    if params is None:
        params = CellParams()
    m1 = train_network(template, block, params, programming)
    m2 = train_network(invert_frame(template, v_ref), block, params, programming)
    return DetectorModel(module1=m1, module2=m2, v_ref=v_ref)


def detect(model: DetectorModel, test: VoltageFrame) -> ChangeMap:
    """Boolean change map: True where the AND of the module outputs is 0."""
    grid1 = evaluate_network(model.module1, test)
    grid2 = evaluate_network(model.module2, invert_frame(test, model.v_ref))
    return (grid1 & grid2) == 0


def merged_output_grid(model: DetectorModel, test: VoltageFrame) -> np.ndarray:
    """AND-combined binary grid (1 = unchanged), the complement of detect()."""
    return (~detect(model, test)).astype(np.uint8)


def extract_blobs(change_map: ChangeMap) -> list[Blob]:
    """4-connected components of the change map, in raster-scan order."""
    mask = np.asarray(change_map, dtype=bool)
    labels, count = ndimage.label(mask, structure=_FOUR_CONNECTED)
    blobs = []
    for k in range(1, count + 1):
        rows, cols = np.nonzero(labels == k)
        cells = sorted(zip(rows.tolist(), cols.tolist()))
        blobs.append(
            Blob(
                cells=cells,
                bbox=(int(rows.min()), int(cols.min()), int(rows.max()), int(cols.max())),
            )
        )
    blobs.sort(key=lambda blob: blob.cells[0])
    return blobs


def _blob_iou(a: Blob, b: Blob) -> float:
    sa, sb = set(a.cells), set(b.cells)
    inter = len(sa & sb)
    if inter == 0:
        return 0.0
    return inter / len(sa | sb)


def match_blobs(
    predicted: Sequence[Blob], truth: Sequence[Blob], iou_threshold: float = 0.5
) -> tuple[int, int, int]:
    """Greedy blob matching: (detected truth blobs, missed truth blobs, unmatched predictions).

    A truth blob counts as detected when some predicted blob overlaps it
    with cell-set IoU at or above the threshold.
    """
    detected = 0
    used: set[int] = set()
    for t in truth:
        for i, p in enumerate(predicted):
            if i in used:
                continue
            if _blob_iou(p, t) >= iou_threshold:
                detected += 1
                used.add(i)
                break
    missed = len(truth) - detected
    spurious = len(predicted) - len(used)
    return detected, missed, spurious


def _cell_counts(pred: np.ndarray, truth: np.ndarray) -> tuple[int, int, int, int]:
    tp = int(np.count_nonzero(pred & truth))
    fp = int(np.count_nonzero(pred & ~truth))
    fn = int(np.count_nonzero(~pred & truth))
    tn = int(np.count_nonzero(~pred & ~truth))
    return tp, fp, fn, tn


def roc_sweep(
    template: VoltageFrame,
    tests: Sequence[tuple[VoltageFrame, np.ndarray]],
    thresholds: Sequence[float],
    block: int,
    params: CellParams | None = None,
    v_ref: float = 1.0,
    blob_mode: bool = False,
    iou_threshold: float = 0.5,
) -> list[RocPoint]:
    """Retrain and re-evaluate the detector at each threshold.

    Counts are cell-level against the ground-truth change maps.  In blob
    mode the true-positive rate instead counts ground-truth blobs matched
    by a predicted blob (IoU rule); the false-positive rate stays
    cell-level, since blobs have no negative class.
    """
    if params is None:
        params = CellParams()
    if len(thresholds) == 0:
        raise InvalidInputError("threshold grid must be nonempty")
    expect_shape = (template.height // block, template.width // block)
    for _, truth in tests:
        if np.asarray(truth).shape != expect_shape:
            raise DimensionError(
                f"ground truth shape {np.asarray(truth).shape} does not match cell grid {expect_shape}"
            )

    points = []
    for t_a in thresholds:
        with warnings.catch_warnings():
            # degenerate sweep thresholds zero out baselines by design
            warnings.simplefilter("ignore")
            model = train_detector(template, block, replace(params, t_a=float(t_a)), v_ref)
        tp = fp = fn = tn = 0
        blob_hits = blob_total = 0
        for test, truth in tests:
            pred = detect(model, test)
            truth = np.asarray(truth, dtype=bool)
            dtp, dfp, dfn, dtn = _cell_counts(pred, truth)
            tp, fp, fn, tn = tp + dtp, fp + dfp, fn + dfn, tn + dtn
            if blob_mode:
                hits, misses, _ = match_blobs(
                    extract_blobs(pred), extract_blobs(truth), iou_threshold
                )
                blob_hits += hits
                blob_total += hits + misses
        if fp + tn == 0:
            raise UndefinedRateError("no negative cells in ground truth; FPR undefined")
        fpr = fp / (fp + tn)
        if blob_mode:
            if blob_total == 0:
                raise UndefinedRateError("no ground-truth blobs; blob-level TPR undefined")
            tpr = blob_hits / blob_total
        else:
            if tp + fn == 0:
                raise UndefinedRateError("no positive cells in ground truth; TPR undefined")
            tpr = tp / (tp + fn)
        points.append(RocPoint(t_a=float(t_a), fpr=fpr, tpr=tpr))
    return points
