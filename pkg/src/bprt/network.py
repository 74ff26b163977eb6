"""Tile frames into cell blocks, train a cell network, evaluate test frames.

Training computes the frame mean ``x_a`` once over the whole template,
assigns bilevel weights per cell, and records each cell's output on its
own template block as a baseline.  Evaluation is read-only: weights never
change after training.  All per-cell work is vectorized over the cell
grid, so frames in the hundreds-of-thousands-of-pixels range evaluate in
well under a millisecond.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .cell import SOFT, CellParams
from .errors import (
    DimensionError,
    InvalidInputError,
    NonConvergenceError,
    SingularThresholdError,
)
from .memristor import MemristorState, PulseSpec, memristance, program_to_conductance

# Cell outputs over the grid: uint8 array of {0, 1}, shape (cells_h, cells_w).
OutputGrid = np.ndarray


@dataclass
class VoltageFrame:
    """Grid of pixel voltages, row-major, shape (height, width)."""

    v: np.ndarray

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float)
        if self.v.ndim != 2 or self.v.size == 0:
            raise InvalidInputError("frame must be a nonempty 2-D voltage grid")
        if not np.all(np.isfinite(self.v)) or np.any(self.v < 0):
            raise InvalidInputError("frame voltages must be finite and nonnegative")

    @property
    def width(self) -> int:
        return self.v.shape[1]

    @property
    def height(self) -> int:
        return self.v.shape[0]


@dataclass
class TrainedNetwork:
    """Frozen result of training: per-cell conductances plus statistics.

    weights has shape (cells_h, cells_w, block**2); baselines is the hard
    output each cell produced on its own template block.
    """

    block: int
    x_a: float
    weights: np.ndarray
    baselines: np.ndarray
    params: CellParams

    @property
    def cells_h(self) -> int:
        return self.weights.shape[0]

    @property
    def cells_w(self) -> int:
        return self.weights.shape[1]

    @property
    def zero_baseline_cells(self) -> list[tuple[int, int]]:
        """Cells whose template block already trips the threshold (row, col)."""
        rows, cols = np.nonzero(self.baselines == 0)
        return list(zip(rows.tolist(), cols.tolist()))


def _check_tiling(width: int, height: int, block: int) -> None:
    if block < 1:
        raise DimensionError(f"block size must be >= 1, got {block}")
    if width % block or height % block:
        raise DimensionError(
            f"frame {width}x{height} is not divisible into {block}x{block} blocks"
        )


def _tile_grid(v: np.ndarray, block: int) -> np.ndarray:
    """Reshape (H, W) pixels into (H/block, W/block, block**2) cell vectors."""
    h, w = v.shape
    ch, cw = h // block, w // block
    return (
        v.reshape(ch, block, cw, block)
        .transpose(0, 2, 1, 3)
        .reshape(ch, cw, block * block)
    )


def tile_frame(frame: VoltageFrame, block: int) -> np.ndarray:
    """Split a frame into per-cell input vectors.

    Cells are ordered row-major over the grid and pixels row-major within
    each block; returns shape (cells, block**2).
    """
    _check_tiling(frame.width, frame.height, block)
    grid = _tile_grid(frame.v, block)
    return grid.reshape(-1, block * block)


def untile_frame(cells: np.ndarray, width: int, height: int, block: int) -> VoltageFrame:
    """Inverse of tile_frame; reassembles the original pixel grid."""
    _check_tiling(width, height, block)
    ch, cw = height // block, width // block
    if cells.shape != (ch * cw, block * block):
        raise DimensionError(
            f"expected {ch * cw} cells of {block * block} pixels, got {cells.shape}"
        )
    v = (
        cells.reshape(ch, cw, block, block)
        .transpose(0, 2, 1, 3)
        .reshape(height, width)
    )
    return VoltageFrame(v=v)


def _x0_grid(blocks: np.ndarray, weights: np.ndarray, params: CellParams) -> np.ndarray:
    num = np.sum(blocks * weights, axis=2)
    den = params.w_0 + np.sum(weights, axis=2)
    return num / den


def _decide(x0: np.ndarray, params: CellParams) -> np.ndarray:
    """Per-cell binary output from divider voltages.

    Soft mode thresholds the logistic at 1/2, which decides identically to
    the hard rule everywhere except exactly at x0 = t_a.
    """
    if params.mode == SOFT:
        if params.t_a == 0:
            raise SingularThresholdError("soft threshold needs t_a > 0")
        e = params.b1 * np.exp(-(x0 / params.t_a) * np.log(params.b1))
        return (e / (1.0 + e) > 0.5).astype(np.uint8)
    return (x0 < params.t_a).astype(np.uint8)


def _program_weights(
    ideal: np.ndarray, programming: PulseSpec, params: CellParams
) -> np.ndarray:
    """Realize each bilevel target on a fresh device via pulse programming.

    Devices start fully doped (x = 1); identical targets give identical
    trajectories, so each distinct target is simulated once and the
    achieved conductance reused.
    """
    achieved: dict[float, float] = {}
    out = np.empty_like(ideal)
    ch, cw, n = ideal.shape
    for r in range(ch):
        for c in range(cw):
            for i in range(n):
                target = float(ideal[r, c, i])
                if target not in achieved:
                    try:
                        final = program_to_conductance(
                            MemristorState(x=1.0), target, programming
                        )
                    except NonConvergenceError as err:
                        raise NonConvergenceError(
                            f"cell ({r}, {c}) input {i}: {err}",
                            state=err.state,
                            pulses_applied=err.pulses_applied,
                        ) from err
                    achieved[target] = 1.0 / memristance(final)
                out[r, c, i] = achieved[target]
    return out


def train_network(
    template: VoltageFrame,
    block: int,
    params: CellParams | None = None,
    programming: PulseSpec | None = None,
) -> TrainedNetwork:
    """Train one network on a template frame.

    ``x_a`` is the arithmetic mean of every template voltage, computed once
    and reused for all cells.  With ``programming`` given, each bilevel
    weight is additionally realized on a simulated device and the achieved
    (slightly off-target) conductance stored.  Cells whose own template
    block already produces output 0 are reported through a warning; they
    are recorded, not rejected.
    """
    if params is None:
        params = CellParams()
    _check_tiling(template.width, template.height, block)

    x_a = float(np.mean(template.v))
    blocks = _tile_grid(template.v, block)
    weights = np.where(blocks > x_a, params.w_h, params.w_l)
    if programming is not None:
        weights = _program_weights(weights, programming, params)

    baselines = ((_x0_grid(blocks, weights, params)) < params.t_a).astype(np.uint8)
    net = TrainedNetwork(
        block=block, x_a=x_a, weights=weights, baselines=baselines, params=params
    )
    bad = net.zero_baseline_cells
    if bad:
        shown = ", ".join(str(rc) for rc in bad[:8])
        more = "" if len(bad) <= 8 else f" (+{len(bad) - 8} more)"
        warnings.warn(
            f"{len(bad)} cell(s) produce output 0 on their own template block: {shown}{more}",
            stacklevel=2,
        )
    return net


def evaluate_network(net: TrainedNetwork, test: VoltageFrame) -> OutputGrid:
    """Per-cell binary outputs of a trained network on a test frame.

    Weights are read-only; the network is left untouched.
    """
    expect_w = net.cells_w * net.block
    expect_h = net.cells_h * net.block
    if (test.width, test.height) != (expect_w, expect_h):
        raise DimensionError(
            f"test frame {test.width}x{test.height} does not match "
            f"trained dimensions {expect_w}x{expect_h}"
        )
    blocks = _tile_grid(test.v, net.block)
    return _decide(_x0_grid(blocks, net.weights, net.params), net.params)


def global_similarity(grid: OutputGrid) -> float:
    """Mean cell output over the frame: 1.0 means no change anywhere."""
    grid = np.asarray(grid)
    if grid.size == 0:
        raise InvalidInputError("output grid must be nonempty")
    return float(np.count_nonzero(grid)) / grid.size
