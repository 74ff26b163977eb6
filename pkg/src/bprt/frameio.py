"""Frame ingestion, change-map rendering, model persistence, netlist export.

Images move through NetPBM only: P2/P5 grayscale in, P5 change maps and
P6 red-tinted overlays out.  Models serialize to a line-oriented UTF-8
text format (header ``BPRT1``) with every conductance printed to 17
significant digits, so a save/load round trip is bit-exact and a second
save reproduces the first byte for byte.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .cell import CellParams
from .detector import ChangeMap, DetectorModel
from .errors import DimensionError, ModelFormatError, ParseError
from .network import TrainedNetwork, VoltageFrame

MODEL_MAGIC = "BPRT1"
_WHITESPACE = b" \t\r\n\v\f"


@dataclass
class GrayFrame:
    """8-bit grayscale pixels, row-major, shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.uint8)
        if self.pixels.ndim != 2 or self.pixels.size == 0:
            raise ParseError("frame must be a nonempty 2-D pixel grid")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


# ---------------------------------------------------------------------------
# NetPBM parsing


def _skip_space_and_comments(data: bytes, pos: int) -> int:
    while pos < len(data):
        ch = data[pos : pos + 1]
        if ch in (b"#",):
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif ch and ch in _WHITESPACE:
            pos += 1
        else:
            break
    return pos


def _read_int(data: bytes, pos: int, what: str) -> tuple[int, int]:
    pos = _skip_space_and_comments(data, pos)
    start = pos
    while pos < len(data) and data[pos : pos + 1].isdigit():
        pos += 1
    if pos == start:
        raise ParseError(f"expected {what}", offset=start)
    return int(data[start:pos]), pos


def load_pgm(data: bytes) -> GrayFrame:
    """Parse a P2 (ASCII) or P5 (binary) grayscale image, maxval up to 255.

    Comments and arbitrary whitespace are accepted anywhere the format
    allows them.  Errors carry the byte offset of the problem.
    """
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise ParseError(f"not a P2/P5 NetPBM image (magic {magic!r})", offset=0)
    width, pos = _read_int(data, 2, "width")
    height, pos = _read_int(data, pos, "height")
    maxval_at = _skip_space_and_comments(data, pos)
    maxval, pos = _read_int(data, pos, "maxval")
    if width < 1 or height < 1:
        raise ParseError(f"bad dimensions {width}x{height}", offset=2)
    if maxval < 1 or maxval > 255:
        raise ParseError(f"maxval {maxval} outside [1, 255]", offset=maxval_at)

    count = width * height
    if magic == b"P5":
        if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
            raise ParseError("expected single whitespace before binary payload", offset=pos)
        pos += 1
        payload = data[pos : pos + count]
        if len(payload) < count:
            raise ParseError(
                f"truncated payload: need {count} bytes, have {len(payload)}",
                offset=len(data),
            )
        pixels = np.frombuffer(payload, dtype=np.uint8).copy()
        if maxval < 255 and pixels.max(initial=0) > maxval:
            bad = int(np.argmax(pixels > maxval))
            raise ParseError(
                f"pixel value {pixels[bad]} exceeds maxval {maxval}", offset=pos + bad
            )
    else:
        values = np.empty(count, dtype=np.uint8)
        for i in range(count):
            value, pos = _read_int(data, pos, f"pixel {i}")
            if value > maxval:
                raise ParseError(f"pixel value {value} exceeds maxval {maxval}", offset=pos)
            values[i] = value
        pixels = values
    return GrayFrame(pixels=pixels.reshape(height, width))


def write_pgm(frame: GrayFrame) -> bytes:
    """Canonical P5 encoding."""
    header = f"P5\n{frame.width} {frame.height}\n255\n".encode()
    return header + frame.pixels.tobytes()


def normalize(frame: GrayFrame, v_ref: float = 1.0) -> VoltageFrame:
    """Linear pixel-to-voltage map: v = intensity / 255 * v_ref."""
    if not v_ref > 0:
        raise ParseError(f"v_ref must be positive, got {v_ref}")
    return VoltageFrame(v=frame.pixels.astype(float) / 255.0 * v_ref)


def write_change_map(change_map: ChangeMap) -> bytes:
    """Change map as P5: changed cells black (0), unchanged white (255)."""
    mask = np.asarray(change_map, dtype=bool)
    pixels = np.where(mask, 0, 255).astype(np.uint8)
    return write_pgm(GrayFrame(pixels=pixels))


def read_change_map(data: bytes) -> ChangeMap:
    """Inverse of write_change_map; intensity below 128 counts as changed."""
    return load_pgm(data).pixels < 128


def overlay(change_map: ChangeMap, frame: GrayFrame) -> bytes:
    """P6 overlay: changed blocks blended 50% with pure red over the frame."""
    mask = np.asarray(change_map, dtype=bool)
    ch, cw = mask.shape
    if frame.height % ch or frame.width % cw:
        raise DimensionError(
            f"frame {frame.width}x{frame.height} is not a block multiple of map {cw}x{ch}"
        )
    block_h, block_w = frame.height // ch, frame.width // cw
    if block_h != block_w:
        raise DimensionError(f"non-square blocks {block_w}x{block_h}")

    gray = frame.pixels.astype(np.uint16)
    rgb = np.stack([gray, gray, gray], axis=-1)
    big = np.kron(mask, np.ones((block_h, block_w), dtype=bool))
    rgb[big, 0] = (255 + gray[big]) // 2
    rgb[big, 1] = gray[big] // 2
    rgb[big, 2] = gray[big] // 2
    header = f"P6\n{frame.width} {frame.height}\n255\n".encode()
    return header + rgb.astype(np.uint8).tobytes()


# ---------------------------------------------------------------------------
# Model persistence


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _module_lines(module: TrainedNetwork, out: list[str]) -> None:
    out.append(f"xa {_fmt(module.x_a)}")
    out.append("weights")
    ch, cw, n = module.weights.shape
    for r in range(ch):
        out.append(" ".join(_fmt(g) for g in module.weights[r].reshape(cw * n)))
    out.append("baselines")
    for r in range(ch):
        out.append(" ".join(str(int(v)) for v in module.baselines[r]))


def save_model(model: DetectorModel) -> bytes:
    """Serialize to the line-oriented BPRT1 text format with trailing CRC-32."""
    m1 = model.module1
    p = m1.params
    width = m1.cells_w * m1.block
    height = m1.cells_h * m1.block
    lines = [
        MODEL_MAGIC,
        f"dims {width} {height} {m1.block}",
        f"vref {_fmt(model.v_ref)}",
        "params "
        + " ".join(_fmt(v) for v in (p.w_h, p.w_l, p.w_0, p.t_a, p.b, p.b1)),
    ]
    _module_lines(model.module1, lines)
    _module_lines(model.module2, lines)
    body = ("\n".join(lines) + "\n").encode()
    crc = zlib.crc32(body) & 0xFFFFFFFF
    return body + f"crc {crc:08x}\n".encode()


class _LineReader:
    def __init__(self, lines: list[str]):
        self.lines = lines
        self.i = 0

    def next(self, what: str) -> str:
        if self.i >= len(self.lines):
            raise ModelFormatError(f"unexpected end of model file, expected {what}")
        line = self.lines[self.i]
        self.i += 1
        return line


def _parse_module(
    reader: _LineReader, cells_h: int, cells_w: int, n: int, params: CellParams
) -> TrainedNetwork:
    xa_line = reader.next("xa line").split()
    if len(xa_line) != 2 or xa_line[0] != "xa":
        raise ModelFormatError(f"expected 'xa <v>', got {' '.join(xa_line)!r}")
    x_a = float(xa_line[1])
    if reader.next("weights keyword") != "weights":
        raise ModelFormatError("expected 'weights' section")
    weights = np.empty((cells_h, cells_w, n), dtype=float)
    for r in range(cells_h):
        row = reader.next(f"weights row {r}").split()
        if len(row) != cells_w * n:
            raise ModelFormatError(
                f"weights row {r} has {len(row)} values, expected {cells_w * n}"
            )
        weights[r] = np.array([float(v) for v in row]).reshape(cells_w, n)
    if reader.next("baselines keyword") != "baselines":
        raise ModelFormatError("expected 'baselines' section")
    baselines = np.empty((cells_h, cells_w), dtype=np.uint8)
    for r in range(cells_h):
        row = reader.next(f"baselines row {r}").split()
        if len(row) != cells_w or any(v not in ("0", "1") for v in row):
            raise ModelFormatError(f"baselines row {r} must hold {cells_w} 0/1 entries")
        baselines[r] = [int(v) for v in row]
    block = int(round(n**0.5))
    return TrainedNetwork(
        block=block, x_a=x_a, weights=weights, baselines=baselines, params=params
    )


def load_model(data: bytes) -> DetectorModel:
    """Parse and verify a BPRT1 model file (version, checksum, dimensions)."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as err:
        raise ModelFormatError(f"model file is not UTF-8: {err}") from err
    crc_at = text.rfind("crc ")
    if crc_at < 0 or not text.endswith("\n"):
        raise ModelFormatError("missing trailing crc line")
    body, crc_line = text[:crc_at], text[crc_at:].strip()
    parts = crc_line.split()
    if len(parts) != 2:
        raise ModelFormatError(f"malformed crc line {crc_line!r}")
    expected = zlib.crc32(body.encode()) & 0xFFFFFFFF
    if int(parts[1], 16) != expected:
        raise ModelFormatError(
            f"checksum mismatch: file says {parts[1]}, computed {expected:08x}"
        )

    lines = body.splitlines()
    reader = _LineReader(lines)
    magic = reader.next("magic")
    if magic != MODEL_MAGIC:
        raise ModelFormatError(f"unsupported model version {magic!r}, expected {MODEL_MAGIC!r}")
    dims = reader.next("dims line").split()
    if len(dims) != 4 or dims[0] != "dims":
        raise ModelFormatError("expected 'dims <w> <h> <block>'")
    width, height, block = (int(v) for v in dims[1:])
    if block < 1 or width % block or height % block:
        raise ModelFormatError(f"inconsistent dims {width}x{height} block {block}")
    vref_line = reader.next("vref line").split()
    if len(vref_line) != 2 or vref_line[0] != "vref":
        raise ModelFormatError("expected 'vref <v>'")
    v_ref = float(vref_line[1])
    params_line = reader.next("params line").split()
    if len(params_line) != 7 or params_line[0] != "params":
        raise ModelFormatError("expected 'params <w_h> <w_l> <w_0> <t_a> <b> <b1>'")
    w_h, w_l, w_0, t_a, b, b1 = (float(v) for v in params_line[1:])
    params = CellParams(w_h=w_h, w_l=w_l, w_0=w_0, t_a=t_a, b=b, b1=b1)

    cells_h, cells_w, n = height // block, width // block, block * block
    module1 = _parse_module(reader, cells_h, cells_w, n, params)
    module2 = _parse_module(reader, cells_h, cells_w, n, params)
    if reader.i != len(lines):
        raise ModelFormatError(f"trailing garbage after module 2 at line {reader.i + 1}")
    return DetectorModel(module1=module1, module2=module2, v_ref=v_ref)


# ---------------------------------------------------------------------------
# Netlist export


def export_netlist(model: DetectorModel) -> str:
    """SPICE-style resistor network for both modules.

    One resistor per programmed weight, one constant leg per cell, one
    inverter instance per cell referencing an empty INV subcircuit stub.
    Resistances are exact reciprocals of the stored conductances, printed
    to 17 significant digits.  Ordering is module, then cell row-major,
    then input index, so repeated exports are byte-identical.
    """
    m1 = model.module1
    p = m1.params
    lines = [
        "* bilevel resistance threshold network",
        f"* block={m1.block} t_a={_fmt(p.t_a)} "
        f"xa_m1={_fmt(m1.x_a)} xa_m2={_fmt(model.module2.x_a)}",
        ".SUBCKT INV in out",
        ".ENDS",
    ]
    for m_index, module in ((1, model.module1), (2, model.module2)):
        ch, cw, n = module.weights.shape
        for r in range(ch):
            for c in range(cw):
                j = r * cw + c
                mid = f"mid_m{m_index}_{j}"
                for i in range(n):
                    ohms = 1.0 / module.weights[r, c, i]
                    lines.append(
                        f"R_m{m_index}_{j}_{i} in_m{m_index}_{j}_{i} {mid} {_fmt(ohms)}"
                    )
                lines.append(f"R0_m{m_index}_{j} {mid} 0 {_fmt(1.0 / p.w_0)}")
                lines.append(f"Xinv_m{m_index}_{j} {mid} out_m{m_index}_{j} INV")
    lines.append(".END")
    return "\n".join(lines) + "\n"
