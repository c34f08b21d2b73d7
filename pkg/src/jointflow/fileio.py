"""File formats: grayscale image sequences, Middlebury .flo flows, and
the color-wheel flow visualization.

Sequences are directories of numbered 8- or 16-bit grayscale PNG/PGM
frames; intensities map to [0, 1] by the bit-depth maximum and are
clamped to [0, 1] only at export.  Flow files follow the Middlebury
binary layout: 4-byte magic "PIEH", little-endian int32 width and
height, then row-major interleaved float32 (vx, vy) pairs.  Invalid-flow
sentinels are preserved on load and refused on save.
"""

from __future__ import annotations

import re
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .grids import ContractViolation, FlowField, Grid, ImageSequence
from .synthetic import INVALID_FLOW_MAGNITUDE

FLO_MAGIC = 202021.25  # reads as "PIEH" in ASCII

_MODE_MAX = {"1": 1.0, "L": 255.0, "I": 65535.0, "I;16": 65535.0}


class FormatError(ValueError):
    """Malformed or inconsistent on-disk data."""


def _frame_index(path: Path):
    digits = re.findall(r"\d+", path.stem)
    if not digits:
        return None
    return int(digits[-1])


def load_sequence(path) -> ImageSequence:
    """Load a directory of numbered grayscale frames as an ImageSequence."""
    root = Path(path)
    if not root.is_dir():
        raise FormatError(f"{root} is not a directory")
    files = [
        p for p in sorted(root.iterdir())
        if p.suffix.lower() in (".png", ".pgm") and _frame_index(p) is not None
    ]
    if not files:
        raise FormatError(f"no numbered .png/.pgm frames in {root}")
    files.sort(key=_frame_index)
    indices = [_frame_index(p) for p in files]
    expected = list(range(indices[0], indices[0] + len(indices)))
    if indices != expected:
        missing = sorted(set(expected) - set(indices))
        raise FormatError(f"frame index gap in {root}: missing {missing}")

    frames = []
    shape = None
    for p in files:
        try:
            img = Image.open(p)
        except OSError as exc:
            raise FormatError(f"unreadable frame {p}: {exc}") from exc
        if img.mode not in _MODE_MAX:
            img = img.convert("L")
        arr = np.asarray(img, dtype=np.float64) / _MODE_MAX[img.mode]
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise FormatError(
                f"mixed frame sizes in {root}: {shape} vs {arr.shape} ({p.name})"
            )
        frames.append(arr)
    if len(frames) < 2:
        raise FormatError(f"{root} holds a single frame; a sequence needs at least two")
    return ImageSequence.from_frames(np.stack(frames))


def save_sequence(images: ImageSequence, path, bit_depth: int = 16, prefix="frame"):
    """Write frames as numbered PNGs, clamping intensities to [0, 1]."""
    if bit_depth not in (8, 16):
        raise FormatError("bit_depth must be 8 or 16")
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    clipped = np.clip(images.values, 0.0, 1.0)
    peak = 255 if bit_depth == 8 else 65535
    paths = []
    for t in range(images.grid.num_frames):
        quant = np.round(clipped[t] * peak)
        if bit_depth == 8:
            img = Image.fromarray(quant.astype(np.uint8))
        else:
            img = Image.fromarray(quant.astype(np.uint16))
        out = root / f"{prefix}_{t:04d}.png"
        img.save(out)
        paths.append(out)
    return paths


def save_flo(path, vx: np.ndarray, vy: np.ndarray):
    """Write one flow transition in the Middlebury .flo binary format."""
    vx = np.asarray(vx, dtype=np.float32)
    vy = np.asarray(vy, dtype=np.float32)
    if vx.ndim != 2 or vx.shape != vy.shape:
        raise FormatError("save_flo needs two equal-shape 2-D channels")
    if np.any(np.sqrt(vx.astype(np.float64) ** 2 + vy.astype(np.float64) ** 2)
              > INVALID_FLOW_MAGNITUDE):
        raise FormatError("refusing to write invalid-flow sentinel values")
    h, w = vx.shape
    data = np.empty((h, w, 2), dtype="<f4")
    data[..., 0] = vx
    data[..., 1] = vy
    with open(path, "wb") as fh:
        fh.write(struct.pack("<f", FLO_MAGIC))
        fh.write(struct.pack("<ii", w, h))
        fh.write(data.tobytes())


def load_flo(path):
    """Read a .flo file; returns (vx, vy) float64 arrays of shape (h, w)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 12:
        raise FormatError(f"{path}: truncated header")
    (magic,) = struct.unpack_from("<f", raw, 0)
    if magic != np.float32(FLO_MAGIC):
        raise FormatError(f"{path}: bad magic {magic!r}, not a .flo file")
    w, h = struct.unpack_from("<ii", raw, 4)
    if w <= 0 or h <= 0:
        raise FormatError(f"{path}: nonsensical dimensions {w}x{h}")
    expected = 12 + 8 * w * h
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f4", offset=12).reshape(h, w, 2)
    return data[..., 0].astype(np.float64), data[..., 1].astype(np.float64)


def flow_from_transitions(transitions) -> FlowField:
    """Build a FlowField from per-transition (vx, vy) frames.

    The trailing storage slice (t = nt) carries no transition and is
    zero-filled.
    """
    if not transitions:
        raise ContractViolation("need at least one transition")
    h, w = transitions[0][0].shape
    grid = Grid(nx=w - 1, ny=h - 1, nt=len(transitions))
    field = FlowField.zeros(grid)
    for t, (vx, vy) in enumerate(transitions):
        field.vx[t] = vx
        field.vy[t] = vy
    return field


# --- Middlebury color wheel ------------------------------------------------------

def _make_color_wheel() -> np.ndarray:
    """Standard 55-entry RGB wheel (RY/YG/GC/CB/BM/MR segments)."""
    segments = [
        (15, (1.0, 0.0, 0.0), (1.0, 1.0, 0.0)),
        (6, (1.0, 1.0, 0.0), (0.0, 1.0, 0.0)),
        (4, (0.0, 1.0, 0.0), (0.0, 1.0, 1.0)),
        (11, (0.0, 1.0, 1.0), (0.0, 0.0, 1.0)),
        (13, (0.0, 0.0, 1.0), (1.0, 0.0, 1.0)),
        (6, (1.0, 0.0, 1.0), (1.0, 0.0, 0.0)),
    ]
    rows = []
    for count, start, stop in segments:
        frac = np.arange(count)[:, None] / count
        rows.append(np.asarray(start)[None, :] * (1 - frac) + np.asarray(stop)[None, :] * frac)
    return np.vstack(rows)


_WHEEL = _make_color_wheel()


def _wheel_index(vx, vy):
    ncols = _WHEEL.shape[0]
    angle = np.arctan2(-vy, -vx) / np.pi  # in (-1, 1]
    return (angle + 1.0) / 2.0 * (ncols - 1)


def colorize_transition(vx: np.ndarray, vy: np.ndarray, max_mag=None) -> np.ndarray:
    """Color-code one flow transition; returns a uint8 RGB image."""
    vx = np.asarray(vx, dtype=np.float64)
    vy = np.asarray(vy, dtype=np.float64)
    mag = np.sqrt(vx**2 + vy**2)
    invalid = ~np.isfinite(mag) | (mag > INVALID_FLOW_MAGNITUDE)
    safe_vx = np.where(invalid, 0.0, vx)
    safe_vy = np.where(invalid, 0.0, vy)
    mag = np.where(invalid, 0.0, mag)
    if max_mag is None:
        max_mag = float(mag.max())
    scale = max_mag if max_mag > 0 else 1.0
    rad = np.minimum(mag / scale, 1.0)

    fk = _wheel_index(safe_vx, safe_vy)
    ncols = _WHEEL.shape[0]
    k0 = np.floor(fk).astype(int) % ncols
    k1 = (k0 + 1) % ncols
    frac = fk - np.floor(fk)
    col = (1 - frac)[..., None] * _WHEEL[k0] + frac[..., None] * _WHEEL[k1]
    col = 1.0 - rad[..., None] * (1.0 - col)  # desaturate toward white at 0
    col[invalid] = 0.0
    return np.floor(255.0 * col).astype(np.uint8)


def flow_to_color(flow: FlowField, max_mag=None) -> list:
    """Color-code every transition of a FlowField (list of RGB frames)."""
    if max_mag is None:
        nt = flow.grid.nt
        mags = np.sqrt(flow.vx[:nt] ** 2 + flow.vy[:nt] ** 2)
        mags = np.where(np.isfinite(mags) & (mags <= INVALID_FLOW_MAGNITUDE), mags, 0.0)
        max_mag = float(mags.max())
    return [
        colorize_transition(flow.vx[t], flow.vy[t], max_mag=max_mag)
        for t in range(flow.grid.nt)
    ]


def save_flow_images(flow: FlowField, path, max_mag=None, prefix="flow"):
    """Write color-coded transition images as PNGs."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    paths = []
    for t, rgb in enumerate(flow_to_color(flow, max_mag=max_mag)):
        out = root / f"{prefix}_{t:04d}.png"
        Image.fromarray(rgb, mode="RGB").save(out)
        paths.append(out)
    return paths
