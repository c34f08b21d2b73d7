"""Synthetic scenes with known ground-truth motion.

Two families: fully analytic scenes (translating disc / ramp) whose
frames are rendered in closed form per time step, and sequences built
from a real base frame by repeated bicubic warping along a ground-truth
flow that is first rescaled to maximum magnitude 1 (sub-pixel motion is
what the linearized transport term models).

Warping samples the source frame at x + k*v(x) with a Catmull-Rom
kernel.  Frames are generated by sampling at x - k*v_gt so that features
advance by +v_gt per frame and the sequence satisfies the discrete
transport identity with the returned ground truth (taking the sampling
formula verbatim would negate every recovered flow).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import ContractViolation, FlowField, Grid, ImageSequence

# Middlebury convention: flow entries at or beyond this magnitude mark
# invalid/unknown pixels.
INVALID_FLOW_MAGNITUDE = 1e9


def scale_flow_to_unit(vx: np.ndarray, vy: np.ndarray):
    """Rescale a flow so its maximum Euclidean magnitude is at most 1.

    Invalid-flow sentinels are zeroed and excluded from the maximum.
    Returns (vx, vy, scale_applied).
    """
    vx = np.asarray(vx, dtype=np.float64).copy()
    vy = np.asarray(vy, dtype=np.float64).copy()
    mag = np.sqrt(vx**2 + vy**2)
    invalid = ~np.isfinite(mag) | (mag > INVALID_FLOW_MAGNITUDE)
    if invalid.all():
        raise ContractViolation("scale_flow_to_unit: flow has no valid entries")
    vx[invalid] = 0.0
    vy[invalid] = 0.0
    peak = float(np.sqrt(vx**2 + vy**2).max())
    if peak <= 1.0:
        return vx, vy, 1.0
    return vx / peak, vy / peak, 1.0 / peak


def _catmull_rom_weights(s: np.ndarray):
    """Kernel weights at offsets -1, 0, 1, 2 for fractional position s."""
    s2 = s * s
    s3 = s2 * s
    w0 = -0.5 * s3 + s2 - 0.5 * s
    w1 = 1.5 * s3 - 2.5 * s2 + 1.0
    w2 = -1.5 * s3 + 2.0 * s2 + 0.5 * s
    w3 = 0.5 * s3 - 0.5 * s2
    return w0, w1, w2, w3


def warp_cubic(frame: np.ndarray, flow, k: float = 1.0) -> np.ndarray:
    """Sample `frame` at x + k*v(x) by Catmull-Rom bicubic interpolation.

    `flow` is a pair (vx, vy) of per-pixel arrays or two scalars.
    Sample positions outside the frame clamp to the boundary value.
    """
    frame = np.asarray(frame, dtype=np.float64)
    h, w = frame.shape
    fx, fy = flow
    ii = np.arange(w)[None, :]
    jj = np.arange(h)[:, None]
    xs = np.clip(ii + k * np.asarray(fx, dtype=np.float64), 0.0, w - 1.0)
    ys = np.clip(jj + k * np.asarray(fy, dtype=np.float64), 0.0, h - 1.0)
    xs = np.broadcast_to(xs, (h, w))
    ys = np.broadcast_to(ys, (h, w))

    ix = np.floor(xs).astype(np.int64)
    iy = np.floor(ys).astype(np.int64)
    wx = _catmull_rom_weights(xs - ix)
    wy = _catmull_rom_weights(ys - iy)

    out = np.zeros_like(frame)
    for b, wyb in enumerate(wy):
        rows = np.clip(iy + (b - 1), 0, h - 1)
        for a, wxa in enumerate(wx):
            cols = np.clip(ix + (a - 1), 0, w - 1)
            out += wyb * wxa * frame[rows, cols]
    return out


def add_gaussian_noise(images: ImageSequence, variance: float, seed) -> ImageSequence:
    """Add i.i.d. zero-mean Gaussian noise with the given variance.

    No clamping; intensities are only clamped at image export.
    """
    if variance < 0:
        raise ContractViolation("noise variance must be >= 0")
    if variance == 0:
        return images.copy()
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, np.sqrt(variance), images.grid.shape)
    return ImageSequence(images.grid, images.values + noise)


@dataclass
class SyntheticScene:
    """Recipe for a synthetic experiment instance.

    kind: 'translating_disc', 'translating_ramp' or 'warped_from_flow'.
    For the analytic kinds, `velocity` is the constant ground-truth flow
    in pixels/frame; for 'warped_from_flow' supply `base_frame` and a
    per-pixel `flow` pair (rescaled to unit magnitude internally).
    """

    kind: str
    nx: int = 63
    ny: int = 63
    nt: int = 3
    noise_variance: float = 0.0
    velocity: tuple = (0.5, 0.0)
    base_frame: np.ndarray | None = None
    flow: tuple | None = None
    disc_radius: float | None = None
    edge_width: float = 2.0
    # Optional smooth background pattern that translates rigidly with the
    # disc (ground truth stays the constant velocity).  Dense gradients
    # make the scene behave like the natural textured sequences the joint
    # model is meant for; amplitude 0 keeps the plain disc on black.
    background_amplitude: float = 0.0
    background_period: float = 16.0

    def grid(self) -> Grid:
        return Grid(self.nx, self.ny, self.nt)


def _disc_frame(grid: Grid, center, radius: float, edge_width: float) -> np.ndarray:
    ii = np.arange(grid.nx + 1)[None, :]
    jj = np.arange(grid.ny + 1)[:, None]
    dist = np.sqrt((ii - center[0]) ** 2 + (jj - center[1]) ** 2)
    return np.clip(0.5 + (radius - dist) / edge_width, 0.0, 1.0)


def _make_disc(scene: SyntheticScene):
    grid = scene.grid()
    vx, vy = scene.velocity
    radius = scene.disc_radius or min(grid.nx, grid.ny) / 4.0
    cx0 = grid.nx / 2.0 - scene.nt * vx / 2.0
    cy0 = grid.ny / 2.0 - scene.nt * vy / 2.0
    frames = []
    for t in range(grid.num_frames):
        disc = _disc_frame(grid, (cx0 + t * vx, cy0 + t * vy), radius, scene.edge_width)
        if scene.background_amplitude > 0:
            xi = np.arange(grid.nx + 1)[None, :] - t * vx
            yj = np.arange(grid.ny + 1)[:, None] - t * vy
            k = 2.0 * np.pi / scene.background_period
            bg = 0.45 + scene.background_amplitude * np.sin(k * xi) * np.sin(k * yj)
            disc = np.maximum(bg, disc)
        frames.append(disc)
    return ImageSequence(grid, np.stack(frames)), FlowField.constant(grid, (vx, vy))


def _make_ramp(scene: SyntheticScene):
    grid = scene.grid()
    vx, vy = scene.velocity
    speed = float(np.hypot(vx, vy))
    dx, dy = (vx / speed, vy / speed) if speed > 0 else (1.0, 0.0)
    ii = np.arange(grid.nx + 1)[None, None, :]
    jj = np.arange(grid.ny + 1)[None, :, None]
    tt = np.arange(grid.num_frames)[:, None, None]
    values = dx * (ii - tt * vx) + dy * (jj - tt * vy)
    clean = ImageSequence(grid, np.broadcast_to(values, grid.shape).copy())
    return clean, FlowField.constant(grid, (vx, vy))


def _make_warped(scene: SyntheticScene):
    if scene.base_frame is None or scene.flow is None:
        raise ContractViolation("warped_from_flow needs base_frame and flow")
    base = np.asarray(scene.base_frame, dtype=np.float64)
    vx, vy, _ = scale_flow_to_unit(scene.flow[0], scene.flow[1])
    if vx.shape != base.shape:
        raise ContractViolation("flow shape does not match base frame")
    grid = Grid(base.shape[1] - 1, base.shape[0] - 1, scene.nt)
    # Sample at x - k*v so features advance by +v per frame.
    frames = [warp_cubic(base, (-vx, -vy), k) for k in range(grid.num_frames)]
    gt = FlowField(
        grid,
        np.broadcast_to(vx, grid.shape).copy(),
        np.broadcast_to(vy, grid.shape).copy(),
    )
    return ImageSequence(grid, np.stack(frames)), gt


_BUILDERS = {
    "translating_disc": _make_disc,
    "translating_ramp": _make_ramp,
    "warped_from_flow": _make_warped,
}


@dataclass
class SceneData:
    """Artifacts of one generated scene."""

    noisy: ImageSequence
    clean: ImageSequence
    flow_truth: FlowField


def make_scene(scene: SyntheticScene, seed=0) -> SceneData:
    """Build clean frames, the ground-truth flow, and the noisy input."""
    if scene.kind not in _BUILDERS:
        raise ContractViolation(f"unknown scene kind {scene.kind!r}")
    clean, gt = _BUILDERS[scene.kind](scene)
    noisy = add_gaussian_noise(clean, scene.noise_variance, seed)
    return SceneData(noisy=noisy, clean=clean, flow_truth=gt)


def intensity_centroid(frame: np.ndarray):
    """(x, y) intensity-weighted centroid of a frame."""
    total = float(frame.sum())
    if total == 0.0:
        raise ContractViolation("centroid of an all-zero frame is undefined")
    ii = np.arange(frame.shape[1])[None, :]
    jj = np.arange(frame.shape[0])[:, None]
    return float((frame * ii).sum() / total), float((frame * jj).sum() / total)
