"""Error measures for reconstructed images and estimated flows.

Image quality: SSIM over 8x8 uniform sliding windows (framewise, then
averaged over frames), SNR and PSNR in dB.  Flow quality: average
endpoint error in pixels and angular error in radians, both evaluated
per frame transition (time slices t < nt) and averaged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .grids import ContractViolation, FlowField, ImageSequence


@dataclass
class SsimParams:
    """Stabilization constants and window size of the SSIM index."""

    c1: float = 0.01**2
    c2: float = 0.03**2
    window: int = 8


def _frames(u) -> np.ndarray:
    arr = u.values if isinstance(u, ImageSequence) else np.asarray(u, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise ContractViolation(f"expected a frame or sequence, got shape {arr.shape}")
    return arr


def _ssim_frame(ref: np.ndarray, rec: np.ndarray, params: SsimParams) -> float:
    w = params.window
    if ref.shape[0] < w or ref.shape[1] < w:
        raise ContractViolation(f"frame smaller than the {w}x{w} SSIM window")
    n = w * w
    win_ref = sliding_window_view(ref, (w, w))
    win_rec = sliding_window_view(rec, (w, w))
    mu1 = win_ref.mean(axis=(-1, -2))
    mu2 = win_rec.mean(axis=(-1, -2))
    var1 = (win_ref**2).sum(axis=(-1, -2)) / n - mu1**2
    var2 = (win_rec**2).sum(axis=(-1, -2)) / n - mu2**2
    cov = (win_ref * win_rec).sum(axis=(-1, -2)) / n - mu1 * mu2
    num = (2 * mu1 * mu2 + params.c1) * (2 * cov + params.c2)
    den = (mu1**2 + mu2**2 + params.c1) * (var1 + var2 + params.c2)
    return float(np.mean(num / den))


def ssim(u_ref, u_rec, params: SsimParams | None = None) -> float:
    """Mean local structural similarity; sequences average over frames."""
    params = params or SsimParams()
    ref = _frames(u_ref)
    rec = _frames(u_rec)
    if ref.shape != rec.shape:
        raise ContractViolation(f"shape mismatch {ref.shape} vs {rec.shape}")
    return float(np.mean([_ssim_frame(r, s, params) for r, s in zip(ref, rec)]))


def _mse(ref: np.ndarray, rec: np.ndarray) -> float:
    return float(np.mean((ref - rec) ** 2))


def psnr(u_ref, u_rec) -> float:
    """10*log10(max(ref^2) / mse); +inf when the inputs coincide."""
    ref = _frames(u_ref)
    rec = _frames(u_rec)
    if ref.shape != rec.shape:
        raise ContractViolation(f"shape mismatch {ref.shape} vs {rec.shape}")
    mse = _mse(ref, rec)
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(float(np.max(ref**2)) / mse)


def snr(u_ref, u_rec) -> float:
    """10*log10(mean(ref^2) / mse); +inf when the inputs coincide."""
    ref = _frames(u_ref)
    rec = _frames(u_rec)
    if ref.shape != rec.shape:
        raise ContractViolation(f"shape mismatch {ref.shape} vs {rec.shape}")
    mse = _mse(ref, rec)
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(float(np.mean(ref**2)) / mse)


def _transition_channels(v: FlowField, v_gt: FlowField):
    if v.grid != v_gt.grid:
        raise ContractViolation("flow grids differ")
    nt = v.grid.nt
    return (v.vx[:nt], v.vy[:nt], v_gt.vx[:nt], v_gt.vy[:nt])


def aee(v: FlowField, v_gt: FlowField) -> float:
    """Average endpoint error in pixels over all transitions."""
    vx, vy, gx, gy = _transition_channels(v, v_gt)
    return float(np.mean(np.sqrt((vx - gx) ** 2 + (vy - gy) ** 2)))


def ae(v: FlowField, v_gt: FlowField) -> float:
    """Mean angular error (radians) between 3-D lifted, normalized flows."""
    vx, vy, gx, gy = _transition_channels(v, v_gt)
    norm_v = np.sqrt(vx**2 + vy**2 + 1.0)
    norm_g = np.sqrt(gx**2 + gy**2 + 1.0)
    dot = (vx * gx + vy * gy + 1.0) / (norm_v * norm_g)
    return float(np.mean(np.arccos(np.clip(dot, -1.0, 1.0))))
