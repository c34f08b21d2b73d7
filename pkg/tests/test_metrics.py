import math

import numpy as np
import pytest

from jointflow.grids import ContractViolation, FlowField, Grid
from jointflow.metrics import SsimParams, ae, aee, psnr, snr, ssim


def oracle_ssim(ref, rec, c1, c2, w):
    """Loop-coded windowed SSIM (population statistics)."""
    vals = []
    for j in range(ref.shape[0] - w + 1):
        for i in range(ref.shape[1] - w + 1):
            a = ref[j : j + w, i : i + w].ravel()
            b = rec[j : j + w, i : i + w].ravel()
            mu1, mu2 = a.mean(), b.mean()
            var1 = (a**2).mean() - mu1**2
            var2 = (b**2).mean() - mu2**2
            cov = (a * b).mean() - mu1 * mu2
            vals.append(
                ((2 * mu1 * mu2 + c1) * (2 * cov + c2))
                / ((mu1**2 + mu2**2 + c1) * (var1 + var2 + c2))
            )
    return float(np.mean(vals))


def test_ssim_defaults_are_standard_constants():
    p = SsimParams()
    assert p.c1 == 0.01**2
    assert p.c2 == 0.03**2
    assert p.window == 8


def test_ssim_self_is_one():
    rng = np.random.default_rng(0)
    frame = rng.uniform(0.0, 1.0, (16, 16))
    assert ssim(frame, frame) == pytest.approx(1.0, abs=1e-12)


def test_ssim_inverted_image_below_one_matches_oracle():
    rng = np.random.default_rng(1)
    ref = rng.uniform(0.0, 1.0, (12, 12))
    rec = 1.0 - ref
    got = ssim(ref, rec)
    assert got < 1.0
    ref_val = oracle_ssim(ref, rec, 0.01**2, 0.03**2, 8)
    assert abs(got - ref_val) <= 1e-10


def test_ssim_symmetric():
    rng = np.random.default_rng(2)
    a = rng.uniform(0.0, 1.0, (10, 10))
    b = rng.uniform(0.0, 1.0, (10, 10))
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-14)


def test_ssim_sequence_is_frame_mean():
    rng = np.random.default_rng(3)
    ref = rng.uniform(0.0, 1.0, (3, 9, 9))
    rec = rng.uniform(0.0, 1.0, (3, 9, 9))
    per_frame = [ssim(ref[t], rec[t]) for t in range(3)]
    assert ssim(ref, rec) == pytest.approx(float(np.mean(per_frame)), abs=1e-14)


def test_ssim_rejects_small_frames_and_mismatch():
    with pytest.raises(ContractViolation):
        ssim(np.zeros((4, 4)), np.zeros((4, 4)))
    with pytest.raises(ContractViolation):
        ssim(np.zeros((9, 9)), np.zeros((9, 10)))


# --- PSNR / SNR -----------------------------------------------------------------

def test_psnr_hand_case_20db():
    ref = np.ones((8, 8))
    rec = np.full((8, 8), 0.9)
    assert psnr(ref, rec) == pytest.approx(20.0, abs=1e-12)


def test_psnr_snr_infinite_on_equality():
    frame = np.random.default_rng(4).uniform(0.0, 1.0, (8, 8))
    assert psnr(frame, frame) == math.inf
    assert snr(frame, frame) == math.inf


def test_psnr_snr_match_direct_formula():
    rng = np.random.default_rng(5)
    ref = rng.uniform(0.1, 1.0, (3, 8, 8))
    rec = ref + rng.normal(0.0, 0.05, ref.shape)
    mse = float(np.mean((ref - rec) ** 2))
    assert abs(psnr(ref, rec) - 10 * math.log10(ref.max() ** 2 / mse)) <= 1e-10
    assert abs(snr(ref, rec) - 10 * math.log10(float(np.mean(ref**2)) / mse)) <= 1e-10


def test_psnr_at_least_snr():
    rng = np.random.default_rng(6)
    for _ in range(20):
        ref = rng.uniform(0.0, 1.0, (8, 8))
        rec = rng.uniform(0.0, 1.0, (8, 8))
        assert psnr(ref, rec) >= snr(ref, rec)


# --- flow errors -----------------------------------------------------------------

def const_flow(grid, vx, vy):
    return FlowField.constant(grid, (vx, vy))


def test_aee_zero_on_equality():
    g = Grid(4, 4, 2)
    v = const_flow(g, 0.3, -0.2)
    assert aee(v, v) == 0.0
    assert ae(v, v) == 0.0


def test_aee_constant_offset_is_five():
    g = Grid(4, 4, 2)
    v = const_flow(g, 3.0, 4.0)
    gt = const_flow(g, 0.0, 0.0)
    assert aee(v, gt) == pytest.approx(5.0, abs=1e-14)


def test_aee_matches_direct_formula():
    rng = np.random.default_rng(7)
    g = Grid(5, 4, 2)
    v = FlowField(g, rng.standard_normal(g.shape), rng.standard_normal(g.shape))
    gt = FlowField(g, rng.standard_normal(g.shape), rng.standard_normal(g.shape))
    acc = []
    for t in range(g.nt):  # transitions only
        for j in range(g.ny + 1):
            for i in range(g.nx + 1):
                acc.append(
                    math.hypot(
                        v.vx[t, j, i] - gt.vx[t, j, i], v.vy[t, j, i] - gt.vy[t, j, i]
                    )
                )
    assert abs(aee(v, gt) - float(np.mean(acc))) <= 1e-12


def test_ae_quarter_pi_case():
    g = Grid(2, 2, 1)
    v = const_flow(g, 0.0, 0.0)
    gt = const_flow(g, 1.0, 0.0)
    assert ae(v, gt) == pytest.approx(math.pi / 4.0, abs=1e-12)


def test_ae_matches_direct_formula():
    rng = np.random.default_rng(8)
    g = Grid(4, 4, 1)
    v = FlowField(g, rng.standard_normal(g.shape), rng.standard_normal(g.shape))
    gt = FlowField(g, rng.standard_normal(g.shape), rng.standard_normal(g.shape))
    acc = []
    for j in range(5):
        for i in range(5):
            a = np.array([v.vx[0, j, i], v.vy[0, j, i], 1.0])
            b = np.array([gt.vx[0, j, i], gt.vy[0, j, i], 1.0])
            a /= np.linalg.norm(a)
            b /= np.linalg.norm(b)
            acc.append(math.acos(min(1.0, max(-1.0, float(a @ b)))))
    assert abs(ae(v, gt) - float(np.mean(acc))) <= 1e-10


def test_flow_metrics_nonnegative_and_grid_checked():
    rng = np.random.default_rng(9)
    g = Grid(4, 4, 1)
    v = FlowField(g, rng.standard_normal(g.shape), rng.standard_normal(g.shape))
    gt = FlowField(g, rng.standard_normal(g.shape), rng.standard_normal(g.shape))
    assert aee(v, gt) >= 0.0 and ae(v, gt) >= 0.0
    other = FlowField.zeros(Grid(5, 4, 1))
    with pytest.raises(ContractViolation):
        aee(v, other)
