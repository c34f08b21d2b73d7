import numpy as np
import pytest
from scipy import optimize

from jointflow.grids import ContractViolation
from jointflow.prox import ShrinkageData, project_linf_ball, prox_l2_data, shrink_affine


# --- quadratic data prox ------------------------------------------------------

def test_prox_l2_hand_case_f_zero():
    yt = np.array([2.0, -4.0])
    np.testing.assert_allclose(prox_l2_data(yt, np.zeros(2), 1.0), yt / 2.0)


def test_prox_l2_matches_calculus_oracle():
    # argmin_y 1/2 (y - y~)^2 + sigma (1/2 y^2 + y f)  =>  y = (y~ - sigma f)/(1 + sigma)
    rng = np.random.default_rng(0)
    for _ in range(50):
        yt, f = rng.standard_normal(2)
        sigma = float(rng.uniform(0.05, 5.0))
        got = prox_l2_data(np.array([yt]), np.array([f]), sigma)[0]
        grad_at_got = (got - yt) + sigma * (got + f)
        assert abs(grad_at_got) <= 1e-12


def golden_section(fun, lo, hi, iters=120):
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def test_prox_l2_matches_scalar_search_oracle():
    rng = np.random.default_rng(1)
    for _ in range(100):
        yt, f = rng.standard_normal(2)
        sigma = float(rng.uniform(0.05, 5.0))

        def objective(y):
            return 0.5 * (y - yt) ** 2 + sigma * (0.5 * y**2 + y * f)

        span = abs(yt) + sigma * abs(f) + 1.0
        ref = golden_section(objective, -span, span)
        got = prox_l2_data(np.array([yt]), np.array([f]), sigma)[0]
        # Golden section localizes a smooth minimum no better than about
        # sqrt(eps); 1e-6 is the oracle resolution pinned for this suite.
        assert abs(got - ref) <= 1e-6


def test_prox_l2_requires_positive_sigma():
    with pytest.raises(ContractViolation):
        prox_l2_data(np.zeros(2), np.zeros(2), 0.0)


def test_prox_l2_proportional_input_case():
    # y~ = f: output is f*(1 - sigma)/(sigma + 1); check the prox objective
    # gradient vanishes there.
    f = np.array([0.7, -1.2, 3.0])
    sigma = 2.5
    out = prox_l2_data(f, f, sigma)
    np.testing.assert_allclose(out, f * (1 - sigma) / (sigma + 1))
    grad = (out - f) + sigma * (out + f)
    np.testing.assert_allclose(grad, 0.0, atol=1e-12)


# --- ball projection ----------------------------------------------------------

def test_projection_inside_untouched():
    v = np.array([[3.0], [4.0]])
    np.testing.assert_array_equal(project_linf_ball(v, 10.0, channel_axis=0), v)


def test_projection_on_boundary_untouched():
    v = np.array([[3.0], [4.0]])
    np.testing.assert_array_equal(project_linf_ball(v, 5.0, channel_axis=0), v)


def test_projection_rescales_outside():
    v = np.array([[3.0], [4.0]])
    out = project_linf_ball(v, 1.0, channel_axis=0)
    np.testing.assert_allclose(out[:, 0], [0.6, 0.8])


def test_projection_scalar_channel_clamps():
    y = np.array([-3.0, -0.5, 0.0, 0.5, 3.0])
    np.testing.assert_allclose(
        project_linf_ball(y, 1.0), [-1.0, -0.5, 0.0, 0.5, 1.0]
    )


def test_projection_zero_radius_and_negative_radius():
    y = np.array([1.0, -2.0])
    np.testing.assert_array_equal(project_linf_ball(y, 0.0), np.zeros(2))
    with pytest.raises(ContractViolation):
        project_linf_ball(y, -1.0)


def test_projection_per_frame_radius_broadcast():
    y = np.ones((2, 3, 2, 2))  # channels, frames, 2x2 points; magnitude sqrt(2)
    radius = np.array([0.0, 1.0, 10.0])[:, None, None]
    out = project_linf_ball(y, radius, channel_axis=0)
    assert np.all(out[:, 0] == 0.0)
    np.testing.assert_allclose(np.sqrt((out[:, 1] ** 2).sum(axis=0)), 1.0)
    np.testing.assert_array_equal(out[:, 2], y[:, 2])


def test_projection_idempotent_and_nonexpansive():
    rng = np.random.default_rng(2)
    for _ in range(50):
        a = rng.standard_normal((2, 6))
        b = rng.standard_normal((2, 6))
        r = float(rng.uniform(0.1, 2.0))
        pa = project_linf_ball(a, r, channel_axis=0)
        np.testing.assert_allclose(project_linf_ball(pa, r, channel_axis=0), pa, atol=1e-14)
        dist_before = np.linalg.norm(a - b)
        pb = project_linf_ball(b, r, channel_axis=0)
        assert np.linalg.norm(pa - pb) <= dist_before + 1e-12


# --- affine shrinkage ---------------------------------------------------------

def scalar_data(ut, bx, by):
    shape = (1, 1)
    return ShrinkageData(
        ut=np.full(shape, ut),
        beta_x=np.full(shape, bx),
        beta_y=np.full(shape, by),
        beta_norm_sq=np.full(shape, bx * bx + by * by),
    )


def shrink_scalar(vxt, vyt, ut, bx, by, tau):
    data = scalar_data(ut, bx, by)
    vx, vy = shrink_affine(np.full((1, 1), vxt), np.full((1, 1), vyt), data, tau)
    return float(vx[0, 0]), float(vy[0, 0])


def test_shrink_zero_gradient_is_identity():
    vx, vy = shrink_scalar(1.3, -0.4, ut=0.8, bx=0.0, by=0.0, tau=0.5)
    assert (vx, vy) == (1.3, -0.4)


def test_shrink_zero_residual_is_identity():
    # rho(v~) = 0 with beta != 0: middle branch with coefficient 0.
    vx, vy = shrink_scalar(1.0, 2.0, ut=-(1.0 * 1.0 + 2.0 * 0.5), bx=1.0, by=0.5, tau=0.7)
    np.testing.assert_allclose([vx, vy], [1.0, 2.0], atol=1e-15)


def test_shrink_requires_positive_tau():
    with pytest.raises(ContractViolation):
        shrink_scalar(0.0, 0.0, 0.0, 1.0, 0.0, tau=0.0)


def objective(vx, vy, vxt, vyt, ut, bx, by, tau):
    return 0.5 * ((vx - vxt) ** 2 + (vy - vyt) ** 2) + tau * np.abs(
        ut + bx * vx + by * vy
    )


def test_shrink_matches_grid_search_oracle():
    rng = np.random.default_rng(3)
    for _ in range(100):
        vxt, vyt = rng.standard_normal(2)
        ut = float(rng.standard_normal())
        bx, by = rng.standard_normal(2)
        tau = float(rng.uniform(0.05, 2.0))
        got_vx, got_vy = shrink_scalar(vxt, vyt, ut, bx, by, tau)

        span = 2.0 * tau * max(abs(bx), abs(by), 1.0) + 1.0
        step = span / 200.0
        gx = np.linspace(vxt - span, vxt + span, 401)
        gy = np.linspace(vyt - span, vyt + span, 401)
        VX, VY = np.meshgrid(gx, gy, indexing="ij")
        vals = objective(VX, VY, vxt, vyt, ut, bx, by, tau)
        kmin = np.unravel_index(np.argmin(vals), vals.shape)
        best_vx, best_vy = gx[kmin[0]], gy[kmin[1]]

        # The closed form must be at least as good as the best lattice
        # point; by 1-strong convexity of the objective the lattice
        # winner must also sit within sqrt(2*gap) of the true argmin.
        got_val = objective(got_vx, got_vy, vxt, vyt, ut, bx, by, tau)
        assert got_val <= vals[kmin] + 1e-12
        gap = max(vals[kmin] - got_val, 0.0)
        dist_sq = (got_vx - best_vx) ** 2 + (got_vy - best_vy) ** 2
        assert dist_sq <= 2.0 * gap + 1e-9


def test_shrink_branch_partition_is_exclusive():
    rng = np.random.default_rng(4)
    ut = rng.standard_normal((5, 5))
    bx = rng.standard_normal((5, 5))
    by = rng.standard_normal((5, 5))
    vxt = rng.standard_normal((5, 5))
    vyt = rng.standard_normal((5, 5))
    tau = 0.3
    rho = ut + bx * vxt + by * vyt
    thr = tau * (bx**2 + by**2)
    lower = rho < -thr
    upper = rho > thr
    middle = (rho >= -thr) & (rho <= thr)
    fired = lower.astype(int) + upper.astype(int) + middle.astype(int)
    assert np.all(fired == 1)


def test_shrink_boundary_of_middle_case_agrees_with_outer_branch():
    # At |rho| == tau*|beta|^2 the middle branch value coincides with
    # v~ -/+ tau*beta, so branch assignment is value-irrelevant there.
    bx, by = 1.0, -2.0
    tau = 0.4
    bnsq = bx * bx + by * by
    vxt, vyt = 0.3, 0.1
    ut = tau * bnsq - (bx * vxt + by * vyt)  # makes rho == +tau*bnsq
    vx, vy = shrink_scalar(vxt, vyt, ut, bx, by, tau)
    np.testing.assert_allclose([vx, vy], [vxt - tau * bx, vyt - tau * by], atol=1e-14)


def test_shrinkage_data_invariant_checked():
    with pytest.raises(ContractViolation):
        ShrinkageData(
            ut=np.zeros((2, 2)),
            beta_x=np.ones((2, 2)),
            beta_y=np.zeros((2, 2)),
            beta_norm_sq=np.full((2, 2), 2.0),
        )


def test_shrinkage_data_from_image_consistency():
    rng = np.random.default_rng(5)
    u = rng.standard_normal((3, 5, 5))
    data = ShrinkageData.from_image(u)
    vx = rng.standard_normal(u.shape)
    vy = rng.standard_normal(u.shape)
    from jointflow.diffops import transport_apply

    np.testing.assert_allclose(data.rho(vx, vy), transport_apply(u, vx, vy), atol=1e-14)
