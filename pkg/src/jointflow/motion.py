"""Primal-dual solver for the flow subproblem.

For a frozen image sequence the transport residual is affine in the
flow, so

    |ut + grad(u) . v|_1 + lam * |grad v|_1

is minimized by dualizing only the TV term (block-diagonal gradient on
both channels, projection onto radius-lam balls over the four dual
channels of one point) and applying the exact affine shrinkage as the
primal prox.  The transport coefficients are computed once per solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffops import div_backward, grad_forward, operator_norm_estimate
from .grids import ContractViolation, DualState, FlowField, ImageSequence
from .pdbase import ConfigurationError, DivergenceError, SolveTrace, resolve_steps
from .prox import ShrinkageData, project_linf_ball, shrink_affine

# |C_v| depends only on the grid; estimated once per shape and reused.
_CV_NORM_CACHE: dict = {}


@dataclass
class MotionParams:
    """TV weight (lam = beta/gamma), steps and stopping controls."""

    lam: float
    sigma: float | None = None
    tau: float | None = None
    max_iters: int = 500
    eps: float = 1e-6

    def __post_init__(self):
        if self.lam <= 0:
            raise ConfigurationError(f"lam must be > 0, got {self.lam}")
        if self.eps <= 0:
            raise ConfigurationError(f"eps must be > 0, got {self.eps}")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be >= 1")


def _apply_c(v):
    g1 = grad_forward(v[0])
    g2 = grad_forward(v[1])
    return np.stack([g1.gx, g1.gy, g2.gx, g2.gy])


def _apply_ct(y):
    return np.stack(
        [-div_backward((y[0], y[1])), -div_backward((y[2], y[3]))]
    )


def _cv_norm(shape) -> float:
    if shape not in _CV_NORM_CACHE:
        _CV_NORM_CACHE[shape] = operator_norm_estimate(_apply_c, _apply_ct, (2,) + shape)
    return _CV_NORM_CACHE[shape]


def _energy(rho, gradv, lam):
    fit = float(np.sum(np.abs(rho)))
    tv = float(np.sum(np.sqrt(np.sum(gradv * gradv, axis=0))))
    return fit + lam * tv


def motion_energy(flow: FlowField, images: ImageSequence, lam: float) -> float:
    """Objective |ut + grad(u).v|_1 + lam |grad v|_1 (isotropic over 4 channels)."""
    if flow.grid != images.grid:
        raise ContractViolation("motion_energy: grids differ")
    data = ShrinkageData.from_image(images.values)
    v = np.stack([flow.vx, flow.vy])
    return _energy(data.rho(v[0], v[1]), _apply_c(v), lam)


def solve_motion(
    images: ImageSequence,
    init: FlowField,
    params: MotionParams,
    dual_init: DualState | None = None,
    callback=None,
):
    """Run the projection + affine-shrinkage iteration; returns (flow, trace)."""
    grid = images.grid
    if init.grid != grid:
        raise ContractViolation("solve_motion: image and flow grids differ")

    data = ShrinkageData.from_image(images.values)
    op_norm = _cv_norm(grid.shape)
    sigma, tau = resolve_steps(params.sigma, params.tau, op_norm)
    lam = float(params.lam)

    v = np.stack([init.vx, init.vy])
    if dual_init is not None:
        if [b.shape for b in dual_init.blocks] != [(4,) + grid.shape]:
            raise ContractViolation("dual_init block has wrong shape")
        y = dual_init.blocks[0].copy()
        cty_old = _apply_ct(y)
    else:
        y = np.zeros((4,) + grid.shape)
        cty_old = np.zeros((2,) + grid.shape)
    cv_cur = _apply_c(v)
    cv_bar = np.zeros_like(cv_cur)
    n_primal = v.size
    n_dual = y.size

    trace = SolveTrace(operator_norm=op_norm, sigma=sigma, tau=tau)
    for it in range(1, params.max_iters + 1):
        y_new = project_linf_ball(y + sigma * cv_bar, lam, channel_axis=0)
        cty_new = _apply_ct(y_new)
        vt = v - tau * cty_new
        vx_new, vy_new = shrink_affine(vt[0], vt[1], data, tau)
        v_new = np.stack([vx_new, vy_new])
        if not np.isfinite(v_new).all():
            raise DivergenceError("solve_motion", it)
        cv_new = _apply_c(v_new)

        primal = np.abs((v - v_new) / tau - (cty_old - cty_new)).sum() / n_primal
        dual = np.abs((y - y_new) / sigma - (cv_cur - cv_new)).sum() / n_dual
        residual = float(primal + dual)
        energy = _energy(data.rho(v_new[0], v_new[1]), cv_new, lam)
        trace.history.append((it, residual, energy))
        if callback is not None:
            callback(it, {"residual": residual, "energy": energy, "duals": y_new})

        cv_bar = 2.0 * cv_new - cv_cur
        v, y, cv_cur, cty_old = v_new, y_new, cv_new, cty_new
        trace.iterations, trace.residual, trace.energy = it, residual, energy
        if residual < params.eps:
            trace.converged = True
            break

    trace.dual_state = DualState([y.copy()])
    return FlowField(grid, v[0].copy(), v[1].copy()), trace
