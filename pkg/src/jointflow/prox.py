"""Closed-form proximal and projection maps for the primal-dual solvers.

All maps are pointwise and allocation-light: the quadratic data prox,
the pointwise ball projections for the TV and transport dual blocks,
and the three-branch affine shrinkage that solves the flow prox
``argmin 1/2 |v - v~|^2 + tau |ut + beta . v|`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffops import transport_coefficients
from .grids import ContractViolation


def prox_l2_data(y_tilde: np.ndarray, f: np.ndarray, sigma: float) -> np.ndarray:
    """Dual update of the quadratic data term: (y~ - sigma*f) / (sigma + 1)."""
    if sigma <= 0:
        raise ContractViolation(f"prox_l2_data: sigma must be > 0, got {sigma}")
    if y_tilde.shape != f.shape:
        raise ContractViolation(
            f"prox_l2_data: shapes {y_tilde.shape} vs {f.shape} differ"
        )
    return (y_tilde - sigma * f) / (sigma + 1.0)


def project_linf_ball(y: np.ndarray, radius, channel_axis=None) -> np.ndarray:
    """Pointwise projection onto Euclidean balls of the given radius.

    With `channel_axis` set, the Euclidean magnitude is taken over that
    axis (the dual channels belonging to one primal point); without it
    each scalar entry is clamped to [-radius, radius].  `radius` may be
    an array broadcastable against the per-point magnitude, e.g. a
    per-frame TV weight.
    """
    radius = np.asarray(radius, dtype=np.float64)
    if np.any(radius < 0):
        raise ContractViolation("project_linf_ball: radius must be >= 0")
    if channel_axis is None:
        mag = np.abs(y)
    else:
        mag = np.sqrt(np.sum(y * y, axis=channel_axis, keepdims=True))
    scale = np.where(mag > radius, radius / np.maximum(mag, 1e-300), 1.0)
    return y * scale


@dataclass
class ShrinkageData:
    """Frozen transport coefficients of the flow prox.

    For fixed images the pointwise residual is affine in the flow,
    rho(v) = ut + beta_x*vx + beta_y*vy, with beta the central-difference
    spatial gradient; these fields are computed once per solve.
    """

    ut: np.ndarray
    beta_x: np.ndarray
    beta_y: np.ndarray
    beta_norm_sq: np.ndarray

    def __post_init__(self):
        expected = self.beta_x**2 + self.beta_y**2
        if not np.allclose(self.beta_norm_sq, expected, rtol=0, atol=1e-12):
            raise ContractViolation(
                "ShrinkageData: beta_norm_sq does not match beta channels"
            )

    @classmethod
    def from_image(cls, u: np.ndarray) -> "ShrinkageData":
        ut, ux, uy = transport_coefficients(u)
        return cls(ut, ux, uy, ux * ux + uy * uy)

    def rho(self, vx: np.ndarray, vy: np.ndarray) -> np.ndarray:
        return self.ut + self.beta_x * vx + self.beta_y * vy


def shrink_affine(vx_tilde, vy_tilde, data: ShrinkageData, tau: float):
    """Exact prox of v -> tau * |rho(v)| around (vx~, vy~).

    Three branches per point: step tau*beta along the gradient when the
    residual is strongly negative, -tau*beta when strongly positive, and
    a projection onto the zero-residual line in between.  Where the
    gradient vanishes the objective is constant in v and the input is
    returned unchanged.
    """
    if tau <= 0:
        raise ContractViolation(f"shrink_affine: tau must be > 0, got {tau}")
    if vx_tilde.shape != data.ut.shape or vy_tilde.shape != data.ut.shape:
        raise ContractViolation("shrink_affine: flow shape does not match coefficients")
    rho = data.rho(vx_tilde, vy_tilde)
    thr = tau * data.beta_norm_sq
    coef = np.zeros_like(rho)
    np.divide(rho, data.beta_norm_sq, out=coef, where=data.beta_norm_sq > 0)
    factor = np.where(rho < -thr, tau, np.where(rho > thr, -tau, -coef))
    return vx_tilde + factor * data.beta_x, vy_tilde + factor * data.beta_y
