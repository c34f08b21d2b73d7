"""Shared scaffolding of the two primal-dual subproblem solvers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import DualState


class ConfigurationError(ValueError):
    """Solver parameters violate their contract (step sizes, weights...)."""


class DivergenceError(FloatingPointError):
    """Non-finite iterate detected; carries the failing iteration."""

    def __init__(self, solver: str, iteration: int):
        super().__init__(f"{solver}: non-finite iterate at iteration {iteration}")
        self.iteration = iteration


@dataclass
class SolveTrace:
    """Iteration report of one primal-dual solve."""

    iterations: int = 0
    residual: float = float("inf")
    energy: float = float("nan")
    converged: bool = False
    operator_norm: float = 0.0
    sigma: float = 0.0
    tau: float = 0.0
    history: list = field(default_factory=list)  # (iteration, residual, energy)
    dual_state: DualState | None = None


def per_frame_weights(alpha, num_frames: int) -> np.ndarray:
    """Normalize a scalar or per-frame weight spec to a (num_frames,) array."""
    arr = np.asarray(alpha, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full(num_frames, float(arr))
    if arr.shape != (num_frames,):
        raise ConfigurationError(
            f"per-frame weight needs a scalar or {num_frames} entries, got shape {arr.shape}"
        )
    if np.any(arr < 0) or not np.isfinite(arr).all():
        raise ConfigurationError("per-frame weights must be finite and >= 0")
    return arr


def resolve_steps(sigma, tau, op_norm: float, slack: float = 0.99):
    """Default primal/dual steps and the step-size contract check.

    Missing steps default to slack/op_norm each, which satisfies the
    convergence condition sigma*tau*norm^2 <= 1.
    """
    if sigma is None or tau is None:
        if op_norm <= 0:
            raise ConfigurationError("operator norm estimate is zero; cannot derive steps")
        default = slack / op_norm
        sigma = default if sigma is None else float(sigma)
        tau = default if tau is None else float(tau)
    sigma, tau = float(sigma), float(tau)
    if sigma <= 0 or tau <= 0:
        raise ConfigurationError(f"steps must be positive, got sigma={sigma}, tau={tau}")
    if sigma * tau * op_norm**2 > 1.0 + 1e-9:
        raise ConfigurationError(
            f"step-size contract violated: sigma*tau*|C|^2 = {sigma * tau * op_norm**2:.6f} > 1"
        )
    return sigma, tau
