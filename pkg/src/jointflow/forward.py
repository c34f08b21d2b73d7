"""Forward operators relating the image sequence to measured data.

Each operator acts framewise (single time steps) and carries its exact
adjoint; the time-dependent case used for temporal inpainting is the
frame mask.  Construction rejects operators that annihilate constants
(applying K to the all-ones sequence must give a nonzero result).

Blur uses symmetric (reflective) spatial padding; its adjoint is built
from the transpose of the padding map (a fold of the margins back onto
their source pixels) composed with the full convolution by the flipped
kernel, so the randomized adjointness test holds to rounding.
Subsampling is block averaging; its adjoint spreads each coarse value
uniformly over its block.
"""

from __future__ import annotations

import numpy as np
from scipy import signal

from .grids import ContractViolation, Grid


class ForwardOperator:
    """Framewise linear map K from image sequences to data fields."""

    kind = "abstract"

    def __init__(self, grid: Grid):
        self.grid = grid

    @property
    def out_shape(self) -> tuple:
        return self.grid.shape

    def apply(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def adjoint(self, d: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_input(self, u: np.ndarray):
        if u.shape != self.grid.shape:
            raise ContractViolation(
                f"{self.kind}: input shape {u.shape} != grid shape {self.grid.shape}"
            )

    def _check_data(self, d: np.ndarray):
        if d.shape != self.out_shape:
            raise ContractViolation(
                f"{self.kind}: data shape {d.shape} != range shape {self.out_shape}"
            )

    def _check_nonzero_on_ones(self):
        result = self.apply(np.ones(self.grid.shape))
        if np.max(np.abs(result)) == 0.0:
            raise ContractViolation(
                f"{self.kind}: operator annihilates the all-ones sequence"
            )


class IdentityOperator(ForwardOperator):
    kind = "identity"

    def apply(self, u):
        self._check_input(u)
        return u.copy()

    def adjoint(self, d):
        self._check_data(d)
        return d.copy()


class FrameMaskOperator(ForwardOperator):
    """Keeps the listed frames, zeroes the rest; a self-adjoint projection."""

    kind = "frame_mask"

    def __init__(self, grid: Grid, known_frames):
        super().__init__(grid)
        frames = sorted(set(int(t) for t in known_frames))
        if any(t < 0 or t > grid.nt for t in frames):
            raise ContractViolation(f"frame_mask: frame index out of range 0..{grid.nt}")
        self.known_frames = tuple(frames)
        self._mask = np.zeros(grid.num_frames, dtype=bool)
        self._mask[list(frames)] = True
        self._check_nonzero_on_ones()

    def apply(self, u):
        self._check_input(u)
        out = u.copy()
        out[~self._mask] = 0.0
        return out

    adjoint = apply


class BlurOperator(ForwardOperator):
    """Per-frame convolution with a 2-D kernel, symmetric boundary padding."""

    kind = "blur"

    def __init__(self, grid: Grid, kernel):
        super().__init__(grid)
        k = np.ascontiguousarray(kernel, dtype=np.float64)
        if k.ndim != 2 or k.shape[0] % 2 == 0 or k.shape[1] % 2 == 0:
            raise ContractViolation("blur: kernel must be 2-D with odd side lengths")
        py, px = k.shape[0] // 2, k.shape[1] // 2
        if py > grid.ny or px > grid.nx:
            raise ContractViolation("blur: kernel larger than the frame")
        self.kernel = k
        self._pad = (py, px)
        # Index maps of symmetric padding, reused for both the gather and
        # the adjoint fold.
        self._iy = np.pad(np.arange(grid.ny + 1), py, mode="symmetric")
        self._ix = np.pad(np.arange(grid.nx + 1), px, mode="symmetric")
        self._check_nonzero_on_ones()

    def apply(self, u):
        self._check_input(u)
        padded = u[:, self._iy[:, None], self._ix[None, :]]
        return signal.convolve(padded, self.kernel[None], mode="valid", method="direct")

    def adjoint(self, d):
        self._check_data(d)
        flipped = self.kernel[::-1, ::-1]
        full = signal.convolve(d, flipped[None], mode="full", method="direct")
        out = np.zeros(self.grid.shape)
        nt1 = self.grid.num_frames
        tidx = np.arange(nt1)[:, None, None]
        np.add.at(out, (tidx, self._iy[None, :, None], self._ix[None, None, :]), full)
        return out


class SubsampleOperator(ForwardOperator):
    """Block averaging by an integer factor; adjoint spreads uniformly."""

    kind = "subsample"

    def __init__(self, grid: Grid, factor: int):
        super().__init__(grid)
        s = int(factor)
        if s < 1:
            raise ContractViolation("subsample: factor must be >= 1")
        if (grid.ny + 1) % s or (grid.nx + 1) % s:
            raise ContractViolation(
                f"subsample: frame shape {grid.frame_shape} not divisible by {s}"
            )
        self.factor = s
        self._check_nonzero_on_ones()

    @property
    def out_shape(self):
        s = self.factor
        return (self.grid.num_frames, (self.grid.ny + 1) // s, (self.grid.nx + 1) // s)

    def apply(self, u):
        self._check_input(u)
        s = self.factor
        t, h, w = self.out_shape
        return u.reshape(t, h, s, w, s).mean(axis=(2, 4))

    def adjoint(self, d):
        self._check_data(d)
        s = self.factor
        up = np.repeat(np.repeat(d, s, axis=1), s, axis=2)
        return up / (s * s)


_KINDS = {
    "identity": IdentityOperator,
    "frame_mask": FrameMaskOperator,
    "blur": BlurOperator,
    "subsample": SubsampleOperator,
}


def box_kernel(size: int) -> np.ndarray:
    """Normalized size x size averaging kernel."""
    if size < 1 or size % 2 == 0:
        raise ContractViolation("box kernel size must be odd and >= 1")
    return np.full((size, size), 1.0 / (size * size))


def gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    """Normalized truncated Gaussian kernel."""
    if size < 1 or size % 2 == 0:
        raise ContractViolation("gaussian kernel size must be odd and >= 1")
    r = np.arange(size) - size // 2
    g = np.exp(-0.5 * (r / sigma) ** 2)
    k = np.outer(g, g)
    return k / k.sum()


def make_forward_operator(kind: str, grid: Grid, **params) -> ForwardOperator:
    """Build an operator from configuration values.

    identity: no params; frame_mask: known_frames; blur: kernel, or
    kernel_size (+ optional sigma for a Gaussian); subsample: factor.
    """
    if kind not in _KINDS:
        raise ContractViolation(f"unknown forward operator kind {kind!r}")
    if kind == "identity":
        return IdentityOperator(grid)
    if kind == "frame_mask":
        return FrameMaskOperator(grid, params["known_frames"])
    if kind == "blur":
        if "kernel" in params:
            kernel = params["kernel"]
        elif params.get("sigma"):
            kernel = gaussian_kernel(int(params["kernel_size"]), float(params["sigma"]))
        else:
            kernel = box_kernel(int(params["kernel_size"]))
        return BlurOperator(grid, kernel)
    return SubsampleOperator(grid, int(params["factor"]))
