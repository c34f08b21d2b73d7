"""Space-time grid and field containers shared by all solvers.

Fields live on the discrete point set {(i, j, t) : 0 <= i <= nx,
0 <= j <= ny, 0 <= t <= nt} and are stored as contiguous float64 arrays
of shape (nt+1, ny+1, nx+1), i.e. index order (t, j, i) with i fastest.
This layout is frozen so that golden files and framewise operators stay
stable; ``array[t]`` is one frame with rows j and columns i.

Grid spacing is 1 in space and time (pixel units throughout).
Intensities are not clamped during iteration; clamping to [0, 1] happens
only at image export (see jointflow.fileio).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ContractViolation(ValueError):
    """A caller broke an operation's precondition (shape/grid mismatch...)."""


@dataclass(frozen=True)
class Grid:
    """Index counts of the space-time grid; points run 0..nx, 0..ny, 0..nt."""

    nx: int
    ny: int
    nt: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1 or self.nt < 1:
            raise ContractViolation(
                f"grid needs nx, ny, nt >= 1, got ({self.nx}, {self.ny}, {self.nt})"
            )

    @property
    def shape(self) -> tuple[int, int, int]:
        """Array shape (nt+1, ny+1, nx+1) of a scalar field on this grid."""
        return (self.nt + 1, self.ny + 1, self.nx + 1)

    @property
    def frame_shape(self) -> tuple[int, int]:
        return (self.ny + 1, self.nx + 1)

    @property
    def num_points(self) -> int:
        return (self.nx + 1) * (self.ny + 1) * (self.nt + 1)

    @property
    def num_frames(self) -> int:
        return self.nt + 1


def _as_field(grid: Grid, values) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.shape != grid.shape:
        raise ContractViolation(
            f"field shape {arr.shape} does not match grid shape {grid.shape}"
        )
    return arr


@dataclass
class ImageSequence:
    """Gray-valued image sequence u on a space-time grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = _as_field(self.grid, self.values)

    @classmethod
    def zeros(cls, grid: Grid) -> "ImageSequence":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_frames(cls, frames) -> "ImageSequence":
        """Stack 2-D frames (all of equal shape) along time."""
        stack = np.ascontiguousarray(frames, dtype=np.float64)
        if stack.ndim != 3 or stack.shape[0] < 2:
            raise ContractViolation("need at least two frames of equal shape")
        grid = Grid(nx=stack.shape[2] - 1, ny=stack.shape[1] - 1, nt=stack.shape[0] - 1)
        return cls(grid, stack)

    def copy(self) -> "ImageSequence":
        return ImageSequence(self.grid, self.values.copy())

    def frame(self, t: int) -> np.ndarray:
        return self.values[t]

    def assert_finite(self, context: str = "image sequence"):
        if not np.isfinite(self.values).all():
            raise FloatingPointError(f"{context} contains non-finite entries")


@dataclass
class FlowField:
    """Two-channel velocity field (vx, vy) in pixels/frame on a grid.

    Slice t holds the flow of the transition t -> t+1; the slice at
    t = nt exists for layout uniformity but carries no transition.
    """

    grid: Grid
    vx: np.ndarray
    vy: np.ndarray

    def __post_init__(self):
        self.vx = _as_field(self.grid, self.vx)
        self.vy = _as_field(self.grid, self.vy)

    @classmethod
    def zeros(cls, grid: Grid) -> "FlowField":
        return cls(grid, np.zeros(grid.shape), np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: Grid, velocity) -> "FlowField":
        vx, vy = float(velocity[0]), float(velocity[1])
        return cls(grid, np.full(grid.shape, vx), np.full(grid.shape, vy))

    def copy(self) -> "FlowField":
        return FlowField(self.grid, self.vx.copy(), self.vy.copy())

    def magnitude(self) -> np.ndarray:
        return np.sqrt(self.vx**2 + self.vy**2)

    def assert_finite(self, context: str = "flow field"):
        if not (np.isfinite(self.vx).all() and np.isfinite(self.vy).all()):
            raise FloatingPointError(f"{context} contains non-finite entries")


@dataclass
class DualState:
    """Ordered dual blocks of a primal-dual solve, one array per dualized term."""

    blocks: list = field(default_factory=list)

    def copy(self) -> "DualState":
        return DualState([b.copy() for b in self.blocks])

    @property
    def shapes(self) -> list:
        return [b.shape for b in self.blocks]

    def entry_count(self) -> int:
        return sum(b.size for b in self.blocks)


def inner_product(a, b) -> float:
    """Euclidean inner product of two flat buffers.

    Summation runs in a single fixed (exactly rounded) pass via
    math.fsum, so the result is reproducible across platforms and
    exactly symmetric in its arguments.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ContractViolation(
            f"inner_product buffers differ in length: {a.size} vs {b.size}"
        )
    return math.fsum(a * b)


def norms(buffer) -> dict:
    """l1, l2 and linf norms of the flattened buffer."""
    arr = np.asarray(buffer, dtype=np.float64).ravel()
    if not np.isfinite(arr).all():
        raise ContractViolation("norms: buffer contains non-finite entries")
    if arr.size == 0:
        return {"l1": 0.0, "l2": 0.0, "linf": 0.0}
    absa = np.abs(arr)
    return {
        "l1": float(absa.sum()),
        "l2": float(np.linalg.norm(arr)),
        "linf": float(absa.max()),
    }
