"""Analog halftoning with attracting pixels and mutually repelling dots.

Positions are (x, y) in image coordinates: x is the 1-based column, y the
1-based row, so pixel (row r, col c) of a 0-based array sits at (c + 1, r + 1)
and every dot lives in the rectangle [1, width] x [1, height].
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .core import BinaryImage, GrayImage

log = logging.getLogger(__name__)

_SINGULAR = 1e-12


class DegenerateImageError(ValueError):
    """The image is (almost) white, so no dots would be placed."""


class CapacityError(ValueError):
    pass


class NumericalError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class WeightField:
    """Attraction strengths w = 1 - u on the pixel grid, shape (height, width)."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("weights must be a non-empty 2D array")
        if not np.all((arr >= 0.0) & (arr <= 1.0)):
            raise ValueError("weights must lie in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_image(cls, image: GrayImage) -> "WeightField":
        return cls(1.0 - image.values)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def grid_points(self) -> np.ndarray:
        """(height*width, 2) array of pixel coordinates in row-major order."""
        rows, cols = np.indices(self.values.shape)
        return np.column_stack([cols.ravel() + 1.0, rows.ravel() + 1.0])

    def total(self) -> float:
        return float(self.values.sum())


@dataclass(frozen=True, eq=False)
class DotConfiguration:
    positions: np.ndarray

    def __post_init__(self):
        arr = np.array(self.positions, dtype=np.float64).reshape(-1, 2)
        if len(arr) < 1:
            raise ValueError("a dot configuration needs at least one dot")
        if not np.all(np.isfinite(arr)):
            raise ValueError("dot positions must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "positions", arr)

    def __len__(self) -> int:
        return len(self.positions)

    def inside(self, width: int, height: int) -> bool:
        x, y = self.positions[:, 0], self.positions[:, 1]
        return bool(np.all((x >= 1) & (x <= width) & (y >= 1) & (y <= height)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "y"])
        for x, y in self.positions:
            writer.writerow([f"{x:.9g}", f"{y:.9g}"])
        return buf.getvalue()

    def save_csv(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "DotConfiguration":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["x", "y"]:
            raise ValueError("dot CSV must start with the header 'x,y'")
        return cls([[float(a), float(b)] for a, b in rows[1:] if a.strip()])

    @classmethod
    def load_csv(cls, path: Union[str, Path]) -> "DotConfiguration":
        return cls.from_csv(Path(path).read_text())


@dataclass(frozen=True)
class EvolutionParams:
    tau: float = 0.1
    max_iters: int = 2000
    tol: float = 1e-4
    seed: int = 0
    # per-dot displacement cap for evolve; None gives the plain explicit step
    max_step: Optional[float] = 0.5

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.tol < 0:
            raise ValueError("tol must be non-negative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.max_step is not None and not self.max_step > 0:
            raise ValueError("max_step must be positive or None")


@dataclass(frozen=True, eq=False)
class RunResult:
    """Outcome of an iterative dot optimizer."""

    config: DotConfiguration
    iterations: int
    converged: bool
    energy: Optional[float] = None
    stagnated: bool = False


def dot_count(image: GrayImage) -> int:
    """Number of dots that preserves the mean gray value: round(sum(1 - u))."""
    total = float(np.sum(1.0 - image.values))
    if total < 0.5:
        raise DegenerateImageError(f"image is essentially white (sum of weights {total:.3g})")
    # round half up
    return max(1, int(np.floor(total + 0.5)))


def equilibration_lambda(weights: WeightField, m: int) -> float:
    if m < 1:
        raise ValueError("m must be at least 1")
    return weights.total() / m


def random_configuration(m: int, width: int, height: int, seed: int) -> DotConfiguration:
    """m dots drawn uniformly from [1, width] x [1, height]."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(1.0, float(width), size=m)
    y = rng.uniform(1.0, float(height), size=m)
    return DotConfiguration(np.column_stack([x, y]))


def _pairwise(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    diff = b[None, :, :] - a[:, None, :]
    return diff, np.sqrt(np.sum(diff * diff, axis=-1))


def energy(config: DotConfiguration, weights: WeightField, lam: float) -> float:
    """sum_k sum_x w(x) |p_k - x| - lam * sum_{k<l} |p_k - p_l|."""
    p = config.positions
    _, d_grid = _pairwise(p, weights.grid_points())
    attraction = float(np.sum(d_grid @ weights.values.ravel()))
    _, d_dots = _pairwise(p, p)
    repulsion = float(np.sum(np.triu(d_dots, k=1)))
    return attraction - lam * repulsion


def _unit_sum(diff: np.ndarray, dist: np.ndarray, coef: np.ndarray, power: int) -> np.ndarray:
    # sum_j coef_ij * diff_ij / dist_ij**power, skipping (near-)coincident pairs
    safe = dist >= _SINGULAR
    scale = np.where(safe, coef / np.where(safe, dist, 1.0) ** power, 0.0)
    return np.einsum("ij,ijk->ik", scale, diff)


def forces(config: DotConfiguration, weights: WeightField) -> np.ndarray:
    """Electrostatic forces F_A - F_R per dot, with 1/r magnitude.

    Attraction pulls each dot toward every pixel with strength w(x) / |x - p|;
    repulsion pushes dots apart with strength 1 / |p_m - p_k|.
    """
    p = config.positions
    diff_g, d_g = _pairwise(p, weights.grid_points())
    w = np.broadcast_to(weights.values.ravel(), d_g.shape)
    f_attr = _unit_sum(diff_g, d_g, w, power=2)
    diff_p, d_p = _pairwise(p, p)
    f_rep = _unit_sum(diff_p, d_p, np.ones_like(d_p), power=2)
    return f_attr - f_rep


def energy_gradient(config: DotConfiguration, weights: WeightField, lam: float) -> np.ndarray:
    """A subgradient of :func:`energy` (zero contribution from coincident points)."""
    p = config.positions
    diff_g, d_g = _pairwise(p, weights.grid_points())
    w = np.broadcast_to(weights.values.ravel(), d_g.shape)
    # diff points from p_k to x, so d|p_k - x|/dp_k = -diff/|diff|
    g_attr = -_unit_sum(diff_g, d_g, w, power=1)
    diff_p, d_p = _pairwise(p, p)
    g_rep = -_unit_sum(diff_p, d_p, np.ones_like(d_p), power=1)
    return g_attr - lam * g_rep


def _clamp(p: np.ndarray, width: int, height: int) -> np.ndarray:
    out = p.copy()
    np.clip(out[:, 0], 1.0, float(width), out=out[:, 0])
    np.clip(out[:, 1], 1.0, float(height), out=out[:, 1])
    return out


def evolve(
    config: DotConfiguration, weights: WeightField, params: EvolutionParams = EvolutionParams()
) -> RunResult:
    """Explicit force iteration p <- clamp(p + tau * (F_A - F_R)).

    A dot passing close to a pixel feels a 1/r kick that can throw it across
    the image and onto other dots; with ``params.max_step`` set, each dot's
    displacement is shortened to at most that length before clamping.
    """
    p = np.array(config.positions)
    width, height = weights.width, weights.height
    for it in range(1, params.max_iters + 1):
        f = forces(DotConfiguration(p), weights)
        if not np.all(np.isfinite(f)):
            raise NumericalError(f"non-finite force at iteration {it}")
        delta = params.tau * f
        if params.max_step is not None:
            norm = np.sqrt(np.sum(delta * delta, axis=1, keepdims=True))
            over = norm > params.max_step
            delta = np.where(over, delta * (params.max_step / np.where(over, norm, 1.0)), delta)
        new = _clamp(p + delta, width, height)
        step = float(np.max(np.abs(new - p)))
        p = new
        if step < params.tol:
            return RunResult(DotConfiguration(p), it, True)
    return RunResult(DotConfiguration(p), params.max_iters, False)


def subgradient_descent(
    config: DotConfiguration,
    weights: WeightField,
    lam: float,
    params: EvolutionParams = EvolutionParams(),
) -> RunResult:
    """Minimize :func:`energy` by clamped subgradient steps with step halving.

    A step is accepted only if it does not raise the energy; otherwise the step
    size is halved. Once the step size underflows 1e-12 the best iterate is
    returned with ``stagnated=True``.
    """
    width, height = weights.width, weights.height
    p = _clamp(np.array(config.positions), width, height)
    e = energy(DotConfiguration(p), weights, lam)
    step = params.tau
    for it in range(1, params.max_iters + 1):
        g = energy_gradient(DotConfiguration(p), weights, lam)
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite subgradient at iteration {it}")
        if not np.any(g):
            return RunResult(DotConfiguration(p), it, True, e)
        while True:
            cand = _clamp(p - step * g, width, height)
            e_cand = energy(DotConfiguration(cand), weights, lam)
            if e_cand <= e:
                break
            step *= 0.5
            if step < 1e-12:
                log.info("subgradient descent stagnated at iteration %d", it)
                return RunResult(DotConfiguration(p), it, False, e, stagnated=True)
        moved = float(np.max(np.abs(cand - p)))
        p, e = cand, e_cand
        if moved < params.tol:
            return RunResult(DotConfiguration(p), it, True, e)
    return RunResult(DotConfiguration(p), params.max_iters, False, e)


def snap_to_grid(config: DotConfiguration, width: int, height: int) -> BinaryImage:
    """Round dots to pixels; a dot landing on a taken pixel moves to the nearest free one.

    Distances for relocation are measured from the dot's continuous position;
    ties go to the first free pixel in row-major order.
    """
    m = len(config)
    if m > width * height:
        raise CapacityError(f"{m} dots do not fit on a {width}x{height} grid")
    taken = np.zeros(height * width, dtype=bool)
    gx = np.tile(np.arange(1, width + 1, dtype=np.float64), height)
    gy = np.repeat(np.arange(1, height + 1, dtype=np.float64), width)
    for x, y in config.positions:
        col = min(max(int(np.floor(x + 0.5)), 1), width)
        row = min(max(int(np.floor(y + 0.5)), 1), height)
        idx = (row - 1) * width + (col - 1)
        if taken[idx]:
            d2 = (gx - x) ** 2 + (gy - y) ** 2
            d2[taken] = np.inf
            idx = int(np.argmin(d2))
        taken[idx] = True
    return BinaryImage(np.where(taken, -1.0, 1.0).reshape(height, width))
