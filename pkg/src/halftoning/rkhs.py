"""Kernel energies, quadrature errors and discrepancies between an image and its dots.

Radial kernels work in pixel coordinates with unit pixel area, the same frame
as :mod:`halftoning.attraction`. Fourier kernels live on the unit torus: pixel
(row i, col j), 1-based, maps to ((j - 1/2) / width, (i - 1/2) / height), and a
dot at (x, y) maps to ((x - 1/2) / width, (y - 1/2) / height).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
from scipy.signal import fftconvolve
from scipy.spatial import cKDTree

from .attraction import DotConfiguration, WeightField
from .core import GrayImage


class KernelDefinitenessError(ArithmeticError):
    """A quadratic form that should be nonnegative came out clearly negative."""


class NumericalConsistencyError(ArithmeticError):
    pass


@dataclass(frozen=True)
class RadialKernel:
    """K(x, y) = phi(|x - y|).

    ``gaussian`` is exp(-r^2 / sigma^2). ``negative-distance`` is -r, which is
    only conditionally positive definite; it may be used for energies but not
    for norms or quadrature errors.
    """

    profile: str = "gaussian"
    sigma: float = 1.0

    def __post_init__(self):
        if self.profile not in ("gaussian", "negative-distance"):
            raise ValueError(f"unknown radial profile {self.profile!r}")
        if self.profile == "gaussian" and not self.sigma > 0:
            raise ValueError("gaussian kernel needs sigma > 0")

    @property
    def positive_definite(self) -> bool:
        return self.profile == "gaussian"

    def __call__(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Kernel matrix between point sets a (n, 2) and b (m, 2)."""
        a = np.asarray(a, dtype=np.float64).reshape(-1, 2)
        b = np.asarray(b, dtype=np.float64).reshape(-1, 2)
        d2 = np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=-1)
        if self.profile == "gaussian":
            return np.exp(-d2 / self.sigma**2)
        return -np.sqrt(d2)


def default_fourier_coeffs(bandwidth: int) -> np.ndarray:
    """lambda_l = (1 + |l|^2)^(-3/2) on the square |l|_inf <= bandwidth."""
    l = np.arange(-bandwidth, bandwidth + 1)
    lx, ly = np.meshgrid(l, l)
    return (1.0 + lx**2 + ly**2) ** -1.5


@dataclass(frozen=True, eq=False)
class FourierKernel:
    """Bandlimited kernel K(x, y) = sum_l lambda_l exp(2 pi i l.(x - y)) on the torus.

    ``coeffs[b + ly, b + lx]`` holds lambda_l for l = (lx, ly), b the bandwidth.
    """

    bandwidth: int
    coeffs: Optional[np.ndarray] = None

    def __post_init__(self):
        n = int(self.bandwidth)
        if n < 0:
            raise ValueError("bandwidth must be nonnegative")
        c = default_fourier_coeffs(n) if self.coeffs is None else np.array(self.coeffs, float)
        if c.shape != (2 * n + 1, 2 * n + 1):
            raise ValueError(f"coefficients must have shape {(2 * n + 1,) * 2}")
        if not np.all(c > 0):
            raise ValueError("Fourier kernel coefficients must be strictly positive")
        if not np.allclose(c, c[::-1, ::-1], rtol=1e-12, atol=0):
            raise ValueError("Fourier kernel coefficients must satisfy lambda_l = lambda_-l")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_mapping(cls, bandwidth: int, coeffs: Mapping[tuple[int, int], float]):
        arr = np.zeros((2 * bandwidth + 1,) * 2)
        arr[:] = np.nan
        for (lx, ly), val in coeffs.items():
            arr[bandwidth + ly, bandwidth + lx] = val
        if np.isnan(arr).any():
            raise ValueError("every frequency with |l|_inf <= bandwidth needs a coefficient")
        return cls(bandwidth, arr)

    def frequencies(self) -> tuple[np.ndarray, np.ndarray]:
        l = np.arange(-self.bandwidth, self.bandwidth + 1)
        lx, ly = np.meshgrid(l, l)
        return lx, ly

    def __call__(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Real kernel matrix between torus point sets a (n, 2) and b (m, 2)."""
        a = np.asarray(a, dtype=np.float64).reshape(-1, 2)
        b = np.asarray(b, dtype=np.float64).reshape(-1, 2)
        lx, ly = self.frequencies()
        d = a[:, None, :] - b[None, :, :]
        phase = 2 * np.pi * (d[..., 0, None] * lx.ravel() + d[..., 1, None] * ly.ravel())
        return np.cos(phase) @ self.coeffs.ravel()


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Weighted point masses: sum_k weights[k] * delta(support[k])."""

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        s = np.array(self.support, dtype=np.float64).reshape(-1, 2)
        w = np.array(self.weights, dtype=np.float64).ravel()
        if len(s) != len(w):
            raise ValueError("support and weights must have the same length")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("measure weights must be finite and nonnegative")
        s.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "weights", w)

    def total(self) -> float:
        return float(self.weights.sum())


def image_measure(image: GrayImage) -> DiscreteMeasure:
    """Midpoint-rule measure of w = 1 - u with unit pixel area."""
    field = WeightField.from_image(image)
    return DiscreteMeasure(field.grid_points(), field.values.ravel())


def torus_points(positions: np.ndarray, width: int, height: int) -> np.ndarray:
    p = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    return np.column_stack([(p[:, 0] - 0.5) / width, (p[:, 1] - 0.5) / height])


def kernel_energy(
    config: DotConfiguration, measure: DiscreteMeasure, kernel: RadialKernel, lam: float
) -> float:
    """E_K(p) = (lam/2) sum_ij K(p_i, p_j) - sum_i sum_x w(x) K(p_i, x)."""
    p = config.positions
    self_term = 0.5 * lam * float(np.sum(kernel(p, p)))
    cross = float(np.sum(kernel(p, measure.support) @ measure.weights))
    return self_term - cross


def hw_norm_sq(measure: DiscreteMeasure, kernel: RadialKernel) -> float:
    """Squared RKHS norm of h_w = sum_x w(x) K(., x)."""
    if not kernel.positive_definite:
        raise ValueError(f"{kernel.profile} kernel is not positive definite")
    w = measure.weights
    val = float(w @ kernel(measure.support, measure.support) @ w)
    if val < -1e-10:
        raise KernelDefinitenessError(f"|h_w|^2 = {val:.3e} < 0")
    return max(val, 0.0)


def quadrature_error(
    config: DotConfiguration, measure: DiscreteMeasure, kernel: RadialKernel, lam: float
) -> float:
    """Worst-case quadrature error sqrt(2 lam E_K(p) + |h_w|^2)."""
    arg = 2.0 * lam * kernel_energy(config, measure, kernel, lam) + hw_norm_sq(measure, kernel)
    if arg < -1e-8:
        raise NumericalConsistencyError(f"squared quadrature error {arg:.3e} < 0")
    return float(np.sqrt(max(arg, 0.0)))


def fourier_coefficients(image: GrayImage, bandwidth: int) -> np.ndarray:
    """w_hat_l = integral of w(x) exp(-2 pi i l.x) dx on the torus, |l|_inf <= bandwidth.

    Indexed like :attr:`FourierKernel.coeffs`.
    """
    w = 1.0 - image.values
    h, wd = w.shape
    spec = np.fft.fft2(w) / (h * wd)
    l = np.arange(-bandwidth, bandwidth + 1)
    lx, ly = np.meshgrid(l, l)
    # pixel centres sit half a pixel in from the origin
    shift = np.exp(-1j * np.pi * (lx / wd + ly / h))
    return spec[ly % h, lx % wd] * shift


def fourier_discrepancy(
    config: DotConfiguration, image: GrayImage, kernel: FourierKernel, lam: float
) -> float:
    """sqrt(sum_l lambda_l |lam sum_i exp(-2 pi i l.p_i) - w_hat_l|^2) on the unit torus."""
    t = torus_points(config.positions, image.width, image.height)
    lx, ly = kernel.frequencies()
    phase = -2j * np.pi * (np.outer(t[:, 0], lx.ravel()) + np.outer(t[:, 1], ly.ravel()))
    empirical = lam * np.exp(phase).sum(axis=0).reshape(lx.shape)
    diff = empirical - fourier_coefficients(image, kernel.bandwidth)
    return float(np.sqrt(np.sum(kernel.coeffs * np.abs(diff) ** 2)))


def ball_radii(radius_max: float, resolution: int) -> np.ndarray:
    """Midpoints of ``resolution`` equal cells covering (0, radius_max]."""
    return (np.arange(resolution) + 0.5) * (radius_max / resolution)


def _disk(radius: float) -> np.ndarray:
    k = int(np.floor(radius))
    o = np.arange(-k, k + 1)
    return (o[None, :] ** 2 + o[:, None] ** 2 <= radius * radius).astype(np.float64)


def ball_discrepancy(
    config: DotConfiguration,
    image: GrayImage,
    radius_max: float,
    resolution: int,
    lam: float,
) -> float:
    """L2 ball discrepancy between the image measure and lam times the dot counts.

    The integrand (lam * #{p_i in B(c, r)} - sum_{x in B(c, r)} w(x))^2 is summed
    over centres c on the pixel grid (unit area) and midpoint radii r with
    spacing radius_max / resolution. Balls are closed.
    """
    if not radius_max > 0:
        raise ValueError("radius_max must be positive")
    if resolution < 1:
        raise ValueError("resolution must be a positive integer")
    w = 1.0 - image.values
    centres = WeightField(w).grid_points()
    tree = cKDTree(config.positions)
    total = 0.0
    for r in ball_radii(radius_max, resolution):
        mass = fftconvolve(w, _disk(r), mode="same")
        counts = tree.query_ball_point(centres, r, return_length=True)
        total += float(np.sum((lam * counts - mass.ravel()) ** 2))
    return float(np.sqrt(total * radius_max / resolution))


def metrics_json(values: Mapping[str, float]) -> str:
    """JSON object with every float rounded to 12 significant digits."""
    return json.dumps({k: float(f"{v:.12g}") for k, v in values.items()}, sort_keys=False)
