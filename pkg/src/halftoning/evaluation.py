"""Bandlimited test signals, low-pass reconstruction, and error-decay benchmarks.

Signals are trigonometric polynomials with period ``period`` (in the same
length unit as the sampling lattice n / lam) and frequencies k / period with
|k| <= K_max. Keeping K_max <= period / 2 puts the spectrum inside
[-1/2, 1/2]^dims, so sampling at rate lam > 1 oversamples by lam.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence, Union

import numpy as np
from scipy.ndimage import convolve1d

from .core import SignedImage
from .diffusion import FIRST_ORDER, H2, FeedbackFilter, SchemeSpec, run_scheme, sigma_delta_1d

_DENSE_FACTOR = 16
_GAUSS_TAIL = 1e-12


class DecayExperimentError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class BandlimitedSignal:
    """Real trigonometric polynomial; ``coeffs`` is indexed by k + K_max on every axis."""

    dims: int
    period: float
    coeffs: np.ndarray
    amplitude_bound: float

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if self.dims not in (1, 2) or c.ndim != self.dims:
            raise ValueError("coeffs must be a 1D or 2D array matching dims")
        if any(s % 2 == 0 for s in c.shape) or len(set(c.shape)) != 1:
            raise ValueError("coeffs must have odd, equal length 2*K_max + 1 on every axis")
        flipped = c[::-1] if self.dims == 1 else c[::-1, ::-1]
        if not np.allclose(c, np.conj(flipped), atol=1e-14):
            raise ValueError("coeffs must be conjugate symmetric (real-valued signal)")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def k_max(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    def _basis(self, x) -> np.ndarray:
        ks = np.arange(-self.k_max, self.k_max + 1)
        return np.exp(2j * np.pi * np.outer(np.asarray(x, dtype=np.float64), ks) / self.period)

    def __call__(self, x, y=None) -> np.ndarray:
        """1D: values at x. 2D: grid of shape (len(y), len(x)), rows indexed by y."""
        if self.dims == 1:
            return np.real(self._basis(x) @ self.coeffs)
        ex = self._basis(x)
        ey = self._basis(x if y is None else y)
        return np.real(ey @ self.coeffs @ ex.T)

    def dense_sup(self) -> float:
        n = _DENSE_FACTOR * (2 * self.k_max + 1)
        x = np.arange(n) * (self.period / n)
        return float(np.max(np.abs(self(x))))


def random_bandlimited(
    dims: int,
    k_max: int,
    b: float,
    seed: int,
    period: Optional[float] = None,
) -> BandlimitedSignal:
    """Draw a real bandlimited signal whose sup over a 16x oversampled grid is b.

    ``period`` defaults to 2 * k_max so the top frequency sits on the band edge 1/2.
    """
    if k_max < 0:
        raise ValueError("k_max must be non-negative")
    if not 0.0 < b <= 1.0:
        raise ValueError("amplitude bound must lie in (0, 1]")
    if period is None:
        period = float(max(2 * k_max, 1))
    if k_max > period / 2:
        raise ValueError(f"k_max={k_max} exceeds the band for period {period}")
    rng = np.random.default_rng(seed)
    shape = (2 * k_max + 1,) * dims
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    flipped = c[::-1] if dims == 1 else c[::-1, ::-1]
    c = (c + np.conj(flipped)) / 2
    sig = BandlimitedSignal(dims, float(period), c, b)
    scale = b / sig.dense_sup()
    return BandlimitedSignal(dims, float(period), c * scale, b)


def samples_per_period(signal: BandlimitedSignal, lam: float) -> int:
    n = lam * signal.period
    if abs(n - round(n)) > 1e-9:
        raise ValueError("lam * period must be an integer to cover whole periods")
    return int(round(n))


def sample(signal: BandlimitedSignal, lam: float, n_samples: Optional[int] = None):
    """Samples w(n / lam), n = 0..n_samples-1 per axis (default: one period).

    Returns a 1D array, or a :class:`SignedImage` for 2D signals.
    """
    if lam <= 1:
        raise ValueError("oversampling rate must exceed 1")
    if n_samples is None:
        n_samples = samples_per_period(signal, lam)
    x = np.arange(n_samples) / lam
    if signal.dims == 1:
        return signal(x)
    # amplitude bound is enforced on a dense grid only; clip float-level overshoot
    return SignedImage(np.clip(signal(x), -1.0, 1.0))


@dataclass(frozen=True)
class LowPassKernel:
    """Reconstruction kernel.

    ``cutoff`` is a frequency in cycles per unit length. For ``ideal`` it is the
    pass-band edge; for ``gaussian`` it is the standard deviation of the
    frequency response, giving a spatial std of 1 / (2 pi cutoff) length units,
    i.e. lam / (2 pi cutoff) samples.
    """

    kind: Literal["ideal", "gaussian"] = "gaussian"
    cutoff: float = 0.5

    def __post_init__(self):
        if self.kind not in ("ideal", "gaussian"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if not self.cutoff > 0:
            raise ValueError("cutoff must be positive")

    def spatial_std(self, lam: float) -> float:
        """Standard deviation of the gaussian kernel, in samples."""
        return lam / (2.0 * math.pi * self.cutoff)

    def taps(self, lam: float, upsample: int = 1) -> np.ndarray:
        """Gaussian weights (1/lam) * Phi(j / (lam * upsample)), truncated at 1e-12 relative."""
        s = 1.0 / (2.0 * math.pi * self.cutoff)
        step = 1.0 / (lam * upsample)
        reach = int(math.ceil(s * math.sqrt(2.0 * math.log(1.0 / _GAUSS_TAIL)) / step))
        x = np.arange(-reach, reach + 1) * step
        phi = np.exp(-(x * x) / (2.0 * s * s)) / (math.sqrt(2.0 * math.pi) * s)
        return phi / lam


def _upsample_zeros(values: np.ndarray, factor: int) -> np.ndarray:
    if factor == 1:
        return values
    out = np.zeros(tuple(n * factor for n in values.shape))
    out[tuple(slice(None, None, factor) for _ in values.shape)] = values
    return out


def _ideal(values: np.ndarray, lam: float, cutoff: float, upsample: int) -> np.ndarray:
    spec = np.fft.fftn(values)
    for axis, n in enumerate(values.shape):
        freqs = np.fft.fftfreq(n) * lam
        keep = np.abs(freqs) <= cutoff + 1e-12
        shape = [1] * values.ndim
        shape[axis] = n
        spec = spec * keep.reshape(shape)
    if upsample > 1:
        # spectral zero padding evaluates the same trigonometric polynomial on a finer grid
        spec = np.fft.fftshift(spec)
        padded = np.zeros(tuple(n * upsample for n in values.shape), dtype=np.complex128)
        index = tuple(
            slice(n * upsample // 2 - n // 2, n * upsample // 2 - n // 2 + n) for n in values.shape
        )
        padded[index] = spec
        spec = np.fft.ifftshift(padded) * upsample**values.ndim
    return np.real(np.fft.ifftn(spec))


def reconstruct(
    values, lam: float, kernel: LowPassKernel, upsample: int = 1
) -> np.ndarray:
    """Evaluate (1/lam^d) sum_n values_n Phi(x - n/lam) on the grid x = m / (lam * upsample).

    The ideal kernel treats the samples as one period (periodic DFT truncation);
    the gaussian kernel treats samples outside the window as zero.
    """
    arr = np.asarray(values.values if isinstance(values, SignedImage) else values, dtype=np.float64)
    if arr.ndim not in (1, 2):
        raise ValueError("reconstruct expects a 1D sequence or a 2D grid")
    if upsample < 1:
        raise ValueError("upsample must be a positive integer")
    if kernel.kind == "ideal":
        return _ideal(arr, lam, kernel.cutoff, upsample)
    taps = kernel.taps(lam, upsample)
    out = _upsample_zeros(arr, upsample)
    for axis in range(arr.ndim):
        out = convolve1d(out, taps, axis=axis, mode="constant", cval=0.0)
    return out


def interior(arr: np.ndarray, margin: float) -> np.ndarray:
    if not 0.0 <= margin < 0.5:
        raise ValueError("interior margin must lie in [0, 0.5)")
    index = []
    for n in arr.shape:
        m = int(math.floor(margin * n))
        if n - 2 * m < 1:
            raise ValueError("interior margin leaves no evaluation points")
        index.append(slice(m, n - m))
    return arr[tuple(index)]


def lowpass_sup_error(
    a, b, lam: float, kernel: LowPassKernel, interior_margin: float = 0.1, upsample: int = 1
) -> float:
    """sup |reconstruct(a) - reconstruct(b)| over the interior of the evaluation grid."""
    ra = reconstruct(a, lam, kernel, upsample)
    rb = reconstruct(b, lam, kernel, upsample)
    if ra.shape != rb.shape:
        raise ValueError(f"shape mismatch {ra.shape} vs {rb.shape}")
    return float(np.max(np.abs(interior(ra - rb, interior_margin))))


def quantization_error(
    signal: BandlimitedSignal,
    q_values,
    lam: float,
    kernel: LowPassKernel,
    interior_margin: float = 0.1,
    upsample: int = 1,
) -> float:
    """Interior sup-norm of w_lam - w_q, the quantization part of the halftoning error."""
    q = np.asarray(q_values.values if hasattr(q_values, "values") else q_values, dtype=np.float64)
    p = sample(signal, lam, q.shape[0])
    return lowpass_sup_error(p, q, lam, kernel, interior_margin, upsample)


# --------------------------------------------------------------------------
# decay benchmark
# --------------------------------------------------------------------------


def fit_slope(lambdas: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(lambda)."""
    slope, _ = np.polyfit(np.log(np.asarray(lambdas, float)), np.log(np.asarray(errors, float)), 1)
    return float(slope)


@dataclass
class DecayReport:
    lambdas: list[float]
    errors: list[float]
    fitted_slope: float
    v_max_abs: list[float] = field(default_factory=list)
    quantizer: str = ""

    def to_dict(self) -> dict:
        return {
            "quantizer": self.quantizer,
            "lambdas": list(self.lambdas),
            "errors": list(self.errors),
            "v_max_abs": list(self.v_max_abs),
            "fitted_slope": self.fitted_slope,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["lambda", "error", "v_max_abs"])
        vmax = self.v_max_abs or [float("nan")] * len(self.lambdas)
        for lam, err, v in zip(self.lambdas, self.errors, vmax):
            writer.writerow([repr(float(lam)), repr(float(err)), repr(float(v))])
        return buf.getvalue()


def check_lambdas(lambdas: Sequence[float]) -> list[float]:
    lams = [float(x) for x in lambdas]
    if len(lams) < 4:
        raise ValueError(f"need at least 4 oversampling rates, got {len(lams)}")
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise ValueError("oversampling rates must be strictly increasing")
    if lams[0] <= 1:
        raise ValueError("oversampling rates must exceed 1")
    return lams


Quantizer = Union[int, FeedbackFilter, SchemeSpec]


def _as_quantizer(quantizer: Quantizer):
    if isinstance(quantizer, SchemeSpec):
        return quantizer, quantizer.name
    if isinstance(quantizer, FeedbackFilter):
        return quantizer, "sd1d[" + ",".join(map(str, quantizer.taps)) + "]"
    filters = {1: FIRST_ORDER, 2: H2}
    if quantizer not in filters:
        raise ValueError(f"no default 1D filter for order {quantizer}")
    return filters[quantizer], f"sd1d-order{quantizer}"


def decay_experiment(
    signal: BandlimitedSignal,
    quantizer: Quantizer,
    lambdas: Sequence[float],
    kernel: LowPassKernel = LowPassKernel(),
    interior_margin: float = 0.1,
    upsample: int = 1,
) -> DecayReport:
    """Quantize the signal at each rate and fit the decay exponent of the error.

    1D signals take an order (1 or 2) or a feedback filter; 2D signals take a scheme.
    """
    lams = check_lambdas(lambdas)
    quant, label = _as_quantizer(quantizer)
    if isinstance(quant, SchemeSpec) != (signal.dims == 2):
        raise ValueError("use a 2D scheme for 2D signals and a 1D filter for 1D signals")
    errors, vmax = [], []
    for lam in lams:
        p = sample(signal, lam)
        if signal.dims == 1:
            q, v = sigma_delta_1d(p, quant)
            vm = float(np.max(np.abs(v)))
        else:
            res = run_scheme(p, quant)
            q, vm = res.q.values, res.v_max_abs
        err = quantization_error(signal, q, lam, kernel, interior_margin, upsample)
        if not (math.isfinite(err) and math.isfinite(vm)):
            raise DecayExperimentError(f"non-finite error at lambda={lam}")
        errors.append(err)
        vmax.append(vm)
    if min(errors) <= 0.0:
        raise DecayExperimentError("zero error cannot be placed on a log-log fit")
    return DecayReport(lams, errors, fit_slope(lams, errors), vmax, label)
