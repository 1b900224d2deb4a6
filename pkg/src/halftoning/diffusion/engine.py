"""Sequential halftoning recurrences.

Each pixel depends on already-quantized neighbours, so the loops below are
plain Python over flat lists; numpy is only used at the boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from ..core import BinaryImage, SignedImage
from .schemes import FeedbackFilter, SchemeSpec

Scan = Literal["raster", "serpentine"]


def sign(x: float) -> float:
    """+1 for x > 0, -1 otherwise (ties go to black)."""
    return 1.0 if x > 0.0 else -1.0


@dataclass(frozen=True, eq=False)
class HalftoneResult:
    q: BinaryImage
    v_final: np.ndarray
    v_max_abs: float
    scheme: str
    scan: str


def run_floyd_steinberg_direct(p: SignedImage) -> HalftoneResult:
    """Floyd-Steinberg written out term by term, as an independent reference."""
    h, w = p.shape
    pv = p.values.tolist()
    v = [[0.0] * w for _ in range(h)]
    q = [[0.0] * w for _ in range(h)]
    for m in range(h):
        for n in range(w):
            up = v[m - 1][n] if m > 0 else 0.0
            left = v[m][n - 1] if n > 0 else 0.0
            up_left = v[m - 1][n - 1] if m > 0 and n > 0 else 0.0
            up_right = v[m - 1][n + 1] if m > 0 and n + 1 < w else 0.0
            x = 5 / 16 * up + 7 / 16 * left + 1 / 16 * up_left + 3 / 16 * up_right + pv[m][n]
            qq = 1.0 if x > 0.0 else -1.0
            q[m][n] = qq
            v[m][n] = x - qq
    varr = np.array(v)
    return HalftoneResult(
        BinaryImage(np.array(q)), varr, float(np.max(np.abs(varr))), "fs1-direct", "raster"
    )


def _compile(scheme: SchemeSpec, stride: int, mirror: bool):
    """Flatten the scheme into (weight, [(flat offset, tap), ...]) per direction."""
    out = []
    for e in scheme.entries:
        dj = -e.direction.dj if mirror else e.direction.dj
        taps = [
            (k * (e.direction.di * stride + dj), float(hk))
            for k, hk in enumerate(e.filter.taps, start=1)
            if hk != 0
        ]
        out.append((float(e.weight), taps))
    return out


def run_scheme(p: SignedImage, scheme: SchemeSpec, scan: Scan = "raster") -> HalftoneResult:
    """Halftone p with a weighted Sigma-Delta scheme.

    The state outside the image reads as zero. With ``scan="serpentine"`` odd
    rows are traversed right to left and every column offset is mirrored.
    """
    if scan not in ("raster", "serpentine"):
        raise ValueError(f"unknown scan order {scan!r}")
    h, w = p.shape
    pad_r, pad_c = scheme.reach()
    stride = w + 2 * pad_c
    # v lives in a zero-padded buffer so taps never need bounds checks
    buf = [0.0] * ((h + pad_r) * stride)
    q = np.empty((h, w))
    pv = p.values.tolist()
    forward = _compile(scheme, stride, mirror=False)
    backward = _compile(scheme, stride, mirror=True) if scan == "serpentine" else forward
    vmax = 0.0
    for i in range(h):
        rev = scan == "serpentine" and i % 2 == 1
        prog = backward if rev else forward
        cols = range(w - 1, -1, -1) if rev else range(w)
        row_base = (i + pad_r) * stride + pad_c
        prow = pv[i]
        qrow = q[i]
        for j in cols:
            idx = row_base + j
            s = 0.0
            for weight, taps in prog:
                acc = 0.0
                for off, hk in taps:
                    acc += hk * buf[idx - off]
                s += weight * acc
            x = s + prow[j]
            qq = 1.0 if x > 0.0 else -1.0
            qrow[j] = qq
            vv = x - qq
            buf[idx] = vv
            if vv > vmax:
                vmax = vv
            elif -vv > vmax:
                vmax = -vv
    v = np.array(buf).reshape(h + pad_r, stride)[pad_r:, pad_c : pad_c + w].copy()
    return HalftoneResult(BinaryImage(q), v, vmax, scheme.name, scan)


def sigma_delta_1d(p: Sequence[float], h: FeedbackFilter) -> tuple[np.ndarray, np.ndarray]:
    """One-bit Sigma-Delta quantizer with causal feedback filter h.

    Returns (q, v) where q_n = sign((h*v)_n + p_n) and v_n = (h*v)_n + p_n - q_n,
    with v_n = 0 for n < 0.
    """
    taps = [float(t) for t in h.taps]
    L = len(taps)
    p = [float(x) for x in p]
    v = [0.0] * (L + len(p))
    q = [0.0] * len(p)
    for n, pn in enumerate(p):
        idx = n + L
        acc = 0.0
        for k in range(L):
            acc += taps[k] * v[idx - k - 1]
        x = acc + pn
        qq = 1.0 if x > 0.0 else -1.0
        q[n] = qq
        v[idx] = x - qq
    return np.array(q), np.array(v[L:])


def rescale(p: SignedImage, margin: float = 0.03) -> SignedImage:
    """Shrink amplitudes by (1 - margin) to keep higher-order schemes stable."""
    if not 0.0 < margin < 1.0:
        raise ValueError("rescale margin must lie in (0, 1)")
    return SignedImage((1.0 - margin) * p.values)
