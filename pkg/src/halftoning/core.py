"""Image containers shared by every halftoning method, plus PGM I/O.

Conventions: gray values live in [0, 1] with 0 = black and 1 = white. The
signed representation used by error diffusion is p = 2u - 1 in [-1, 1], and a
halftone is a grid of q in {-1, +1} with +1 = white. Arrays are stored
row-major with shape (height, width); the origin is the top-left pixel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Union

import numpy as np

PathLike = Union[str, Path]


class PGMError(ValueError):
    """Raised for malformed or truncated PGM data."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def _frozen_array(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} needs a non-empty 2D array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


class _Grid:
    values: np.ndarray

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True, eq=False)
class GrayImage(_Grid):
    """Gray levels u in [0, 1], 0 = black."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.values, "GrayImage")
        if not np.all((arr >= 0.0) & (arr <= 1.0)):
            raise ValueError("GrayImage values must lie in [0, 1]")
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True, eq=False)
class SignedImage(_Grid):
    """Centered pixel values p in [-1, 1]."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.values, "SignedImage")
        if not np.all((arr >= -1.0) & (arr <= 1.0)):
            raise ValueError("SignedImage values must lie in [-1, 1]")
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True, eq=False)
class BinaryImage(_Grid):
    """Halftone with every pixel exactly -1 (black) or +1 (white)."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.values, "BinaryImage")
        if not np.all((arr == -1.0) | (arr == 1.0)):
            raise ValueError("BinaryImage values must be exactly -1 or +1")
        object.__setattr__(self, "values", arr)

    def black_count(self) -> int:
        return int(np.count_nonzero(self.values == -1.0))


class GridIndex(NamedTuple):
    row: int
    col: int


def to_signed(image: GrayImage) -> SignedImage:
    return SignedImage(2.0 * image.values - 1.0)


def to_gray(image: Union[SignedImage, BinaryImage]) -> GrayImage:
    """Inverse of :func:`to_signed`; also maps a halftone to {0, 1}."""
    return GrayImage(np.clip((image.values + 1.0) / 2.0, 0.0, 1.0))


# --------------------------------------------------------------------------
# PGM
# --------------------------------------------------------------------------

_WHITESPACE = b" \t\n\r\x0b\x0c"


def _next_token(data: bytes, pos: int) -> tuple[bytes, int, int]:
    """Return (token, token_start, position after token), skipping comments."""
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c in _WHITESPACE:
            pos += 1
        elif c == b"#":
            while pos < n and data[pos : pos + 1] not in b"\r\n":
                pos += 1
        else:
            break
    if pos >= n:
        raise PGMError("unexpected end of header", pos)
    start = pos
    while pos < n and data[pos : pos + 1] not in _WHITESPACE and data[pos : pos + 1] != b"#":
        pos += 1
    return data[start:pos], start, pos


def _header_int(data: bytes, pos: int, what: str) -> tuple[int, int]:
    tok, start, pos = _next_token(data, pos)
    if not tok.isdigit():
        raise PGMError(f"expected {what}, found {tok[:16]!r}", start)
    return int(tok), pos


def parse_pgm(data: bytes) -> GrayImage:
    """Decode P2 (ASCII) or P5 (binary) PGM bytes."""
    magic, _, pos = _next_token(data, 0)
    if magic not in (b"P2", b"P5"):
        raise PGMError(f"unsupported magic number {magic[:8]!r}", 0)
    width, pos = _header_int(data, pos, "width")
    height, pos = _header_int(data, pos, "height")
    maxval_pos = pos
    maxval, pos = _header_int(data, pos, "maxval")
    if width < 1 or height < 1:
        raise PGMError("image dimensions must be positive", maxval_pos)
    if maxval == 0 or maxval > 65535:
        raise PGMError(f"maxval {maxval} outside 1..65535", maxval_pos)
    count = width * height

    if magic == b"P5":
        if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
            raise PGMError("missing whitespace before raster", pos)
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = count * dtype.itemsize
        if len(data) - pos < need:
            raise PGMError(f"truncated raster: need {need} bytes, have {len(data) - pos}", len(data))
        raw = np.frombuffer(data, dtype=dtype, count=count, offset=pos).astype(np.int64)
    else:
        raw = np.empty(count, dtype=np.int64)
        for k in range(count):
            try:
                raw[k], pos = _header_int(data, pos, "sample")
            except PGMError as exc:
                raise PGMError(f"truncated or bad ASCII raster at sample {k}", exc.offset) from None

    if np.any(raw > maxval):
        raise PGMError("sample exceeds maxval", pos)
    return GrayImage((raw / maxval).reshape(height, width))


def load_pgm(path: PathLike) -> GrayImage:
    return parse_pgm(Path(path).read_bytes())


def load_image(path: PathLike) -> GrayImage:
    """Load a PGM, or any grayscale-convertible format Pillow understands."""
    path = Path(path)
    head = path.read_bytes()[:2]
    if head in (b"P2", b"P5"):
        return load_pgm(path)
    from PIL import Image

    with Image.open(path) as im:
        if im.mode == "I;16":
            arr = np.asarray(im, dtype=np.float64) / 65535.0
        else:
            arr = np.asarray(im.convert("L"), dtype=np.float64) / 255.0
    return GrayImage(arr)


def encode_pgm(image: Union[GrayImage, BinaryImage]) -> bytes:
    if isinstance(image, BinaryImage):
        payload = np.where(image.values > 0, 255, 0).astype(np.uint8)
    elif isinstance(image, GrayImage):
        # round half up, not numpy's round half to even
        payload = np.floor(255.0 * image.values + 0.5).astype(np.uint8)
    else:
        raise TypeError(f"cannot encode {type(image).__name__} as PGM")
    header = b"P5\n%d %d\n255\n" % (image.width, image.height)
    return header + payload.tobytes()


def save_pgm(image: Union[GrayImage, BinaryImage], path: PathLike) -> None:
    Path(path).write_bytes(encode_pgm(image))


def constant_image(height: int, width: int, value: float) -> GrayImage:
    if not (0.0 <= value <= 1.0) or math.isnan(value):
        raise ValueError(f"gray value {value} outside [0, 1]")
    return GrayImage(np.full((height, width), float(value)))
