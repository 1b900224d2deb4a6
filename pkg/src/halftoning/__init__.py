"""Halftoning by error diffusion, attraction-repulsion dot placement, and kernel metrics."""

from .core import (
    BinaryImage,
    GrayImage,
    GridIndex,
    PGMError,
    SignedImage,
    constant_image,
    load_image,
    load_pgm,
    save_pgm,
    to_gray,
    to_signed,
)

__all__ = [
    "BinaryImage",
    "GrayImage",
    "GridIndex",
    "PGMError",
    "SignedImage",
    "constant_image",
    "load_image",
    "load_pgm",
    "save_pgm",
    "to_gray",
    "to_signed",
]
