"""Centered orthonormal Fourier transforms, coil combination, normalization.

Array conventions used throughout the package:

* a k-space grid or image is a complex128 ndarray of shape (rows, cols),
  rows = frequency encode, cols = phase encode;
* multi-coil k-space is shape (coils, rows, cols);
* a slice stack is shape (slices, coils, rows, cols);
* magnitude images are real float64, shape (rows, cols).

All transforms are centered (DC at index n // 2 on both axes) and
orthonormal, so Parseval holds exactly up to fp64 rounding.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateInputError, InvalidDataError


def _check_finite(x: np.ndarray, what: str = "input") -> None:
    if not np.all(np.isfinite(x.view(np.float64) if np.iscomplexobj(x) else x)):
        raise InvalidDataError(f"{what} contains NaN or Inf")


def fft2c(img: np.ndarray) -> np.ndarray:
    """Centered orthonormal 2-D FFT over the trailing two axes."""
    img = np.asarray(img, dtype=np.complex128)
    _check_finite(img)
    return np.fft.fftshift(
        np.fft.fft2(np.fft.ifftshift(img, axes=(-2, -1)), norm="ortho"),
        axes=(-2, -1),
    )


def ifft2c(k: np.ndarray) -> np.ndarray:
    """Centered orthonormal 2-D inverse FFT over the trailing two axes."""
    k = np.asarray(k, dtype=np.complex128)
    _check_finite(k)
    return np.fft.fftshift(
        np.fft.ifft2(np.fft.ifftshift(k, axes=(-2, -1)), norm="ortho"),
        axes=(-2, -1),
    )


def rss_combine(k: np.ndarray) -> np.ndarray:
    """Root-sum-of-squares magnitude image from multi-coil k-space.

    Per-coil centered inverse transform, then pixelwise
    sqrt(sum_c |img_c|^2).
    """
    k = np.asarray(k, dtype=np.complex128)
    if k.ndim != 3:
        raise InvalidDataError(f"expected (coils, rows, cols), got shape {k.shape}")
    _check_finite(k)
    imgs = ifft2c(k)
    return np.sqrt(np.sum(np.abs(imgs) ** 2, axis=0))


def normalize_magnitude(img: np.ndarray) -> tuple[np.ndarray, float]:
    """Divide a magnitude image by its max; returns (normalized, scale)."""
    img = np.asarray(img, dtype=np.float64)
    _check_finite(img)
    scale = float(img.max())
    if scale <= 0.0:
        raise DegenerateInputError("cannot normalize an all-zero magnitude image")
    return img / scale, scale
