"""Quantitative evaluation on RSS magnitude images: NMSE, PSNR, SSIM.

Normalization contract: both images are divided by the maximum of the
reference image before PSNR/SSIM, so the dynamic range is 1 and PSNR is
monotone in MSE across methods sharing a reference.  NMSE is scale-free
by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DegenerateInputError, ShapeError
from .kspace import rss_combine

PSNR_CAP_DB = 99.99

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class MetricReport:
    psnr: float
    ssim: float
    nmse: float
    scale: float


def nmse(recon: np.ndarray, ref: np.ndarray) -> float:
    """||recon - ref||^2 / ||ref||^2.  Accepts real images or complex k-space."""
    recon = np.asarray(recon)
    ref = np.asarray(ref)
    if recon.shape != ref.shape:
        raise ShapeError(f"shapes {recon.shape} vs {ref.shape}")
    denom = float(np.sum(np.abs(ref) ** 2))
    if denom <= 0.0:
        raise DegenerateInputError("zero reference image")
    return float(np.sum(np.abs(recon - ref) ** 2)) / denom


def psnr(recon: np.ndarray, ref: np.ndarray) -> float:
    """10*log10(1/MSE) on unit-peak-normalized inputs, capped at 99.99 dB."""
    recon = np.asarray(recon, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if recon.shape != ref.shape:
        raise ShapeError(f"shapes {recon.shape} vs {ref.shape}")
    if not np.any(ref):
        raise DegenerateInputError("zero reference image")
    mse = float(np.mean((recon - ref) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * np.log10(1.0 / mse), PSNR_CAP_DB)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = size // 2
    g = np.exp(-0.5 * (np.arange(size) - half) ** 2 / sigma**2)
    w = np.outer(g, g)
    return w / w.sum()


def _window_means(img: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Weighted means over all full (valid) windows."""
    size = w.shape[0]
    view = np.lib.stride_tricks.sliding_window_view(img, (size, size))
    return np.einsum("xyab,ab->xy", view, w)


def ssim(recon: np.ndarray, ref: np.ndarray) -> float:
    """Mean local SSIM: 11x11 Gaussian window, sigma 1.5, K1/K2 canonical, L = 1."""
    recon = np.asarray(recon, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if recon.shape != ref.shape:
        raise ShapeError(f"shapes {recon.shape} vs {ref.shape}")
    if min(recon.shape) < SSIM_WINDOW:
        raise ArgumentError(f"image smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2
    w = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    mu_x = _window_means(recon, w)
    mu_y = _window_means(ref, w)
    mu_xx = _window_means(recon * recon, w)
    mu_yy = _window_means(ref * ref, w)
    mu_xy = _window_means(recon * ref, w)
    var_x = mu_xx - mu_x**2
    var_y = mu_yy - mu_y**2
    cov = mu_xy - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def evaluate_images(recon: np.ndarray, ref: np.ndarray) -> MetricReport:
    """All three metrics on one magnitude-image pair, jointly normalized."""
    ref = np.asarray(ref, dtype=np.float64)
    scale = float(ref.max())
    if scale <= 0.0:
        raise DegenerateInputError("zero reference image")
    rec_n = np.asarray(recon, dtype=np.float64) / scale
    ref_n = ref / scale
    return MetricReport(
        psnr=psnr(rec_n, ref_n),
        ssim=ssim(rec_n, ref_n),
        nmse=nmse(rec_n, ref_n),
        scale=scale,
    )


def evaluate_case(final_kspace, truth_stack: np.ndarray) -> list[MetricReport]:
    """Per-slice reports: RSS both sides, normalize by the reference scale.

    Accepts a ReconstructionResult or any sequence of per-slice k-space.
    """
    final_kspace = getattr(final_kspace, "final_kspace", final_kspace)
    truth_stack = np.asarray(truth_stack, dtype=np.complex128)
    if len(final_kspace) != truth_stack.shape[0]:
        raise ShapeError(
            f"{len(final_kspace)} reconstructed slices vs {truth_stack.shape[0]} references"
        )
    reports = []
    for k_hat, k_ref in zip(final_kspace, truth_stack):
        reports.append(evaluate_images(rss_combine(k_hat), rss_combine(k_ref)))
    return reports
