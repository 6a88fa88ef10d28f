"""Training losses on the implied clean estimate.

Given a predicted degradation d_hat at step t, the implied clean k-space
is k_hat = x_t - alpha_t * d_hat.  Supervision is an l1 penalty on k_hat
versus the true target, optionally plus an l1 penalty on the coil-combined
magnitude images.
"""

from __future__ import annotations

import torch

from .errors import ShapeError


def ifft2c(k: torch.Tensor) -> torch.Tensor:
    """Centered orthonormal 2D inverse FFT over the trailing two axes."""
    shifted = torch.fft.ifftshift(k, dim=(-2, -1))
    img = torch.fft.ifft2(shifted, dim=(-2, -1), norm="ortho")
    return torch.fft.fftshift(img, dim=(-2, -1))


def rss(k: torch.Tensor) -> torch.Tensor:
    """Root-sum-of-squares magnitude image; coil axis is -3."""
    return torch.sqrt(torch.sum(torch.abs(ifft2c(k)) ** 2, dim=-3))


def implied_clean(x_t: torch.Tensor, d_hat: torch.Tensor, alpha_t: torch.Tensor) -> torch.Tensor:
    if x_t.shape != d_hat.shape:
        raise ShapeError(f"state {tuple(x_t.shape)} vs prediction {tuple(d_hat.shape)}")
    return x_t - alpha_t.reshape(-1, *([1] * (x_t.ndim - 1))) * d_hat


def degradation_loss(
    x_t: torch.Tensor,
    d_hat: torch.Tensor,
    alpha_t: torch.Tensor,
    k_star: torch.Tensor,
    lambda_k: float,
    lambda_i: float,
) -> torch.Tensor:
    """lambda_k * mean-l1 k-space error + lambda_i * mean-l1 RSS error.

    All tensors are complex with shape (batch, coils, rows, cols);
    alpha_t has shape (batch,).
    """
    k_hat = implied_clean(x_t, d_hat, alpha_t)
    if k_hat.shape != k_star.shape:
        raise ShapeError(f"estimate {tuple(k_hat.shape)} vs target {tuple(k_star.shape)}")
    diff = k_hat - k_star
    loss_k = torch.mean(torch.abs(diff.real) + torch.abs(diff.imag))
    total = lambda_k * loss_k
    if lambda_i != 0.0:
        total = total + lambda_i * torch.mean(torch.abs(rss(k_hat) - rss(k_star)))
    return total
