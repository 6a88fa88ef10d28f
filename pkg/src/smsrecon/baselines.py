"""Reference reconstructions: zero-filled, SMS-SENSE, slice-GRAPPA.

The SENSE solver works per aliased pixel group.  For a uniform in-plane
mask of period R (offset 0) and integer-pixel CAIPI shifts, the
zero-filled coil image of the lattice part of the measurement is

    a_c(x, n) = (1/R) * sum_{r, s} sens_{s,c}(x, q) * img_s(x, q),
    q = (n - r * N/R - m_s) mod N,

with m_s = round(f_s * cols) the image-domain shift of slice s.  The
right-hand side is periodic in n with period N/R, so each group of
aliased columns yields exactly `coils` equations coupling b * R unknown
pixels, solved jointly by Tikhonov-regularized least squares.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ArgumentError, DegenerateInputError, SolverError, UnsupportedMaskError
from .kspace import fft2c, ifft2c
from .operators import CaipiScheme, SamplingMask, caipi_inverse
from .predictors import GrappaKernel, slice_grappa_apply

SENS_THRESHOLD = 0.05  # fraction of per-slice max RSS below which maps are zeroed


def zero_fill_reconstruct(y: np.ndarray, scheme: CaipiScheme, s_star: int) -> np.ndarray:
    """Floor baseline: the target-aligned measurement, unchanged."""
    return caipi_inverse(np.asarray(y, dtype=np.complex128), scheme, s_star)


def slice_grappa_reconstruct(
    y: np.ndarray, scheme: CaipiScheme, kernels: Sequence[GrappaKernel]
) -> np.ndarray:
    """Per-slice kernel interpolation of the aligned measurement.

    Returns a (b, coils, rows, cols) stack in kernel target-slice order.
    """
    out = []
    for kernel in kernels:
        aligned = caipi_inverse(np.asarray(y, dtype=np.complex128), scheme, kernel.target_slice)
        out.append(slice_grappa_apply(aligned, kernel))
    return np.stack(out)


def _mask_period(mask: SamplingMask) -> int:
    """Recover the uniform lattice period, ignoring the extra ACS lines."""
    cols = mask.cols
    line = mask.kept[0]
    non_acs = [c for c in range(cols) if not (mask.acs_lo <= c < mask.acs_hi)]
    for r in range(1, cols + 1):
        if cols % r != 0:
            continue
        lattice = set(range(0, cols, r))
        if all((c in lattice) == (line[c] == 1.0) for c in non_acs):
            return r
    raise UnsupportedMaskError("mask is not uniform-with-ACS (offset 0)")


def estimate_sensitivities(
    acs_slices: np.ndarray, acs_band: tuple[int, int]
) -> np.ndarray:
    """Per-slice coil maps from the ACS band.

    Low-resolution coil images come from the ACS columns, tapered with a
    raised cosine over the band and zero-padded elsewhere; maps are the
    ratio of each coil image to the RSS combination, zeroed where the RSS
    falls below SENS_THRESHOLD of its per-slice maximum.
    """
    acs_slices = np.asarray(acs_slices, dtype=np.complex128)
    lo, hi = acs_band
    if hi <= lo:
        raise DegenerateInputError("empty ACS band")
    b = acs_slices.shape[0]
    cols = acs_slices.shape[-1]
    taper = np.zeros(cols)
    width = hi - lo
    taper[lo:hi] = 0.5 * (1.0 - np.cos(2.0 * np.pi * (np.arange(width) + 0.5) / width))
    maps = np.zeros_like(acs_slices)
    for s in range(b):
        lowres = ifft2c(acs_slices[s] * taper[None, None, :])
        rss = np.sqrt(np.sum(np.abs(lowres) ** 2, axis=0))
        keep = rss > SENS_THRESHOLD * rss.max()
        with np.errstate(divide="ignore", invalid="ignore"):
            maps[s] = np.where(keep[None, :, :], lowres / rss[None, :, :], 0.0)
    return maps


def sense_reconstruct(
    y: np.ndarray,
    scheme: CaipiScheme,
    mask: SamplingMask,
    sens: np.ndarray,
    tikhonov: float = 0.0,
) -> np.ndarray:
    """SMS-SENSE unaliasing by per-group regularized least squares.

    Requires a uniform mask (period R, offset 0, cols divisible by R) and
    integer-pixel CAIPI shifts; anything else raises UnsupportedMaskError.
    Returns a (b, coils, rows, cols) k-space stack rebuilt from the
    unaliased slice images through the given sensitivities.
    """
    y = np.asarray(y, dtype=np.complex128)
    sens = np.asarray(sens, dtype=np.complex128)
    if tikhonov < 0:
        raise ArgumentError("tikhonov weight must be nonnegative")
    b = scheme.b
    coils, rows, cols = y.shape
    if sens.shape != (b, coils, rows, cols):
        raise ArgumentError(f"sensitivity shape {sens.shape} != {(b, coils, rows, cols)}")
    R = _mask_period(mask)
    shifts_px = []
    for f in scheme.shifts:
        m = f * cols
        if abs(m - round(m)) > 1e-9:
            raise UnsupportedMaskError(
                f"CAIPI shift fraction {f} is not an integer-pixel shift on {cols} columns"
            )
        shifts_px.append(int(round(m)) % cols)

    # zero-filled coil images of the pure lattice part of the measurement
    lattice = np.zeros(cols)
    lattice[::R] = 1.0
    aliased = ifft2c(y * lattice[None, None, :])

    step = cols // R
    n_unk = b * R
    recon = np.zeros((b, rows, cols), dtype=np.complex128)
    eye = np.eye(n_unk)
    for n0 in range(step):
        # unknown pixels contributing to this group, per slice
        q = np.array(
            [[(n0 - r * step - shifts_px[s]) % cols for r in range(R)] for s in range(b)]
        )  # (b, R)
        # A[x, c, s*R + r] = (1/R) * sens[s, c, x, q[s, r]]
        A = np.empty((rows, coils, n_unk), dtype=np.complex128)
        for s in range(b):
            A[:, :, s * R:(s + 1) * R] = np.transpose(sens[s][:, :, q[s]], (1, 0, 2)) / R
        obs = aliased[:, :, n0].T  # (rows, coils)
        G = np.einsum("xcn,xcm->xnm", A.conj(), A)
        rhs = np.einsum("xcn,xc->xn", A.conj(), obs)
        try:
            sol = np.linalg.solve(G + tikhonov * eye[None], rhs[..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise SolverError("singular SENSE system; retry with tikhonov > 0") from exc
        for s in range(b):
            for r in range(R):
                recon[s][:, q[s, r]] = sol[:, s * R + r]

    out = np.empty((b, coils, rows, cols), dtype=np.complex128)
    for s in range(b):
        out[s] = fft2c(sens[s] * recon[s][None, :, :])
    return out
