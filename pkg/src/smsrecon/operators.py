"""Deterministic acquisition operators.

CAIPI phase modulation, SMS slice collapse, Cartesian masking,
target-aligned collapse, and the two stage-specific structured
degradation terms.

Phase-ramp convention: modulating slice s multiplies phase-encode column
j by exp(-2*pi*i * f_s * j') with j' = j - cols // 2.  Under the centered
orthonormal inverse transform this shifts the image by f_s * cols pixels
in the positive phase-encode direction (exactly, when f_s * cols is an
integer).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, ShapeError


class Stage(enum.Enum):
    """Which degradation mechanism a state/degradation belongs to."""

    M = "M"  # slice separation (inter-slice interference)
    U = "U"  # in-plane completion (mask-induced missing data)


@dataclass(frozen=True)
class CaipiScheme:
    """Per-slice FOV-shift fractions along phase encoding.

    shifts[s] = (image-domain shift of slice s) / FOV, in (-1, 1].
    """

    shifts: tuple[float, ...]
    rows: int
    cols: int

    def __post_init__(self):
        if len(self.shifts) < 1:
            raise ArgumentError("scheme needs at least one slice")
        for f in self.shifts:
            if not (-1.0 < f <= 1.0):
                raise ArgumentError(f"shift fraction {f} outside (-1, 1]")

    @property
    def b(self) -> int:
        return len(self.shifts)


@dataclass(frozen=True)
class SamplingMask:
    """Binary Cartesian mask over phase-encode columns, with an ACS band.

    kept is a (rows, cols) float array of {0, 1}; acs is a half-open
    column index range [acs_lo, acs_hi) that is fully kept.
    """

    kept: np.ndarray
    acs_lo: int
    acs_hi: int

    def __post_init__(self):
        kept = np.asarray(self.kept, dtype=np.float64)
        object.__setattr__(self, "kept", kept)
        vals = np.unique(kept)
        if not np.all(np.isin(vals, (0.0, 1.0))):
            raise ArgumentError("mask values must be 0 or 1")
        if not (0 <= self.acs_lo <= self.acs_hi <= kept.shape[1]):
            raise ArgumentError("ACS band out of mask bounds")
        if self.acs_hi > self.acs_lo and not np.all(kept[:, self.acs_lo:self.acs_hi] == 1.0):
            raise ArgumentError("ACS band must be fully kept")

    @property
    def rows(self) -> int:
        return self.kept.shape[0]

    @property
    def cols(self) -> int:
        return self.kept.shape[1]

    @property
    def acs_width(self) -> int:
        return self.acs_hi - self.acs_lo


@dataclass(frozen=True)
class Degradation:
    """Structured degradation term d_Omega, shape (coils, rows, cols)."""

    data: np.ndarray
    stage: Stage


def _check_mc(k: np.ndarray, what: str = "k-space") -> np.ndarray:
    k = np.asarray(k, dtype=np.complex128)
    if k.ndim != 3:
        raise ShapeError(f"{what}: expected (coils, rows, cols), got {k.shape}")
    return k


def _check_scheme_shape(k: np.ndarray, scheme: CaipiScheme) -> None:
    if k.shape[-2:] != (scheme.rows, scheme.cols):
        raise ShapeError(
            f"grid shape {k.shape[-2:]} does not match scheme "
            f"({scheme.rows}, {scheme.cols})"
        )


def caipi_ramp(scheme: CaipiScheme, s: int) -> np.ndarray:
    """The length-cols unit-modulus column ramp applied by caipi_apply."""
    if not (0 <= s < scheme.b):
        raise ShapeError(f"slice index {s} outside scheme of {scheme.b} slices")
    jp = np.arange(scheme.cols) - scheme.cols // 2
    return np.exp(-2j * np.pi * scheme.shifts[s] * jp)


def caipi_apply(k: np.ndarray, scheme: CaipiScheme, s: int) -> np.ndarray:
    """Apply the CAIPI modulation operator C_s to multi-coil k-space."""
    k = _check_mc(k)
    _check_scheme_shape(k, scheme)
    return k * caipi_ramp(scheme, s)[None, None, :]


def caipi_inverse(k: np.ndarray, scheme: CaipiScheme, s: int) -> np.ndarray:
    """Apply C_s^{-1}: the conjugate phase ramp."""
    k = _check_mc(k)
    _check_scheme_shape(k, scheme)
    return k * np.conj(caipi_ramp(scheme, s))[None, None, :]


def sms_collapse(stack: np.ndarray, scheme: CaipiScheme) -> np.ndarray:
    """Collapsed multiband k-space: sum_s C_s(k_s)."""
    stack = np.asarray(stack, dtype=np.complex128)
    if stack.ndim != 4:
        raise ShapeError(f"expected (slices, coils, rows, cols), got {stack.shape}")
    if stack.shape[0] != scheme.b:
        raise ShapeError(f"stack has {stack.shape[0]} slices, scheme has {scheme.b}")
    _check_scheme_shape(stack, scheme)
    out = np.zeros(stack.shape[1:], dtype=np.complex128)
    for s in range(scheme.b):
        out += caipi_apply(stack[s], scheme, s)
    return out


def apply_mask(k: np.ndarray, mask: SamplingMask) -> np.ndarray:
    """Elementwise P (x) k: kept entries copied, others zeroed."""
    k = _check_mc(k)
    if k.shape[-2:] != mask.kept.shape:
        raise ShapeError(f"grid {k.shape[-2:]} vs mask {mask.kept.shape}")
    return k * mask.kept[None, :, :]


def measure(
    stack: np.ndarray,
    scheme: CaipiScheme,
    mask: SamplingMask,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> np.ndarray:
    """Acquired measurement y = P (x) sum_s C_s(k_s) + P (x) n.

    Noise is i.i.d. circular complex Gaussian on kept entries only, with
    per-component std noise_sigma / sqrt(2) so E|n|^2 = noise_sigma^2.
    Deterministic given seed.
    """
    if noise_sigma < 0:
        raise ArgumentError("noise_sigma must be nonnegative")
    y = apply_mask(sms_collapse(stack, scheme), mask)
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        comp = noise_sigma / np.sqrt(2.0)
        n = comp * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
        y = y + n * mask.kept[None, :, :]
    return y


def target_aligned_collapse(stack: np.ndarray, scheme: CaipiScheme, s_star: int) -> np.ndarray:
    """Collapsed k-space expressed in the target slice's coordinate system.

    y~_{s*} = k_{s*} + sum_{s != s*} (C_{s*}^{-1} C_s)(k_s),
    computed as C_{s*}^{-1} of the plain collapse.
    """
    return caipi_inverse(sms_collapse(stack, scheme), scheme, s_star)


def degradation_m(stack: np.ndarray, scheme: CaipiScheme, s_star: int) -> Degradation:
    """Stage-M structured interference: d_M = y~_{s*} - k_{s*}."""
    stack = np.asarray(stack, dtype=np.complex128)
    aligned = target_aligned_collapse(stack, scheme, s_star)
    return Degradation(data=aligned - stack[s_star], stage=Stage.M)


def degradation_u(k: np.ndarray, mask: SamplingMask) -> Degradation:
    """Stage-U missing-data corruption: d_U = P (x) k - k = -(1 - P) (x) k."""
    k = _check_mc(k)
    return Degradation(data=apply_mask(k, mask) - k, stage=Stage.U)
