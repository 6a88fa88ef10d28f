"""Pluggable degradation predictors F(x_t, t; stage) -> d^_t.

Three families:

* an exact oracle computed from ground truth (test instrument);
* a calibrated linear predictor built on slice-GRAPPA kernels, turned into
  a degradation predictor via the adapter d^_t = (x_t - k^*) / alpha_t;
* a bridge to an external predictor process speaking the OCDI-PRED v1
  wire protocol (see protocol.py).
"""

from __future__ import annotations

import selectors
import shlex
import socket
import subprocess
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import protocol
from .errors import (
    ArgumentError,
    CalibrationError,
    ConfigError,
    DegenerateInputError,
    NearZeroAlphaError,
    ProtocolError,
    ShapeError,
    SolverError,
    TransportError,
)
from .operators import (
    CaipiScheme,
    Degradation,
    SamplingMask,
    Stage,
    apply_mask,
    caipi_inverse,
    degradation_m,
    degradation_u,
)
from .trajectory import Schedule, TrajectoryState

ALPHA_EPS = 1e-6


# ---------------------------------------------------------------------------
# oracle


@dataclass(frozen=True)
class TruthContext:
    """Ground-truth inputs the oracle needs per target slice.

    For Stage-M under in-plane undersampling the oracle degradation is
    defined against the masked truth, matching the Stage-M initialization
    from the (masked) measurement.
    """

    stack: np.ndarray  # (slices, coils, rows, cols)
    scheme: CaipiScheme
    mask: SamplingMask
    s_star: int


def oracle_predict(state: TrajectoryState, truth: TruthContext) -> Degradation:
    """Exact d_Omega from ground truth; independent of t."""
    if truth.stack is None or truth.scheme is None:
        raise ConfigError("oracle predictor needs ground-truth stack and scheme")
    if not (0 <= truth.s_star < truth.scheme.b):
        raise ConfigError(f"oracle target slice {truth.s_star} out of range")
    if state.stage is Stage.M:
        stack = truth.stack
        if truth.mask is not None and np.any(truth.mask.kept == 0.0):
            stack = np.stack([apply_mask(s, truth.mask) for s in stack])
        return degradation_m(stack, truth.scheme, truth.s_star)
    if truth.mask is None:
        raise ConfigError("oracle Stage-U prediction needs the sampling mask")
    return degradation_u(truth.stack[truth.s_star], truth.mask)


class OraclePredictor:
    """Chain-callback wrapper around oracle_predict."""

    def __init__(self, truth: TruthContext):
        self.truth = truth

    def __call__(self, x: np.ndarray, t_norm: float, stage: Stage) -> Degradation:
        # the oracle ignores x and t; state is rebuilt only for the shared API
        return oracle_predict(TrajectoryState(x=x, t=0, stage=stage), self.truth)


# ---------------------------------------------------------------------------
# slice-GRAPPA kernels


@dataclass(frozen=True)
class GrappaKernel:
    """Linear interpolation kernel for one target slice.

    weights[out_coil, in_coil, a, b] multiplies the input sample at
    (r + a - window // 2, c + b - window // 2).
    """

    target_slice: int
    weights: np.ndarray  # (coils, coils, window, window) complex
    ridge: float
    residual: float

    @property
    def window(self) -> int:
        return self.weights.shape[-1]


def _patch_matrix(grid: np.ndarray, rows_idx: np.ndarray, cols_idx: np.ndarray, w: int) -> np.ndarray:
    """Rows of flattened (coil, a, b) windows centered at the given indices."""
    hw = w // 2
    view = np.lib.stride_tricks.sliding_window_view(grid, (w, w), axis=(1, 2))
    # view[ic, r, c, a, b] = grid[ic, r + a, c + b]; center (r + hw, c + hw)
    patches = view[:, rows_idx[:, None] - hw, cols_idx[None, :] - hw, :, :]
    # -> (coils, nr, nc, w, w) -> (nr * nc, coils * w * w)
    patches = np.moveaxis(patches, 0, 2)  # (nr, nc, coils, w, w)
    return patches.reshape(-1, grid.shape[0] * w * w)


def grappa_calibrate(
    acs_collapsed: np.ndarray,
    acs_slices: np.ndarray,
    scheme: CaipiScheme,
    acs_band: tuple[int, int],
    window: int = 5,
    ridge: Optional[float] = None,
) -> list[GrappaKernel]:
    """Calibrate one kernel per target slice from fully sampled ACS data.

    Solves, per slice, the ridge-regularized least squares mapping windowed
    patches of the target-aligned collapsed ACS onto the target slice's
    ACS samples.  ridge=None applies the relative default
    1e-4 * mean(diag(A^H A)); ridge=0 requires a full-rank system.
    """
    if window % 2 != 1 or window < 1:
        raise ArgumentError("kernel window must be odd and positive")
    acs_collapsed = np.asarray(acs_collapsed, dtype=np.complex128)
    acs_slices = np.asarray(acs_slices, dtype=np.complex128)
    coils, rows, cols = acs_collapsed.shape
    lo, hi = acs_band
    hw = window // 2
    rows_idx = np.arange(hw, rows - hw)
    cols_idx = np.arange(lo + hw, hi - hw)
    n_samples = rows_idx.size * cols_idx.size
    n_taps = coils * window * window
    if n_samples < n_taps:
        raise CalibrationError(
            f"ACS region yields {n_samples} calibration samples but the kernel "
            f"has {n_taps} taps; need at least {n_taps}"
        )

    kernels = []
    for s in range(scheme.b):
        aligned = caipi_inverse(acs_collapsed, scheme, s)
        A = _patch_matrix(aligned, rows_idx, cols_idx, window)
        B = acs_slices[s][:, rows_idx[:, None], cols_idx[None, :]].reshape(coils, -1).T
        G = A.conj().T @ A
        lam = 1e-4 * float(np.real(np.trace(G))) / n_taps if ridge is None else float(ridge)
        if lam > 0:
            W = np.linalg.solve(G + lam * np.eye(n_taps), A.conj().T @ B)
        else:
            W, _, rank, _ = np.linalg.lstsq(A, B, rcond=None)
            if rank < n_taps:
                raise SolverError(
                    f"calibration system rank {rank} < {n_taps} taps with "
                    "ridge = 0; retry with ridge > 0"
                )
        resid = float(np.mean(np.abs(A @ W - B) ** 2))
        weights = np.ascontiguousarray(
            W.T.reshape(coils, coils, window, window)  # (out, in, a, b)
        )
        kernels.append(GrappaKernel(target_slice=s, weights=weights, ridge=lam, residual=resid))
    return kernels


def slice_grappa_apply(k_collapsed_aligned: np.ndarray, kernel: GrappaKernel) -> np.ndarray:
    """Apply kernel taps (zero-padded borders) to estimate the target slice."""
    k = np.asarray(k_collapsed_aligned, dtype=np.complex128)
    if k.ndim != 3 or k.shape[0] != kernel.weights.shape[1]:
        raise ShapeError(
            f"input shape {k.shape} incompatible with kernel for "
            f"{kernel.weights.shape[1]} coils"
        )
    w = kernel.window
    hw = w // 2
    padded = np.pad(k, ((0, 0), (hw, hw), (hw, hw)))
    view = np.lib.stride_tricks.sliding_window_view(padded, (w, w), axis=(1, 2))
    # view[i, r, c, a, b] = k[i, r + a - hw, c + b - hw] after padding
    return np.einsum("oiab,ircab->orc", kernel.weights, view)


def identity_kernel(coils: int, window: int = 5) -> GrappaKernel:
    """Kernel whose application is the identity map (center tap = 1)."""
    weights = np.zeros((coils, coils, window, window), dtype=np.complex128)
    hw = window // 2
    for c in range(coils):
        weights[c, c, hw, hw] = 1.0
    return GrappaKernel(target_slice=0, weights=weights, ridge=0.0, residual=0.0)


def low_frequency_anchor(
    y: np.ndarray,
    mask: SamplingMask,
    scheme: CaipiScheme,
    kernels: Sequence[GrappaKernel],
) -> list[np.ndarray]:
    """Per-slice low-frequency k-space anchors, zero outside the ACS band."""
    if not kernels:
        raise ConfigError("low-frequency anchor requires calibrated kernels")
    if mask.acs_width <= 0:
        raise DegenerateInputError("empty ACS band: no low-frequency anchor available")
    anchors = []
    for kernel in kernels:
        aligned = caipi_inverse(np.asarray(y, dtype=np.complex128), scheme, kernel.target_slice)
        est = slice_grappa_apply(aligned, kernel)
        anchor = np.zeros_like(est)
        anchor[:, :, mask.acs_lo:mask.acs_hi] = est[:, :, mask.acs_lo:mask.acs_hi]
        anchors.append(anchor)
    return anchors


# ---------------------------------------------------------------------------
# estimator adapter and calibrated predictor


def estimator_to_degradation(
    state: TrajectoryState,
    k_est: np.ndarray,
    sched: Schedule,
    eps: float = ALPHA_EPS,
) -> Degradation:
    """Turn any clean-target estimate into a degradation: (x_t - k^*) / alpha_t."""
    alpha = sched.alphas[state.t]
    if alpha < eps:
        raise NearZeroAlphaError(
            f"alpha_{state.t} = {alpha} < {eps}; predictors must not run at t = 0"
        )
    if state.x.shape != np.shape(k_est):
        raise ShapeError(f"state {state.x.shape} vs estimate {np.shape(k_est)}")
    return Degradation(data=(state.x - k_est) / alpha, stage=state.stage)


class CalibratedPredictor:
    """Slice-GRAPPA-backed predictor for one target slice.

    The linear estimator is t-independent: the full-slice estimate is
    computed once from the aligned measurement and reused at every step.
    Stage-M targets the masked truth, so its estimate is re-masked.
    """

    def __init__(
        self,
        y: np.ndarray,
        scheme: CaipiScheme,
        mask: SamplingMask,
        kernel: GrappaKernel,
        sched_m: Schedule,
        sched_u: Schedule,
    ):
        aligned = caipi_inverse(np.asarray(y, dtype=np.complex128), scheme, kernel.target_slice)
        self.k_full_est = slice_grappa_apply(aligned, kernel)
        self.k_masked_est = apply_mask(self.k_full_est, mask)
        self.scheds = {Stage.M: sched_m, Stage.U: sched_u}

    def __call__(self, x: np.ndarray, t_norm: float, stage: Stage) -> Degradation:
        sched = self.scheds[stage]
        t = int(round(t_norm * sched.T))
        k_est = self.k_masked_est if stage is Stage.M else self.k_full_est
        return estimator_to_degradation(TrajectoryState(x=x, t=t, stage=stage), k_est, sched)


# ---------------------------------------------------------------------------
# external predictor


class ExternalPredictor:
    """Client for an out-of-process predictor.

    Endpoint descriptors: ``subprocess:<command>`` (stdio transport) or
    ``tcp:<host>:<port>``.  One request in flight at a time; concurrent
    callers must queue externally.
    """

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout
        self._proc: Optional[subprocess.Popen] = None
        self._sock: Optional[socket.socket] = None
        self._rd = None
        self._wr = None
        self._connect()

    def _connect(self) -> None:
        if self.endpoint.startswith("subprocess:"):
            cmd = shlex.split(self.endpoint[len("subprocess:"):])
            try:
                self._proc = subprocess.Popen(
                    cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE
                )
            except OSError as exc:
                raise TransportError(f"cannot spawn predictor {cmd!r}: {exc}") from exc
            self._rd, self._wr = self._proc.stdout, self._proc.stdin
        elif self.endpoint.startswith("tcp:"):
            try:
                _, host, port = self.endpoint.split(":")
                self._sock = socket.create_connection((host, int(port)), timeout=self.timeout)
            except (OSError, ValueError) as exc:
                raise TransportError(f"cannot reach {self.endpoint}: {exc}") from exc
            self._rd = self._sock.makefile("rb")
            self._wr = self._sock.makefile("wb")
        else:
            raise ConfigError(f"unknown endpoint descriptor: {self.endpoint!r}")
        handshake = self._read_line_timeout()
        if handshake != protocol.HANDSHAKE:
            self.close()
            raise ProtocolError(f"bad handshake {handshake!r}, expected {protocol.HANDSHAKE!r}")

    def _read_line_timeout(self) -> bytes:
        if self._proc is not None:
            sel = selectors.DefaultSelector()
            sel.register(self._rd, selectors.EVENT_READ)
            if not sel.select(self.timeout):
                raise TransportError(f"predictor timed out after {self.timeout}s")
            sel.close()
        line = self._rd.readline()
        if not line:
            raise TransportError("predictor endpoint closed the connection")
        return line

    def __call__(self, x: np.ndarray, t_norm: float, stage: Stage) -> Degradation:
        if self._wr is None:
            raise TransportError("predictor connection is closed")
        try:
            protocol.write_frame(self._wr, t_norm, stage, np.asarray(x, dtype=np.complex128))
        except (OSError, BrokenPipeError) as exc:
            raise TransportError(f"write to predictor failed: {exc}") from exc
        try:
            if self._proc is not None:
                # wait for the header with a timeout, then block on the payload
                sel = selectors.DefaultSelector()
                sel.register(self._rd, selectors.EVENT_READ)
                ready = sel.select(self.timeout)
                sel.close()
                if not ready:
                    raise TransportError(f"predictor timed out after {self.timeout}s")
            _, rstage, d = protocol.read_frame(self._rd)
        except socket.timeout as exc:
            raise TransportError(f"predictor timed out after {self.timeout}s") from exc
        except OSError as exc:
            raise TransportError(f"read from predictor failed: {exc}") from exc
        if d.shape != x.shape:
            raise ProtocolError(f"response shape {d.shape} != request shape {x.shape}")
        return Degradation(data=np.asarray(d, dtype=np.complex128), stage=rstage)

    def close(self) -> None:
        for f in (self._wr, self._rd):
            try:
                if f is not None:
                    f.close()
            except OSError:
                pass
        if self._sock is not None:
            self._sock.close()
        if self._proc is not None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
        self._wr = self._rd = self._sock = self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
