"""Two-stage inference: Stage-M slice separation, then Stage-U in-plane
completion with data-consistency and low-frequency anchor projections.

Per target slice the pipeline is: align the collapsed measurement with the
inverse CAIPI ramp, run the Stage-M reverse chain (no projections), then
warm-start the Stage-U chain from the Stage-M output, enforcing after each
step

    x <- P (x) pseudo + (1 - P) (x) x          (data consistency)
    x <- M_acs (x) anchor + (1 - M_acs) (x) x  (every G-th step, if enabled)

where pseudo = P (x) k^_M is the Stage-M output restricted to acquired
locations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ArgumentError, ConfigError, ReconstructionError, ShapeError
from .kspace import rss_combine
from .operators import (
    CaipiScheme,
    SamplingMask,
    Stage,
    apply_mask,
    caipi_inverse,
)
from .predictors import (
    CalibratedPredictor,
    ExternalPredictor,
    GrappaKernel,
    OraclePredictor,
    TruthContext,
    low_frequency_anchor,
)
from .trajectory import (
    PredictorFn,
    TrajectoryState,
    linear_schedule,
    run_reverse_chain,
)


@dataclass(frozen=True)
class InferenceConfig:
    """Step counts, guidance interval, projection switches, predictor kind."""

    t_m: int = 10
    t_u: int = 10
    guidance_interval: int = 2
    use_anchor: bool = True
    dc_enabled: bool = True
    predictor: str = "oracle"  # oracle | grappa | external
    endpoint: Optional[str] = None  # for predictor == "external"

    def __post_init__(self):
        if self.t_m < 1 or self.t_u < 1:
            raise ArgumentError("step counts T_M, T_U must be >= 1")
        if self.guidance_interval < 1:
            raise ArgumentError("guidance interval G must be >= 1")
        if self.predictor not in ("oracle", "grappa", "external"):
            raise ConfigError(f"unknown predictor kind {self.predictor!r}")


@dataclass
class ReconstructionResult:
    """Per-slice Stage-M and final k-space plus RSS images and provenance."""

    stage_m_kspace: list  # of (coils, rows, cols) ndarrays
    final_kspace: list
    rss_images: list  # of (rows, cols) float ndarrays
    provenance: dict = field(default_factory=dict)


def dc_project(x: np.ndarray, pseudo: np.ndarray, mask: SamplingMask) -> np.ndarray:
    """x <- P (x) pseudo + (1 - P) (x) x."""
    x = np.asarray(x, dtype=np.complex128)
    pseudo = np.asarray(pseudo, dtype=np.complex128)
    if x.shape != pseudo.shape or x.shape[-2:] != mask.kept.shape:
        raise ShapeError(f"dc_project shapes: x {x.shape}, pseudo {pseudo.shape}, mask {mask.kept.shape}")
    kept = mask.kept[None, :, :]
    return kept * pseudo + (1.0 - kept) * x


def anchor_project(x: np.ndarray, anchor: np.ndarray, acs_band: tuple[int, int]) -> np.ndarray:
    """Replace ACS columns of x by the anchor's; others unchanged."""
    x = np.asarray(x, dtype=np.complex128)
    anchor = np.asarray(anchor, dtype=np.complex128)
    if x.shape != anchor.shape:
        raise ShapeError(f"anchor_project shapes: x {x.shape}, anchor {anchor.shape}")
    lo, hi = acs_band
    out = x.copy()
    out[:, :, lo:hi] = anchor[:, :, lo:hi]
    return out


def pseudo_measurement(k_hat_m: np.ndarray, mask: SamplingMask) -> np.ndarray:
    """Pseudo-measurement on acquired locations: P (x) k^_M."""
    return apply_mask(k_hat_m, mask)


def stage_m(y_aligned: np.ndarray, cfg: InferenceConfig, predictor: PredictorFn) -> np.ndarray:
    """Slice-separation reverse chain; no projections interleaved."""
    sched = linear_schedule(cfg.t_m)
    return run_reverse_chain(y_aligned, Stage.M, sched, predictor)


def stage_u(
    k_hat_m: np.ndarray,
    mask: SamplingMask,
    cfg: InferenceConfig,
    predictor: PredictorFn,
    anchor: Optional[np.ndarray] = None,
) -> np.ndarray:
    """In-plane completion chain, warm-started from the Stage-M output."""
    sched = linear_schedule(cfg.t_u)
    pseudo = pseudo_measurement(k_hat_m, mask)
    apply_anchor = cfg.use_anchor and anchor is not None and mask.acs_width > 0

    def post_step(state: TrajectoryState) -> TrajectoryState:
        t_current = state.t + 1  # step that produced this state
        x = state.x
        if cfg.dc_enabled:
            x = dc_project(x, pseudo, mask)
        if apply_anchor and t_current % cfg.guidance_interval == 0:
            x = anchor_project(x, anchor, (mask.acs_lo, mask.acs_hi))
        return TrajectoryState(x=x, t=state.t, stage=state.stage)

    return run_reverse_chain(k_hat_m, Stage.U, sched, predictor, post_step)


def _make_predictor(
    cfg: InferenceConfig,
    s_star: int,
    y: np.ndarray,
    scheme: CaipiScheme,
    mask: SamplingMask,
    truth_stack: Optional[np.ndarray],
    kernels: Optional[Sequence[GrappaKernel]],
) -> PredictorFn:
    if cfg.predictor == "oracle":
        if truth_stack is None:
            raise ConfigError("oracle predictor requires the ground-truth stack")
        return OraclePredictor(TruthContext(truth_stack, scheme, mask, s_star))
    if cfg.predictor == "grappa":
        if kernels is None:
            raise ConfigError("grappa predictor requires calibrated kernels")
        return CalibratedPredictor(
            y, scheme, mask, kernels[s_star],
            linear_schedule(cfg.t_m), linear_schedule(cfg.t_u),
        )
    if cfg.endpoint is None:
        raise ConfigError("external predictor requires an endpoint descriptor")
    return ExternalPredictor(cfg.endpoint.replace("{slice}", str(s_star)))


def reconstruct_all(
    y: np.ndarray,
    scheme: CaipiScheme,
    mask: SamplingMask,
    cfg: InferenceConfig,
    truth_stack: Optional[np.ndarray] = None,
    kernels: Optional[Sequence[GrappaKernel]] = None,
) -> ReconstructionResult:
    """Run the full two-stage pipeline for every target slice."""
    y = np.asarray(y, dtype=np.complex128)
    if not np.any(mask.kept):
        raise ArgumentError("all-zero sampling mask: nothing was acquired")
    anchors = None
    if cfg.use_anchor and kernels is not None and mask.acs_width > 0:
        anchors = low_frequency_anchor(y, mask, scheme, kernels)

    stage_m_out, final_out, images = [], [], []
    for s in range(scheme.b):
        try:
            predictor = _make_predictor(cfg, s, y, scheme, mask, truth_stack, kernels)
            try:
                aligned = caipi_inverse(y, scheme, s)
                k_hat_m = stage_m(aligned, cfg, predictor)
                anchor = anchors[s] if anchors is not None else None
                k_full = stage_u(k_hat_m, mask, cfg, predictor, anchor)
            finally:
                if isinstance(predictor, ExternalPredictor):
                    predictor.close()
        except ReconstructionError as exc:
            raise ReconstructionError(f"slice {s}: {exc}") from exc
        stage_m_out.append(k_hat_m)
        final_out.append(k_full)
        images.append(rss_combine(k_full))

    provenance = {
        "t_m": cfg.t_m,
        "t_u": cfg.t_u,
        "guidance_interval": cfg.guidance_interval,
        "use_anchor": cfg.use_anchor,
        "dc_enabled": cfg.dc_enabled,
        "predictor": cfg.predictor,
        "endpoint": cfg.endpoint,
        "slices": scheme.b,
    }
    return ReconstructionResult(
        stage_m_kspace=stage_m_out,
        final_kspace=final_out,
        rss_images=images,
        provenance=provenance,
    )
