"""Operator-guided deterministic inversion for SMS MRI k-space reconstruction."""

from .baselines import (
    estimate_sensitivities,
    sense_reconstruct,
    slice_grappa_reconstruct,
    zero_fill_reconstruct,
)
from .inference import (
    InferenceConfig,
    ReconstructionResult,
    anchor_project,
    dc_project,
    pseudo_measurement,
    reconstruct_all,
    stage_m,
    stage_u,
)
from .kspace import fft2c, ifft2c, normalize_magnitude, rss_combine
from .metrics import MetricReport, evaluate_case, evaluate_images, nmse, psnr, ssim
from .operators import (
    CaipiScheme,
    Degradation,
    SamplingMask,
    Stage,
    apply_mask,
    caipi_apply,
    caipi_inverse,
    degradation_m,
    degradation_u,
    measure,
    sms_collapse,
    target_aligned_collapse,
)
from .predictors import (
    CalibratedPredictor,
    ExternalPredictor,
    GrappaKernel,
    OraclePredictor,
    TruthContext,
    estimator_to_degradation,
    grappa_calibrate,
    low_frequency_anchor,
    oracle_predict,
    slice_grappa_apply,
)
from .simulation import (
    DatasetCase,
    PhantomSpec,
    build_case,
    shepp_logan_stack,
    standard_scheme,
    uniform_mask,
)
from .trajectory import (
    Schedule,
    TrajectoryState,
    forward_state,
    linear_schedule,
    reverse_step,
    run_reverse_chain,
)

__version__ = "0.1.0"
