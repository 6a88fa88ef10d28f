"""Exception hierarchy shared across the package.

Exit-code mapping for the CLI lives in cli.py; library code only raises.
"""


class SmsReconError(Exception):
    """Base class for all package errors."""


class ShapeError(SmsReconError):
    """Operands have incompatible grid/coil/slice shapes."""


class InvalidDataError(SmsReconError):
    """Input contains NaN/Inf or violates a type invariant."""


class DegenerateInputError(SmsReconError):
    """Input is structurally valid but degenerate (all-zero image, empty ACS band, ...)."""


class ArgumentError(SmsReconError):
    """A scalar argument is out of its documented range."""


class StepUnderflowError(SmsReconError):
    """Reverse update requested at t = 0."""


class NearZeroAlphaError(SmsReconError):
    """Estimator-to-degradation adapter invoked where alpha_t is below epsilon."""


class CalibrationError(SmsReconError):
    """Kernel calibration cannot proceed (underdetermined or singular system)."""


class SolverError(SmsReconError):
    """A linear solve failed; usually fixable with regularization > 0."""


class UnsupportedMaskError(SmsReconError):
    """Mask is not uniform-with-ACS, which the SENSE unaliasing requires."""


class ConfigError(SmsReconError):
    """Run configuration is malformed or references missing resources."""


class ReconstructionError(SmsReconError):
    """A reconstruction chain failed; message carries slice/step context."""


class ProtocolError(SmsReconError):
    """Predictor wire protocol violation (handshake, framing, or shape)."""


class TransportError(SmsReconError):
    """Predictor endpoint unreachable, died, or timed out."""
