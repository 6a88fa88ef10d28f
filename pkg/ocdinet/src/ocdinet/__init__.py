"""Toy dual-stream degradation predictor for SMS k-space states."""

from .data import TrainingCase, load_training_case, read_kst, training_tensors
from .errors import (
    ConfigError,
    DataError,
    OcdiNetError,
    ProtocolError,
    ShapeError,
    TrainingError,
)
from .losses import degradation_loss, ifft2c, implied_clean, rss
from .model import (
    DualStreamNet,
    ModelConfig,
    channels_to_complex,
    complex_to_channels,
    net_forward,
)
from .training import TrainConfig, load_weights, save_weights, train_on_arrays

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "DualStreamNet",
    "ModelConfig",
    "OcdiNetError",
    "ProtocolError",
    "ShapeError",
    "TrainConfig",
    "TrainingCase",
    "TrainingError",
    "channels_to_complex",
    "complex_to_channels",
    "degradation_loss",
    "ifft2c",
    "implied_clean",
    "load_training_case",
    "load_weights",
    "net_forward",
    "read_kst",
    "rss",
    "save_weights",
    "train_on_arrays",
    "training_tensors",
]
