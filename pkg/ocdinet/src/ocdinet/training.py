"""Training loop: sample a step, build the interpolated state, supervise
the implied clean estimate.
"""

from __future__ import annotations

import argparse
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from .data import load_training_case, training_tensors
from .errors import ConfigError, TrainingError
from .losses import degradation_loss
from .model import DualStreamNet, ModelConfig, complex_to_channels, channels_to_complex

WEIGHTS_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    lambda_k: float = 1.0
    lambda_i: float = 0.1
    steps: int = 500
    lr: float = 1e-3
    batch: int = 4
    schedule_t: int = 10
    levels: int = 3
    base_channels: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.lambda_k < 0 or self.lambda_i < 0:
            raise ConfigError("loss weights must be nonnegative")
        if self.lambda_k == 0 and self.lambda_i == 0:
            raise ConfigError("at least one loss weight must be positive")
        if self.steps < 1 or self.batch < 1 or self.schedule_t < 1:
            raise ConfigError("steps, batch, and schedule length must be >= 1")


def train_on_arrays(
    terminal: np.ndarray,
    clean: np.ndarray,
    stage: np.ndarray,
    cfg: TrainConfig,
    log_every: int = 0,
) -> tuple[DualStreamNet, list[float]]:
    """Fit a model to fixed supervision arrays; returns (model, loss curve)."""
    coils = terminal.shape[1]
    model = DualStreamNet(
        ModelConfig(coils=coils, levels=cfg.levels, base_channels=cfg.base_channels)
    )
    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)
    torch.manual_seed(cfg.seed)

    terminal_t = torch.as_tensor(terminal, dtype=torch.complex64)
    clean_t = torch.as_tensor(clean, dtype=torch.complex64)
    stage_t = torch.as_tensor(stage, dtype=torch.long)
    d_true = terminal_t - clean_t
    n = terminal_t.shape[0]

    curve = []
    for step in range(cfg.steps):
        idx = torch.as_tensor(rng.integers(0, n, size=min(cfg.batch, n)))
        t = torch.as_tensor(
            rng.integers(1, cfg.schedule_t + 1, size=len(idx)), dtype=torch.float32
        )
        alpha = t / cfg.schedule_t
        a = alpha.reshape(-1, 1, 1, 1)
        x_t = clean_t[idx] + a * d_true[idx]
        pred = model(complex_to_channels(x_t), t / cfg.schedule_t, stage_t[idx])
        loss = degradation_loss(
            x_t, channels_to_complex(pred), alpha, clean_t[idx], cfg.lambda_k, cfg.lambda_i
        )
        if not torch.isfinite(loss):
            raise TrainingError(f"non-finite loss at step {step}: {loss.item()!r}")
        opt.zero_grad()
        loss.backward()
        opt.step()
        curve.append(float(loss.item()))
        if log_every and step % log_every == 0:
            print(f"step {step}: loss {curve[-1]:.6f}")
    return model, curve


def save_weights(model: DualStreamNet, cfg: TrainConfig, path: str | Path) -> None:
    torch.save(
        {
            "version": WEIGHTS_VERSION,
            "model_config": asdict(model.cfg),
            "train_config": asdict(cfg),
            "state_dict": model.state_dict(),
        },
        path,
    )


def load_weights(path: str | Path) -> DualStreamNet:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    if payload.get("version") != WEIGHTS_VERSION:
        raise ConfigError(f"{path}: unsupported weights version {payload.get('version')}")
    model = DualStreamNet(ModelConfig(**payload["model_config"]))
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="train the toy degradation predictor")
    parser.add_argument("--bundle", required=True, help="case bundle directory")
    parser.add_argument("--out", required=True, help="weights file path")
    parser.add_argument("--steps", type=int, default=500)
    parser.add_argument("--lr", type=float, default=1e-3)
    parser.add_argument("--batch", type=int, default=4)
    parser.add_argument("--lambda-k", type=float, default=1.0)
    parser.add_argument("--lambda-i", type=float, default=0.1)
    parser.add_argument("--levels", type=int, default=3)
    parser.add_argument("--base-channels", type=int, default=16)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    cfg = TrainConfig(
        lambda_k=args.lambda_k, lambda_i=args.lambda_i, steps=args.steps,
        lr=args.lr, batch=args.batch, levels=args.levels,
        base_channels=args.base_channels, seed=args.seed,
    )
    case = load_training_case(args.bundle)
    terminal, clean, stage = training_tensors(case)
    model, curve = train_on_arrays(terminal, clean, stage, cfg, log_every=50)
    save_weights(model, cfg, args.out)
    print(f"final loss {curve[-1]:.6f}; wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
