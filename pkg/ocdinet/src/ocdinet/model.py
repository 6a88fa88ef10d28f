"""Dual-stream degradation predictor.

A U-Net style encoder-decoder over 2-channel-per-coil real tensors.  After
the stem the features are split channel-wise into a target-content stream
and an interference stream that run in parallel through every resolution
level.  Each level applies conditioned convolutions per stream followed by
an attention-based cross-stream gate; the bottleneck adds single-head
self- and cross-attention over spatial positions.  Conditioning is a
sinusoidal step embedding passed through an MLP plus a learned 2-way stage
embedding, injected as feature-wise scale/shift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn

from .errors import ShapeError

STAGE_INDEX = {"M": 0, "U": 1}


@dataclass(frozen=True)
class ModelConfig:
    coils: int
    levels: int = 3
    base_channels: int = 16
    cond_dim: int = 32

    def __post_init__(self):
        if self.coils < 1:
            raise ShapeError("need at least one coil")
        if self.levels < 1:
            raise ShapeError("need at least one resolution level")
        if self.base_channels % 2 != 0:
            raise ShapeError("base_channels must split into two equal streams")


class SinusoidalEmbedding(nn.Module):
    """Deterministic encoding of the normalized step, followed by an MLP."""

    def __init__(self, dim: int):
        super().__init__()
        if dim % 2 != 0:
            raise ShapeError("embedding dim must be even")
        self.dim = dim
        self.mlp = nn.Sequential(nn.Linear(dim, dim), nn.SiLU(), nn.Linear(dim, dim))

    def forward(self, t: torch.Tensor) -> torch.Tensor:
        half = self.dim // 2
        freqs = torch.exp(
            -math.log(10000.0) * torch.arange(half, dtype=t.dtype, device=t.device) / half
        )
        ang = t[:, None] * freqs[None, :] * 1000.0
        enc = torch.cat([torch.sin(ang), torch.cos(ang)], dim=-1)
        return self.mlp(enc)


class FilmConv(nn.Module):
    """3x3 conv + norm with conditioning as a feature-wise scale/shift."""

    def __init__(self, in_ch: int, out_ch: int, cond_dim: int):
        super().__init__()
        self.conv = nn.Conv2d(in_ch, out_ch, 3, padding=1)
        self.norm = nn.GroupNorm(1, out_ch)
        self.film = nn.Linear(cond_dim, 2 * out_ch)
        self.act = nn.SiLU()

    def forward(self, x: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        h = self.norm(self.conv(x))
        scale, shift = self.film(cond)[:, :, None, None].chunk(2, dim=1)
        return self.act(h * (1.0 + scale) + shift)


class CrossStreamGate(nn.Module):
    """Attention-based gating exchanging content between the two streams.

    Channel gates are computed from globally pooled features of both
    streams and the conditioning vector, then each stream receives a gated
    projection of the other.
    """

    def __init__(self, ch: int, cond_dim: int):
        super().__init__()
        self.gate_t = nn.Linear(2 * ch + cond_dim, ch)
        self.gate_i = nn.Linear(2 * ch + cond_dim, ch)
        self.proj_t = nn.Conv2d(ch, ch, 1)
        self.proj_i = nn.Conv2d(ch, ch, 1)

    def forward(self, z_t, z_i, cond):
        pooled = torch.cat([z_t.mean(dim=(2, 3)), z_i.mean(dim=(2, 3)), cond], dim=-1)
        g_t = torch.sigmoid(self.gate_t(pooled))[:, :, None, None]
        g_i = torch.sigmoid(self.gate_i(pooled))[:, :, None, None]
        return z_t + g_t * self.proj_i(z_i), z_i + g_i * self.proj_t(z_t)


class InteractionBlock(nn.Module):
    """Per-stream conditioned refinement plus a cross-stream gate."""

    def __init__(self, ch: int, cond_dim: int):
        super().__init__()
        self.refine_t = FilmConv(ch, ch, cond_dim)
        self.refine_i = FilmConv(ch, ch, cond_dim)
        self.gate = CrossStreamGate(ch, cond_dim)

    def forward(self, z_t, z_i, cond):
        z_t = self.refine_t(z_t, cond)
        z_i = self.refine_i(z_i, cond)
        return self.gate(z_t, z_i, cond)


class StreamAttention(nn.Module):
    """Single-head scaled dot-product attention over spatial positions."""

    def __init__(self, ch: int):
        super().__init__()
        self.norm = nn.GroupNorm(1, ch)
        self.qkv = nn.Conv2d(ch, 3 * ch, 1)
        self.out = nn.Conv2d(ch, ch, 1)

    def forward(self, x: torch.Tensor, context: torch.Tensor | None = None) -> torch.Tensor:
        b, c, h, w = x.shape
        q, k, v = self.qkv(self.norm(x)).chunk(3, dim=1)
        if context is not None:
            _, kc, vc = self.qkv(self.norm(context)).chunk(3, dim=1)
            k, v = kc, vc
        q = q.reshape(b, c, h * w).transpose(1, 2)
        k = k.reshape(b, c, h * w).transpose(1, 2)
        v = v.reshape(b, c, h * w).transpose(1, 2)
        attn = torch.softmax(q @ k.transpose(1, 2) / math.sqrt(c), dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(b, c, h, w)
        return x + self.out(out)


class DualStreamBottleneck(nn.Module):
    """Per-stream self-attention followed by cross-stream attention."""

    def __init__(self, ch: int, cond_dim: int):
        super().__init__()
        self.self_t = StreamAttention(ch)
        self.self_i = StreamAttention(ch)
        self.cross_t = StreamAttention(ch)
        self.cross_i = StreamAttention(ch)
        self.mix = InteractionBlock(ch, cond_dim)

    def forward(self, z_t, z_i, cond):
        z_t = self.self_t(z_t)
        z_i = self.self_i(z_i)
        z_t, z_i = self.cross_t(z_t, context=z_i), self.cross_i(z_i, context=z_t)
        return self.mix(z_t, z_i, cond)


class DualStreamNet(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        ch = cfg.base_channels // 2  # per stream
        cd = cfg.cond_dim
        self.time_embed = SinusoidalEmbedding(cd)
        self.stage_embed = nn.Embedding(2, cd)
        self.stem = nn.Conv2d(2 * cfg.coils, cfg.base_channels, 3, padding=1)

        self.enc = nn.ModuleList()
        self.down_t = nn.ModuleList()
        self.down_i = nn.ModuleList()
        chans = []
        cur = ch
        for _ in range(cfg.levels):
            self.enc.append(InteractionBlock(cur, cd))
            chans.append(cur)
            self.down_t.append(nn.Conv2d(cur, 2 * cur, 2, stride=2))
            self.down_i.append(nn.Conv2d(cur, 2 * cur, 2, stride=2))
            cur *= 2

        self.bottleneck = DualStreamBottleneck(cur, cd)

        self.up_t = nn.ModuleList()
        self.up_i = nn.ModuleList()
        self.dec = nn.ModuleList()
        self.skip_t = nn.ModuleList()
        self.skip_i = nn.ModuleList()
        for skip_ch in reversed(chans):
            self.up_t.append(nn.ConvTranspose2d(cur, skip_ch, 2, stride=2))
            self.up_i.append(nn.ConvTranspose2d(cur, skip_ch, 2, stride=2))
            self.skip_t.append(nn.Conv2d(2 * skip_ch, skip_ch, 1))
            self.skip_i.append(nn.Conv2d(2 * skip_ch, skip_ch, 1))
            self.dec.append(InteractionBlock(skip_ch, cd))
            cur = skip_ch

        self.head = nn.Conv2d(2 * ch, 2 * cfg.coils, 1)

    def forward(self, x: torch.Tensor, t: torch.Tensor, stage: torch.Tensor) -> torch.Tensor:
        """x: (batch, 2*coils, rows, cols); t: (batch,) in [0, 1]; stage: (batch,) int."""
        if x.ndim != 4 or x.shape[1] != 2 * self.cfg.coils:
            raise ShapeError(f"expected (batch, {2 * self.cfg.coils}, rows, cols), got {tuple(x.shape)}")
        div = 2 ** self.cfg.levels
        if x.shape[-2] % div or x.shape[-1] % div:
            raise ShapeError(
                f"spatial dims {tuple(x.shape[-2:])} not divisible by 2^levels = {div}"
            )
        cond = self.time_embed(t) + self.stage_embed(stage)
        z_t, z_i = self.stem(x).chunk(2, dim=1)
        skips = []
        for block, dt, di in zip(self.enc, self.down_t, self.down_i):
            z_t, z_i = block(z_t, z_i, cond)
            skips.append((z_t, z_i))
            z_t, z_i = dt(z_t), di(z_i)
        z_t, z_i = self.bottleneck(z_t, z_i, cond)
        for ut, ui, st, si, block, (s_t, s_i) in zip(
            self.up_t, self.up_i, self.skip_t, self.skip_i, self.dec, reversed(skips)
        ):
            z_t = st(torch.cat([ut(z_t), s_t], dim=1))
            z_i = si(torch.cat([ui(z_i), s_i], dim=1))
            z_t, z_i = block(z_t, z_i, cond)
        return self.head(torch.cat([z_t, z_i], dim=1))


def complex_to_channels(x: torch.Tensor) -> torch.Tensor:
    """(batch, coils, rows, cols) complex -> (batch, 2*coils, rows, cols) real."""
    return torch.cat([x.real, x.imag], dim=1)


def channels_to_complex(x: torch.Tensor) -> torch.Tensor:
    real, imag = x.chunk(2, dim=1)
    return torch.complex(real, imag)


@torch.no_grad()
def net_forward(model: DualStreamNet, x, t: float, stage: str) -> torch.Tensor:
    """Single-state inference: complex (coils, rows, cols) in and out."""
    if stage not in STAGE_INDEX:
        raise ShapeError(f"unknown stage {stage!r}")
    was_training = model.training
    model.eval()
    try:
        dtype = next(model.parameters()).dtype
        xt = torch.as_tensor(x, dtype=torch.complex64 if dtype == torch.float32 else torch.complex128)
        batch = complex_to_channels(xt[None])
        tt = torch.tensor([float(t)], dtype=dtype)
        ss = torch.tensor([STAGE_INDEX[stage]], dtype=torch.long)
        out = model(batch.to(dtype), tt, ss)
        return channels_to_complex(out)[0]
    finally:
        model.train(was_training)
