"""Case-bundle ingestion and training-pair construction.

Reads the KST1 tensor bundles written by the reconstruction CLI (an
external file-format contract, decoded here independently) and derives
per-stage supervision pairs:

* stage M: terminal state is the target-aligned collapsed measurement,
  clean target is the mask-restricted target slice;
* stage U: terminal state is the mask-restricted target slice, clean
  target is the full slice.

The degradation target is terminal minus clean in both cases.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

_MAGIC = b"KST1"
_DTYPES = {0: np.dtype("<c8"), 1: np.dtype("<f4")}


def read_kst(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 7 or raw[:4] != _MAGIC:
        raise DataError(f"{path}: not a KST1 tensor file")
    version, code, rank = struct.unpack("<BBB", raw[4:7])
    if version != 1 or code not in _DTYPES:
        raise DataError(f"{path}: unsupported KST1 version/dtype {version}/{code}")
    dims = struct.unpack(f"<{rank}I", raw[7:7 + 4 * rank])
    dtype = _DTYPES[code]
    payload = raw[7 + 4 * rank:]
    if len(payload) != int(np.prod(dims)) * dtype.itemsize:
        raise DataError(f"{path}: truncated payload")
    return np.frombuffer(payload, dtype=dtype).reshape(dims).copy()


def _read_kv(path: Path) -> dict:
    out = {}
    for line in path.read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def _inverse_ramp(k: np.ndarray, shift: float) -> np.ndarray:
    """Remove a CAIPI column ramp (centered convention, DC at cols//2)."""
    cols = k.shape[-1]
    j = np.arange(cols) - cols // 2
    return k * np.exp(2j * np.pi * shift * j)[None, None, :]


@dataclass
class TrainingCase:
    """Per-slice supervision pairs for both stages."""

    terminal_m: np.ndarray  # (b, coils, rows, cols)
    clean_m: np.ndarray
    terminal_u: np.ndarray
    clean_u: np.ndarray


def load_training_case(bundle_dir: str | Path) -> TrainingCase:
    bundle = Path(bundle_dir)
    if not (bundle / "measurement.kst").exists():
        raise DataError(f"{bundle}: not a case bundle")
    scheme = _read_kv(bundle / "scheme.txt")
    shifts = []
    while f"shift_{len(shifts)}" in scheme:
        shifts.append(float(scheme[f"shift_{len(shifts)}"]))
    y = read_kst(bundle / "measurement.kst").astype(np.complex128)
    kept = read_kst(bundle / "mask.kst").astype(np.float64)
    truth = np.stack(
        [
            read_kst(bundle / f"truth_s{s}.kst").astype(np.complex128)
            for s in range(len(shifts))
        ]
    )
    masked = truth * kept[None, None, :, :]
    aligned = np.stack([_inverse_ramp(y, f) for f in shifts])
    return TrainingCase(
        terminal_m=aligned, clean_m=masked, terminal_u=masked, clean_u=truth
    )


def training_tensors(case: TrainingCase):
    """Stack both stages: returns (terminal, clean, stage_index) arrays."""
    terminal = np.concatenate([case.terminal_m, case.terminal_u])
    clean = np.concatenate([case.clean_m, case.clean_u])
    b = case.terminal_m.shape[0]
    stage = np.concatenate([np.zeros(b, dtype=np.int64), np.ones(b, dtype=np.int64)])
    return terminal, clean, stage
