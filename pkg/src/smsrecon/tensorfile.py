"""Binary tensor file format ("KST1") and case/result bundle layout.

File layout (all little-endian):

    bytes 0..3   magic "KST1"
    byte  4      version (1)
    byte  5      dtype code: 0 = complex fp32 interleaved, 1 = real fp32
    byte  6      rank
    next rank*4  uint32 dimension sizes
    rest         row-major payload, dims product * element size bytes

Writes are whole-file atomic (temp file + rename).  Bundles are plain
directories with fixed file names plus line-oriented text sidecars
(scheme.txt, provenance.txt).
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidDataError
from .operators import CaipiScheme, SamplingMask
from .simulation import DatasetCase

MAGIC = b"KST1"
VERSION = 1
DTYPE_COMPLEX = 0
DTYPE_REAL = 1

_CODES = {DTYPE_COMPLEX: np.dtype("<c8"), DTYPE_REAL: np.dtype("<f4")}


def write_tensor(path: str | Path, data: np.ndarray) -> None:
    """Serialize an array as fp32 (complex arrays as interleaved pairs)."""
    data = np.asarray(data)
    if np.iscomplexobj(data):
        code, payload = DTYPE_COMPLEX, np.ascontiguousarray(data.astype("<c8"))
    else:
        code, payload = DTYPE_REAL, np.ascontiguousarray(data.astype("<f4"))
    header = MAGIC + struct.pack("<BBB", VERSION, code, payload.ndim)
    header += struct.pack(f"<{payload.ndim}I", *payload.shape)
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(payload.tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_tensor(path: str | Path) -> np.ndarray:
    """Read a KST1 file; complex payloads come back as complex64."""
    raw = Path(path).read_bytes()
    if len(raw) < 7 or raw[:4] != MAGIC:
        raise InvalidDataError(f"{path}: not a KST1 tensor file")
    version, code, rank = struct.unpack("<BBB", raw[4:7])
    if version != VERSION:
        raise InvalidDataError(f"{path}: unsupported version {version}")
    if code not in _CODES:
        raise InvalidDataError(f"{path}: unknown dtype code {code}")
    dims_end = 7 + 4 * rank
    dims = struct.unpack(f"<{rank}I", raw[7:dims_end])
    dtype = _CODES[code]
    expected = int(np.prod(dims)) * dtype.itemsize
    payload = raw[dims_end:]
    if len(payload) != expected:
        raise InvalidDataError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    return np.frombuffer(payload, dtype=dtype).reshape(dims).copy()


def _write_kv(path: Path, records: dict) -> None:
    lines = [f"{k} = {v}\n" for k, v in records.items()]
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.writelines(lines)
    os.replace(tmp, path)


def _read_kv(path: Path) -> dict:
    out = {}
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def save_case(case: DatasetCase, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for s in range(case.stack.shape[0]):
        write_tensor(out / f"truth_s{s}.kst", case.stack[s])
        write_tensor(out / f"sens_s{s}.kst", case.sens[s])
    write_tensor(out / "measurement.kst", case.measurement)
    write_tensor(out / "mask.kst", case.mask.kept)
    scheme_lines = {f"shift_{s}": f"{f!r}" for s, f in enumerate(case.scheme.shifts)}
    scheme_lines["rows"] = case.scheme.rows
    scheme_lines["cols"] = case.scheme.cols
    _write_kv(out / "scheme.txt", scheme_lines)
    _write_kv(out / "provenance.txt", case.provenance)


def load_case(bundle_dir: str | Path) -> DatasetCase:
    bundle = Path(bundle_dir)
    if not (bundle / "measurement.kst").exists():
        raise ConfigError(f"{bundle}: not a case bundle (no measurement.kst)")
    scheme_kv = _read_kv(bundle / "scheme.txt")
    rows, cols = int(scheme_kv["rows"]), int(scheme_kv["cols"])
    shifts = []
    for s in range(len([k for k in scheme_kv if k.startswith("shift_")])):
        shifts.append(float(scheme_kv[f"shift_{s}"]))
    scheme = CaipiScheme(shifts=tuple(shifts), rows=rows, cols=cols)
    prov = _read_kv(bundle / "provenance.txt")
    kept = read_tensor(bundle / "mask.kst").astype(np.float64)
    mask = SamplingMask(kept=kept, acs_lo=int(prov["acs_lo"]), acs_hi=int(prov["acs_hi"]))
    b = scheme.b
    stack = np.stack(
        [read_tensor(bundle / f"truth_s{s}.kst").astype(np.complex128) for s in range(b)]
    )
    sens = np.stack(
        [read_tensor(bundle / f"sens_s{s}.kst").astype(np.complex128) for s in range(b)]
    )
    measurement = read_tensor(bundle / "measurement.kst").astype(np.complex128)
    return DatasetCase(
        stack=stack, sens=sens, scheme=scheme, mask=mask,
        measurement=measurement, provenance=dict(prov),
    )


def save_kernels(kernels, path: str | Path) -> None:
    """Kernel set as one stacked tensor plus a sidecar with scalars."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    weights = np.stack([k.weights for k in kernels])
    write_tensor(path / "kernels.kst", weights)
    meta = {}
    for k in kernels:
        meta[f"ridge_{k.target_slice}"] = f"{k.ridge!r}"
        meta[f"residual_{k.target_slice}"] = f"{k.residual!r}"
    _write_kv(path / "kernels.txt", meta)


def load_kernels(path: str | Path):
    from .predictors import GrappaKernel

    path = Path(path)
    weights = read_tensor(path / "kernels.kst").astype(np.complex128)
    meta = _read_kv(path / "kernels.txt")
    kernels = []
    for s in range(weights.shape[0]):
        kernels.append(
            GrappaKernel(
                target_slice=s,
                weights=weights[s],
                ridge=float(meta[f"ridge_{s}"]),
                residual=float(meta[f"residual_{s}"]),
            )
        )
    return kernels


def save_result(result, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for s, (k_m, k_full, img) in enumerate(
        zip(result.stage_m_kspace, result.final_kspace, result.rss_images)
    ):
        write_tensor(out / f"stage_m_s{s}.kst", k_m)
        write_tensor(out / f"recon_s{s}.kst", k_full)
        write_tensor(out / f"rss_s{s}.kst", img)
    _write_kv(out / "provenance.txt", result.provenance)


def load_result_kspace(result_dir: str | Path) -> list[np.ndarray]:
    result = Path(result_dir)
    out = []
    s = 0
    while (result / f"recon_s{s}.kst").exists():
        out.append(read_tensor(result / f"recon_s{s}.kst").astype(np.complex128))
        s += 1
    if not out:
        raise ConfigError(f"{result}: no recon_s*.kst files found")
    return out
