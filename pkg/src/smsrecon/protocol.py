"""Predictor wire protocol (``OCDI-PRED v1``).

Framing (bit-exact):

* server greets with the handshake line ``OCDI-PRED v1\\n``;
* each request is one single-line JSON header
  ``{"t":<float>,"stage":"M"|"U","coils":<int>,"rows":<int>,"cols":<int>,"bytes":<int>}\\n``
  followed by exactly ``bytes`` of little-endian interleaved fp32
  real/imaginary payload in coil-major row-major order;
* the response uses the identical framing; an error response replaces the
  header with ``{"error":"<message>"}\\n``.

Transport is the stdio of a spawned subprocess or a local stream socket.
"""

from __future__ import annotations

import json
from typing import BinaryIO, Callable

import numpy as np

from .errors import ProtocolError
from .operators import Stage

HANDSHAKE = b"OCDI-PRED v1\n"

# little-endian complex64 == interleaved fp32 real/imag
_WIRE_DTYPE = np.dtype("<c8")


def encode_payload(x: np.ndarray) -> bytes:
    """Cast (coils, rows, cols) complex data to the fp32 wire payload."""
    return np.ascontiguousarray(x.astype(_WIRE_DTYPE)).tobytes()


def decode_payload(raw: bytes, coils: int, rows: int, cols: int) -> np.ndarray:
    expected = coils * rows * cols * _WIRE_DTYPE.itemsize
    if len(raw) != expected:
        raise ProtocolError(f"payload length {len(raw)} != expected {expected}")
    return np.frombuffer(raw, dtype=_WIRE_DTYPE).reshape(coils, rows, cols)


def read_line(stream: BinaryIO) -> bytes:
    line = stream.readline()
    if not line:
        raise ProtocolError("peer closed the connection mid-frame")
    return line


def read_exact(stream: BinaryIO, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining > 0:
        chunk = stream.read(remaining)
        if not chunk:
            raise ProtocolError(f"short read: wanted {n} payload bytes")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def write_frame(stream: BinaryIO, t: float, stage: Stage, x: np.ndarray) -> None:
    payload = encode_payload(x)
    coils, rows, cols = x.shape
    header = {
        "t": float(t),
        "stage": stage.value,
        "coils": int(coils),
        "rows": int(rows),
        "cols": int(cols),
        "bytes": len(payload),
    }
    stream.write(json.dumps(header, separators=(",", ":")).encode("ascii") + b"\n")
    stream.write(payload)
    stream.flush()


def write_error(stream: BinaryIO, message: str) -> None:
    stream.write(json.dumps({"error": message}).encode("utf-8") + b"\n")
    stream.flush()


def read_frame(stream: BinaryIO) -> tuple[float, Stage, np.ndarray]:
    """Read one frame; raises ProtocolError on error responses/malformed input."""
    line = read_line(stream)
    try:
        header = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"malformed frame header: {line!r}") from exc
    if "error" in header:
        raise ProtocolError(f"peer reported error: {header['error']}")
    try:
        t = float(header["t"])
        stage = Stage(header["stage"])
        coils, rows, cols = int(header["coils"]), int(header["rows"]), int(header["cols"])
        nbytes = int(header["bytes"])
    except (KeyError, ValueError) as exc:
        raise ProtocolError(f"incomplete frame header: {header}") from exc
    if nbytes != coils * rows * cols * _WIRE_DTYPE.itemsize:
        raise ProtocolError("header byte count inconsistent with declared shape")
    raw = read_exact(stream, nbytes)
    return t, stage, decode_payload(raw, coils, rows, cols)


def serve_loop(
    handler: Callable[[float, Stage, np.ndarray], np.ndarray],
    infile: BinaryIO,
    outfile: BinaryIO,
) -> None:
    """Handshake, then answer frames until EOF.

    Handler exceptions become error responses; the connection stays alive.
    """
    outfile.write(HANDSHAKE)
    outfile.flush()
    while True:
        first = infile.readline()
        if not first:
            return  # clean EOF
        try:
            try:
                header = json.loads(first.decode("utf-8"))
                t = float(header["t"])
                stage = Stage(header["stage"])
                coils, rows, cols = (
                    int(header["coils"]),
                    int(header["rows"]),
                    int(header["cols"]),
                )
                nbytes = int(header["bytes"])
                raw = read_exact(infile, nbytes)
                x = decode_payload(raw, coils, rows, cols)
            except (UnicodeDecodeError, json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ProtocolError(f"malformed request: {exc}") from exc
            d = handler(t, stage, np.asarray(x, dtype=np.complex128))
            if d.shape != (coils, rows, cols):
                raise ProtocolError(f"handler shape {d.shape} != request shape")
            write_frame(outfile, t, stage, d)
        except Exception as exc:  # keep serving after per-request failures
            write_error(outfile, str(exc))
