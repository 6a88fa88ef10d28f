"""Serve a trained predictor over the ``OCDI-PRED v1`` wire protocol.

Framing (independent implementation of the external contract): handshake
line ``OCDI-PRED v1\\n``; requests are a single-line JSON header
``{"t","stage","coils","rows","cols","bytes"}`` plus little-endian
interleaved fp32 payload; responses use the same framing, with
``{"error": msg}`` headers for failures.  One request in flight at a
time; transports are stdio (default) or one TCP connection.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys

import numpy as np
import torch

from .errors import ProtocolError
from .model import net_forward
from .training import load_weights

HANDSHAKE = b"OCDI-PRED v1\n"
_WIRE = np.dtype("<c8")


def _read_exact(stream, n: int) -> bytes:
    chunks = []
    while n > 0:
        chunk = stream.read(n)
        if not chunk:
            raise ProtocolError("short read")
        chunks.append(chunk)
        n -= len(chunk)
    return b"".join(chunks)


def serve(model, infile, outfile) -> None:
    outfile.write(HANDSHAKE)
    outfile.flush()
    while True:
        line = infile.readline()
        if not line:
            return
        try:
            try:
                header = json.loads(line.decode("utf-8"))
                t = float(header["t"])
                stage = str(header["stage"])
                coils = int(header["coils"])
                rows, cols = int(header["rows"]), int(header["cols"])
                nbytes = int(header["bytes"])
                if nbytes != coils * rows * cols * _WIRE.itemsize:
                    raise ProtocolError("byte count inconsistent with shape")
                raw = _read_exact(infile, nbytes)
            except (UnicodeDecodeError, json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ProtocolError(f"malformed request: {exc}") from exc
            x = np.frombuffer(raw, dtype=_WIRE).reshape(coils, rows, cols).copy()
            with torch.no_grad():
                d = net_forward(model, x, t, stage).numpy()
            payload = np.ascontiguousarray(d.astype(_WIRE)).tobytes()
            outfile.write(
                json.dumps(
                    {
                        "t": t, "stage": stage, "coils": coils,
                        "rows": rows, "cols": cols, "bytes": len(payload),
                    },
                    separators=(",", ":"),
                ).encode("ascii")
                + b"\n"
            )
            outfile.write(payload)
            outfile.flush()
        except Exception as exc:  # error response, connection stays alive
            outfile.write(json.dumps({"error": str(exc)}).encode("utf-8") + b"\n")
            outfile.flush()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="serve a trained degradation predictor")
    parser.add_argument("--weights", required=True)
    parser.add_argument("--listen", type=int, help="serve one TCP connection on this port")
    args = parser.parse_args(argv)
    model = load_weights(args.weights)
    if args.listen is not None:
        with socket.create_server(("127.0.0.1", args.listen)) as srv:
            conn, _ = srv.accept()
            with conn:
                serve(model, conn.makefile("rb"), conn.makefile("wb"))
    else:
        serve(model, sys.stdin.buffer, sys.stdout.buffer)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
