"""Reference predictor servers speaking the OCDI-PRED v1 protocol.

Modes:

* ``zero``   -- respond with an all-zero degradation (protocol smoke test);
* ``echo``   -- respond with the request payload (serialization fidelity);
* ``oracle`` -- wrap oracle_predict over a case bundle for one target slice.

Run over stdio (default, for ``subprocess:`` endpoints) or TCP with
``--listen PORT``.
"""

from __future__ import annotations

import argparse
import socket
import sys

import numpy as np

from .operators import Stage
from .predictors import TruthContext, oracle_predict
from .protocol import serve_loop
from .trajectory import TrajectoryState


def _zero_handler(t: float, stage: Stage, x: np.ndarray) -> np.ndarray:
    return np.zeros_like(x)


def _echo_handler(t: float, stage: Stage, x: np.ndarray) -> np.ndarray:
    return x


def _oracle_handler(bundle_dir: str, s_star: int):
    from .tensorfile import load_case

    case = load_case(bundle_dir)
    truth = TruthContext(stack=case.stack, scheme=case.scheme, mask=case.mask, s_star=s_star)

    def handler(t: float, stage: Stage, x: np.ndarray) -> np.ndarray:
        d = oracle_predict(TrajectoryState(x=x, t=0, stage=stage), truth)
        return d.data

    return handler


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="smsrecon-refserver", description=__doc__)
    parser.add_argument("mode", choices=["zero", "echo", "oracle"])
    parser.add_argument("--bundle", help="case bundle directory (oracle mode)")
    parser.add_argument("--slice", type=int, default=0, help="target slice (oracle mode)")
    parser.add_argument("--listen", type=int, help="serve one TCP connection on this port")
    args = parser.parse_args(argv)

    if args.mode == "oracle":
        if not args.bundle:
            parser.error("oracle mode requires --bundle")
        handler = _oracle_handler(args.bundle, args.slice)
    elif args.mode == "echo":
        handler = _echo_handler
    else:
        handler = _zero_handler

    if args.listen is not None:
        with socket.create_server(("127.0.0.1", args.listen)) as srv:
            conn, _ = srv.accept()
            with conn:
                rd = conn.makefile("rb")
                wr = conn.makefile("wb")
                serve_loop(handler, rd, wr)
    else:
        serve_loop(handler, sys.stdin.buffer, sys.stdout.buffer)
    return 0


if __name__ == "__main__":
    sys.exit(main())
