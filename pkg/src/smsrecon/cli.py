"""Command-line surface: simulate, calibrate, reconstruct, evaluate.

Exit codes: 0 success, 2 config error, 3 data error, 4 transport error,
5 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import errors
from .baselines import (
    estimate_sensitivities,
    sense_reconstruct,
    slice_grappa_reconstruct,
    zero_fill_reconstruct,
)
from .inference import InferenceConfig, ReconstructionResult, reconstruct_all
from .kspace import rss_combine
from .metrics import evaluate_case
from .predictors import grappa_calibrate
from .runconfig import load_run_config
from .simulation import build_case
from .tensorfile import (
    load_case,
    load_kernels,
    load_result_kspace,
    save_case,
    save_kernels,
    save_result,
)

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_TRANSPORT = 4
EXIT_NUMERICAL = 5

_EXIT_BY_ERROR = (
    ((errors.ConfigError, errors.ArgumentError), EXIT_CONFIG),
    (
        (
            errors.InvalidDataError,
            errors.ShapeError,
            errors.DegenerateInputError,
            errors.CalibrationError,
            errors.UnsupportedMaskError,
        ),
        EXIT_DATA,
    ),
    ((errors.TransportError, errors.ProtocolError), EXIT_TRANSPORT),
    (
        (
            errors.SolverError,
            errors.ReconstructionError,
            errors.NearZeroAlphaError,
            errors.StepUnderflowError,
        ),
        EXIT_NUMERICAL,
    ),
)


def _cmd_simulate(args) -> int:
    cfg = load_run_config(args.config)
    case = build_case(cfg.phantom, cfg.b, cfg.r, cfg.acs, cfg.noise_seed)
    save_case(case, cfg.out_dir)
    print(f"wrote case bundle to {cfg.out_dir}")
    return 0


def _cmd_calibrate(args) -> int:
    case = load_case(args.bundle)
    acs_collapsed = case.measurement  # ACS columns are fully sampled there
    kernels = grappa_calibrate(
        acs_collapsed,
        case.stack,
        case.scheme,
        (case.mask.acs_lo, case.mask.acs_hi),
        window=args.window,
        ridge=args.ridge,
    )
    save_kernels(kernels, args.out)
    for k in kernels:
        print(f"slice {k.target_slice}: ridge={k.ridge:.3e} residual={k.residual:.3e}")
    return 0


def _baseline_result(stack_like, provenance: dict) -> ReconstructionResult:
    slices = list(stack_like)
    return ReconstructionResult(
        stage_m_kspace=slices,
        final_kspace=slices,
        rss_images=[rss_combine(k) for k in slices],
        provenance=provenance,
    )


def _cmd_reconstruct(args) -> int:
    case = load_case(args.bundle)
    if args.method != "ocdi" and args.predictor is not None:
        raise errors.ConfigError("--predictor only applies to --method ocdi")
    if args.method == "ocdi":
        predictor = args.predictor or "oracle"
        kernels = load_kernels(args.kernels) if args.kernels else None
        if predictor == "grappa" and kernels is None:
            raise errors.ConfigError("--predictor grappa requires --kernels DIR")
        cfg = InferenceConfig(
            t_m=args.t_m,
            t_u=args.t_u,
            guidance_interval=args.guidance_interval,
            use_anchor=not args.no_anchor,
            predictor=predictor,
            endpoint=args.endpoint,
        )
        result = reconstruct_all(
            case.measurement, case.scheme, case.mask, cfg,
            truth_stack=case.stack, kernels=kernels,
        )
    elif args.method == "zero-fill":
        slices = [
            zero_fill_reconstruct(case.measurement, case.scheme, s)
            for s in range(case.scheme.b)
        ]
        result = _baseline_result(slices, {"method": "zero-fill"})
    elif args.method == "slice-grappa":
        if not args.kernels:
            raise errors.ConfigError("--method slice-grappa requires --kernels DIR")
        kernels = load_kernels(args.kernels)
        stack = slice_grappa_reconstruct(case.measurement, case.scheme, kernels)
        result = _baseline_result(stack, {"method": "slice-grappa"})
    else:  # sense
        sens = estimate_sensitivities(case.stack, (case.mask.acs_lo, case.mask.acs_hi))
        stack = sense_reconstruct(
            case.measurement, case.scheme, case.mask, sens, tikhonov=args.tikhonov
        )
        result = _baseline_result(stack, {"method": "sense", "tikhonov": args.tikhonov})
    result.provenance.setdefault("method", args.method)
    result.provenance["bundle"] = str(Path(args.bundle).resolve())
    save_result(result, args.out)
    print(f"wrote result bundle to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    recon = load_result_kspace(args.result)
    case = load_case(args.truth)
    reports = evaluate_case(recon, case.stack)
    lines = []
    for s, rep in enumerate(reports):
        lines.append(
            f"slice={s} nmse={rep.nmse!r} psnr={rep.psnr:.2f} "
            f"ssim={rep.ssim!r} scale={rep.scale!r}"
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    if args.plots:
        _write_plots(recon, case.stack, Path(args.plots))
    return 0


def _write_plots(recon, truth_stack, out_dir: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir.mkdir(parents=True, exist_ok=True)
    for s, (k_hat, k_ref) in enumerate(zip(recon, truth_stack)):
        rec = rss_combine(k_hat)
        ref = rss_combine(k_ref)
        fig, axes = plt.subplots(1, 3, figsize=(10, 3.4))
        for ax, img, title in zip(
            axes, (rec, ref, np.abs(rec - ref)), ("reconstruction", "reference", "error")
        ):
            im = ax.imshow(img, cmap="gray")
            ax.set_title(title)
            ax.axis("off")
            fig.colorbar(im, ax=ax, fraction=0.046)
        fig.tight_layout()
        fig.savefig(out_dir / f"slice_{s}.png", dpi=120)
        plt.close(fig)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smsrecon", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a case bundle from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("calibrate", help="calibrate slice-GRAPPA kernels from a bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--ridge", type=float, default=None)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("reconstruct", help="run a reconstruction method on a bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument(
        "--method", required=True, choices=["ocdi", "sense", "slice-grappa", "zero-fill"]
    )
    p.add_argument("--predictor", choices=["oracle", "grappa", "external"])
    p.add_argument("--endpoint", help="external predictor endpoint descriptor")
    p.add_argument("--kernels", help="kernel bundle directory")
    p.add_argument("--t-m", dest="t_m", type=int, default=10)
    p.add_argument("--t-u", dest="t_u", type=int, default=10)
    p.add_argument("-G", "--guidance-interval", type=int, default=2)
    p.add_argument("--no-anchor", action="store_true")
    p.add_argument("--tikhonov", type=float, default=1e-6)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("evaluate", help="metric report for a result vs a truth bundle")
    p.add_argument("--result", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", help="report file path")
    p.add_argument("--plots", help="directory for magnitude/error panels")
    p.set_defaults(func=_cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except errors.SmsReconError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for classes, code in _EXIT_BY_ERROR:
            if isinstance(exc, classes):
                return code
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
