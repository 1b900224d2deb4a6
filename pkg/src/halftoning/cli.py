"""Command-line entry point: ``halftoning {halftone,dots,metrics,expand,decay}``.

Summaries go to stdout as JSON. Exit codes: 0 success, 1 I/O failure,
2 usage or validation error, 3 decay slope outside the requested band.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import attraction, evaluation, rkhs
from .core import GrayImage, PGMError, load_image, save_pgm, to_signed
from .diffusion import SchemeError, format_extended, rescale, resolve_scheme, run_scheme

log = logging.getLogger("halftoning")

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_BENCHMARK = 0, 1, 2, 3
DEFAULT_RESCALE = 0.03
DEFAULT_LAMBDAS = "4,8,16,32,64"


class UsageError(Exception):
    pass


def _emit(doc: dict) -> None:
    sys.stdout.write(json.dumps(doc) + "\n")


def _parse_lambdas(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--lambdas expects comma-separated numbers, got {text!r}") from None


def _margin(value: str) -> float:
    f = float(value)
    if not 0.0 <= f < 1.0:
        raise argparse.ArgumentTypeError("margin must lie in [0, 1)")
    return f


def _seed(value: str) -> int:
    n = int(value)
    if not 0 <= n < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return n


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_halftone(args) -> int:
    try:
        scheme = resolve_scheme(args.scheme)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    p = to_signed(load_image(args.input))
    margin = args.rescale
    if args.no_rescale:
        margin = 0.0
    elif margin is None:
        margin = DEFAULT_RESCALE if scheme.order >= 2 else 0.0
    if margin > 0:
        p = rescale(p, margin)
    res = run_scheme(p, scheme, args.scan)
    save_pgm(res.q, args.output)
    _emit({"scheme": scheme.name, "scan": args.scan, "rescale": margin, "v_max_abs": res.v_max_abs})
    return EXIT_OK


def cmd_dots(args) -> int:
    image = load_image(args.input)
    weights = attraction.WeightField.from_image(image)
    m = attraction.dot_count(image)
    lam = attraction.equilibration_lambda(weights, m)
    start = attraction.random_configuration(m, image.width, image.height, args.seed)
    params = attraction.EvolutionParams(
        tau=args.tau, max_iters=args.iters, tol=args.tol, seed=args.seed,
        max_step=None if args.max_step <= 0 else args.max_step,
    )  # fmt: skip
    if args.method == "evolve":
        result = attraction.evolve(start, weights, params)
    else:
        result = attraction.subgradient_descent(start, weights, lam, params)
    final = result.config
    if args.out:
        final.save_csv(args.out)
    summary = {
        "dots": m,
        "lambda": lam,
        "method": args.method,
        "iterations": result.iterations,
        "converged": result.converged,
        "energy_initial": attraction.energy(start, weights, lam),
        "energy_final": attraction.energy(final, weights, lam),
    }
    if args.snap:
        snapped = attraction.snap_to_grid(final, image.width, image.height)
        save_pgm(snapped, args.snap)
        summary["black_pixels"] = snapped.black_count()
    _emit(summary)
    return EXIT_OK


METRICS = ("quadrature_error", "fourier_discrepancy", "ball_discrepancy", "lowpass_error")


def _dots_of(halftone: GrayImage):
    """Black pixels of a halftone as dots; an empty set becomes one massless dot."""
    rows, cols = np.nonzero(halftone.values < 0.5)
    pts = np.column_stack([cols + 1.0, rows + 1.0])
    if len(pts) == 0:
        return attraction.DotConfiguration([[1.0, 1.0]]), 0
    return attraction.DotConfiguration(pts), len(pts)


def cmd_metrics(args) -> int:
    original = load_image(args.original)
    halftone = load_image(args.halftone)
    if original.shape != halftone.shape:
        raise UsageError(f"image sizes differ: {original.shape} vs {halftone.shape}")
    wanted = [m.strip() for m in args.metrics.split(",") if m.strip()]
    unknown = sorted(set(wanted) - set(METRICS))
    if unknown:
        raise UsageError(f"unknown metrics {unknown}; choose from {', '.join(METRICS)}")
    config, m = _dots_of(halftone)
    mass = float(np.sum(1.0 - original.values))
    # each dot carries the average weight, so total masses agree
    lam = mass / m if m else 0.0
    area = original.width * original.height
    out = {}
    for name in wanted:
        if name == "quadrature_error":
            kernel = rkhs.RadialKernel("gaussian", args.sigma)
            val = rkhs.quadrature_error(config, rkhs.image_measure(original), kernel, lam)
        elif name == "fourier_discrepancy":
            kernel = rkhs.FourierKernel(args.bandwidth)
            val = rkhs.fourier_discrepancy(config, original, kernel, lam / area)
        elif name == "ball_discrepancy":
            radius = args.radius_max or max(original.shape) / 4.0
            val = rkhs.ball_discrepancy(config, original, radius, args.resolution, lam)
        else:
            kernel = evaluation.LowPassKernel(args.kernel, args.cutoff)
            a = to_signed(original).values
            b = to_signed(halftone).values
            val = evaluation.lowpass_sup_error(a, b, args.rate, kernel, args.margin)
        out[name] = val
    sys.stdout.write(rkhs.metrics_json(out) + "\n")
    return EXIT_OK


def cmd_expand(args) -> int:
    try:
        scheme = resolve_scheme(args.scheme)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    sys.stdout.write(format_extended(scheme) + "\n")
    return EXIT_OK


def _decay_report(args) -> tuple[evaluation.DecayReport, float]:
    lambdas = evaluation.check_lambdas(_parse_lambdas(args.lambdas))
    if args.synthetic_errors:
        errors = _parse_lambdas(args.synthetic_errors)
        if len(errors) != len(lambdas):
            raise UsageError("--synthetic-errors needs one value per rate")
        slope = evaluation.fit_slope(lambdas, errors)
        report = evaluation.DecayReport(lambdas, errors, slope, quantizer="synthetic")
        return report, -float(args.order)
    kernel = evaluation.LowPassKernel(args.kernel, args.cutoff)
    if args.scheme:
        try:
            scheme = resolve_scheme(args.scheme)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
        signal = evaluation.random_bandlimited(2, args.kmax, args.amplitude, args.seed, args.period)
        report = evaluation.decay_experiment(signal, scheme, lambdas, kernel, args.margin)
        return report, -float(scheme.order)
    signal = evaluation.random_bandlimited(1, args.kmax, args.amplitude, args.seed, args.period)
    report = evaluation.decay_experiment(signal, args.order, lambdas, kernel, args.margin)
    return report, -float(args.order)


def cmd_decay(args) -> int:
    report, default_target = _decay_report(args)
    target = default_target if args.expect_slope is None else args.expect_slope
    ok = abs(report.fitted_slope - target) <= args.slope_tol
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n")
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    doc = report.to_dict()
    doc.update({"expected_slope": target, "slope_tol": args.slope_tol, "within_band": ok})
    _emit(doc)
    return EXIT_OK if ok else EXIT_BENCHMARK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="halftoning", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("halftone", help="error-diffuse a gray image into a binary PGM")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--scheme", default="fs1", help="builtin scheme name or scheme JSON path")
    p.add_argument("--scan", choices=("raster", "serpentine"), default="raster")
    p.add_argument("--rescale", type=_margin, default=None, metavar="F",
                   help=f"shrink amplitudes by 1-F (default {DEFAULT_RESCALE} for order >= 2)")
    p.add_argument("--no-rescale", action="store_true")
    p.set_defaults(func=cmd_halftone)

    p = sub.add_parser("dots", help="place dots by attraction and repulsion")
    p.add_argument("input")
    p.add_argument("--out", help="dot positions CSV")
    p.add_argument("--snap", metavar="PGM", help="also write the dots rounded to pixels")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--method", choices=("evolve", "descent"), default="evolve")
    p.add_argument("--tau", type=float, default=0.1)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--max-step", type=float, default=0.5, help="0 disables the step cap")
    p.set_defaults(func=cmd_dots)

    p = sub.add_parser("metrics", help="compare an image with its halftone")
    p.add_argument("original")
    p.add_argument("halftone")
    p.add_argument("--metrics", default=",".join(METRICS))
    p.add_argument("--sigma", type=float, default=2.0, help="gaussian kernel scale in pixels")
    p.add_argument("--bandwidth", type=int, default=8, help="Fourier kernel bandwidth")
    p.add_argument("--radius-max", type=float, default=None)
    p.add_argument("--resolution", type=int, default=8)
    p.add_argument("--kernel", choices=("ideal", "gaussian"), default="gaussian")
    p.add_argument("--cutoff", type=float, default=0.5)
    p.add_argument("--rate", type=float, default=4.0, help="oversampling rate for the low-pass metric")
    p.add_argument("--margin", type=float, default=0.1)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("expand", help="print a scheme's extended coefficient grid")
    p.add_argument("scheme")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("decay", help="measure the error decay exponent over oversampling rates")
    p.add_argument("--order", type=int, choices=(1, 2), default=1, help="1D quantizer order")
    p.add_argument("--scheme", help="run a 2D scheme instead of the 1D quantizer")
    p.add_argument("--lambdas", default=DEFAULT_LAMBDAS)
    p.add_argument("--kernel", choices=("ideal", "gaussian"), default="gaussian")
    p.add_argument("--cutoff", type=float, default=0.5)
    p.add_argument("--margin", type=float, default=0.1)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--kmax", type=int, default=4)
    p.add_argument("--amplitude", type=float, default=0.9)
    p.add_argument("--period", type=float, default=None)
    p.add_argument("--expect-slope", type=float, default=None)
    p.add_argument("--slope-tol", type=float, default=0.25)
    p.add_argument("--synthetic-errors", help="fit these errors instead of running a quantizer")
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--csv", help="report CSV path")
    p.set_defaults(func=cmd_decay)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (OSError, PGMError) as exc:
        print(f"halftoning: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, SchemeError, ValueError, attraction.DegenerateImageError) as exc:
        print(f"halftoning: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, evaluation.DecayExperimentError) as exc:
        print(f"halftoning: {exc}", file=sys.stderr)
        return EXIT_BENCHMARK


if __name__ == "__main__":
    sys.exit(main())
