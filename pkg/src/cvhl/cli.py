"""Command-line front end.

Exit codes: 0 success, 2 input/config error, 3 data-quality error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings

from . import pipeline
from ._validation import DataQualityError, NumericalError
from .config import ConfigError, load_config
from .io import read_density_matrix, write_density_matrix, write_json, write_wigner_csv
from .phasefit import fit_phase_model
from .scan import PhaseScanModel, TraceFormatError, read_trace, write_trace
from .tomography.density import _jsonable

EXIT_OK, EXIT_INPUT, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def cmd_simulate(args):
    cfg = load_config(args.config)
    out = args.out or cfg.outputs.trace
    if not out:
        raise ConfigError("no output path: pass --out or set outputs.trace")
    trace = pipeline.simulate(cfg, args.seed)
    write_trace(trace, out)
    summary = pipeline.model_summary(cfg)
    print(
        f"{trace.source_label}: eta_tot={summary['eta_tot']:.4f} "
        f"V-={summary['v_minus']:.4f} ({summary['squeezing_db']:+.2f} dB) "
        f"V+={summary['v_plus']:.4f} ({summary['antisqueezing_db']:+.2f} dB) "
        f"samples={len(trace)} seed={trace.seed} -> {out}"
    )
    return EXIT_OK


def cmd_reconstruct(args):
    trace = read_trace(args.trace)
    rho = pipeline.reconstruct(trace, args.cutoff, bootstrap=args.bootstrap, psd=args.psd, seed=args.seed)
    write_density_matrix(args.out, rho)
    print(
        f"cutoff={rho.cutoff} trace={rho.trace:.6f} trailing_diagonal={rho.diagnostics['trailing_diagonal']:.3g} -> {args.out}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_analyze(args):
    rho = read_density_matrix(args.rho)
    wigner = None
    if args.wigner_grid:
        step = 2 * args.wigner_extent / (args.wigner_grid - 1)
        wigner = (args.wigner_extent, step)
    report = pipeline.analyze(rho, wigner=wigner)
    grid = report.pop("wigner_grid", None)
    if grid is not None:
        if not args.wigner_out:
            raise ConfigError("--wigner-grid needs --wigner-out")
        write_wigner_csv(args.wigner_out, grid)
        report["wigner"] = args.wigner_out
    if args.reference:
        from .opo import REFERENCE_VALUES

        report["reference"] = REFERENCE_VALUES.get(args.reference)
    write_json(args.out, report)
    print(
        f"purity={report['purity']:.4f} ncd={report['ncd']:.4f} "
        f"min={report['squeezing_db_min']} dB max={report['antisqueezing_db_max']:.2f} dB -> {args.out}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_budget(args):
    cfg = load_config(args.config)
    summary = pipeline.budget_summary(cfg)
    if args.json:
        print(json.dumps(_jsonable(summary), indent=2))
        return EXIT_OK
    print(f"configuration      {summary['config']}")
    for name, value in summary["factors"].items():
        print(f"  {name:<16} {value:.4f}")
    print(f"  {'eta_hd':<16} {summary['eta_hd']:.4f}")
    print(f"  {'eta_tot':<16} {summary['eta_tot']:.4f}")
    print(f"pump ratio         {summary['pump_ratio']:.4f}   sideband ratio {summary['sideband_ratio']:.3f}")
    print(f"V-  {summary['v_minus']:.4f}  {summary['squeezing_db']:+.2f} dB")
    print(f"V+  {summary['v_plus']:.4f}  {summary['antisqueezing_db']:+.2f} dB")
    ref = summary["reference"]
    verdict = "within" if ref["within_measured_band"] else "OUTSIDE"
    print(
        f"measured (reference) {ref['measured_squeezing_db']:+.1f} +/- {ref['measured_squeezing_db_err']:.1f} dB; "
        f"prediction {verdict} the measured band (offset {ref['predicted_minus_measured_db']:+.2f} dB)"
    )
    return EXIT_OK


def cmd_compare(args):
    shd = load_config(args.shd)
    iha = load_config(args.iha)
    try:
        report = pipeline.compare(shd, iha, args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    write_json(args.out, report)
    gap = report["squeezing_gap_db"]
    trace_gap = "n/a" if gap is None else f"{gap:+.2f} dB"
    print(
        f"squeezing gap (SHD - IHA): trace {trace_gap}, model {report['model_squeezing_gap_db']:+.2f} dB -> {args.out}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_fit_phase(args):
    trace = read_trace(args.trace)
    initial = trace.scan or PhaseScanModel(duration=float(trace.t[-1]))
    if args.kind:
        initial = PhaseScanModel(
            args.kind,
            initial.theta0,
            args.span if args.span is not None else initial.span,
            max(initial.duration, float(trace.t[-1])),
            args.exponent if args.exponent is not None else (2.0 if args.kind == "power_law" else 1.0),
        )
    model, amplitude, residual = fit_phase_model(trace, initial)
    write_json(args.out, {"model": model.to_dict(), "fringe_amplitude": amplitude, "rms_residual": residual})
    print(f"span={model.span / math.pi:.4f} pi exponent={model.exponent:.3f} residual={residual:.4g} -> {args.out}", file=sys.stderr)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="cvhl", description="Homodyne detection simulation and pattern-function tomography")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize a homodyne trace from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="pattern-function tomography of a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--cutoff", type=int, required=True)
    p.add_argument("--bootstrap", type=int, default=0)
    p.add_argument("--psd", action="store_true", help="project onto positive semidefinite matrices")
    p.add_argument("--seed", type=int, default=0, help="bootstrap seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("analyze", help="purity, NCD and variance curve of a density matrix")
    p.add_argument("--rho", required=True)
    p.add_argument("--wigner-grid", type=int, help="points per side of the Wigner grid")
    p.add_argument("--wigner-extent", type=float, default=6.0, help="half-width in canonical units")
    p.add_argument("--wigner-out")
    p.add_argument("--reference", choices=["SHD", "IHA"], help="embed the measured reference values")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("budget", help="efficiency budget and predicted squeezing")
    p.add_argument("--config", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("compare", help="SHD vs IHA side by side")
    p.add_argument("--shd", required=True)
    p.add_argument("--iha", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("fit-phase", help="fit the LO phase-scan model to a coherent-state trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--kind", choices=["linear", "power_law"])
    p.add_argument("--span", type=float)
    p.add_argument("--exponent", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit_phase)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    with warnings.catch_warnings():
        warnings.showwarning = _show_warning
        return _dispatch(args)


def _dispatch(args):
    try:
        return args.func(args)
    except DataQualityError as exc:
        _err(str(exc))
        return EXIT_DATA
    except NumericalError as exc:
        _err(str(exc))
        return EXIT_NUMERIC
    except (ConfigError, TraceFormatError, OSError, ValueError) as exc:
        _err(str(exc))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
