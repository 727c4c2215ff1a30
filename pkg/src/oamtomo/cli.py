"""Command-line interface: scan, calibrate, simulate, reconstruct,
pipeline, and template subcommands."""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .basis import max_transfer_positions, transfer_scan
from .calibration import default_fit_grid, fit_calibration
from .errors import (DegenerateGeneratorError, DegenerateMeasurementError,
                     DegenerateScanError, EmptySubspaceError,
                     GridMismatchError, InsufficientDataError,
                     InvalidArgumentError, InvalidBasisError,
                     InvalidDataError, InvalidStateError, OamTomoError,
                     ParseError, UnderdeterminedFitError)
from .formats import (read_basis_manifest, read_calibration_params,
                      read_campaign, read_config, write_calibration_params,
                      write_config_template, write_report,
                      write_transfer_scan)
from .mle import ReconstructionOptions
from .optics import make_grid
from .pipeline import (PipelineStageError, rank_warnings,
                       reconstruct_campaign, run_pipeline)

#: Module errors mapped to stable exit codes (argparse itself uses 2).
ERROR_EXIT_CODES = (
    (ParseError, 3),
    (UnderdeterminedFitError, 4),
    (InvalidDataError, 4),
    (InsufficientDataError, 5),
    (DegenerateScanError, 5),
    (DegenerateGeneratorError, 6),
    (InvalidBasisError, 6),
    (GridMismatchError, 6),
    (InvalidStateError, 7),
    (DegenerateMeasurementError, 7),
    (EmptySubspaceError, 7),
    (InvalidArgumentError, 2),
)

#: Stage-tagged exit codes for the pipeline command.
PIPELINE_STAGE_CODES = {
    "basis": 10,
    "preparation": 11,
    "settings": 12,
    "simulation": 13,
    "reconstruction": 14,
    "report": 15,
}

STRICT_WARNING_EXIT = 1


def _exit_code_for(error: OamTomoError) -> int:
    for kind, code in ERROR_EXIT_CODES:
        if isinstance(error, kind):
            return code
    return 9


def _fail(error: OamTomoError) -> int:
    print(f"error: {error}", file=sys.stderr)
    return _exit_code_for(error)


def _add_grid_flags(parser, extent=4.0, samples=257):
    parser.add_argument("--grid-extent", type=float, default=extent,
                        help="grid half extent in beam widths")
    parser.add_argument("--grid-samples", type=int, default=samples,
                        help="samples per grid axis")


def _add_reconstruction_flags(parser):
    parser.add_argument("--dilution", type=float, default=None,
                        help="iteration damping factor in (0, 1]")
    parser.add_argument("--max-iter", type=int, default=None,
                        help="iteration cap for the likelihood fixed point")
    parser.add_argument("--tol", type=float, default=None,
                        help="log-likelihood improvement stop threshold")


def _options_from_flags(args, base: ReconstructionOptions | None = None):
    base = base or ReconstructionOptions()
    return ReconstructionOptions(
        max_iterations=args.max_iter if args.max_iter is not None
        else base.max_iterations,
        log_likelihood_tolerance=args.tol if args.tol is not None
        else base.log_likelihood_tolerance,
        dilution=args.dilution if args.dilution is not None else base.dilution)


def _apply_config_overrides(config, args):
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "settings", None) is not None:
        config.setting_count = args.settings
    if getattr(args, "flux", None) is not None:
        config.mean_flux = args.flux
    if getattr(args, "grid_samples_opt", None) is not None:
        config.grid_samples = args.grid_samples_opt
    if getattr(args, "grid_extent_opt", None) is not None:
        config.grid_half_extent = args.grid_extent_opt
    if getattr(args, "out_dir", None) is not None:
        config.output_dir = args.out_dir
    if getattr(args, "no_figures", False):
        config.figures = False
    config.options = _options_from_flags(args, config.options)
    return config


def _add_config_flags(parser):
    parser.add_argument("--config", required=True, help="pipeline config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--settings", type=int, default=None,
                        help="number of projection settings")
    parser.add_argument("--flux", type=float, default=None,
                        help="mean photon number per accumulation window")
    parser.add_argument("--grid-samples", dest="grid_samples_opt", type=int,
                        default=None)
    parser.add_argument("--grid-extent", dest="grid_extent_opt", type=float,
                        default=None)
    parser.add_argument("--out-dir", default=None,
                        help="output directory (overrides config)")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip figure rendering")
    _add_reconstruction_flags(parser)


def cmd_template(args) -> int:
    write_config_template(args.out)
    print(f"wrote config template to {args.out}")
    return 0


def cmd_scan(args) -> int:
    grid = make_grid(args.grid_extent, args.grid_samples)
    if args.stop <= args.start:
        raise InvalidArgumentError("--stop must exceed --start")
    n = int(round((args.stop - args.start) / args.step))
    displacements = np.linspace(args.start, args.stop, n + 1)
    scan = transfer_scan(args.charge, args.axis, displacements, grid)
    d_neg, d_pos = max_transfer_positions(scan)
    write_transfer_scan(args.out, scan)
    print(f"wrote {args.out} ({displacements.size} displacements)")
    print(f"outer-mode transfer maxima at {d_neg:+.4f}w and {d_pos:+.4f}w")
    if not args.no_fig:
        fig_path = args.fig or os.path.splitext(args.out)[0] + ".png"
        from .plots import save_transfer_scan_figure
        save_transfer_scan_figure(scan, fig_path)
        print(f"wrote {fig_path}")
    return 0


def cmd_calibrate(args) -> int:
    from .formats import read_scan_curve
    curves = [read_scan_curve(path) for path in args.curve]
    if args.guess:
        guess = read_calibration_params(args.guess)
    else:
        from .calibration import initial_guess_from_curves
        guess = initial_guess_from_curves(curves)
    if args.fit_grid_samples or args.fit_grid_extent:
        grid = make_grid(args.fit_grid_extent or 4.5 * guess.w,
                         args.fit_grid_samples or 65)
    else:
        grid = default_fit_grid(guess.w)
    fitted, report = fit_calibration(curves, guess, grid)
    write_calibration_params(args.out, fitted, report.per_curve_rms)
    print(f"wrote {args.out}")
    if args.report:
        with open(args.report, "w") as f:
            f.write("# oamtomo calibration residual report\n")
            f.write(f"iterations = {report.iterations}\n")
            f.write(f"converged = {report.converged}\n")
            f.write(f"total_residual = {report.total_residual!r}\n")
            for curve, rms in zip(curves, report.per_curve_rms):
                f.write(f"rms[{curve.which_hologram},{curve.axis}] = {rms!r}\n")
        print(f"wrote {args.report}")
    if args.fig:
        from .plots import save_calibration_figure
        save_calibration_figure(curves, fitted, grid, args.fig)
        print(f"wrote {args.fig}")
    for name, value in zip(
            ("n_max", "w", "cx_plus", "cy_plus", "cx_minus", "cy_minus",
             "kx", "ky"), fitted.as_array()):
        print(f"  {name} = {value:.6g}")
    return 0


def cmd_simulate(args) -> int:
    from .basis import build_enlarged_basis
    from .formats import write_basis_manifest, write_campaign
    from .measurement import (default_settings, projector_matrix,
                              remote_prepare, simulate_counts)

    config = _apply_config_overrides(read_config(args.config), args)
    os.makedirs(config.output_dir, exist_ok=True)
    basis = build_enlarged_basis(config.grid(), config.scan_step,
                                 config.scan_half_range)
    rho_true = remote_prepare(config.preparation(), basis.dim)
    settings = default_settings(config.setting_count, config.seed)
    projectors, _ = projector_matrix(settings, basis)
    records = simulate_counts(rho_true, settings, basis, config.mean_flux,
                              config.seed, projectors=projectors)
    campaign_path = os.path.join(config.output_dir, "campaign.tsv")
    manifest_path = os.path.join(config.output_dir, "basis_manifest.ini")
    write_campaign(campaign_path, settings, records)
    write_basis_manifest(manifest_path, basis)
    print(f"wrote {campaign_path} ({len(records)} settings)")
    print(f"wrote {manifest_path}")
    return 0


def cmd_reconstruct(args) -> int:
    settings, records = read_campaign(args.campaign)
    basis = read_basis_manifest(args.manifest)
    options = _options_from_flags(args)
    report, _ = reconstruct_campaign(settings, records, basis, options)
    write_report(args.out, report)
    print(f"wrote {args.out}")
    print(f"largest eigenvalue {report.eigenvalues[0]:.6f}, "
          f"purity {report.purity:.6f}, "
          f"discarded probability {report.discarded_probability:.6f}")
    if args.fig:
        from .plots import save_state_figure
        save_state_figure(report.inner_state, args.fig,
                          suptitle="reconstructed inner state")
        print(f"wrote {args.fig}")
    warnings = rank_warnings(report, basis.dim)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    if warnings and args.strict:
        return STRICT_WARNING_EXIT
    return 0


def cmd_pipeline(args) -> int:
    config = _apply_config_overrides(read_config(args.config), args)
    try:
        result = run_pipeline(config)
    except PipelineStageError as error:
        print(f"error {error}", file=sys.stderr)
        return PIPELINE_STAGE_CODES.get(error.stage, 9)
    report = result.report
    print(f"wrote {result.campaign_path}")
    print(f"wrote {result.manifest_path}")
    print(f"wrote {result.report_path}")
    print(f"wrote {result.summary_path}")
    for path in result.figure_paths:
        print(f"wrote {path}")
    print(f"fidelity to intended state: {result.fidelity:.6f}")
    print(f"largest eigenvalue: {report.eigenvalues[0]:.6f}")
    print(f"completeness rank (full/inner): "
          f"{report.completeness_rank_full}/{report.completeness_rank_inner}")
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if result.warnings and args.strict:
        return STRICT_WARNING_EXIT
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oamtomo",
        description="Qutrit tomography with orbital-angular-momentum photons")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("template", help="write a starter config file")
    p.add_argument("--out", default="config.ini")
    p.set_defaults(func=cmd_template)

    p = sub.add_parser("scan",
                       help="outer-mode transfer scan of a displaced hologram")
    p.add_argument("--charge", type=int, required=True)
    p.add_argument("--axis", choices=("x", "y"), required=True)
    p.add_argument("--start", type=float, default=-3.0)
    p.add_argument("--stop", type=float, default=3.0)
    p.add_argument("--step", type=float, default=0.05)
    _add_grid_flags(p)
    p.add_argument("--out", default="transfer_scan.tsv")
    p.add_argument("--fig", default=None, help="figure path (default: <out>.png)")
    p.add_argument("--no-fig", action="store_true")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("calibrate",
                       help="fit the eight apparatus parameters to four scans")
    p.add_argument("--curve", action="append", required=True,
                   help="scan-curve file (give four times)")
    p.add_argument("--guess", default=None,
                   help="initial-guess parameter file (heuristic if omitted)")
    p.add_argument("--out", default="calibration.ini")
    p.add_argument("--report", default=None, help="residual report path")
    p.add_argument("--fig", default=None)
    p.add_argument("--fit-grid-samples", type=int, default=None)
    p.add_argument("--fit-grid-extent", type=float, default=None)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("simulate",
                       help="generate settings and Poissonian counts only")
    _add_config_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct",
                       help="blind reconstruction from campaign + manifest")
    p.add_argument("--campaign", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default="reconstruction_report.txt")
    p.add_argument("--fig", default=None)
    p.add_argument("--strict", action="store_true",
                   help="escalate warnings to a nonzero exit code")
    _add_reconstruction_flags(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("pipeline",
                       help="full prepare/simulate/reconstruct/report run")
    _add_config_flags(p)
    p.add_argument("--strict", action="store_true",
                   help="escalate warnings to a nonzero exit code")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OamTomoError as error:
        return _fail(error)


if __name__ == "__main__":
    sys.exit(main())
