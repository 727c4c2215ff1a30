"""End-to-end orchestration: build the model basis, remotely prepare a
state, run a simulated counting campaign, and reconstruct it.

The reconstruction path here is also the blind path: given only a
campaign file and a basis manifest (no knowledge of the prepared
state), :func:`reconstruct_campaign` produces the identical report.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from contextlib import contextmanager

from .basis import EnlargedBasis, build_enlarged_basis
from .errors import InvalidArgumentError, OamTomoError


class PipelineStageError(OamTomoError):
    """Wraps the first failing pipeline stage with its name."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


@contextmanager
def _stage(name: str):
    try:
        yield
    except PipelineStageError:
        raise
    except Exception as cause:
        raise PipelineStageError(name, cause) from cause
from .formats import (CampaignConfig, ReconstructionReport,
                      write_basis_manifest, write_campaign, write_report)
from .measurement import (default_settings, intended_inner_state,
                          projector_matrix, projector_span_rank,
                          remote_prepare, simulate_counts)
from .mle import (ReconstructionOptions, analyze, fidelity_to_pure,
                  poisson_residual_statistic, project_inner, reconstruct)

INNER_DIM = 3


def reconstruct_campaign(settings, records, basis: EnlargedBasis,
                         options: ReconstructionOptions | None = None):
    """Reconstruct a state from count records; the blind-mode workhorse.

    Returns
    -------
    (ReconstructionReport, DensityMatrix)
        The serializable report and the full-dimensional state.
    """
    if options is None:
        options = ReconstructionOptions()
    if len(settings) != len(records):
        raise InvalidArgumentError(
            f"{len(settings)} settings but {len(records)} records")
    projectors, _ = projector_matrix(settings, basis)
    rho, diagnostics = reconstruct(records, projectors, basis.dim, options)
    inner, discarded = project_inner(rho, INNER_DIM)
    analysis = analyze(inner)
    counts = np.asarray([r.n for r in records], dtype=float)
    for record, p in zip(records, diagnostics.final_probabilities):
        record.p_model = float(p)
    try:
        chi = poisson_residual_statistic(counts, diagnostics.final_probabilities)
    except OamTomoError:
        chi = float("nan")
    report = ReconstructionReport(
        options=options,
        full_state=rho.entries,
        inner_state=inner.entries,
        discarded_probability=discarded,
        eigenvalues=analysis.eigenvalues,
        eigenvector_moduli=analysis.amplitudes,
        eigenvector_phases=analysis.phases,
        purity=analysis.purity,
        degenerate=analysis.degenerate,
        iterations=diagnostics.iterations,
        converged=diagnostics.converged,
        log_likelihood=float(diagnostics.log_likelihood_trace[-1]),
        extremal_residual=diagnostics.extremal_residual,
        extremal_residual_relative=diagnostics.extremal_residual_relative,
        regularization_events=diagnostics.regularization_events,
        mean_flux_estimate=diagnostics.mean_flux_estimate,
        poisson_residual=chi,
        setting_count=len(settings),
        completeness_rank_full=projector_span_rank(projectors),
        completeness_rank_inner=projector_span_rank(projectors[:, :INNER_DIM]),
    )
    return report, rho


def rank_warnings(report: ReconstructionReport, dim: int) -> list[str]:
    warnings = []
    if report.completeness_rank_full < dim * dim:
        warnings.append(
            f"completeness rank {report.completeness_rank_full} < {dim * dim}: "
            "reconstruction underdetermined on the full space")
    if report.completeness_rank_inner < INNER_DIM * INNER_DIM:
        warnings.append(
            f"inner completeness rank {report.completeness_rank_inner} < "
            f"{INNER_DIM * INNER_DIM}: inner state underdetermined")
    return warnings


@dataclass
class PipelineResult:
    config: CampaignConfig
    basis: EnlargedBasis
    report: ReconstructionReport
    fidelity: float
    intended_state: np.ndarray
    warnings: list
    campaign_path: str
    manifest_path: str
    report_path: str
    summary_path: str
    figure_paths: list


def run_pipeline(config: CampaignConfig) -> PipelineResult:
    """Run every stage and write campaign, manifest, report, and summary
    files (plus figures unless disabled) into the output directory.

    The first failing stage aborts with a :class:`PipelineStageError`
    naming the stage.
    """
    out = config.output_dir
    os.makedirs(out, exist_ok=True)

    with _stage("basis"):
        basis = build_enlarged_basis(config.grid(), config.scan_step,
                                     config.scan_half_range)
    with _stage("preparation"):
        choice = config.preparation()
        rho_true = remote_prepare(choice, basis.dim)
    with _stage("settings"):
        settings = default_settings(config.setting_count, config.seed)
        projectors, _ = projector_matrix(settings, basis)
    with _stage("simulation"):
        records = simulate_counts(rho_true, settings, basis, config.mean_flux,
                                  config.seed, projectors=projectors)
        campaign_path = os.path.join(out, "campaign.tsv")
        manifest_path = os.path.join(out, "basis_manifest.ini")
        write_campaign(campaign_path, settings, records)
        write_basis_manifest(manifest_path, basis)

    with _stage("reconstruction"):
        report, _ = reconstruct_campaign(settings, records, basis,
                                         config.options)
    with _stage("report"):
        report_path = os.path.join(out, "reconstruction_report.txt")
        write_report(report_path, report)

        intended = intended_inner_state(choice)
        from .mle import DensityMatrix
        fidelity = fidelity_to_pure(DensityMatrix(report.inner_state), intended)
        warnings = rank_warnings(report, basis.dim)

        summary_path = os.path.join(out, "pipeline_summary.txt")
        _write_summary(summary_path, config, report, fidelity, intended,
                       warnings)

        figure_paths = []
        if config.figures:
            from .plots import save_state_figure
            figure_path = os.path.join(out, "reconstruction.png")
            save_state_figure(report.inner_state, figure_path,
                              suptitle="reconstructed inner state")
            figure_paths.append(figure_path)

    return PipelineResult(
        config=config, basis=basis, report=report, fidelity=fidelity,
        intended_state=intended, warnings=warnings,
        campaign_path=campaign_path, manifest_path=manifest_path,
        report_path=report_path, summary_path=summary_path,
        figure_paths=figure_paths)


def _write_summary(path, config: CampaignConfig, report: ReconstructionReport,
                   fidelity: float, intended: np.ndarray, warnings) -> None:
    lines = [
        "# oamtomo pipeline summary",
        f"preparation = {config.preset or 'explicit amplitudes'}",
        "intended_state = " + ", ".join(
            f"{abs(a):.6f} exp({np.angle(a):+.6f}j)" for a in intended),
        f"settings = {config.setting_count}",
        f"seed = {config.seed}",
        f"mean_flux = {config.mean_flux}",
        f"fidelity_to_intended = {fidelity!r}",
        f"largest_eigenvalue = {report.eigenvalues[0]!r}",
        f"purity = {report.purity!r}",
        f"discarded_probability = {report.discarded_probability!r}",
        f"completeness_rank_full = {report.completeness_rank_full}",
        f"completeness_rank_inner = {report.completeness_rank_inner}",
        f"converged = {report.converged}",
    ]
    lines += [f"warning: {w}" for w in warnings]
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
