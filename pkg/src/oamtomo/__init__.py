"""Qutrit tomography with orbital-angular-momentum photons.

Simulates the full preparation / transmission / reconstruction chain:
Laguerre-Gaussian fields, displaced-hologram transforms, an enlarged
11-dimensional model basis, Poissonian count campaigns, apparatus
calibration fits, and maximum-likelihood density-matrix estimation.
"""

from .basis import (EnlargedBasis, TransferScan, build_enlarged_basis,
                    gram_residual, inner_basis, max_transfer_positions,
                    transfer_scan)
from .calibration import (CalibrationParams, ScanCurve, fit_calibration,
                          initial_guess_from_curves, model_curve)
from .errors import OamTomoError
from .holograms import (HologramSpec, ProjectorState, TransformSpec,
                        apply_hologram, apply_transform, projector_state)
from .measurement import (CountRecord, PreparationChoice, ProjectionSetting,
                          completeness_rank, default_settings,
                          demo_target_states, ideal_probability,
                          minimal_inner_settings, preparation_for_target,
                          projector_matrix, remote_prepare, simulate_counts)
from .mle import (DensityMatrix, ReconstructionDiagnostics,
                  ReconstructionOptions, StateAnalysis, analyze,
                  fidelity_to_pure, g_operator, log_likelihood,
                  maximally_mixed, poisson_residual_statistic, project_inner,
                  pure_state, purity, r_operator, reconstruct, trace_distance,
                  validate_state)
from .optics import (Field, Grid, LgIndex, decompose, inner_product, lg_mode,
                     make_grid, reference_grid)

__version__ = "0.1.0"

__all__ = [
    "CalibrationParams", "CountRecord", "DensityMatrix", "EnlargedBasis",
    "Field", "Grid", "HologramSpec", "LgIndex", "OamTomoError",
    "PreparationChoice", "ProjectionSetting", "ProjectorState",
    "ReconstructionDiagnostics", "ReconstructionOptions", "ScanCurve",
    "StateAnalysis", "TransferScan", "TransformSpec", "analyze",
    "apply_hologram", "apply_transform", "build_enlarged_basis",
    "completeness_rank", "decompose", "default_settings",
    "demo_target_states", "fidelity_to_pure", "fit_calibration",
    "g_operator", "gram_residual", "ideal_probability",
    "initial_guess_from_curves", "inner_basis", "inner_product",
    "lg_mode", "log_likelihood", "make_grid", "max_transfer_positions",
    "maximally_mixed", "minimal_inner_settings", "model_curve",
    "poisson_residual_statistic", "preparation_for_target",
    "project_inner", "projector_matrix", "projector_state", "pure_state",
    "purity", "r_operator", "reconstruct", "reference_grid",
    "remote_prepare", "simulate_counts", "trace_distance", "transfer_scan",
    "validate_state",
]
