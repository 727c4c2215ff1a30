"""Apparatus model and eight-parameter fit from four 1-D scan curves.

A transform set is characterized by eight numbers: the peak coincidence
rate, the beam width, the centered position of each hologram (two
coordinates each), and the two phase-ramp wavenumbers.  Each scan curve
moves one hologram along one axis while the other hologram sits at a
fixed stage position; the photon is prepared in the fiber mode and the
transformed state projected back onto it, so the model prediction is

    count(s) = n_max * |<0| transform(s; params) |0>|^2 .

Fitting uses derivative-free simplex descent (Nelder-Mead) with one
polishing restart from a shrunk simplex.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import (InvalidArgumentError, InvalidDataError,
                     UnderdeterminedFitError)
from .holograms import batch_transform_factors
from .optics import Grid, LgIndex, lg_mode, make_grid

PARAM_NAMES = ("n_max", "w", "cx_plus", "cy_plus", "cx_minus", "cy_minus",
               "kx", "ky")

#: Fit convergence: relative residual decrease per simplex iteration,
#: sustained over a window (single Nelder-Mead iterations regularly make
#: no progress while reshaping the simplex).
RELATIVE_DECREASE_TOL = 1e-8
STALL_WINDOW = 25
MAX_ITERATIONS = 500

#: Default quadrature grid for calibration fits, sized in units of the
#: initial beam-width guess.  The round-trip is self-consistent, so a
#: coarser grid than the optics reference is sufficient here.
FIT_GRID_EXTENT_FACTOR = 4.5
FIT_GRID_SAMPLES = 97

_REQUIRED_COVERAGE = {("plus", "x"), ("plus", "y"),
                      ("minus", "x"), ("minus", "y")}


@dataclass(frozen=True)
class CalibrationParams:
    """The eight numbers describing one transform set."""

    n_max: float
    w: float
    cx_plus: float
    cy_plus: float
    cx_minus: float
    cy_minus: float
    kx: float
    ky: float

    def __post_init__(self):
        if self.n_max <= 0:
            raise InvalidArgumentError(f"n_max must be positive, got {self.n_max}")
        if self.w <= 0:
            raise InvalidArgumentError(f"beam width must be positive, got {self.w}")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in PARAM_NAMES])

    @classmethod
    def from_array(cls, values) -> "CalibrationParams":
        return cls(**dict(zip(PARAM_NAMES, map(float, values))))


@dataclass
class ScanCurve:
    """One 1-D calibration scan.

    ``which_hologram`` names the scanned element; its non-scanned
    coordinate stays at ``scanned_other`` (stage units) while the other
    hologram is parked at ``fixed_other_position``.
    """

    which_hologram: str
    axis: str
    fixed_other_position: tuple
    positions: np.ndarray
    counts: np.ndarray | None = None
    scanned_other: float = 0.0

    def __post_init__(self):
        if self.which_hologram not in ("plus", "minus"):
            raise InvalidArgumentError(
                f"which_hologram must be 'plus' or 'minus', got {self.which_hologram!r}")
        if self.axis not in ("x", "y"):
            raise InvalidArgumentError(f"axis must be 'x' or 'y', got {self.axis!r}")
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim != 1 or self.positions.size < 2:
            raise InvalidArgumentError("positions must be a 1-D array of >= 2 values")
        if np.any(np.diff(self.positions) <= 0):
            raise InvalidArgumentError("positions must be strictly increasing")
        if self.counts is not None:
            self.counts = np.asarray(self.counts, dtype=float)
            if self.counts.shape != self.positions.shape:
                raise InvalidArgumentError("counts length must match positions")


def _hologram_positions(curve: ScanCurve, s: np.ndarray):
    """Raw stage coordinates (plus_xy, minus_xy) for scan positions s."""
    if curve.axis == "x":
        scanned = np.stack([s, np.full_like(s, curve.scanned_other)], axis=1)
    else:
        scanned = np.stack([np.full_like(s, curve.scanned_other), s], axis=1)
    parked = np.broadcast_to(np.asarray(curve.fixed_other_position, dtype=float),
                             scanned.shape)
    if curve.which_hologram == "plus":
        return scanned, parked
    return parked, scanned


def default_fit_grid(w_guess: float) -> Grid:
    return make_grid(FIT_GRID_EXTENT_FACTOR * w_guess, FIT_GRID_SAMPLES)


def model_curve(params: CalibrationParams, curve: ScanCurve,
                grid: Grid | None = None) -> np.ndarray:
    """Predicted counts for a scan curve under the given parameters."""
    if grid is None:
        grid = default_fit_grid(params.w)
    fiber = lg_mode(LgIndex(0, 0, params.w), grid)
    weight = (np.abs(fiber.amplitudes.ravel()) ** 2) * grid.cell_area
    plus_xy, minus_xy = _hologram_positions(curve, curve.positions)
    factors = batch_transform_factors(
        plus_xy - [params.cx_plus, params.cy_plus],
        minus_xy - [params.cx_minus, params.cy_minus],
        params.kx, params.ky, grid)
    amplitudes = factors @ weight
    return params.n_max * np.abs(amplitudes) ** 2


@dataclass
class FitReport:
    per_curve_rms: list
    total_residual: float
    iterations: int
    converged: bool
    residual_trace: np.ndarray = field(repr=False, default=None)


def _check_curves(curves) -> None:
    coverage = {(c.which_hologram, c.axis) for c in curves}
    if coverage != _REQUIRED_COVERAGE:
        missing = sorted(_REQUIRED_COVERAGE - coverage)
        raise UnderdeterminedFitError(
            f"curves must cover every hologram/axis pair; missing {missing}")
    for c in curves:
        if c.counts is None:
            raise InvalidDataError("curve has no counts to fit")
        if not np.all(np.isfinite(c.counts)):
            raise InvalidDataError("curve counts contain non-finite values")


def initial_guess_from_curves(curves) -> CalibrationParams:
    """Heuristic starting point: centers from the count minima (a
    hologram crossing the beam kills the fiber-mode overlap), the beam
    width from the dip width at half depth, the peak rate from the
    overall maximum, and zero ramp."""
    _check_curves(curves)
    n_max = max(float(np.max(c.counts)) for c in curves)
    centers = {}
    widths = []
    for c in curves:
        i_min = int(np.argmin(c.counts))
        centers[(c.which_hologram, c.axis)] = float(c.positions[i_min])
        depth_level = 0.5 * (np.max(c.counts) + c.counts[i_min])
        below = np.flatnonzero(c.counts <= depth_level)
        if below.size >= 2:
            widths.append(float(c.positions[below[-1]] - c.positions[below[0]]) / 2.0)
    w = float(np.median(widths)) if widths else 1.0
    w = max(w, 1e-3)
    return CalibrationParams(
        n_max=n_max, w=w,
        cx_plus=centers[("plus", "x")], cy_plus=centers[("plus", "y")],
        cx_minus=centers[("minus", "x")], cy_minus=centers[("minus", "y")],
        kx=0.0, ky=0.0)


def fit_calibration(curves, initial_guess: CalibrationParams,
                    grid: Grid | None = None):
    """Least-squares fit of the eight apparatus parameters.

    Parameters
    ----------
    curves : sequence of ScanCurve
        Exactly one scan per hologram/axis pair, with counts.
    initial_guess : CalibrationParams
        Starting point; also fixes the quadrature grid size when
        ``grid`` is not given.
    grid : Grid, optional
        Quadrature grid shared by all model evaluations.

    Returns
    -------
    (CalibrationParams, FitReport)
    """
    curves = list(curves)
    _check_curves(curves)
    if grid is None:
        grid = default_fit_grid(initial_guess.w)

    data = [c.counts for c in curves]

    def objective(x):
        if x[0] <= 0 or x[1] <= 0:
            return np.inf
        params = CalibrationParams.from_array(x)
        total = 0.0
        for c, counts in zip(curves, data):
            residual = model_curve(params, c, grid) - counts
            total += float(residual @ residual)
        return total

    x0 = initial_guess.as_array()
    steps = np.array([0.05 * x0[0], 0.05 * x0[1],
                      0.1 * x0[1], 0.1 * x0[1], 0.1 * x0[1], 0.1 * x0[1],
                      0.2 / x0[1], 0.2 / x0[1]])

    trace = []

    def run_stage(start, stage_steps):
        simplex = np.vstack([start, start + np.diag(stage_steps)])
        state = {"f": None, "stall": 0}

        def callback(intermediate_result):
            f = float(intermediate_result.fun)
            trace.append(f if not trace else min(f, trace[-1]))
            prev = state["f"]
            state["f"] = f
            if prev is None:
                return
            if prev <= 0.0:
                raise StopIteration
            rel = (prev - f) / prev
            state["stall"] = state["stall"] + 1 if rel < RELATIVE_DECREASE_TOL else 0
            if state["stall"] >= STALL_WINDOW:
                raise StopIteration
        return minimize(objective, start, method="Nelder-Mead",
                        callback=callback,
                        options={"initial_simplex": simplex,
                                 "maxiter": MAX_ITERATIONS,
                                 "xatol": 1e-12, "fatol": 1e-14})

    first = run_stage(x0, steps)
    polished = run_stage(first.x, steps / 10.0)
    best = polished if polished.fun <= first.fun else first

    params = CalibrationParams.from_array(best.x)
    per_curve = []
    for c in curves:
        residual = model_curve(params, c, grid) - c.counts
        per_curve.append(float(np.sqrt(np.mean(residual ** 2))))
    report = FitReport(
        per_curve_rms=per_curve,
        total_residual=float(best.fun),
        iterations=int(first.nit + polished.nit),
        converged=bool(first.nit + polished.nit < 2 * MAX_ITERATIONS),
        residual_trace=np.minimum.accumulate(np.asarray(trace))
        if trace else np.array([float(best.fun)]),
    )
    return params, report
