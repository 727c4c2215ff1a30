"""File formats: campaign data, scan curves, fitted parameters, basis
manifests, reconstruction reports, and the pipeline configuration.

All numeric fields are written with ``repr``, which round-trips floats
bit-exactly; every reader re-produces byte-identical files when the
data are written back.
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

import numpy as np

from .basis import (DEFAULT_SCAN_HALF_RANGE, DEFAULT_SCAN_STEP, EnlargedBasis,
                    TransferScan, gram_residual, rebuild_from_generators)
from .calibration import PARAM_NAMES, CalibrationParams, ScanCurve
from .errors import InvalidArgumentError, ParseError
from .holograms import HologramSpec, TransformSpec
from .measurement import (DEFAULT_DURATION, DEFAULT_MEAN_FLUX, DEFAULT_SEED,
                          DEFAULT_SETTING_COUNT, CountRecord,
                          PreparationChoice, ProjectionSetting,
                          demo_target_states, preparation_for_target)
from .mle import ReconstructionOptions
from .optics import Grid, make_grid

CAMPAIGN_HEADER = "# oamtomo campaign v1"
CAMPAIGN_COLUMNS = ("id", "plus_dx", "plus_dy", "minus_dx", "minus_dy",
                    "kx", "ky", "count")
CURVE_HEADER = "# oamtomo scan-curve v1"
SCAN_HEADER = "# oamtomo transfer-scan v1"
REPORT_HEADER = "# oamtomo reconstruction report v1"


def _fmt(x) -> str:
    return repr(float(x))


def _parse_float(token: str, line_number: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"invalid {what} {token!r}", line_number) from None
    if not np.isfinite(value):
        raise ParseError(f"non-finite {what} {token!r}", line_number)
    return value


def _parse_int(token: str, line_number: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"invalid {what} {token!r}", line_number) from None


# ---------------------------------------------------------------- campaign

def write_campaign(path, settings, records) -> None:
    """Write one line per setting: id, the four hologram displacements,
    the ramp wavenumbers, and the observed count."""
    if len(settings) != len(records):
        raise InvalidArgumentError(
            f"{len(settings)} settings but {len(records)} records")
    lines = [CAMPAIGN_HEADER, "\t".join(CAMPAIGN_COLUMNS)]
    for s, r in zip(settings, records):
        if s.id != r.setting_id:
            raise InvalidArgumentError(
                f"setting id {s.id} does not match record id {r.setting_id}")
        t = s.transform
        lines.append("\t".join([
            str(s.id),
            _fmt(t.plus.dx), _fmt(t.plus.dy),
            _fmt(t.minus.dx), _fmt(t.minus.dy),
            _fmt(t.kx), _fmt(t.ky),
            str(r.n),
        ]))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_campaign(path):
    """Parse a campaign file back into (settings, records)."""
    settings: list[ProjectionSetting] = []
    records: list[CountRecord] = []
    with open(path) as f:
        raw = f.read().splitlines()
    seen_columns = False
    for i, line in enumerate(raw, start=1):
        if not line.strip() or line.startswith("#"):
            continue
        if not seen_columns:
            if tuple(line.split("\t")) != CAMPAIGN_COLUMNS:
                raise ParseError(f"unexpected column header {line!r}", i)
            seen_columns = True
            continue
        tokens = line.split("\t")
        if len(tokens) != len(CAMPAIGN_COLUMNS):
            raise ParseError(
                f"expected {len(CAMPAIGN_COLUMNS)} columns, got {len(tokens)}", i)
        sid = _parse_int(tokens[0], i, "setting id")
        values = [_parse_float(t, i, "displacement") for t in tokens[1:7]]
        count = _parse_int(tokens[7], i, "count")
        if count < 0:
            raise ParseError(f"negative count {count}", i)
        settings.append(ProjectionSetting(
            sid, TransformSpec.from_displacements(*values)))
        records.append(CountRecord(sid, count))
    if not seen_columns:
        raise ParseError("missing campaign column header", len(raw))
    return settings, records


# ------------------------------------------------------------- scan curves

def write_scan_curve(path, curve: ScanCurve) -> None:
    lines = [
        CURVE_HEADER,
        f"# hologram: {curve.which_hologram}",
        f"# axis: {curve.axis}",
        f"# fixed_dx: {_fmt(curve.fixed_other_position[0])}",
        f"# fixed_dy: {_fmt(curve.fixed_other_position[1])}",
        f"# scanned_other: {_fmt(curve.scanned_other)}",
        "position\tcount",
    ]
    counts = curve.counts if curve.counts is not None else np.full(
        curve.positions.shape, np.nan)
    for pos, cnt in zip(curve.positions, counts):
        lines.append(f"{_fmt(pos)}\t{_fmt(cnt)}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_scan_curve(path) -> ScanCurve:
    meta = {}
    positions = []
    counts = []
    with open(path) as f:
        raw = f.read().splitlines()
    for i, line in enumerate(raw, start=1):
        if line.startswith("#"):
            if ":" in line:
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
            continue
        if not line.strip() or line.startswith("position"):
            continue
        tokens = line.split("\t")
        if len(tokens) != 2:
            raise ParseError(f"expected 2 columns, got {len(tokens)}", i)
        positions.append(_parse_float(tokens[0], i, "position"))
        counts.append(_parse_float(tokens[1], i, "count"))
    try:
        return ScanCurve(
            which_hologram=meta["hologram"],
            axis=meta["axis"],
            fixed_other_position=(float(meta["fixed_dx"]), float(meta["fixed_dy"])),
            positions=np.asarray(positions),
            counts=np.asarray(counts),
            scanned_other=float(meta.get("scanned_other", "0.0")),
        )
    except KeyError as missing:
        raise ParseError(f"missing header field {missing}", 1) from None


# ------------------------------------------------- calibration parameters

def write_calibration_params(path, params: CalibrationParams,
                             per_curve_rms=None) -> None:
    parser = configparser.ConfigParser()
    parser["calibration"] = {name: _fmt(getattr(params, name))
                             for name in PARAM_NAMES}
    if per_curve_rms is not None:
        parser["residuals"] = {f"curve_{i}_rms": _fmt(v)
                               for i, v in enumerate(per_curve_rms)}
    with open(path, "w") as f:
        parser.write(f)


def read_calibration_params(path) -> CalibrationParams:
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ParseError(f"cannot read calibration file {path}")
    if "calibration" not in parser:
        raise ParseError("missing [calibration] section")
    section = parser["calibration"]
    try:
        return CalibrationParams(**{name: float(section[name])
                                    for name in PARAM_NAMES})
    except KeyError as missing:
        raise ParseError(f"missing calibration parameter {missing}") from None
    except ValueError as bad:
        raise ParseError(str(bad)) from None


# ---------------------------------------------------------- basis manifest

def write_basis_manifest(path, basis: EnlargedBasis) -> None:
    """Record everything needed to rebuild the basis bit-exactly:
    grid, scan parameters, and the ordered generator holograms."""
    parser = configparser.ConfigParser()
    parser["grid"] = {
        "half_extent": _fmt(basis.grid.half_extent),
        "samples_per_axis": str(basis.grid.samples_per_axis),
    }
    parser["scan"] = {
        "step": _fmt(basis.scan_step),
        "half_range": _fmt(basis.scan_half_range),
    }
    parser["generators"] = {
        f"g{i}": f"{g.charge} {_fmt(g.dx)} {_fmt(g.dy)}"
        for i, g in enumerate(basis.generators)
    }
    parser["quality"] = {"gram_residual": _fmt(gram_residual(basis))}
    with open(path, "w") as f:
        parser.write(f)


def read_basis_manifest(path) -> EnlargedBasis:
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ParseError(f"cannot read basis manifest {path}")
    try:
        grid = make_grid(float(parser["grid"]["half_extent"]),
                         int(parser["grid"]["samples_per_axis"]))
        generators = []
        section = parser["generators"]
        for key in sorted(section, key=lambda k: int(k[1:])):
            charge_s, dx_s, dy_s = section[key].split()
            generators.append(HologramSpec(int(charge_s), float(dx_s), float(dy_s)))
    except (KeyError, ValueError) as bad:
        raise ParseError(f"malformed basis manifest: {bad}") from None
    basis = rebuild_from_generators(grid, generators)
    if "scan" in parser:
        basis.scan_step = float(parser["scan"].get("step", DEFAULT_SCAN_STEP))
        basis.scan_half_range = float(
            parser["scan"].get("half_range", DEFAULT_SCAN_HALF_RANGE))
    return basis


# ------------------------------------------------------- transfer-scan data

def write_transfer_scan(path, scan: TransferScan) -> None:
    """Plot-ready columns: displacement, each inner projection, outer weight."""
    lines = [
        SCAN_HEADER,
        f"# charge: {scan.charge:+d}",
        f"# axis: {scan.axis}",
        "displacement\tp_fiber\tp_plus\tp_minus\touter_weight",
    ]
    for i, d in enumerate(scan.displacements):
        row = [_fmt(d)] + [_fmt(v) for v in scan.inner_projections[i]]
        row.append(_fmt(scan.outer_weight[i]))
        lines.append("\t".join(row))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_transfer_scan(path) -> TransferScan:
    meta = {}
    rows = []
    with open(path) as f:
        raw = f.read().splitlines()
    for i, line in enumerate(raw, start=1):
        if line.startswith("#"):
            if ":" in line:
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
            continue
        if not line.strip() or line.startswith("displacement"):
            continue
        tokens = line.split("\t")
        if len(tokens) != 5:
            raise ParseError(f"expected 5 columns, got {len(tokens)}", i)
        rows.append([_parse_float(t, i, "value") for t in tokens])
    data = np.asarray(rows)
    try:
        return TransferScan(
            charge=int(meta["charge"]),
            axis=meta["axis"],
            displacements=data[:, 0],
            inner_projections=data[:, 1:4],
            outer_weight=data[:, 4],
        )
    except KeyError as missing:
        raise ParseError(f"missing header field {missing}", 1) from None


# ----------------------------------------------------- reconstruction report

def _matrix_lines(m: np.ndarray) -> list[str]:
    return [" ".join(_fmt(v) for v in row) for row in m]


def _parse_matrix(lines, start, n, line_offset):
    rows = []
    for k in range(n):
        tokens = lines[start + k].split()
        if len(tokens) != n:
            raise ParseError(f"expected {n} matrix entries",
                             line_offset + start + k)
        rows.append([float(t) for t in tokens])
    return np.asarray(rows)


@dataclass
class ReconstructionReport:
    """Everything a Fig.-3-style presentation of one reconstruction needs."""

    options: ReconstructionOptions
    full_state: np.ndarray
    inner_state: np.ndarray
    discarded_probability: float
    eigenvalues: np.ndarray
    eigenvector_moduli: np.ndarray
    eigenvector_phases: np.ndarray
    purity: float
    degenerate: bool
    iterations: int
    converged: bool
    log_likelihood: float
    extremal_residual: float
    extremal_residual_relative: float
    regularization_events: int
    mean_flux_estimate: float
    poisson_residual: float
    setting_count: int
    completeness_rank_full: int
    completeness_rank_inner: int

    def render(self) -> str:
        out = io.StringIO()
        w = out.write
        w(REPORT_HEADER + "\n")
        w("[options]\n")
        w(f"dilution = {_fmt(self.options.dilution)}\n")
        w(f"max_iterations = {self.options.max_iterations}\n")
        w(f"log_likelihood_tolerance = {_fmt(self.options.log_likelihood_tolerance)}\n")
        w("[diagnostics]\n")
        w(f"settings = {self.setting_count}\n")
        w(f"iterations = {self.iterations}\n")
        w(f"converged = {self.converged}\n")
        w(f"log_likelihood = {_fmt(self.log_likelihood)}\n")
        w(f"extremal_residual = {_fmt(self.extremal_residual)}\n")
        w(f"extremal_residual_relative = {_fmt(self.extremal_residual_relative)}\n")
        w(f"regularization_events = {self.regularization_events}\n")
        w(f"mean_flux_estimate = {_fmt(self.mean_flux_estimate)}\n")
        w(f"poisson_residual = {_fmt(self.poisson_residual)}\n")
        w(f"completeness_rank_full = {self.completeness_rank_full}\n")
        w(f"completeness_rank_inner = {self.completeness_rank_inner}\n")
        dim = self.full_state.shape[0]
        w(f"[state full real] dim = {dim}\n")
        w("\n".join(_matrix_lines(self.full_state.real)) + "\n")
        w(f"[state full imag] dim = {dim}\n")
        w("\n".join(_matrix_lines(self.full_state.imag)) + "\n")
        w("[inner]\n")
        w(f"discarded_probability = {_fmt(self.discarded_probability)}\n")
        inner_dim = self.inner_state.shape[0]
        w(f"[state inner real] dim = {inner_dim}\n")
        w("\n".join(_matrix_lines(self.inner_state.real)) + "\n")
        w(f"[state inner imag] dim = {inner_dim}\n")
        w("\n".join(_matrix_lines(self.inner_state.imag)) + "\n")
        w("[eigenvalues inner]\n")
        w(" ".join(_fmt(v) for v in self.eigenvalues) + "\n")
        w("[max eigenvector inner polar]\n")
        for mod, ph in zip(self.eigenvector_moduli, self.eigenvector_phases):
            w(f"{_fmt(mod)} {_fmt(ph)}\n")
        w("[analysis]\n")
        w(f"purity = {_fmt(self.purity)}\n")
        w(f"degenerate = {self.degenerate}\n")
        return out.getvalue()


def write_report(path, report: ReconstructionReport) -> None:
    with open(path, "w") as f:
        f.write(report.render())


def read_report(path) -> ReconstructionReport:
    with open(path) as f:
        lines = f.read().splitlines()
    fields: dict = {}
    matrices: dict = {}
    polar: list = []
    eigenvalues = None
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith("[state"):
            name = line[1:line.index("]")]
            n = int(line.split("=")[1])
            matrices[name] = _parse_matrix(lines, i + 1, n, 1)
            i += n + 1
            continue
        if line.startswith("[eigenvalues"):
            eigenvalues = np.asarray([float(t) for t in lines[i + 1].split()])
            i += 2
            continue
        if line.startswith("[max eigenvector"):
            i += 1
            while i < len(lines) and not lines[i].startswith("["):
                mod_s, ph_s = lines[i].split()
                polar.append((float(mod_s), float(ph_s)))
                i += 1
            continue
        if "=" in line and not line.startswith("#") and not line.startswith("["):
            key, _, value = line.partition("=")
            fields[key.strip()] = value.strip()
        i += 1
    try:
        full = matrices["state full real"] + 1j * matrices["state full imag"]
        inner = matrices["state inner real"] + 1j * matrices["state inner imag"]
        moduli = np.asarray([m for m, _ in polar])
        phases = np.asarray([p for _, p in polar])
        return ReconstructionReport(
            options=ReconstructionOptions(
                max_iterations=int(fields["max_iterations"]),
                log_likelihood_tolerance=float(fields["log_likelihood_tolerance"]),
                dilution=float(fields["dilution"])),
            full_state=full,
            inner_state=inner,
            discarded_probability=float(fields["discarded_probability"]),
            eigenvalues=eigenvalues,
            eigenvector_moduli=moduli,
            eigenvector_phases=phases,
            purity=float(fields["purity"]),
            degenerate=fields["degenerate"] == "True",
            iterations=int(fields["iterations"]),
            converged=fields["converged"] == "True",
            log_likelihood=float(fields["log_likelihood"]),
            extremal_residual=float(fields["extremal_residual"]),
            extremal_residual_relative=float(fields["extremal_residual_relative"]),
            regularization_events=int(fields["regularization_events"]),
            mean_flux_estimate=float(fields["mean_flux_estimate"]),
            poisson_residual=float(fields["poisson_residual"]),
            setting_count=int(fields["settings"]),
            completeness_rank_full=int(fields["completeness_rank_full"]),
            completeness_rank_inner=int(fields["completeness_rank_inner"]),
        )
    except KeyError as missing:
        raise ParseError(f"missing report field {missing}") from None


# ------------------------------------------------------------ configuration

@dataclass
class CampaignConfig:
    """Pipeline configuration; mirrors the [sections] of the config file."""

    grid_half_extent: float = 4.0
    grid_samples: int = 257
    scan_step: float = DEFAULT_SCAN_STEP
    scan_half_range: float = DEFAULT_SCAN_HALF_RANGE
    setting_count: int = DEFAULT_SETTING_COUNT
    seed: int = DEFAULT_SEED
    mean_flux: float = DEFAULT_MEAN_FLUX
    preset: str | None = "two_mode"
    alice_amplitudes: tuple | None = None
    options: ReconstructionOptions = field(default_factory=ReconstructionOptions)
    output_dir: str = "."
    figures: bool = True

    def grid(self) -> Grid:
        return make_grid(self.grid_half_extent, self.grid_samples)

    def preparation(self) -> PreparationChoice:
        if self.alice_amplitudes is not None:
            return PreparationChoice.from_amplitudes(self.alice_amplitudes)
        targets = demo_target_states()
        if self.preset not in targets:
            raise InvalidArgumentError(
                f"unknown preparation preset {self.preset!r}; "
                f"choose from {sorted(targets)}")
        return preparation_for_target(targets[self.preset])


CONFIG_TEMPLATE = """\
# oamtomo pipeline configuration
# All lengths are in beam-width units; the beam width is the 1/e^2
# intensity radius of the fiber mode.

[grid]
# transverse grid: [-half_extent, half_extent]^2, samples^2 points
half_extent = 4.0
samples = 257

[basis]
# outer-mode transfer scan used to place the 8 extra basis vectors
scan_step = 0.05
scan_half_range = 3.0

[campaign]
# number of projection settings, campaign seed, and mean photon number
# per accumulation window
settings = 2400
seed = 7
flux = 500.0

[preparation]
# either a named target state for Bob ...
preset = two_mode
# ... or Alice's explicit amplitudes over (|0>, |+1>, |-1>), as three
# comma-separated complex numbers (normalized automatically), e.g.
# alice_amplitudes = 0.68+0j, -0.14+0j, 0.71+0j

[reconstruction]
dilution = 0.5
max_iterations = 5000
tolerance = 1e-9

[output]
directory = .
# also render figures next to the data files
figures = true
"""


def write_config_template(path) -> None:
    with open(path, "w") as f:
        f.write(CONFIG_TEMPLATE)


def read_config(path) -> CampaignConfig:
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ParseError(f"cannot read config file {path}")
    cfg = CampaignConfig()
    try:
        if "grid" in parser:
            cfg.grid_half_extent = parser["grid"].getfloat(
                "half_extent", cfg.grid_half_extent)
            cfg.grid_samples = parser["grid"].getint("samples", cfg.grid_samples)
        if "basis" in parser:
            cfg.scan_step = parser["basis"].getfloat("scan_step", cfg.scan_step)
            cfg.scan_half_range = parser["basis"].getfloat(
                "scan_half_range", cfg.scan_half_range)
        if "campaign" in parser:
            cfg.setting_count = parser["campaign"].getint(
                "settings", cfg.setting_count)
            cfg.seed = parser["campaign"].getint("seed", cfg.seed)
            cfg.mean_flux = parser["campaign"].getfloat("flux", cfg.mean_flux)
        if "preparation" in parser:
            section = parser["preparation"]
            if "alice_amplitudes" in section:
                tokens = [t.strip() for t in section["alice_amplitudes"].split(",")]
                cfg.alice_amplitudes = tuple(complex(t) for t in tokens)
                cfg.preset = None
            elif "preset" in section:
                cfg.preset = section["preset"]
        if "reconstruction" in parser:
            section = parser["reconstruction"]
            cfg.options = ReconstructionOptions(
                max_iterations=section.getint(
                    "max_iterations", cfg.options.max_iterations),
                log_likelihood_tolerance=section.getfloat(
                    "tolerance", cfg.options.log_likelihood_tolerance),
                dilution=section.getfloat("dilution", cfg.options.dilution))
        if "output" in parser:
            cfg.output_dir = parser["output"].get("directory", cfg.output_dir)
            cfg.figures = parser["output"].getboolean("figures", cfg.figures)
    except ValueError as bad:
        raise ParseError(f"malformed config value: {bad}") from None
    return cfg
