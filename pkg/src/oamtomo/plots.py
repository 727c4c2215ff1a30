"""Matplotlib renderings of scan curves, reconstructed states, and
calibration fits, written to image files next to the data files."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_INNER_LABELS = (r"$|0\rangle$", r"$|{+}1\rangle$", r"$|{-}1\rangle$")


def save_transfer_scan_figure(scan, path) -> None:
    """Inner projections (markers) and outer weight (solid line) versus
    hologram displacement."""
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    d = scan.displacements
    ax.plot(d, scan.inner_projections[:, 0], "*", ms=5, color="tab:blue",
            label=r"onto $|0\rangle$")
    charged = 1 if scan.charge > 0 else 2
    ax.plot(d, scan.inner_projections[:, charged], "d", ms=4,
            color="tab:orange",
            label=rf"onto $|{scan.charge:+d}\rangle$")
    other = 2 if scan.charge > 0 else 1
    ax.plot(d, scan.inner_projections[:, other], ".", ms=3, color="tab:green",
            label=rf"onto $|{-scan.charge:+d}\rangle$")
    ax.plot(d, scan.outer_weight, "-", color="black", lw=1.5,
            label="outer modes")
    ax.set_xlabel(f"hologram displacement along {scan.axis} (beam widths)")
    ax.set_ylabel("projection probability")
    ax.set_title(f"charge {scan.charge:+d} hologram acting on the fiber mode")
    ax.legend(loc="center right", fontsize=9)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _matrix_bars(ax, matrix, title):
    n = matrix.shape[0]
    xs, ys = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    xs, ys = xs.ravel(), ys.ravel()
    values = matrix.ravel()
    colors = np.where(values >= 0, "tab:blue", "tab:red")
    ax.bar3d(xs - 0.35, ys - 0.35, np.zeros_like(values),
             0.7, 0.7, values, color=colors, alpha=0.85, shade=True)
    ax.set_zlim(min(0.0, values.min()), max(0.5, values.max()))
    ax.set_title(title, fontsize=10)
    labels = _INNER_LABELS if n == 3 else [str(i) for i in range(n)]
    ax.set_xticks(range(n), labels=labels, fontsize=7)
    ax.set_yticks(range(n), labels=labels, fontsize=7)
    ax.tick_params(axis="z", labelsize=7)


def save_state_figure(inner_state: np.ndarray, path, suptitle=None) -> None:
    """Fig.-3-style bar plots: real part, imaginary part, and absolute
    values of the inner density matrix."""
    fig = plt.figure(figsize=(10.5, 3.8))
    panels = (("Re", inner_state.real), ("Im", inner_state.imag),
              ("Abs", np.abs(inner_state)))
    for i, (name, matrix) in enumerate(panels, start=1):
        ax = fig.add_subplot(1, 3, i, projection="3d")
        _matrix_bars(ax, matrix, rf"{name}$(\rho)$")
    if suptitle:
        fig.suptitle(suptitle, fontsize=11)
    fig.subplots_adjust(left=0.02, right=0.98, wspace=0.15)
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_calibration_figure(curves, fitted, grid, path) -> None:
    """Measured counts and fitted model for the four calibration scans."""
    from .calibration import model_curve

    fig, axes = plt.subplots(2, 2, figsize=(9, 6.5), sharey=True)
    for ax, curve in zip(axes.ravel(), curves):
        ax.plot(curve.positions, curve.counts, "o", ms=3, color="tab:gray",
                label="data")
        ax.plot(curve.positions, model_curve(fitted, curve, grid), "-",
                color="tab:red", lw=1.5, label="fit")
        ax.set_title(f"{curve.which_hologram} hologram, {curve.axis} scan",
                     fontsize=10)
        ax.grid(alpha=0.3)
    for ax in axes[1]:
        ax.set_xlabel("scan position (beam widths)")
    for ax in axes[:, 0]:
        ax.set_ylabel("coincidences")
    axes[0, 0].legend(fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
