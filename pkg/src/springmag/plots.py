"""Figure rendering for the CLI report path (PNG files next to the tables)."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .model import MaterialStack
from .sweep import CriticalReport, SweepRecord


def _save(fig, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_profile_plot(records: list[SweepRecord] | None, theta_deg: np.ndarray,
                      stack: MaterialStack, path: Path, title: str = ""):
    """In-plane angle vs layer index for one equilibrium configuration."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(np.arange(1, len(theta_deg) + 1), theta_deg, "-", lw=1.2)
    ax.axvline(stack.n_hard + 0.5, color="gray", ls="--", lw=0.8, label="interface")
    ax.set_xlabel("layer $i$")
    ax.set_ylabel(r"$\theta_i$ (deg)")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    _save(fig, path)


def default_layers(stack: MaterialStack) -> list[int]:
    """A spread of 1-based layer indices around and above the interface."""
    n, nh = stack.n_layers, stack.n_hard
    picks = [nh - 20, nh, nh + 20, nh + 40, nh + 60, nh + 80, n]
    return sorted({min(max(1, p), n) for p in picks})


def save_hysteresis_plot(inc: list[SweepRecord], dec: list[SweepRecord] | None,
                         stack: MaterialStack, path: Path,
                         layers: list[int] | None = None):
    """theta_i vs theta_a loops for a selection of layers."""
    layers = layers or default_layers(stack)
    fig, ax = plt.subplots(figsize=(6, 5))
    for k in layers:
        t = [math.degrees(r.theta_a) for r in inc]
        y = [math.degrees(r.profile.theta[k - 1]) for r in inc]
        (line,) = ax.plot(t, y, "-", lw=1.0, label=f"i={k}")
        if dec:
            t = [math.degrees(r.theta_a) for r in dec]
            y = [math.degrees(r.profile.theta[k - 1]) for r in dec]
            ax.plot(t, y, "--", lw=1.0, color=line.get_color())
    ax.plot([0, 360], [0, 360], color="gray", lw=0.5)
    ax.set_xlabel(r"$\theta_a$ (deg)")
    ax.set_ylabel(r"$\theta_i$ (deg)")
    ax.legend(loc="best", fontsize=7)
    _save(fig, path)


def save_curve_plot(theta_a: np.ndarray, values: np.ndarray, branches: list[str],
                    ylabel: str, path: Path, degrees_y: bool = False):
    """Two-branch observable loop vs theta_a (torque or magnetization angle)."""
    fig, ax = plt.subplots(figsize=(6, 4))
    t = np.degrees(theta_a)
    arr = np.asarray(values, dtype=float)
    b = np.asarray(branches)
    for name, style in (("increasing", "-"), ("decreasing", "--")):
        sel = b == name
        if np.any(sel):
            y = np.degrees(arr[sel]) if degrees_y else arr[sel]
            ax.plot(t[sel], y, style, lw=1.0, label=name)
    ax.set_xlabel(r"$\theta_a$ (deg)")
    ax.set_ylabel(ylabel)
    ax.legend(loc="best", fontsize=8)
    _save(fig, path)


def save_critical_fields_plot(report: CriticalReport, path: Path):
    """Loop width vs H_a with the detected critical fields marked."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(report.H_samples, np.degrees(report.loop_widths), "o-", lw=1.0)
    for name, val in (("H_c1", report.H_c1), ("H_c2", report.H_c2),
                      ("H_c3", report.H_c3)):
        if val is not None:
            ax.axvline(val, ls="--", lw=0.8, label=f"{name} = {val:.0f} Oe")
    ax.set_xlabel(r"$H_a$ (Oe)")
    ax.set_ylabel("loop width (deg)")
    if report.H_c1 or report.H_c2 or report.H_c3:
        ax.legend(loc="best", fontsize=8)
    _save(fig, path)
