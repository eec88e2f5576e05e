"""SVG figures: contact distance series with hysteresis thresholds, and joint trajectories."""
from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .contact_analysis import read_timeline_csv  # noqa: E402
from .errors import FormatError  # noqa: E402
from .report import read_execution_csv  # noqa: E402


def _bands(ax, states, color):
    """Shade frame runs where the contact state is on."""
    s = np.asarray(states, dtype=bool)
    if not s.any():
        return
    edges = np.flatnonzero(np.diff(np.r_[0, s.astype(int), 0]))
    for a, b in zip(edges[::2], edges[1::2]):
        ax.axvspan(a - 0.5, b - 0.5, color=color, alpha=0.15, lw=0)


def plot_timeline(path, out, d_make: float = 0.005, d_break: float = 0.010, pairs=None, max_pairs: int = 8):
    """Distance per pair over frames, dashed d_make / d_break lines, shaded contact spans."""
    data = read_timeline_csv(path)
    keys = [k for k in data if pairs is None or f"{k[0]}-{k[1]}" in pairs]
    # pairs that ever come close are the interesting ones
    keys.sort(key=lambda k: (not any(data[k][1]), min((d for d in data[k][0] if d is not None), default=np.inf)))
    keys = keys[:max_pairs]
    if not keys:
        raise FormatError(f"{path}: no matching pairs to plot")
    fig, axes = plt.subplots(len(keys), 1, figsize=(8, 1.6 * len(keys) + 0.6), sharex=True, squeeze=False)
    for ax, key in zip(axes[:, 0], keys):
        dist, states = data[key]
        d = np.array([np.nan if v is None else v for v in dist])
        ax.plot(np.arange(len(d)), d, lw=1.0, color="C0")
        ax.axhline(d_make, ls="--", lw=0.8, color="C2", label="d_make")
        ax.axhline(d_break, ls="--", lw=0.8, color="C3", label="d_break")
        _bands(ax, states, "C1")
        top = np.nanmax(d) if np.isfinite(d).any() else d_break
        ax.set_ylim(0.0, min(max(4 * d_break, 1.1 * d_break), max(top, 2 * d_break)))
        ax.set_ylabel(f"{key[0]}\n{key[1]}", fontsize=7)
    axes[0, 0].legend(loc="upper right", fontsize=7)
    axes[-1, 0].set_xlabel("frame")
    fig.suptitle("pairwise distance [m], shaded = in contact", fontsize=9)
    fig.tight_layout()
    fig.savefig(out, format="svg")
    plt.close(fig)


def plot_joints(path, out):
    """Joint angles over time from an execution time series."""
    cols = read_execution_csv(path)
    t = np.asarray(cols["time_s"])
    names = [c for c in cols if c.startswith("q") and c[1:].isdigit()]
    if not names:
        raise FormatError(f"{path}: no joint columns")
    fig, ax = plt.subplots(figsize=(8, 3.5))
    for n in names:
        ax.plot(t, cols[n], lw=1.0, label=n)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("joint angle [rad]")
    ax.legend(fontsize=7, ncol=len(names))
    fig.tight_layout()
    fig.savefig(out, format="svg")
    plt.close(fig)


def plot_csv(path, out, **kw):
    """Pick the figure from the CSV header."""
    with open(path, newline="") as fh:
        header = next(csv.reader(fh), [])
    if header[:1] == ["frame"]:
        plot_timeline(path, out, **kw)
    elif header[:1] == ["time_s"]:
        plot_joints(path, out)
    else:
        raise FormatError(f"{path}: unrecognized CSV header {header[:3]!r}")
