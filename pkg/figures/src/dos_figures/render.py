"""Plot sweep CSV outputs: utility curves, share curves, Schelling diagrams.

The tables are consumed as produced by the dos-lab command line:
``curves.csv`` holds one row per (run, sharer count, iteration) and
``schelling.csv`` one pre-aggregated row per (sharer count, role). The
curve plots show the across-run mean per sharer count with a shaded
0.95 normal-approximation confidence band; the Schelling plot draws the
stored intervals and defaults to a logarithmic utility axis.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

CURVE_COLUMNS = ("domain", "n", "run", "k_sharers", "iteration", "global_utility", "mean_share")
SCHELLING_COLUMNS = ("domain", "n", "k_sharers", "role", "mean_utility", "ci_lo", "ci_hi")

KINDS = ("curves", "shares", "schelling")


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: what to draw, from where, to which file."""

    kind: str
    in_dir: str
    out_path: str
    log_y: bool | None = None  # None picks the kind's default (log for schelling)

    @property
    def use_log_y(self) -> bool:
        if self.log_y is None:
            return self.kind == "schelling"
        return self.log_y


def load_table(path: str, required: tuple[str, ...]) -> pd.DataFrame:
    frame = pd.read_csv(path)
    missing = [column for column in required if column not in frame.columns]
    if missing:
        raise ValueError(f"{os.path.basename(path)} is missing columns: {', '.join(missing)}")
    return frame


def curve_bands(frame: pd.DataFrame, value_column: str) -> pd.DataFrame:
    """Across-run mean and 0.95 band per (sharer count, iteration)."""
    grouped = frame.groupby(["k_sharers", "iteration"])[value_column].agg(["mean", "std", "count"])
    half = 1.96 * grouped["std"].fillna(0.0) / np.sqrt(grouped["count"])
    return pd.DataFrame({"mean": grouped["mean"], "lo": grouped["mean"] - half,
                         "hi": grouped["mean"] + half}).reset_index()


def _title(frame: pd.DataFrame, what: str) -> str:
    domain = frame["domain"].iloc[0]
    n = frame["n"].iloc[0]
    return f"{what} ({domain} market, {n} agents)"


def _plot_curves(frame: pd.DataFrame, value_column: str, label: str, ax) -> None:
    bands = curve_bands(frame, value_column)
    counts = sorted(bands["k_sharers"].unique())
    colors = plt.cm.viridis(np.linspace(0.0, 0.9, len(counts)))
    for color, k in zip(colors, counts):
        rows = bands[bands["k_sharers"] == k].sort_values("iteration")
        ax.plot(rows["iteration"], rows["mean"], color=color, label=f"{k} sharers")
        ax.fill_between(rows["iteration"], rows["lo"], rows["hi"], color=color, alpha=0.25, lw=0)
    ax.set_xlabel("iteration")
    ax.set_ylabel(label)
    ax.legend(fontsize="small", ncol=2)


def _plot_schelling(frame: pd.DataFrame, ax) -> None:
    styles = {"sharer": dict(color="tab:blue", marker="o"), "defector": dict(color="tab:red", marker="s")}
    for role in ("sharer", "defector"):
        rows = frame[frame["role"] == role].sort_values("k_sharers")
        if rows.empty:
            continue
        ax.plot(rows["k_sharers"], rows["mean_utility"], label=role, **styles[role])
        ax.fill_between(rows["k_sharers"], rows["ci_lo"], rows["ci_hi"],
                        color=styles[role]["color"], alpha=0.2, lw=0)
    ax.set_xlabel("number of sharing agents")
    ax.set_ylabel("mean individual utility")
    ax.legend()


def render(spec: FigureSpec):
    """Draw the requested figure, write it to ``spec.out_path``, return it."""
    if spec.kind not in KINDS:
        raise ValueError(f"unknown figure kind: {spec.kind!r} (expected one of {KINDS})")

    figure, ax = plt.subplots(figsize=(6.4, 4.2), constrained_layout=True)
    try:
        if spec.kind in ("curves", "shares"):
            frame = load_table(os.path.join(spec.in_dir, "curves.csv"), CURVE_COLUMNS)
            if spec.kind == "curves":
                _plot_curves(frame, "global_utility", "global utility", ax)
                ax.set_title(_title(frame, "Global utility"))
            else:
                _plot_curves(frame, "mean_share", "mean individual share", ax)
                ax.set_title(_title(frame, "Mean shares"))
        else:
            frame = load_table(os.path.join(spec.in_dir, "schelling.csv"), SCHELLING_COLUMNS)
            _plot_schelling(frame, ax)
            ax.set_title(_title(frame, "Schelling diagram"))
        if spec.use_log_y:
            ax.set_yscale("log")
        figure.savefig(spec.out_path)
    except Exception:
        plt.close(figure)
        raise
    return figure
