"""Regenerate publication-style figures from sweep CSV files.

Input rows come from the simulator's sweep command; this package reads only
the CSV surface (no simulator import).  Two panel kinds are supported:
logical-error-plus-success overviews and X_L/Z_L decompositions with an
optional quadratic-fit overlay.  Rendering is deterministic for fixed
matplotlib versions (fixed hash salt, no embedded dates).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "injectplots"

import matplotlib.pyplot as plt

REQUIRED_COLUMNS = {
    "scheme", "model", "p", "p_cx", "dx2", "dz2", "shots",
    "success_rate", "success_sem", "eps_total", "eps_total_sem",
    "eps_xl", "eps_xl_sem", "eps_zl", "eps_zl_sem", "flags",
}

LINESTYLE = {"zz": "-", "standard": ":", "zzz": "-."}
PANELS = ("error-and-success", "decomposition")


class MissingColumnError(ValueError):
    pass


class EmptySeriesError(ValueError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    csv_paths: tuple
    panel: str
    out: str
    fmt: str = "svg"                 # svg or png
    fit_a: float | None = None       # quadratic coefficient in the p axis

    def __post_init__(self):
        if self.panel not in PANELS:
            raise ValueError(f"panel must be one of {PANELS}")
        if self.fmt not in ("svg", "png"):
            raise ValueError("format must be svg or png")


def load_rows(paths) -> list[dict]:
    rows = []
    for path in paths:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            missing = REQUIRED_COLUMNS - set(reader.fieldnames or ())
            if missing:
                raise MissingColumnError(
                    f"{path} lacks columns: {sorted(missing)}"
                )
            for row in reader:
                if row["flags"]:
                    continue            # rows without accepted trials
                rows.append(row)
    if not rows:
        raise EmptySeriesError("no plottable rows in the input CSVs")
    return rows


def series_key(row) -> tuple:
    return (row["scheme"], int(row["dx2"]), int(row["dz2"]))


def group_series(rows):
    series: dict = {}
    for row in rows:
        series.setdefault(series_key(row), []).append(row)
    for key in series:
        series[key].sort(key=lambda r: float(r["p_cx"]))
    return dict(sorted(series.items()))


def _f(rows, col):
    return [float(r[col]) for r in rows]


def _errorbar(ax, rows, ycol, label, style, log=True, sem_col=None):
    x = _f(rows, "p_cx")
    y = _f(rows, ycol)
    yerr = _f(rows, sem_col or ycol + "_sem")
    ax.errorbar(x, y, yerr=yerr, linestyle=style, marker="o", markersize=3,
                capsize=2, label=label)
    ax.set_xscale("log")
    if log:
        ax.set_yscale("log")
    ax.set_xlabel("$p_{CX}$")


def _overlay_quadratic(ax, rows, fit_a):
    """Dashed A p^2 curve drawn against the p_cx axis."""
    pts = sorted(
        {(float(r["p_cx"]), float(r["p"])) for r in rows}
    )
    x = [pcx for pcx, _ in pts]
    y = [fit_a * p * p for _, p in pts]
    ax.plot(x, y, "k--", linewidth=1, label=f"${fit_a:g}\\,p^2$")


def render(spec: FigureSpec) -> str:
    """Render the figure described by the spec; returns the output path."""
    rows = load_rows(spec.csv_paths)
    series = group_series(rows)
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    if spec.panel == "error-and-success":
        for (scheme, dx2, dz2), srows in series.items():
            style = LINESTYLE.get(scheme, "--")
            label = f"{scheme} {dx2}x{dz2}"
            _errorbar(axes[0], srows, "eps_total", label, style)
            _errorbar(axes[1], srows, "success_rate", label, style,
                      log=False, sem_col="success_sem")
        axes[0].set_ylabel("logical error rate")
        axes[1].set_ylabel("success rate")
    else:
        for (scheme, dx2, dz2), srows in series.items():
            style = LINESTYLE.get(scheme, "--")
            label = f"{scheme} {dx2}x{dz2}"
            _errorbar(axes[0], srows, "eps_xl", label, style)
            _errorbar(axes[1], srows, "eps_zl", label, style)
        axes[0].set_ylabel("$X_L$ error rate")
        axes[1].set_ylabel("$Z_L$ error rate")
        if spec.fit_a is not None:
            _overlay_quadratic(axes[1], rows, spec.fit_a)
    for ax in axes:
        ax.legend(fontsize=7)
    fig.tight_layout()
    metadata = {"Date": None} if spec.fmt == "svg" else {}
    fig.savefig(spec.out, format=spec.fmt, metadata=metadata)
    plt.close(fig)
    return spec.out
