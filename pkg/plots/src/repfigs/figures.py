"""Render the simulation sweep CSVs into publication-style figures.

Inputs are CSV files only; no physics is recomputed here.  Column layouts
must match the emitting CLI exactly and unknown columns are rejected, so a
schema drift on either side fails loudly instead of plotting nonsense.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

FIG2_COLUMNS = ("m", "contamination", "delta", "fidelity", "fidelity_se",
                "rate", "trials")
FIG3_COLUMNS = ("L_km", "rate_per_min", "n_opt", "m_opt", "p", "delta_gen",
                "delta_swap", "fidelity", "fidelity_se", "feasible")

KINDS = ("fidelity-rate", "rate-distance")


class SchemaError(ValueError):
    """CSV columns do not match the expected sweep layout."""


@dataclass(frozen=True)
class FigureSpec:
    input_csv: str
    output: str
    kind: str                   # fidelity-rate | rate-distance
    log_rate: bool = True       # rate-distance only

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")


def _style_path() -> str:
    return str(resources.files("repfigs").joinpath("repfigs.mplstyle"))


def read_rows(path: str, expected: tuple[str, ...]) -> list[dict[str, str]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("empty file: missing header row")
        for col in header:
            if col not in expected:
                raise SchemaError(f"unknown column '{col}'")
        for col in expected:
            if col not in header:
                raise SchemaError(f"missing column '{col}'")
        if list(header) != list(expected):
            raise SchemaError(f"column order mismatch: {header}")
        rows = [dict(zip(header, row)) for row in reader if row]
    if not rows:
        raise SchemaError("no data rows")
    return rows


def _save(fig, output: str) -> list[str]:
    """Write the figure in both a raster and a vector format."""
    out = Path(output)
    raster = {".png", ".jpg", ".jpeg"}
    companion = out.with_suffix(".pdf" if out.suffix in raster else ".png")
    fig.savefig(out)
    fig.savefig(companion)
    plt.close(fig)
    return [str(out), str(companion)]


def plot_fig2(spec: FigureSpec) -> list[str]:
    """Fidelity versus rate scatter, one series per contamination level.

    Clean inputs are drawn as filled dots, contaminated inputs as open
    circles, following the usual marker convention for this trade-off plot.
    """
    rows = read_rows(spec.input_csv, FIG2_COLUMNS)
    series: dict[float, list[tuple[float, float]]] = {}
    for row in rows:
        series.setdefault(float(row["contamination"]), []).append(
            (float(row["rate"]), float(row["fidelity"])))
    with plt.style.context(_style_path()):
        fig, ax = plt.subplots()
        markers = [("o", "full"), ("o", "none"), ("s", "full"), ("s", "none")]
        for idx, (cont, pts) in enumerate(sorted(series.items())):
            pts.sort()
            rates = [p[0] for p in pts]
            fids = [p[1] for p in pts]
            marker, fill = markers[idx % len(markers)]
            label = ("perfect inputs" if cont == 0.0
                     else f"{100.0 * cont:g}% two-photon admixture")
            ax.plot(rates, fids, linestyle="none", marker=marker,
                    fillstyle=fill, label=label)
        ax.set_xlabel("rate (per source period)")
        ax.set_ylabel("fidelity")
        ax.legend(loc="lower left")
        return _save(fig, spec.output)


def plot_fig3(spec: FigureSpec) -> list[str]:
    """Optimized rate versus distance with the chosen depth parameters.

    Left axis: rate per minute (log scale); right axis: step curves of the
    optimal segment-doubling level n and breeding depth m.  Infeasible rows
    are left off the curves and listed in a corner annotation.
    """
    rows = read_rows(spec.input_csv, FIG3_COLUMNS)
    feasible = [r for r in rows if r["feasible"] == "True"]
    infeasible = [r for r in rows if r["feasible"] != "True"]
    if not feasible:
        raise SchemaError("no feasible rows to plot")
    feasible.sort(key=lambda r: float(r["L_km"]))
    dist = [float(r["L_km"]) for r in feasible]
    rate = [float(r["rate_per_min"]) for r in feasible]
    n_opt = [int(r["n_opt"]) for r in feasible]
    m_opt = [int(r["m_opt"]) for r in feasible]
    with plt.style.context(_style_path()):
        fig, ax = plt.subplots()
        ax.plot(dist, rate, marker="o", color="C0", label="rate")
        if spec.log_rate:
            ax.set_yscale("log")
        ax.set_xlabel("distance (km)")
        ax.set_ylabel("rate (pairs/minute)")
        twin = ax.twinx()
        twin.step(dist, n_opt, where="mid", color="C1", label="optimal n")
        twin.step(dist, m_opt, where="mid", color="C2", linestyle="--",
                  label="optimal m")
        twin.set_ylabel("optimal n, m")
        twin.yaxis.get_major_locator().set_params(integer=True)
        lines = ax.get_lines() + twin.get_lines()
        ax.legend(lines, [ln.get_label() for ln in lines], loc="upper right")
        if infeasible:
            dropped = ", ".join(f"{float(r['L_km']):g}" for r in infeasible)
            ax.annotate(f"infeasible at L = {dropped} km", xy=(0.02, 0.04),
                        xycoords="axes fraction", fontsize=7, color="0.35")
        return _save(fig, spec.output)


def render(spec: FigureSpec) -> list[str]:
    if spec.kind == "fidelity-rate":
        return plot_fig2(spec)
    return plot_fig3(spec)
