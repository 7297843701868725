"""Static SVG figures. No timestamps are embedded, so output is reproducible."""

from __future__ import annotations

import io
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import numpy as np
from matplotlib import rcParams
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

from .analysis import CollapseReport, FitResult
from .curves import SurvivalCurve
from .spectral import Spectrum, sort_by_decay

rcParams["svg.hashsalt"] = "ctqw-traps"
rcParams["svg.fonttype"] = "none"


def _render(fig: Figure) -> str:
    FigureCanvasSVG(fig)
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def spectrum_svg(s: Spectrum, fit: FitResult | None = None) -> str:
    s = sort_by_decay(s)
    ranks = np.arange(1, s.n + 1)
    fig = Figure(figsize=(6, 4.5))
    ax = fig.add_subplot()
    ax.plot(ranks, s.gamma, "k.", ms=4)
    ax.set_xlabel("l")
    ax.set_ylabel(r"$\gamma_l$")
    inset = ax.inset_axes([0.12, 0.5, 0.4, 0.42])
    pos = s.gamma > 0
    inset.loglog(ranks[pos], s.gamma[pos], "k.", ms=3)
    if fit is not None:
        lo, hi = fit.window
        x = np.arange(lo, hi + 1)
        inset.loglog(x, fit.prefactor * x**fit.exponent, "r--", lw=1,
                     label=f"$\\mu$ = {fit.exponent:.3f}")
        inset.legend(fontsize=7, frameon=False)
    return _render(fig)


def survival_svg(
    curves: Sequence[SurvivalCurve],
    labels: Sequence[str],
    fits: Sequence[tuple[FitResult, str]] = (),
    loglog: bool = True,
    xlabel: str = "t",
) -> str:
    fig = Figure(figsize=(6, 4.5))
    ax = fig.add_subplot()
    for c, label in zip(curves, labels):
        pos = c.values > 0
        ax.plot(c.times[pos], c.values[pos], lw=1.2, label=label)
    for fit, color in fits:
        lo, hi = fit.window
        x = np.geomspace(lo, hi, 50)
        if fit.kind == "power_law":
            y = fit.prefactor * x**fit.exponent
        else:
            y = fit.prefactor * np.exp(-fit.exponent * x)
        ax.plot(x, y, "--", color=color, lw=1.5)
    ax.set_yscale("log")
    if loglog:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("survival probability")
    if labels:
        ax.legend(fontsize=7, frameon=False)
    return _render(fig)


def collapse_svg(raw: Sequence[SurvivalCurve], report: CollapseReport) -> str:
    fig = Figure(figsize=(6, 4.5))
    ax = fig.add_subplot()
    for c in raw:
        pos = c.values > 0
        ax.loglog(c.times[pos], c.values[pos], lw=1, label=f"N={c.meta.get('N')}")
    ax.set_xlabel("t")
    ax.set_ylabel("survival probability")
    ax.legend(fontsize=6, frameon=False, loc="lower left")
    inset = ax.inset_axes([0.55, 0.55, 0.4, 0.4])
    for _, c in report.curves:
        pos = c.values > 0
        inset.loglog(c.times[pos], c.values[pos], lw=0.8)
    inset.axvspan(*report.window, color="0.9")
    inset.set_xlabel(f"t / N^(3-{report.mu_used:.3f})", fontsize=6)
    return _render(fig)
