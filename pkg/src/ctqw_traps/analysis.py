"""Fits and scaling analyses on spectra and survival curves."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .curves import GridLike, SurvivalCurve, TimeGrid, as_times
from .graph import DEFAULT_DIAGONAL, DiagonalMode, build_chain
from .quantum import mean_survival, spectrum_of
from .spectral import SortOrder, Spectrum, sort_by_decay


class NoCrossoverError(ValueError):
    pass


@dataclass(frozen=True)
class FitResult:
    exponent: float
    prefactor: float
    window: tuple[float, float]
    r_squared: float
    n_points: int
    kind: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass(frozen=True, eq=False)
class CollapseReport:
    curves: list[tuple[int, SurvivalCurve]]
    mu_used: float
    dispersion: float
    window: tuple[float, float]
    per_point: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))

    def to_json(self) -> str:
        return json.dumps(
            {
                "mu_used": self.mu_used,
                "dispersion": self.dispersion,
                "window": list(self.window),
                "N": [n for n, _ in self.curves],
            },
            sort_keys=True,
        )


def _line(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    if len(x) < 3:
        raise ValueError(f"need at least 3 points in the fit window, got {len(x)}")
    res = stats.linregress(x, y)
    resid = y - (res.intercept + res.slope * x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return float(res.slope), float(res.intercept), r2


def default_rank_window(n: int) -> tuple[int, int]:
    return max(2, n // 10), (6 * n) // 10


def intermediate_window(n: int, gamma_min: float | None = None) -> tuple[float, float]:
    """Power-law window [2N, 10N], cut at 0.1/(2 gamma_min) if that comes first."""
    hi = 10.0 * n
    if gamma_min and gamma_min > 0:
        hi = min(hi, 0.1 / (2.0 * gamma_min))
    lo = 2.0 * n
    if hi <= lo:
        raise ValueError(f"no intermediate window for N={n} (tail sets in before t={lo:g})")
    return lo, hi


def fit_spectral_exponent(
    s: Spectrum, l_lo: int | None = None, l_hi: int | None = None
) -> FitResult:
    """Fit gamma_l = a * l**mu on ranks l_lo..l_hi of the ascending decay rates."""
    if s.sort_order is not SortOrder.BY_GAMMA:
        s = sort_by_decay(s)
    d_lo, d_hi = default_rank_window(s.n)
    l_lo = d_lo if l_lo is None else l_lo
    l_hi = d_hi if l_hi is None else l_hi
    if not 1 <= l_lo < l_hi <= s.n:
        raise ValueError(f"invalid rank window {l_lo}..{l_hi} for N={s.n}")
    ranks = np.arange(l_lo, l_hi + 1)
    g = s.gamma[l_lo - 1 : l_hi]
    if np.any(g <= 0):
        raise ValueError("invalid window: non-positive decay rates")
    slope, icpt, r2 = _line(np.log(ranks), np.log(g))
    return FitResult(slope, math.exp(icpt), (l_lo, l_hi), r2, len(ranks), "spectral")


def _curve_window(curve: SurvivalCurve, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    if not lo < hi:
        raise ValueError("fit window needs lo < hi")
    t, v = curve.window(lo, hi)
    if np.any(v <= 0):
        raise ValueError("non-positive survival values in the fit window")
    return t, v


def _default_intermediate(curve: SurvivalCurve) -> tuple[float, float]:
    if "N" not in curve.meta:
        raise ValueError("curve has no N in meta; pass the window explicitly")
    return intermediate_window(int(curve.meta["N"]), curve.meta.get("gamma_min"))


def fit_decay_exponent(
    c: SurvivalCurve, t_lo: float | None = None, t_hi: float | None = None
) -> FitResult:
    """Log-log slope of the curve over [t_lo, t_hi]."""
    if t_lo is None or t_hi is None:
        d_lo, d_hi = _default_intermediate(c)
        t_lo = d_lo if t_lo is None else t_lo
        t_hi = d_hi if t_hi is None else t_hi
    t, v = _curve_window(c, t_lo, t_hi)
    slope, icpt, r2 = _line(np.log(t), np.log(v))
    return FitResult(slope, math.exp(icpt), (t_lo, t_hi), r2, len(t), "power_law")


def fit_exponential_tail(
    c: SurvivalCurve, t_lo: float | None = None, t_hi: float | None = None
) -> FitResult:
    """Decay rate r of value ~ A exp(-r t) over [t_lo, t_hi]; ``exponent`` is r."""
    if t_lo is None or t_hi is None:
        g = c.meta.get("gamma_min")
        if not g:
            raise ValueError("curve has no gamma_min in meta; pass the window explicitly")
        t_lo = 2.0 / g if t_lo is None else t_lo
        t_hi = 10.0 / g if t_hi is None else t_hi
    t, v = _curve_window(c, t_lo, t_hi)
    slope, icpt, r2 = _line(t, np.log(v))
    return FitResult(-slope, math.exp(icpt), (t_lo, t_hi), r2, len(t), "exponential")


def _uniform_log(curve: SurvivalCurve) -> tuple[np.ndarray, np.ndarray]:
    sel = (curve.times > 0) & (curve.values > 0)
    x = np.log(curve.times[sel])
    y = np.log(curve.values[sel])
    steps = np.diff(x)
    if len(steps) and not np.allclose(steps, steps[0], rtol=1e-6):
        xu = np.linspace(x[0], x[-1], len(x))
        y = np.interp(xu, x, y)
        x = xu
    return x, y


def running_slope(curve: SurvivalCurve) -> tuple[np.ndarray, np.ndarray]:
    """d log(value) / d log(t) by the 5-point central difference; returns (t, slope)."""
    x, y = _uniform_log(curve)
    if len(x) < 5:
        raise ValueError("need at least 5 positive points for a running slope")
    h = x[1] - x[0]
    s = (-y[4:] + 8 * y[3:-1] - 8 * y[1:-3] + y[:-4]) / (12 * h)
    return np.exp(x[2:-2]), s


def detect_crossover(
    c: SurvivalCurve,
    plateau_window: tuple[float, float] | None = None,
    tolerance: float = 0.1,
) -> float:
    """First time the running log-log slope comes within ``tolerance`` of the plateau.

    The plateau is the median running slope over ``plateau_window`` (default:
    the intermediate window of the curve's N). Scanning runs upward from the
    shortest time; the returned time is interpolated in log t to the band edge.
    """
    lo, hi = plateau_window if plateau_window is not None else _default_intermediate(c)
    t, s = running_slope(c)
    in_window = (t >= lo) & (t <= hi)
    if not np.any(in_window):
        raise NoCrossoverError("curve does not reach the plateau window")
    plateau = float(np.median(s[in_window]))
    band = tolerance * abs(plateau)
    dev = np.abs(s - plateau)
    inside = np.flatnonzero((dev <= band) & (t <= hi))
    if inside.size == 0:
        raise NoCrossoverError("running slope never approaches the plateau")
    i = int(inside[0])
    if i == 0:
        raise NoCrossoverError("slope is on the plateau from the start: no short-time regime")
    d0, d1 = dev[i - 1] - band, dev[i] - band
    frac = d0 / (d0 - d1) if d0 != d1 else 1.0
    return float(np.exp(np.log(t[i - 1]) + frac * (np.log(t[i]) - np.log(t[i - 1]))))


def collapse_curves(
    curves: Sequence[SurvivalCurve],
    mu: float,
    window: tuple[float, float] | None = None,
    n_samples: int = 64,
) -> CollapseReport:
    """Rescale t -> t / N**(3 - mu) and measure how far the curves sit apart.

    Dispersion is max over the common window of (max - min) / mean across
    curves. Without an explicit window (in rescaled time) the common window is
    the overlap of every curve's rescaled intermediate window.
    """
    if not curves:
        raise ValueError("need at least one curve")
    ns = [int(c.meta["N"]) for c in curves]
    if len(set(ns)) != len(ns):
        raise ValueError(f"curves must have distinct N, got {ns}")
    if len({c.model for c in curves}) != 1:
        raise ValueError("curves must come from the same model")
    gammas = {c.meta.get("gamma") for c in curves}
    if len(gammas) != 1:
        raise ValueError(f"curves must share Gamma, got {sorted(map(str, gammas))}")

    order = np.argsort(ns)
    scaled: list[tuple[int, SurvivalCurve]] = []
    los, his = [], []
    for idx in order:
        c, n = curves[idx], ns[idx]
        f = float(n) ** (3.0 - mu)
        meta = dict(c.meta, rescaled_by=f"t/N^(3-{mu:g})")
        scaled.append((n, SurvivalCurve(c.times / f, c.values, c.model, meta)))
        if window is None:
            w_lo, w_hi = intermediate_window(n, c.meta.get("gamma_min"))
            los.append(w_lo / f)
            his.append(w_hi / f)
    lo, hi = window if window is not None else (max(los), min(his))
    if not lo < hi:
        raise ValueError(f"rescaled windows do not overlap ({lo:.4g} >= {hi:.4g})")

    tau = np.geomspace(lo, hi, n_samples)
    ys = []
    for _, c in scaled:
        if c.times[0] > lo or c.times[-1] < hi:
            raise ValueError("a curve does not cover the common window")
        pos = c.values > 0
        ys.append(np.exp(np.interp(np.log(tau), np.log(c.times[pos]), np.log(c.values[pos]))))
    y = np.array(ys)
    spread = (y.max(axis=0) - y.min(axis=0)) / y.mean(axis=0)
    return CollapseReport(scaled, float(mu), float(spread.max()), (float(lo), float(hi)), spread)


def time_to_threshold(c: SurvivalCurve, threshold: float) -> float | None:
    """First time the curve drops below ``threshold``, interpolated in log t."""
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie strictly between 0 and 1")
    below = np.flatnonzero(c.values < threshold)
    if below.size == 0:
        return None
    i = int(below[0])
    if i == 0:
        return float(c.times[0])
    t0, t1 = c.times[i - 1], c.times[i]
    v0, v1 = c.values[i - 1], c.values[i]
    frac = (v0 - threshold) / (v0 - v1)
    if t0 <= 0:
        return float(t0 + frac * (t1 - t0))
    return float(np.exp(np.log(t0) + frac * (np.log(t1) - np.log(t0))))


SWEEP_GRID = TimeGrid.log(0.1, 1e6, 400)


def sweep_curves(
    n: int,
    gammas: Iterable[float],
    grid: GridLike | None = None,
    diagonal_mode: DiagonalMode | str = DEFAULT_DIAGONAL,
) -> list[SurvivalCurve]:
    t = as_times(grid if grid is not None else SWEEP_GRID)
    return [
        mean_survival(spectrum_of(build_chain(n, g, diagonal_mode)), (1, n), t)
        for g in gammas
    ]


def gamma_sweep(
    n: int,
    gammas: Iterable[float],
    threshold: float,
    grid: GridLike | None = None,
    diagonal_mode: DiagonalMode | str = DEFAULT_DIAGONAL,
) -> list[tuple[float, float | None]]:
    """Time for the mean survival to fall below ``threshold``, per trap strength.

    ``None`` marks a trap strength whose curve never reaches the threshold.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie strictly between 0 and 1")
    gammas = [float(g) for g in gammas]
    if any(g <= 0 for g in gammas):
        raise ValueError("trap strengths must be positive")
    curves = sweep_curves(n, gammas, grid, diagonal_mode)
    return [(g, time_to_threshold(c, threshold)) for g, c in zip(gammas, curves)]


def sweep_to_csv(rows: Sequence[tuple[float, float | None]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gamma", "t_threshold"])
    for g, t in rows:
        w.writerow([f"{g:.17g}", "" if t is None else f"{t:.17g}"])
    return buf.getvalue()


def fit_prefactor_scaling(
    ns: Sequence[int],
    gamma: float = 1.0,
    diagonal_mode: DiagonalMode | str = DEFAULT_DIAGONAL,
) -> tuple[FitResult, list[FitResult]]:
    """Fit log a against log N, with a from the default-window spectral fit at each N."""
    fits = [
        fit_spectral_exponent(sort_by_decay(spectrum_of(build_chain(n, gamma, diagonal_mode))))
        for n in ns
    ]
    slope, icpt, r2 = _line(np.log(np.asarray(ns, float)), np.log([f.prefactor for f in fits]))
    return FitResult(slope, math.exp(icpt), (min(ns), max(ns)), r2, len(ns), "prefactor"), fits


PHYSICAL_TIME_RULE = "t_us = t / (2*pi*coupling_MHz); coupling read as an ordinary frequency"


def physical_time(t_dimensionless: float, coupling_megahertz: float) -> float:
    """Dimensionless time (units of hbar/coupling) to microseconds."""
    if coupling_megahertz <= 0:
        raise ValueError("coupling must be positive")
    return t_dimensionless / (2.0 * math.pi * coupling_megahertz)
