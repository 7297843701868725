"""Command-line front end: spectrum, survival, classical, sweep, collapse, reproduce."""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import analysis, plotting
from .classical import classical_mean_survival, classical_spectrum
from .curves import TimeGrid, default_grid
from .graph import (
    DiagonalMode,
    HamiltonianSpec,
    TrapSet,
    _replace,
    build_chain,
    build_long_range_chain,
)
from .quantum import mean_survival, mean_survival_longtime, spectrum_of
from .spectral import gamma_min, sort_by_decay, verify

SUBCOMMANDS = ("spectrum", "survival", "classical", "sweep", "collapse", "reproduce")
FORMATS = ("csv", "json", "svg")
DEFAULT_GAMMAS = [0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0]
DEFAULT_NS = list(range(20, 101, 10))


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str = "reproduce"
    n: int = 100
    gamma: float = 1.0
    traps: list[int] | None = None
    diagonal: str = DiagonalMode.VERTEX_DEGREE.value
    coupling: str = "nearest"
    exponent: float = 3.0
    t_min: float | None = None
    t_max: float | None = None
    points: int = 200
    out: str = "out"
    format: list[str] = field(default_factory=lambda: list(FORMATS))
    threshold: float = 0.5
    gammas: list[float] = field(default_factory=lambda: list(DEFAULT_GAMMAS))
    ns: list[int] = field(default_factory=lambda: list(DEFAULT_NS))
    collapse_min_n: int = 40
    mu: float | None = None
    rank_lo: int | None = None
    rank_hi: int | None = None
    fit_lo: float | None = None
    fit_hi: float | None = None
    classical_lo: float | None = None
    classical_hi: float | None = None
    sweep_n: int = 50

    def validate(self) -> None:
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if self.n < 2:
            raise ConfigError("n must be >= 2")
        if self.gamma < 0:
            raise ConfigError("gamma must be >= 0")
        if self.gamma == 0 and self.subcommand in ("collapse", "reproduce"):
            raise ConfigError(f"{self.subcommand} needs gamma > 0")
        try:
            DiagonalMode(self.diagonal)
        except ValueError:
            raise ConfigError(f"diagonal must be one of {[m.value for m in DiagonalMode]}")
        if self.coupling not in ("nearest", "power_law"):
            raise ConfigError("coupling must be 'nearest' or 'power_law'")
        if self.coupling == "power_law" and self.exponent <= 1:
            raise ConfigError("power-law exponent must be > 1")
        if self.traps is not None:
            if len(set(self.traps)) != len(self.traps) or any(
                not 1 <= t <= self.n for t in self.traps
            ):
                raise ConfigError(f"traps must be distinct nodes in 1..{self.n}")
            if len(self.traps) >= self.n:
                raise ConfigError("at least one node must be trap-free")
        if self.t_min is not None and self.t_min <= 0:
            raise ConfigError("t_min must be > 0 (logarithmic grid)")
        if self.t_min is not None and self.t_max is not None and self.t_min >= self.t_max:
            raise ConfigError("t_min must be < t_max")
        if self.points < 5:
            raise ConfigError("points must be >= 5")
        bad = set(self.format) - set(FORMATS)
        if bad:
            raise ConfigError(f"unknown formats {sorted(bad)}")
        if not 0 < self.threshold < 1:
            raise ConfigError("threshold must lie in (0, 1)")
        if not self.gammas or any(g <= 0 for g in self.gammas):
            raise ConfigError("gammas must be a non-empty list of positive values")
        if len(self.ns) < 2 or len(set(self.ns)) != len(self.ns) or min(self.ns) < 2:
            raise ConfigError("ns needs at least two distinct sizes >= 2")
        if self.mu is not None and not 0 < self.mu < 3:
            raise ConfigError("mu must lie in (0, 3)")

    def spec(self, n: int | None = None, gamma: float | None = None) -> HamiltonianSpec:
        n = self.n if n is None else n
        gamma = self.gamma if gamma is None else gamma
        if self.coupling == "power_law":
            spec = build_long_range_chain(n, self.exponent, gamma)
            if spec.diagonal_mode.value != self.diagonal:
                spec = _replace(spec, diagonal_mode=DiagonalMode(self.diagonal))
        else:
            spec = build_chain(n, gamma, self.diagonal)
        if self.traps is not None and n == self.n:
            spec = _replace(spec, trap_nodes=TrapSet(tuple(self.traps)))
        return spec

    def grid(self, g_min: float) -> TimeGrid:
        base = default_grid(g_min, self.points)
        t_min = base.t_min if self.t_min is None else self.t_min
        t_max = base.t_max if self.t_max is None else self.t_max
        return TimeGrid.log(t_min, t_max, self.points)


class Output:
    """Writes artifacts atomically into one directory, honouring the format flags."""

    def __init__(self, directory: Path, formats: list[str]):
        self.dir = directory
        self.formats = set(formats)
        self.written: list[str] = []
        self.dir.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str, always: bool = False) -> None:
        kind = name.rsplit(".", 1)[-1]
        if not always and kind not in self.formats:
            return
        fd, tmp = tempfile.mkstemp(dir=self.dir, prefix=f".{name}.")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, self.dir / name)
        self.written.append(name)

    def json(self, name: str, doc: dict, always: bool = False) -> None:
        self.write(name, json.dumps(doc, indent=2, sort_keys=True) + "\n", always)

    def sub(self, name: str) -> Output:
        return Output(self.dir / name, sorted(self.formats))


def _fit_doc(fit: analysis.FitResult) -> dict:
    return json.loads(fit.to_json())


def run_spectrum(cfg: RunConfig, out: Output) -> dict:
    spec = cfg.spec()
    s = sort_by_decay(spectrum_of(spec))
    report = verify(s)
    summary = {
        "system": spec.describe(),
        "gamma_min": gamma_min(s),
        "mu": None,
        "a": None,
        "residuals": asdict(report),
        "solver": s.method,
    }
    fit = None
    try:
        fit = analysis.fit_spectral_exponent(s, cfg.rank_lo, cfg.rank_hi)
    except ValueError as exc:
        summary["spectral_fit"] = {"error": str(exc)}
    if fit is not None:
        lo, hi = fit.window
        summary.update(
            mu=fit.exponent,
            a=fit.prefactor,
            spectral_fit=_fit_doc(fit),
            gamma_at_window=[float(s.gamma[lo - 1]), float(s.gamma[hi - 1])],
        )
    out.write("spectrum.csv", s.to_csv())
    out.write("spectrum.svg", plotting.spectrum_svg(s, fit))
    out.json("spectrum.json", summary)
    return summary


def run_survival(cfg: RunConfig, out: Output) -> dict:
    spec = cfg.spec()
    s = spectrum_of(spec)
    g_min = gamma_min(s)
    grid = cfg.grid(g_min)
    exact = mean_survival(s, spec.active_traps, grid)
    approx = mean_survival_longtime(s, spec.active_traps, grid)
    out.write("survival.csv", exact.to_csv())
    out.write("survival_longtime.csv", approx.to_csv())
    out.write("survival.json", exact.to_json())
    summary: dict = {"system": spec.describe(), "gamma_min": g_min}
    fits = []
    if spec.trap_strength > 0:
        try:
            lo, hi = analysis.intermediate_window(spec.n_nodes, g_min)
            lo = cfg.fit_lo if cfg.fit_lo is not None else lo
            hi = cfg.fit_hi if cfg.fit_hi is not None else hi
            pl = analysis.fit_decay_exponent(exact, lo, hi)
            summary["power_law_fit"] = _fit_doc(pl)
            fits.append((pl, "tab:red"))
        except ValueError as exc:
            summary["power_law_fit"] = {"error": str(exc)}
        try:
            tail = analysis.fit_exponential_tail(exact)
            summary["tail_fit"] = _fit_doc(tail)
            fits.append((tail, "tab:blue"))
        except ValueError as exc:
            summary["tail_fit"] = {"error": str(exc)}
        try:
            summary["crossover_time"] = analysis.detect_crossover(exact)
        except ValueError as exc:
            summary["crossover_time"] = None
            summary["crossover_error"] = str(exc)
    curves, labels = [exact], ["quantum"]
    if cfg.subcommand == "reproduce":
        classical = classical_mean_survival(classical_spectrum(spec), spec.active_traps, grid)
        curves.append(classical)
        labels.append("classical")
    out.write("survival_loglog.svg", plotting.survival_svg(curves, labels, fits, loglog=True))
    out.write("survival_loglin.svg", plotting.survival_svg(curves, labels, fits, loglog=False))
    out.json("survival_summary.json", summary)
    return summary


def run_classical(cfg: RunConfig, out: Output) -> dict:
    spec = cfg.spec()
    cs = classical_spectrum(spec)
    slowest = float(cs.gamma.min())
    grid = cfg.grid(slowest / 2 if slowest > 0 else 0.0)
    curve = classical_mean_survival(cs, spec.active_traps, grid)
    out.write("classical.csv", curve.to_csv())
    out.write("classical.json", curve.to_json())
    summary: dict = {
        "system": spec.describe(),
        "slowest_rate": slowest,
        "conserving_at_zero_gamma": cs.meta["conserving_at_zero_gamma"],
    }
    lo = cfg.classical_lo if cfg.classical_lo is not None else float(spec.n_nodes)
    hi = cfg.classical_hi if cfg.classical_hi is not None else 50.0 * spec.n_nodes
    fits = []
    if spec.trap_strength > 0:
        try:
            exp_fit = analysis.fit_exponential_tail(curve, lo, hi)
            pl_fit = analysis.fit_decay_exponent(curve, lo, hi)
            summary["exponential_fit"] = _fit_doc(exp_fit)
            summary["power_law_fit"] = _fit_doc(pl_fit)
            fits.append((exp_fit, "tab:green"))
        except ValueError as exc:
            summary["fit_error"] = str(exc)
    out.write("classical.svg", plotting.survival_svg([curve], ["classical"], fits, loglog=False))
    out.json("classical_summary.json", summary)
    return summary


def run_sweep(cfg: RunConfig, out: Output, n: int | None = None) -> dict:
    n = cfg.n if n is None else n
    grid = TimeGrid.log(
        cfg.t_min if cfg.t_min is not None else 0.1,
        cfg.t_max if cfg.t_max is not None else 1e6,
        max(cfg.points, 400),
    )
    curves = analysis.sweep_curves(n, cfg.gammas, grid, cfg.diagonal)
    rows = [(g, analysis.time_to_threshold(c, cfg.threshold)) for g, c in zip(cfg.gammas, curves)]
    out.write("sweep.csv", analysis.sweep_to_csv(rows))
    for g, c in zip(cfg.gammas, curves):
        out.write(f"sweep_gamma_{g:g}.csv", c.to_csv())
    labels = [f"Gamma={g:g}" for g in cfg.gammas]
    out.write("sweep.svg", plotting.survival_svg(curves, labels, loglog=True))
    reached = [(t, g) for g, t in rows if t is not None]
    summary = {
        "N": n,
        "threshold": cfg.threshold,
        "times": [{"gamma": g, "t_threshold": t} for g, t in rows],
        "fastest_gamma": min(reached)[1] if reached else None,
    }
    out.json("sweep_summary.json", summary)
    return summary


def run_collapse(cfg: RunConfig, out: Output) -> dict:
    ns = sorted(cfg.ns)
    curves = []
    for n in ns:
        spec = cfg.spec(n=n)
        s = spectrum_of(spec)
        g_min = gamma_min(s)
        grid = TimeGrid.log(0.1, 10.0 / (2.0 * g_min), cfg.points) if g_min > 0 else cfg.grid(0)
        curves.append(mean_survival(s, spec.active_traps, grid))
    if cfg.mu is not None:
        mu = cfg.mu
    else:
        s_max = sort_by_decay(spectrum_of(cfg.spec(n=max(ns))))
        mu = analysis.fit_spectral_exponent(s_max).exponent
    members = [c for c in curves if c.meta["N"] >= cfg.collapse_min_n]
    report = analysis.collapse_curves(members, mu)
    for c in curves:
        out.write(f"collapse_N{c.meta['N']}.csv", c.to_csv())
    out.write("collapse.json", report.to_json())
    out.write("collapse.svg", plotting.collapse_svg(curves, report))
    summary = {
        "ns": ns,
        "collapse_ns": [n for n, _ in report.curves],
        "mu": mu,
        "dispersion": report.dispersion,
        "window": list(report.window),
    }
    out.json("collapse_summary.json", summary)
    return summary


def run_reproduce(cfg: RunConfig, out: Output) -> dict:
    spectrum = run_spectrum(cfg, out.sub("spectrum"))
    survival = run_survival(cfg, out.sub("survival"))
    cls = run_classical(cfg, out.sub("classical"))
    collapse = run_collapse(cfg, out.sub("collapse"))
    sweep = run_sweep(cfg, out.sub("sweep"), n=cfg.sweep_n)
    return {
        "gamma_min": spectrum["gamma_min"],
        "mu": spectrum["mu"],
        "a": spectrum["a"],
        "power_law_slope": survival.get("power_law_fit", {}).get("exponent"),
        "tail_rate": survival.get("tail_fit", {}).get("exponent"),
        "crossover_time": survival.get("crossover_time"),
        "classical_exponential_r2": cls.get("exponential_fit", {}).get("r_squared"),
        "collapse_dispersion": collapse["dispersion"],
        "sweep_fastest_gamma": sweep["fastest_gamma"],
    }


RUNNERS = {
    "spectrum": run_spectrum,
    "survival": run_survival,
    "classical": run_classical,
    "sweep": run_sweep,
    "collapse": run_collapse,
    "reproduce": run_reproduce,
}


def run(cfg: RunConfig) -> dict:
    cfg.validate()
    out = Output(Path(cfg.out), cfg.format)
    out.json("manifest.json", asdict(cfg), always=True)
    summary = RUNNERS[cfg.subcommand](cfg, out)
    out.json("summary.json", summary, always=True)
    return summary


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="ctqw-traps",
        description="Coherent (CTQW) vs incoherent (CTRW) exciton trapping on chains.",
    )
    p.add_argument("subcommand", nargs="?", choices=SUBCOMMANDS)
    p.add_argument("--config", help="JSON config file (a manifest.json works); flags override it")
    p.add_argument("--n", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--traps", help='comma-separated 1-based trap nodes (default "1,N")')
    p.add_argument("--diagonal", choices=[m.value for m in DiagonalMode])
    p.add_argument("--coupling", choices=("nearest", "power_law"))
    p.add_argument("--exponent", type=float)
    p.add_argument("--t-min", type=float, dest="t_min")
    p.add_argument("--t-max", type=float, dest="t_max")
    p.add_argument("--points", type=int)
    p.add_argument("--out")
    p.add_argument("--format", help="comma-separated subset of csv,json,svg")
    p.add_argument("--threshold", type=float)
    p.add_argument("--gammas", help="comma-separated trap strengths for sweep")
    p.add_argument("--ns", help="comma-separated chain lengths for collapse")
    p.add_argument("--mu", type=float, help="collapse exponent (default: fitted)")
    p.add_argument("--rank-lo", type=int, dest="rank_lo")
    p.add_argument("--rank-hi", type=int, dest="rank_hi")
    p.add_argument("--fit-lo", type=float, dest="fit_lo")
    p.add_argument("--fit-hi", type=float, dest="fit_hi")
    p.add_argument("--sweep-n", type=int, dest="sweep_n", help="chain length for the reproduce sweep")
    return p


def resolve_config(argv: list[str] | None = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    values: dict = {}
    if args.config:
        try:
            values.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    parsers = {
        "traps": _int_list,
        "format": lambda s: [x.strip() for x in s.split(",") if x.strip()],
        "gammas": _float_list,
        "ns": _int_list,
    }
    for name in known:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = parsers[name](v) if name in parsers else v
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc))


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = resolve_config(argv)
        cfg.validate()
    except (ConfigError, ValueError) as exc:
        print(json.dumps({"error": "invalid_config", "message": str(exc)}), file=sys.stderr)
        return 2
    try:
        summary = run(cfg)
    except Exception as exc:  # surface every failure as machine-readable JSON
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    print(json.dumps(summary, indent=2, sort_keys=True, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
