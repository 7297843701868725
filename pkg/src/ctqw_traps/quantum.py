"""Coherent transport with traps: amplitudes, survival probabilities, RK4 oracle.

Survival of an excitation started at node j on the non-trap nodes is split as

    sum_{k not in M} |a_kj|^2 = sum_k |a_kj|^2 - sum_{m in M} |a_mj|^2,

with both pieces written as double sums over eigenmode pairs (l, l'). The
full-basis piece carries the overlap <Phi_l|Phi_l'> of right eigenvectors;
it collapses to sum_l exp(-2 gamma_l t) <j|Phi_l><~Phi_l|j> only when H is
normal, which a trapped H is not, so the overlap matrix is kept.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
from scipy.special import gamma as gamma_fn

from .curves import GridLike, Model, SurvivalCurve, as_times, default_grid
from .graph import HamiltonianSpec, TrapSet, quantum_hamiltonian
from .spectral import Spectrum, decompose, gamma_min


class InvalidConfigurationError(ValueError):
    pass


def _node(s_n: int, node: int) -> int:
    if not 1 <= node <= s_n:
        raise ValueError(f"node {node} outside 1..{s_n}")
    return node - 1


def _phases(s: Spectrum, t: np.ndarray) -> np.ndarray:
    """exp(-i E_l t) for every time (rows) and mode (columns)."""
    with np.errstate(under="ignore"):
        return np.exp(-1j * np.outer(t, s.eigenvalues))


def transition_amplitude(s: Spectrum, k: int, j: int, t):
    """<k| exp(-iHt) |j> = sum_l exp(-i E_l t) <k|Phi_l><~Phi_l|j>."""
    kk, jj = _node(s.n, k), _node(s.n, j)
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(tt < 0):
        raise ValueError("t must be >= 0")
    out = _phases(s, tt) @ (s.right[kk, :] * s.left[:, jj])
    return out if np.ndim(t) else complex(out[0])


def _kernel(s: Spectrum, starts: np.ndarray, traps: TrapSet) -> np.ndarray:
    """Pair table K with survival(t) = u^T K u*, u_l = exp(-i E_l t), summed over starts."""
    c = s.left[:, starts]
    d = c @ c.conj().T
    full = s.gram().T
    tr = s.right[traps.zero_based(), :]
    trap = tr.T @ tr.conj()
    return (full - trap) * d


def _evaluate(s: Spectrum, kernel: np.ndarray, t: np.ndarray) -> np.ndarray:
    u = _phases(s, t)
    return np.einsum("tl,lm,tm->t", u, kernel, u.conj()).real


def node_survival(s: Spectrum, j: int, traps: TrapSet | Iterable[int], t):
    """Probability that an excitation started at non-trap node j is still on a non-trap node."""
    traps = TrapSet.coerce(traps)
    traps.check(s.n)
    jj = _node(s.n, j)
    if j in traps:
        raise ValueError(f"start node {j} is a trap")
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    out = _evaluate(s, _kernel(s, np.array([jj]), traps), tt)
    return out if np.ndim(t) else float(out[0])


def _open_nodes(s: Spectrum, traps: TrapSet) -> np.ndarray:
    traps.check(s.n)
    keep = traps.open_nodes(s.n)
    if keep.size == 0:
        raise InvalidConfigurationError("every node is a trap; the mean survival is undefined")
    return keep


def mean_survival(
    s: Spectrum,
    traps: TrapSet | Iterable[int],
    grid: GridLike | None = None,
    meta: dict | None = None,
) -> SurvivalCurve:
    """Survival averaged over all non-trap start nodes."""
    traps = TrapSet.coerce(traps)
    keep = _open_nodes(s, traps)
    t = as_times(grid if grid is not None else default_grid(_safe_gamma_min(s)))
    values = _evaluate(s, _kernel(s, keep, traps), t) / keep.size
    return SurvivalCurve(t, values, Model.QUANTUM_EXACT, _meta(s, traps, meta))


def mean_survival_longtime(
    s: Spectrum,
    traps: TrapSet | Iterable[int],
    grid: GridLike | None = None,
    meta: dict | None = None,
) -> SurvivalCurve:
    """(N-M)^-1 sum_l exp(-2 gamma_l t): no oscillating or trap-overlap terms."""
    traps = TrapSet.coerce(traps)
    keep = _open_nodes(s, traps)
    t = as_times(grid if grid is not None else default_grid(_safe_gamma_min(s)))
    with np.errstate(under="ignore"):
        values = np.exp(-2.0 * np.outer(t, s.gamma)).sum(axis=1) / keep.size
    return SurvivalCurve(t, values, Model.QUANTUM_LONGTIME, _meta(s, traps, meta))


def powerlaw_model(
    a: float,
    mu: float,
    grid: GridLike,
    reference: SurvivalCurve | None = None,
) -> SurvivalCurve:
    """c * t**(-1/mu) for decay rates gamma_l = a * l**mu.

    Without a reference, c = Gamma(1 + 1/mu) * (2a)**(-1/mu), the value of the
    integral over a continuous rank. With a reference curve, c is chosen so the
    model matches it at the geometric midpoint of the grid.
    """
    if a <= 0 or mu <= 0:
        raise ValueError("a and mu must be positive")
    t = as_times(grid)
    if t[0] <= 0:
        raise ValueError("power-law model needs t > 0")
    shape = t ** (-1.0 / mu)
    if reference is None:
        c = gamma_fn(1.0 + 1.0 / mu) * (2.0 * a) ** (-1.0 / mu)
    else:
        mid = np.sqrt(t[0] * t[-1])
        ref = np.exp(np.interp(np.log(mid), np.log(reference.times), np.log(reference.values)))
        c = ref * mid ** (1.0 / mu)
    return SurvivalCurve(t, c * shape, Model.QUANTUM_POWERLAW, {"a": a, "mu": mu, "c": float(c)})


def _rk4_matrix(a: np.ndarray, h: float) -> np.ndarray:
    # one classical RK4 step for the linear system y' = a y, collected into a matrix
    ha = h * a
    eye = np.eye(a.shape[0], dtype=a.dtype)
    ha2 = ha @ ha
    return eye + ha + ha2 / 2 + ha2 @ ha / 6 + ha2 @ ha2 / 24


def integrate_linear(
    generator: np.ndarray,
    y0: np.ndarray,
    times: np.ndarray,
    step_scale: float = 0.01,
    max_steps: int = 50_000_000,
) -> np.ndarray:
    """Fixed-step RK4 for y' = generator @ y, sampled at ``times``.

    The step never exceeds ``step_scale / ||generator||_inf``; each grid
    interval is split into equal substeps so grid times are hit exactly.
    Returns an array of shape (len(times),) + y0.shape.
    """
    norm = float(np.linalg.norm(generator, ord=np.inf))
    h_max = step_scale / norm if norm > 0 else np.inf
    n_total = 0
    t_prev = 0.0
    y = np.array(y0, dtype=generator.dtype)
    out = np.empty((len(times),) + y.shape, dtype=y.dtype)
    for idx, t in enumerate(times):
        dt = t - t_prev
        if dt > 0:
            n_sub = int(np.ceil(dt / h_max)) if np.isfinite(h_max) else 1
            n_total += n_sub
            if n_total > max_steps:
                raise ValueError(
                    f"step-size underflow: grid up to t={times[-1]:g} needs more than "
                    f"{max_steps} RK4 steps of size <= {h_max:.3g}"
                )
            step = _rk4_matrix(generator, dt / n_sub)
            for _ in range(n_sub):
                y = step @ y
        out[idx] = y
        t_prev = t
    return out


def _starts(n: int, start: int | Sequence[int]) -> np.ndarray:
    nodes = [start] if np.isscalar(start) else list(start)
    return np.array([_node(n, int(j)) for j in nodes])


def propagate_oracle(
    h: np.ndarray,
    start: int | Sequence[int],
    grid: GridLike,
    traps: TrapSet | Iterable[int] = (),
    step_scale: float = 0.01,
) -> SurvivalCurve:
    """Integrate i dpsi/dt = H psi directly and report the weight off the traps.

    With several start nodes the result is averaged over them; with no traps
    it is the total norm.
    """
    h = np.asarray(h, dtype=complex)
    n = h.shape[0]
    traps = TrapSet.coerce(traps)
    traps.check(n)
    t = as_times(grid)
    cols = _starts(n, start)
    psi0 = np.zeros((n, len(cols)), dtype=complex)
    psi0[cols, np.arange(len(cols))] = 1.0
    psi = integrate_linear(-1j * h, psi0, t, step_scale)
    keep = traps.open_nodes(n)
    values = (np.abs(psi[:, keep, :]) ** 2).sum(axis=1).mean(axis=1)
    meta = {"N": n, "traps": list(traps), "start": [int(c) + 1 for c in cols]}
    return SurvivalCurve(t, values, Model.ORACLE, meta)


def _safe_gamma_min(s: Spectrum) -> float:
    return max(gamma_min(s), 0.0)


def _meta(s: Spectrum, traps: TrapSet, extra: dict | None) -> dict:
    meta = dict(s.meta)
    meta.setdefault("N", s.n)
    meta["traps"] = list(traps)
    meta["gamma_min"] = float(max(s.gamma.min(), 0.0))
    if extra:
        meta.update(extra)
    return meta


def spectrum_of(spec: HamiltonianSpec) -> Spectrum:
    return decompose(quantum_hamiltonian(spec), meta=spec.describe())


def survival_curve(
    spec: HamiltonianSpec,
    grid: GridLike | None = None,
    longtime: bool = False,
) -> SurvivalCurve:
    """Mean survival for a spec, with the spec's parameters carried in ``meta``."""
    s = spectrum_of(spec)
    fn = mean_survival_longtime if longtime else mean_survival
    return fn(s, spec.active_traps, grid)
