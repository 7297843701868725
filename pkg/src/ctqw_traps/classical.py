"""Incoherent counterpart: master equation dp/dt = T p with trap losses."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .curves import GridLike, Model, SurvivalCurve, as_times, default_grid
from .graph import DiagonalMode, HamiltonianSpec, TrapSet, classical_transfer_matrix
from .quantum import InvalidConfigurationError, _node, _starts, integrate_linear
from .spectral import Spectrum, from_real_symmetric


def _spectrum(t_matrix) -> Spectrum:
    if isinstance(t_matrix, Spectrum):
        return t_matrix
    return from_real_symmetric(t_matrix)


def _propagators(s: Spectrum, t: np.ndarray) -> np.ndarray:
    # relaxation rates live in s.gamma; the eigenbasis is orthonormal and real
    v = s.right.real
    with np.errstate(under="ignore"):
        decay = np.exp(-np.outer(t, s.gamma))
    return np.einsum("kl,tl,jl->tkj", v, decay, v)


def classical_transition(t_matrix, k: int, j: int, t):
    """p_kj(t) = <k| exp(T t) |j>."""
    s = _spectrum(t_matrix)
    kk, jj = _node(s.n, k), _node(s.n, j)
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(tt < 0):
        raise ValueError("t must be >= 0")
    v = s.right.real
    with np.errstate(under="ignore"):
        out = np.exp(-np.outer(tt, s.gamma)) @ (v[kk, :] * v[jj, :])
    return out if np.ndim(t) else float(out[0])


def classical_mean_survival(
    t_matrix,
    traps: TrapSet | Iterable[int],
    grid: GridLike | None = None,
    meta: dict | None = None,
) -> SurvivalCurve:
    """P_M(t): probability on non-trap nodes, averaged over non-trap starts."""
    s = _spectrum(t_matrix)
    traps = TrapSet.coerce(traps)
    traps.check(s.n)
    keep = traps.open_nodes(s.n)
    if keep.size == 0:
        raise InvalidConfigurationError("every node is a trap; the mean survival is undefined")
    t = as_times(grid if grid is not None else default_grid(max(float(s.gamma.min()), 0.0)))
    # sum_{k,j in keep} p_kj(t) = sum_l exp(-r_l t) (sum_{k in keep} v_kl)^2
    w = s.right.real[keep, :].sum(axis=0) ** 2
    with np.errstate(under="ignore"):
        values = np.exp(-np.outer(t, s.gamma)) @ w / keep.size
    info = dict(s.meta)
    info.update({"N": s.n, "traps": list(traps)})
    if meta:
        info.update(meta)
    return SurvivalCurve(t, values, Model.CLASSICAL_EXACT, info)


def transition_matrices(t_matrix, grid: GridLike) -> np.ndarray:
    """Full p(t) matrices, shape (len(t), N, N)."""
    s = _spectrum(t_matrix)
    return _propagators(s, as_times(grid))


def master_equation_oracle(
    t_matrix: np.ndarray,
    start: int | Sequence[int],
    grid: GridLike,
    traps: TrapSet | Iterable[int] = (),
    step_scale: float = 0.01,
    return_states: bool = False,
):
    """RK4 integration of dp/dt = T p from delta-initial conditions.

    Reports probability off the traps (total probability without traps),
    averaged over the start nodes. ``return_states=True`` also returns the
    raw probability vectors, shape (len(t), N, n_starts).
    """
    t_matrix = np.asarray(t_matrix, dtype=float)
    n = t_matrix.shape[0]
    traps = TrapSet.coerce(traps)
    traps.check(n)
    t = as_times(grid)
    cols = _starts(n, start)
    p0 = np.zeros((n, len(cols)))
    p0[cols, np.arange(len(cols))] = 1.0
    p = integrate_linear(t_matrix, p0, t, step_scale)
    keep = traps.open_nodes(n)
    values = p[:, keep, :].sum(axis=1).mean(axis=1)
    meta = {"N": n, "traps": list(traps), "start": [int(c) + 1 for c in cols]}
    curve = SurvivalCurve(t, values, Model.ORACLE, meta)
    return (curve, p) if return_states else curve


def classical_spectrum(spec: HamiltonianSpec) -> Spectrum:
    meta = spec.describe()
    # only the degree diagonal gives a conserving generator at Gamma = 0
    meta["conserving_at_zero_gamma"] = spec.diagonal_mode is DiagonalMode.VERTEX_DEGREE
    return from_real_symmetric(classical_transfer_matrix(spec), meta=meta)


def classical_curve(spec: HamiltonianSpec, grid: GridLike | None = None) -> SurvivalCurve:
    return classical_mean_survival(classical_spectrum(spec), spec.active_traps, grid)
