"""Biorthonormal eigendecomposition of complex-symmetric, non-Hermitian matrices.

Eigenvalues are stored as E_l = epsilon_l - i*gamma_l, so a decaying mode has
gamma_l > 0. Right eigenvectors are the columns of ``right``; the rows of
``left`` are the dual (bra) coefficients <~Phi_l|k>, with ``left @ right = 1``.
For a complex-symmetric H the bra of mode l is the plain transpose of its right
vector; the corresponding left ket is the complex conjugate of the right ket.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg


class SortOrder(str, Enum):
    BY_GAMMA = "by_gamma_ascending"
    BY_EPSILON = "by_epsilon_ascending"
    UNSORTED = "unsorted"


class ExceptionalPointError(np.linalg.LinAlgError):
    """H is (numerically) defective: eigenvectors have coalesced."""

    def __init__(self, message: str, indices: tuple[int, ...] = ()):
        super().__init__(message)
        self.indices = indices


class SignConventionError(ValueError):
    pass


SYMMETRY_TOL = 1e-12
CLUSTER_RTOL = 1e-8
# cluster Gram matrices worse conditioned than this are treated as defective
GRAM_COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    matrix: np.ndarray
    biorthonormality_residual: float
    completeness_residual: float
    sort_order: SortOrder = SortOrder.UNSORTED
    method: str = "complex_symmetric"
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("eigenvalues", "right", "left", "matrix"):
            a = np.array(getattr(self, name), dtype=complex)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    @property
    def epsilon(self) -> np.ndarray:
        return self.eigenvalues.real

    @property
    def gamma(self) -> np.ndarray:
        return -self.eigenvalues.imag

    def gram(self) -> np.ndarray:
        """Overlaps <Phi_l|Phi_l'> of the right vectors (identity only for normal H)."""
        return self.right.conj().T @ self.right

    def to_csv(self) -> str:
        """Rows ranked by ascending gamma; columns l, epsilon, gamma."""
        s = self if self.sort_order is SortOrder.BY_GAMMA else sort_by_decay(self)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["l", "epsilon", "gamma"])
        for l, (e, g) in enumerate(zip(s.epsilon, s.gamma), start=1):
            w.writerow([l, f"{e:.17g}", f"{g:.17g}"])
        return buf.getvalue()


@dataclass(frozen=True)
class VerifyReport:
    biorthonormality: float
    completeness: float
    reconstruction: float
    tolerance: float

    @property
    def failures(self) -> list[str]:
        return [
            name
            for name in ("biorthonormality", "completeness", "reconstruction")
            if not getattr(self, name) <= self.tolerance
        ]

    @property
    def passed(self) -> bool:
        return not self.failures


def _residuals(right: np.ndarray, left: np.ndarray) -> tuple[float, float]:
    eye = np.eye(right.shape[0])
    return (
        float(np.max(np.abs(left @ right - eye), initial=0.0)),
        float(np.max(np.abs(right @ left - eye), initial=0.0)),
    )


def _clusters(w: np.ndarray, scale: float) -> list[np.ndarray]:
    """Group eigenvalue indices whose mutual distance chains below the cutoff."""
    n = len(w)
    cut = CLUSTER_RTOL * max(scale, 1.0)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    order = np.argsort(w.real)
    for a in range(n):
        i = order[a]
        for b in range(a + 1, n):
            j = order[b]
            if w[j].real - w[i].real > cut:
                break
            if abs(w[i] - w[j]) <= cut:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [np.array(sorted(g)) for g in groups.values()]


def _closest_pair(w: np.ndarray) -> tuple[int, int]:
    if len(w) < 2:
        return (0, 0)
    d = np.abs(w[:, None] - w[None, :])
    np.fill_diagonal(d, np.inf)
    i, j = np.unravel_index(np.argmin(d), d.shape)
    return (int(min(i, j)), int(max(i, j)))


def _symmetric_normalize(w: np.ndarray, v: np.ndarray, scale: float) -> np.ndarray:
    """Rescale/mix right vectors so that V^T V = 1 (bilinear, unconjugated).

    Within each near-degenerate cluster C the block is replaced by
    V_C (V_C^T V_C)^(-1/2); the principal square root of a complex-symmetric
    matrix is complex symmetric, so the result is bilinear-orthonormal.
    """
    v = v.copy()
    for idx in _clusters(w, scale):
        block = v[:, idx]
        g = block.T @ block
        if len(idx) == 1:
            if abs(g[0, 0]) < 1.0 / GRAM_COND_LIMIT:
                raise ExceptionalPointError(
                    f"eigenvector {idx[0]} is self-orthogonal (exceptional point)",
                    (int(idx[0]),),
                )
            v[:, idx] = block / np.sqrt(g[0, 0])
            continue
        if np.linalg.cond(g) > GRAM_COND_LIMIT:
            raise ExceptionalPointError(
                f"eigenvalues {tuple(int(i) for i in idx)} coalesce: "
                f"singular cluster Gram matrix (exceptional point)",
                tuple(int(i) for i in idx),
            )
        v[:, idx] = block @ np.linalg.inv(scipy.linalg.sqrtm(g))
    return v


def _left_solve(h: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Independent left/right solve, bras rescaled to <~Phi_l|Phi_l> = 1."""
    w, vl, vr = scipy.linalg.eig(h, left=True, right=True)
    bras = vl.conj().T
    norms = np.einsum("li,il->l", bras, vr)
    if np.any(np.abs(norms) < 1.0 / GRAM_COND_LIMIT):
        i = int(np.argmin(np.abs(norms)))
        raise ExceptionalPointError(
            f"left and right eigenvectors of mode {i} are orthogonal (exceptional point)",
            (i,),
        )
    return w, vr, bras / norms[:, None]


def decompose(h: np.ndarray, tol: float = 1e-8, meta: dict | None = None) -> Spectrum:
    """All eigenpairs of a complex-symmetric matrix with biorthonormal bras.

    Raises ``ExceptionalPointError`` if the matrix is defective to working
    precision (completeness cannot be reached within ``tol``).
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("H must be square")
    if np.max(np.abs(h - h.T), initial=0.0) > SYMMETRY_TOL:
        raise ValueError("H must equal its transpose (complex symmetric)")
    scale = float(np.linalg.norm(h, ord=np.inf)) if h.size else 0.0

    w, v = np.linalg.eig(h)
    method = "complex_symmetric"
    try:
        right = _symmetric_normalize(w, v, scale)
        left = right.T.copy()
        bi, comp = _residuals(right, left)
    except ExceptionalPointError:
        bi = comp = np.inf
    if not (bi <= tol and comp <= tol):
        method = "left_solve"
        w, right, left = _left_solve(h)
        bi, comp = _residuals(right, left)
        if not (bi <= tol and comp <= tol):
            pair = _closest_pair(w)
            raise ExceptionalPointError(
                f"eigenbasis incomplete (residual {comp:.3g}); eigenvalues {pair} "
                f"= {w[pair[0]]:.6g}, {w[pair[1]]:.6g} nearly coalesce",
                pair,
            )
    return Spectrum(w, right, left, h, bi, comp, SortOrder.UNSORTED, method, dict(meta or {}))


def from_real_symmetric(t: np.ndarray, meta: dict | None = None) -> Spectrum:
    """Spectrum of the generator i*T for real symmetric T.

    exp(T t) = exp(-i (iT) t), so each relaxation rate -lambda of T shows up as
    gamma with epsilon = 0; the eigenbasis is orthonormal.
    """
    t = np.asarray(t, dtype=float)
    if np.max(np.abs(t - t.T), initial=0.0) > SYMMETRY_TOL:
        raise ValueError("T must be symmetric")
    lam, vec = np.linalg.eigh(t)
    right = vec.astype(complex)
    left = vec.T.astype(complex)
    bi, comp = _residuals(right, left)
    return Spectrum(1j * lam, right, left, 1j * t, bi, comp, SortOrder.UNSORTED,
                    "real_symmetric", dict(meta or {}))


def _reordered(s: Spectrum, order: np.ndarray, sort_order: SortOrder) -> Spectrum:
    return Spectrum(
        s.eigenvalues[order], s.right[:, order], s.left[order, :], s.matrix,
        s.biorthonormality_residual, s.completeness_residual, sort_order,
        s.method, dict(s.meta),
    )


def sort_by_decay(s: Spectrum) -> Spectrum:
    """Ascending gamma; ties by epsilon, then by original position."""
    order = np.lexsort((np.arange(s.n), s.epsilon, s.gamma))
    return _reordered(s, order, SortOrder.BY_GAMMA)


def sort_by_energy(s: Spectrum) -> Spectrum:
    order = np.lexsort((np.arange(s.n), s.gamma, s.epsilon))
    return _reordered(s, order, SortOrder.BY_EPSILON)


def gamma_min(s: Spectrum) -> float:
    g = s.gamma
    if np.any(g < -1e-12):
        raise SignConventionError(
            f"growing mode found (gamma = {g.min():.3g}); expected H = H0 - i*Gamma*P"
        )
    return float(g.min()) + 0.0  # normalizes -0.0


def verify(s: Spectrum, tolerance: float = 1e-8) -> VerifyReport:
    bi, comp = _residuals(s.right, s.left)
    h = s.matrix
    rebuilt = (s.right * s.eigenvalues) @ s.left
    norm = np.linalg.norm(h)
    recon = float(np.linalg.norm(rebuilt - h) / norm) if norm > 0 else float(
        np.linalg.norm(rebuilt)
    )
    return VerifyReport(bi, comp, recon, tolerance)
