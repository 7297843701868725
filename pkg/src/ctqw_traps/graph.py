"""Graph construction: couplings, trap placement, quantum H and classical T.

Node indices are 1-based everywhere in the public interface.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numpy as np


class DiagonalMode(str, Enum):
    UNIFORM_TWO = "uniform_two"
    VERTEX_DEGREE = "vertex_degree"


# vertex_degree reproduces the published smallest decay rate of the N=100 chain;
# uniform_two does not (see tests/test_graph.py::test_default_mode_matches_gamma_min).
DEFAULT_DIAGONAL = DiagonalMode.VERTEX_DEGREE


@dataclass(frozen=True)
class TrapSet:
    """Ordered, duplicate-free set of 1-based trap node indices."""

    indices: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise ValueError(f"duplicate trap indices: {idx}")
        if any(i < 1 for i in idx):
            raise ValueError(f"trap indices are 1-based, got {idx}")
        object.__setattr__(self, "indices", tuple(sorted(idx)))

    @classmethod
    def coerce(cls, traps: TrapSet | Iterable[int] | None) -> TrapSet:
        if traps is None:
            return cls()
        if isinstance(traps, TrapSet):
            return traps
        return cls(tuple(traps))

    def check(self, n: int) -> None:
        bad = [i for i in self.indices if i > n]
        if bad:
            raise ValueError(f"trap indices {bad} outside 1..{n}")

    def zero_based(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=int) - 1

    def open_nodes(self, n: int) -> np.ndarray:
        """0-based indices of the non-trap nodes."""
        mask = np.ones(n, dtype=bool)
        mask[self.zero_based()] = False
        return np.flatnonzero(mask)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, node: object) -> bool:
        return node in self.indices


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """Topology, trap set and trap strength of a trapped transport problem.

    ``couplings`` holds only the off-diagonal bond weights (non-positive,
    symmetric, zero diagonal); the on-site terms come from ``diagonal_mode``.
    """

    n_nodes: int
    couplings: np.ndarray
    trap_nodes: TrapSet
    trap_strength: float
    diagonal_mode: DiagonalMode = DEFAULT_DIAGONAL
    coupling_kind: str = "nearest"
    coupling_exponent: float | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        c = _frozen(self.couplings)
        n = int(self.n_nodes)
        if n < 1:
            raise ValueError("n_nodes must be positive")
        if c.shape != (n, n):
            raise ValueError(f"couplings must be {n}x{n}, got {c.shape}")
        if not np.array_equal(c, c.T):
            raise ValueError("couplings must be symmetric")
        if np.any(np.diag(c) != 0):
            raise ValueError("couplings must have zero diagonal")
        if np.any(c > 0):
            raise ValueError("off-diagonal couplings must be <= 0")
        traps = TrapSet.coerce(self.trap_nodes)
        traps.check(n)
        gamma = float(self.trap_strength)
        if not gamma >= 0:
            raise ValueError(f"trap strength must be >= 0, got {gamma}")
        object.__setattr__(self, "n_nodes", n)
        object.__setattr__(self, "couplings", c)
        object.__setattr__(self, "trap_nodes", traps)
        object.__setattr__(self, "trap_strength", gamma)
        object.__setattr__(self, "diagonal_mode", DiagonalMode(self.diagonal_mode))

    @property
    def n_traps(self) -> int:
        return len(self.trap_nodes)

    @property
    def active_traps(self) -> TrapSet:
        """Trap sites that actually absorb; none when the trap strength is zero."""
        return self.trap_nodes if self.trap_strength > 0 else TrapSet()

    def onsite(self) -> np.ndarray:
        if self.diagonal_mode is DiagonalMode.UNIFORM_TWO:
            return np.full(self.n_nodes, 2.0)
        return -self.couplings.sum(axis=1)

    def h0(self) -> np.ndarray:
        """Trap-free Hamiltonian H0 (real symmetric)."""
        return self.couplings + np.diag(self.onsite())

    def trap_projector(self) -> np.ndarray:
        p = np.zeros(self.n_nodes)
        p[self.trap_nodes.zero_based()] = 1.0
        return np.diag(p)

    def with_gamma(self, gamma: float) -> HamiltonianSpec:
        return HamiltonianSpec(
            self.n_nodes,
            self.couplings,
            self.trap_nodes,
            gamma,
            self.diagonal_mode,
            self.coupling_kind,
            self.coupling_exponent,
            dict(self.meta),
        )

    def mirrored(self) -> HamiltonianSpec:
        """Same problem with nodes relabelled j -> N+1-j."""
        n = self.n_nodes
        c = self.couplings[::-1, ::-1]
        traps = TrapSet(tuple(n + 1 - i for i in self.trap_nodes))
        return HamiltonianSpec(
            n, c, traps, self.trap_strength, self.diagonal_mode,
            self.coupling_kind, self.coupling_exponent, dict(self.meta),
        )

    def describe(self) -> dict:
        return {
            "N": self.n_nodes,
            "gamma": self.trap_strength,
            "traps": list(self.trap_nodes),
            "diagonal": self.diagonal_mode.value,
        }

    def to_json(self) -> str:
        doc: dict = {
            "n": self.n_nodes,
            "gamma": self.trap_strength,
            "traps": list(self.trap_nodes),
            "diagonal": self.diagonal_mode.value,
        }
        if self.coupling_kind == "power_law":
            doc["coupling"] = {"kind": "power_law", "exponent": self.coupling_exponent}
        elif self.coupling_kind == "nearest":
            doc["coupling"] = {"kind": "nearest"}
        else:
            # arbitrary graphs travel as an edge list
            i, j = np.nonzero(np.triu(self.couplings))
            doc["coupling"] = {
                "kind": "adjacency",
                "edges": [[int(a) + 1, int(b) + 1] for a, b in zip(i, j)],
            }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str | dict) -> HamiltonianSpec:
        doc = json.loads(text) if isinstance(text, str) else dict(text)
        n = int(doc["n"])
        gamma = float(doc.get("gamma", 1.0))
        diagonal = DiagonalMode(doc.get("diagonal", DEFAULT_DIAGONAL.value))
        coupling = doc.get("coupling") or {"kind": "nearest"}
        kind = coupling.get("kind", "nearest")
        traps = doc.get("traps")
        if kind == "nearest":
            spec = build_chain(n, gamma, diagonal)
        elif kind == "power_law":
            spec = build_long_range_chain(n, float(coupling["exponent"]), gamma)
            if diagonal is not spec.diagonal_mode:
                spec = _replace(spec, diagonal_mode=diagonal)
        elif kind == "adjacency":
            adj = np.zeros((n, n))
            for a, b in coupling["edges"]:
                adj[a - 1, b - 1] = adj[b - 1, a - 1] = 1
            spec = build_from_adjacency(adj, traps or (), gamma)
            if diagonal is not spec.diagonal_mode:
                spec = _replace(spec, diagonal_mode=diagonal)
        else:
            raise ValueError(f"unknown coupling kind {kind!r}")
        if traps is not None and tuple(sorted(traps)) != spec.trap_nodes.indices:
            spec = _replace(spec, trap_nodes=TrapSet(tuple(traps)))
        return spec


def _replace(spec: HamiltonianSpec, **changes) -> HamiltonianSpec:
    fields = {
        "n_nodes": spec.n_nodes,
        "couplings": spec.couplings,
        "trap_nodes": spec.trap_nodes,
        "trap_strength": spec.trap_strength,
        "diagonal_mode": spec.diagonal_mode,
        "coupling_kind": spec.coupling_kind,
        "coupling_exponent": spec.coupling_exponent,
        "meta": dict(spec.meta),
    }
    fields.update(changes)
    return HamiltonianSpec(**fields)


def build_chain(
    n: int,
    gamma: float,
    diagonal_mode: DiagonalMode | str = DEFAULT_DIAGONAL,
) -> HamiltonianSpec:
    """Nearest-neighbour chain of ``n`` nodes with traps at nodes 1 and n."""
    if n < 2:
        raise ValueError(f"a chain with traps at both ends needs n >= 2, got {n}")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    off = np.ones(n - 1)
    c = -(np.diag(off, 1) + np.diag(off, -1))
    return HamiltonianSpec(n, c, TrapSet((1, n)), gamma, DiagonalMode(diagonal_mode))


def build_long_range_chain(n: int, exponent: float, gamma: float) -> HamiltonianSpec:
    """Chain with couplings -1/|j-k|**exponent between every pair of nodes.

    The diagonal is the weighted degree, so every row of H0 sums to zero.
    """
    if exponent <= 1:
        raise ValueError(
            f"exponent must be > 1 (row sums diverge with n otherwise), got {exponent}"
        )
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    idx = np.arange(n)
    dist = np.abs(idx[:, None] - idx[None, :]).astype(float)
    with np.errstate(divide="ignore"):
        c = np.where(dist > 0, -np.power(dist, -float(exponent)), 0.0)
    return HamiltonianSpec(
        n, c, TrapSet((1, n)), gamma, DiagonalMode.VERTEX_DEGREE,
        coupling_kind="power_law", coupling_exponent=float(exponent),
    )


def build_from_adjacency(
    adjacency: np.ndarray,
    traps: TrapSet | Iterable[int],
    gamma: float,
) -> HamiltonianSpec:
    adjacency = np.asarray(adjacency)
    if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
        raise ValueError("adjacency must be a square matrix")
    if not np.isin(adjacency, (0, 1)).all():
        raise ValueError("adjacency entries must be 0 or 1")
    if not np.array_equal(adjacency, adjacency.T):
        raise ValueError("adjacency must be symmetric")
    if np.any(np.diag(adjacency) != 0):
        raise ValueError("adjacency must have zero diagonal")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    n = adjacency.shape[0]
    return HamiltonianSpec(
        n, -adjacency.astype(float), TrapSet.coerce(traps), gamma,
        DiagonalMode.VERTEX_DEGREE, coupling_kind="adjacency",
    )


def quantum_hamiltonian(spec: HamiltonianSpec) -> np.ndarray:
    """H = H0 - i*Gamma*P, complex symmetric; the minus sign makes populations decay."""
    h = spec.h0().astype(complex)
    h -= 1j * spec.trap_strength * spec.trap_projector()
    return h


def classical_transfer_matrix(spec: HamiltonianSpec) -> np.ndarray:
    """T = -H0 - Gamma*P."""
    return -spec.h0() - spec.trap_strength * spec.trap_projector()
