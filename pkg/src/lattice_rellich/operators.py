"""Real-space Laplacian and Schrodinger operators on periodic lattices.

The Laplacian uses ``mu_v = deg v`` and unit edge weights, so
``(Delta f)(v)`` is the neighbor average of ``f``.  ``H = -Delta + V``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .lattice_core import LatticeFunction, LatticeSpec, Vertex, box_vertices, neighbor_list

__all__ = [
    "EigensolverError",
    "Potential",
    "TruncatedOperator",
    "apply_laplacian",
    "apply_schrodinger",
    "assemble_truncated",
    "eigensolve_symmetric",
    "radiation_estimate",
]

DEFAULT_BOX_CAP = 20000


class EigensolverError(RuntimeError):
    """Raised when the symmetric eigensolver fails its residual contract."""


def _zigzag(a: int) -> int:
    return 2 * a if a >= 0 else -2 * a - 1


@dataclass(frozen=True)
class Potential:
    """Real potential on lattice vertices.

    Use :meth:`finite_support` or :meth:`exponential` to construct one.  The
    exponential kind is ``C * s_j(n) * exp(-alpha |n|)`` where ``s_j(n)`` is
    a per-vertex draw from ``U[-1, 1]`` that depends only on ``(seed, j, n)``.
    """

    kind: str
    entries: Mapping[Vertex, float] = field(default_factory=dict)
    C: float = 0.0
    alpha: float = 1.0
    seed: int = 0

    @classmethod
    def zero(cls) -> "Potential":
        return cls("finite_support", {})

    @classmethod
    def finite_support(cls, entries: Mapping) -> "Potential":
        ent = {}
        for v, val in entries.items():
            v = Vertex(int(v[0]), tuple(int(a) for a in v[1]))
            if isinstance(val, complex) or np.iscomplexobj(val):
                raise ValueError("potentials are real-valued")
            ent[v] = float(val)
        return cls("finite_support", ent)

    @classmethod
    def exponential(cls, C: float, alpha: float, seed: int = 0) -> "Potential":
        if C <= 0 or alpha <= 0:
            raise ValueError("exponential potential needs C > 0 and alpha > 0")
        return cls("exponential", {}, float(C), float(alpha), int(seed))

    def profile(self, v: Vertex) -> float:
        """The seeded sign/amplitude factor ``s_j(n)`` in ``[-1, 1]``."""
        key = [self.seed, v.j] + [_zigzag(a) for a in v.n]
        return float(np.random.default_rng(key).uniform(-1.0, 1.0))

    def __call__(self, v: Vertex) -> float:
        if self.kind == "finite_support":
            return self.entries.get(v, 0.0)
        if self.kind == "exponential":
            return self.C * self.profile(v) * math.exp(-self.alpha * v.norm)
        raise ValueError(f"unknown potential kind {self.kind!r}")

    def envelope(self, v: Vertex) -> float:
        """Upper bound ``C exp(-alpha |n|)`` (infinite-rate bound for finite support)."""
        if self.kind == "exponential":
            return self.C * math.exp(-self.alpha * v.norm)
        return abs(self.entries.get(v, 0.0))


def apply_laplacian(spec: LatticeSpec, f: LatticeFunction, v: Vertex) -> complex:
    """``(1/deg v) * sum_{w ~ v} f(w)``."""
    v = Vertex(v[0], tuple(v[1]))
    nb = neighbor_list(spec, v)
    return sum(f.get(w, 0.0) for w in nb) / len(nb)


def apply_schrodinger(
    spec: LatticeSpec, V: Potential, lam: float, f: LatticeFunction, v: Vertex
) -> complex:
    """``((-Delta + V - lam) f)(v)``."""
    v = Vertex(v[0], tuple(v[1]))
    return -apply_laplacian(spec, f, v) + (V(v) - lam) * f.get(v, 0.0)


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    """Zero-extension truncation of ``-Delta + V`` to a finite box.

    ``matrix`` is a real symmetric CSR matrix indexed like ``box``.
    """

    spec: LatticeSpec
    box: tuple
    matrix: sp.csr_matrix
    R: float

    @property
    def N(self) -> int:
        return len(self.box)

    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.box)}

    def vector(self, f: LatticeFunction) -> np.ndarray:
        return np.array([f.get(v, 0.0) for v in self.box])

    def function(self, x: np.ndarray) -> LatticeFunction:
        return {v: x[i] for i, v in enumerate(self.box) if x[i] != 0}

    def interior_mask(self) -> np.ndarray:
        """True for box vertices whose full neighborhood lies in the box."""
        idx = self.index()
        return np.array([all(w in idx for w in neighbor_list(self.spec, v)) for v in self.box])

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def write_coo(self, path: str | Path) -> None:
        """Write ``row col value`` lines with 17 significant digits."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines = [
            f"{coo.row[i]} {coo.col[i]} {coo.data[i]:.17g}" for i in order
        ]
        from ._io import atomic_write_text

        atomic_write_text(path, "\n".join(lines) + "\n")


def assemble_truncated(
    spec: LatticeSpec,
    V: Potential,
    R: float,
    norm: str = "euclidean",
    cap: int = DEFAULT_BOX_CAP,
) -> TruncatedOperator:
    """Matrix of ``-Delta + V`` on ``box_vertices(spec, R)`` with zero extension.

    Every row keeps the full lattice degree, so out-of-box neighbors simply
    drop out.  Requires a lattice with uniform degree (otherwise the matrix
    would not be symmetric).
    """
    if not spec.uniform_degree:
        raise ValueError("zero-extension truncation requires a lattice with uniform degree")
    box = box_vertices(spec, R, norm=norm)
    if len(box) > cap:
        raise ValueError(f"box has {len(box)} vertices, above the cap {cap}")
    idx = {v: i for i, v in enumerate(box)}
    rows, cols, vals = [], [], []
    for i, v in enumerate(box):
        nb = neighbor_list(spec, v)
        w_off = -1.0 / len(nb)
        for w in nb:
            k = idx.get(w)
            if k is not None:
                rows.append(i)
                cols.append(k)
                vals.append(w_off)
        pot = V(v)
        if pot != 0.0:
            rows.append(i)
            cols.append(i)
            vals.append(pot)
    N = len(box)
    M = sp.csr_matrix((vals, (rows, cols)), shape=(N, N))
    M.sum_duplicates()
    return TruncatedOperator(spec, tuple(box), M, float(R))


def eigensolve_symmetric(T, check: bool = True):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a truncation.

    ``T`` may be a :class:`TruncatedOperator` or a dense symmetric array.
    Raises :class:`EigensolverError` if LAPACK fails or a residual exceeds
    ``1e-10 * ||T||``.
    """
    A = T.dense() if isinstance(T, TruncatedOperator) else np.asarray(T, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError("eigensolve_symmetric needs a non-empty square matrix")
    try:
        w, Q = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"dense eigh failed for N={A.shape[0]}: {exc}") from exc
    if check:
        scale = max(float(np.abs(w).max()), 1e-300)  # spectral norm of a symmetric matrix
        res = np.linalg.norm(A @ Q - Q * w, axis=0)
        worst = int(np.argmax(res))
        if res[worst] > 1e-10 * scale:
            raise EigensolverError(
                f"residual {res[worst]:.3e} at eigenpair {worst} exceeds 1e-10*||T|| = {1e-10 * scale:.3e}"
            )
    return w, Q


def radiation_estimate(f: LatticeFunction, R_list: Sequence[float]) -> list[tuple[float, float]]:
    """``(R, (1/R) * sum_{|n| < R} |f(n)|^2)`` for each ``R``."""
    if len(R_list) == 0:
        raise ValueError("R_list must be non-empty")
    norms = np.array([v.norm for v in f]) if f else np.zeros(0)
    mass = np.array([abs(x) ** 2 for x in f.values()]) if f else np.zeros(0)
    out = []
    for R in R_list:
        out.append((float(R), float(mass[norms < R].sum() / R)))
    return out


def write_eigenvalues_csv(path: str | Path, eigenvalues: Sequence[float]) -> None:
    from ._io import atomic_write_text

    lines = ["index,eigenvalue"] + [f"{i},{x:.17g}" for i, x in enumerate(eigenvalues)]
    atomic_write_text(path, "\n".join(lines) + "\n")
