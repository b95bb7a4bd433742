"""Periodic lattices as offset-generated graphs.

A lattice is described by ``d`` period vectors in ``R^D``, ``s`` points of the
unit cell and a finite list of *edge generators* ``(j, k, m)``: the vertex
``p_j + v(n)`` is joined to ``p_k + v(n + m)`` for every ``n`` in ``Z^d``.

Vertices are addressed by :class:`Vertex` ``(j, n)`` with a 0-based cell index
``j`` and an integer translation tuple ``n``.  Lattice functions are plain
dictionaries ``{Vertex: complex}`` with an implicit zero outside the keys.
"""
from __future__ import annotations

import itertools
import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, NamedTuple, Sequence, Tuple

import numpy as np

__all__ = [
    "BUILTIN_NAMES",
    "LatticeFunction",
    "LatticeSpec",
    "Vertex",
    "box_vertices",
    "builtin_lattice",
    "load_builtin_document",
    "neighbors",
    "realize",
]

BUILTIN_NAMES = ("square", "triangular", "hexagonal", "kagome", "ladder")


class Vertex(NamedTuple):
    """Vertex ``p_j + v(n)`` of a periodic lattice."""

    j: int
    n: Tuple[int, ...]

    def shifted(self, k: int, m: Sequence[int]) -> "Vertex":
        return Vertex(k, tuple(a + b for a, b in zip(self.n, m)))

    @property
    def norm(self) -> float:
        """Euclidean norm of the translation index (not of the position)."""
        return math.sqrt(sum(a * a for a in self.n))


LatticeFunction = Dict[Vertex, complex]


def _as_vertex(v) -> Vertex:
    if isinstance(v, Vertex):
        return v
    j, n = v
    return Vertex(int(j), tuple(int(a) for a in n))


@dataclass(frozen=True, eq=False)
class LatticeSpec:
    """Immutable description of a periodic lattice.

    Parameters
    ----------
    d : int
        Period dimension.
    basis : array_like, shape (d, D)
        Period vectors ``v_1, ..., v_d`` realized in ``R^D``.
    points : array_like, shape (s, D)
        Cell points ``p_1, ..., p_s``.
    edge_generators : sequence of (j, k, m)
        Ordered generators; both ``(j, k, m)`` and ``(k, j, -m)`` must be present.
    name : str, optional
        Label used in reports and serialized documents.
    """

    d: int
    basis: np.ndarray
    points: np.ndarray
    edge_generators: Tuple[Tuple[int, int, Tuple[int, ...]], ...]
    name: str = "custom"
    edge_length: float | None = field(default=None, compare=False)

    def __post_init__(self):
        basis = np.array(self.basis, dtype=float, ndmin=2)
        points = np.array(self.points, dtype=float, ndmin=2)
        gens = tuple(
            (int(j), int(k), tuple(int(a) for a in m)) for j, k, m in self.edge_generators
        )
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "edge_generators", tuple(sorted(set(gens))))
        basis.flags.writeable = False
        points.flags.writeable = False
        self._validate()

    def __eq__(self, other):
        if not isinstance(other, LatticeSpec):
            return NotImplemented
        return (
            self.name == other.name
            and self.d == other.d
            and self.edge_generators == other.edge_generators
            and np.array_equal(self.basis, other.basis)
            and np.array_equal(self.points, other.points)
        )

    def __hash__(self):
        return hash((self.name, self.d, self.edge_generators))

    # -- basic shape -----------------------------------------------------
    @property
    def D(self) -> int:
        return self.basis.shape[1]

    @property
    def s(self) -> int:
        return self.points.shape[0]

    @cached_property
    def generators_by_cell(self) -> Tuple[Tuple[Tuple[int, Tuple[int, ...]], ...], ...]:
        out = [[] for _ in range(self.s)]
        for j, k, m in self.edge_generators:
            out[j].append((k, m))
        return tuple(tuple(g) for g in out)

    @cached_property
    def degrees(self) -> Tuple[int, ...]:
        return tuple(len(g) for g in self.generators_by_cell)

    def degree(self, j: int) -> int:
        return self.degrees[j]

    @property
    def uniform_degree(self) -> bool:
        return len(set(self.degrees)) == 1

    # -- validation ------------------------------------------------------
    def _validate(self):
        d, D, s = self.d, self.D, self.s
        if d < 1:
            raise ValueError("period dimension d must be >= 1")
        if self.basis.shape[0] != d or D < d:
            raise ValueError(f"basis must have shape (d, D) with D >= d, got {self.basis.shape}")
        if np.linalg.matrix_rank(self.basis) != d:
            raise ValueError("basis vectors are linearly dependent")
        if self.points.shape[1] != D:
            raise ValueError("cell points must live in the same space as the basis")
        gens = set(self.edge_generators)
        for j, k, m in gens:
            if not (0 <= j < s and 0 <= k < s) or len(m) != d:
                raise ValueError(f"malformed edge generator {(j, k, m)}")
            if j == k and not any(m):
                raise ValueError(f"loop generator {(j, k, m)}")
            if (k, j, tuple(-a for a in m)) not in gens:
                raise ValueError(f"generator {(j, k, m)} has no reverse partner")
        for j in range(s):
            if not any(g[0] == j for g in gens):
                raise ValueError(f"cell point {j} has degree 0")
        # p_j - p_k must not be a lattice translation
        for j, k in itertools.combinations(range(s), 2):
            diff = self.points[j] - self.points[k]
            coef, *_ = np.linalg.lstsq(self.basis.T, diff, rcond=None)
            if np.allclose(self.basis.T @ coef, diff, atol=1e-9) and np.allclose(
                coef, np.round(coef), atol=1e-9
            ):
                raise ValueError(f"cell points {j} and {k} differ by a lattice vector")
        if not self._box_connected(2):
            raise ValueError("lattice graph is not connected on the sample box")

    def _box_connected(self, R: float) -> bool:
        inner = box_vertices(self, R)
        region = set(inner)
        for v in inner:
            region.update(neighbors(self, v))
        start = inner[0]
        seen = {start}
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in neighbors(self, v):
                if w in region and w not in seen:
                    seen.add(w)
                    queue.append(w)
        return seen == region

    # -- geometry --------------------------------------------------------
    def generator_lengths(self) -> np.ndarray:
        """Euclidean length of every edge generator, in generator order."""
        return np.array(
            [
                np.linalg.norm(self.points[k] + np.asarray(m) @ self.basis - self.points[j])
                for j, k, m in self.edge_generators
            ]
        )

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "d": self.d,
            "D": self.D,
            "basis": self.basis.tolist(),
            "points": self.points.tolist(),
            "edge_generators": [[j, k, list(m)] for j, k, m in self.edge_generators],
            "edge_length": self.edge_length,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, doc: dict) -> "LatticeSpec":
        spec = cls(
            d=int(doc["d"]),
            basis=doc["basis"],
            points=doc["points"],
            edge_generators=[(j, k, tuple(m)) for j, k, m in doc["edge_generators"]],
            name=doc.get("name", "custom"),
            edge_length=doc.get("edge_length"),
        )
        if "D" in doc and int(doc["D"]) != spec.D:
            raise ValueError(f"declared D={doc['D']} does not match basis dimension {spec.D}")
        return spec

    @classmethod
    def from_json(cls, text: str) -> "LatticeSpec":
        return cls.from_dict(json.loads(text))


# --------------------------------------------------------------------------
# builtin lattices
# --------------------------------------------------------------------------

_SQ3 = math.sqrt(3.0)


def _both_ways(gens):
    out = set()
    for j, k, m in gens:
        out.add((j, k, tuple(m)))
        out.add((k, j, tuple(-a for a in m)))
    return sorted(out)


def _unit(d, i):
    e = [0] * d
    e[i] = 1
    return tuple(e)


def builtin_lattice(name: str, d: int = 2) -> LatticeSpec:
    """Return one of the five example lattices.

    ``d`` is used by ``square`` and ``ladder`` (``d >= 2``); the planar
    lattices ignore it.
    """
    if name in ("square", "ladder") and d < 2:
        raise ValueError(f"{name} lattice needs d >= 2, got {d}")
    if name == "square":
        gens = _both_ways((0, 0, _unit(d, i)) for i in range(d))
        return LatticeSpec(d, np.eye(d), np.zeros((1, d)), gens, name="square", edge_length=1.0)
    if name == "triangular":
        basis = [[1.0, 0.0], [0.5, _SQ3 / 2]]
        gens = _both_ways([(0, 0, (1, 0)), (0, 0, (0, 1)), (0, 0, (-1, 1))])
        return LatticeSpec(2, basis, [[0.0, 0.0]], gens, name="triangular", edge_length=1.0)
    if name == "hexagonal":
        basis = [[1.5, -_SQ3 / 2], [1.5, _SQ3 / 2]]
        points = [[1.0, 0.0], [2.0, 0.0]]
        gens = _both_ways([(0, 1, (0, 0)), (0, 1, (-1, 0)), (0, 1, (0, -1))])
        return LatticeSpec(2, basis, points, gens, name="hexagonal", edge_length=1.0)
    if name == "kagome":
        basis = [[0.5, _SQ3 / 2], [-0.5, _SQ3 / 2]]
        points = [[0.0, 0.0], [0.5, 0.0], [0.25, _SQ3 / 4]]
        gens = _both_ways(
            [
                (0, 1, (0, 0)),
                (0, 1, (-1, 1)),
                (0, 2, (0, 0)),
                (0, 2, (-1, 0)),
                (1, 2, (0, 0)),
                (1, 2, (0, -1)),
            ]
        )
        return LatticeSpec(2, basis, points, gens, name="kagome", edge_length=0.5)
    if name == "ladder":
        basis = np.hstack([np.eye(d), np.zeros((d, 1))])
        points = np.zeros((2, d + 1))
        points[1, d] = 1.0
        gens = [(0, 1, (0,) * d)]
        for i in range(d):
            gens += [(0, 0, _unit(d, i)), (1, 1, _unit(d, i))]
        return LatticeSpec(d, basis, points, _both_ways(gens), name="ladder", edge_length=1.0)
    raise ValueError(f"unknown lattice {name!r}; expected one of {BUILTIN_NAMES}")


def builtin_document_name(name: str, d: int = 2) -> str:
    return f"{name}_d{d}.json" if name in ("square", "ladder") else f"{name}.json"


def load_builtin_document(filename: str) -> LatticeSpec:
    """Load one of the canonical lattice documents shipped with the package."""
    text = resources.files(__package__).joinpath("lattices", filename).read_text()
    return LatticeSpec.from_json(text)


def write_builtin_documents(directory: str | Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, d in [
        ("square", 2),
        ("square", 3),
        ("triangular", 2),
        ("hexagonal", 2),
        ("kagome", 2),
        ("ladder", 2),
    ]:
        path = directory / builtin_document_name(name, d)
        path.write_text(builtin_lattice(name, d).to_json() + "\n")
        written.append(path)
    return written


# --------------------------------------------------------------------------
# graph operations
# --------------------------------------------------------------------------

def _check_vertex(spec: LatticeSpec, v: Vertex) -> Vertex:
    v = _as_vertex(v)
    if not 0 <= v.j < spec.s:
        raise ValueError(f"cell index {v.j} out of range for s={spec.s}")
    if len(v.n) != spec.d:
        raise ValueError(f"translation index {v.n} must have {spec.d} components")
    return v


def neighbors(spec: LatticeSpec, v: Vertex) -> set[Vertex]:
    """The neighbor set ``N_v``."""
    v = _check_vertex(spec, v)
    return {v.shifted(k, m) for k, m in spec.generators_by_cell[v.j]}


def neighbor_list(spec: LatticeSpec, v: Vertex) -> list[Vertex]:
    """Neighbors in generator order (no validation; hot path)."""
    n = v.n
    return [Vertex(k, tuple(a + b for a, b in zip(n, m))) for k, m in spec.generators_by_cell[v.j]]


def realize(spec: LatticeSpec, v: Vertex) -> np.ndarray:
    """Euclidean position ``p_j + sum_i n_i v_i``."""
    v = _check_vertex(spec, v)
    return spec.points[v.j] + np.asarray(v.n, dtype=float) @ spec.basis


def box_vertices(spec: LatticeSpec, R: float, norm: str = "euclidean") -> list[Vertex]:
    """All vertices whose translation index satisfies ``|n| <= R``.

    ``norm`` is ``"euclidean"`` (the default) or ``"max"`` for parallelogram
    patches.  The result is sorted lexicographically in ``(j, n)``.
    """
    if R < 0:
        raise ValueError("R must be non-negative")
    r = int(math.floor(R + 1e-12))
    rng = range(-r, r + 1)
    if norm == "euclidean":
        keep = lambda n: sum(a * a for a in n) <= R * R + 1e-9  # noqa: E731
    elif norm == "max":
        keep = lambda n: True  # noqa: E731
    else:
        raise ValueError(f"unknown norm {norm!r}")
    cells = [n for n in itertools.product(rng, repeat=spec.d) if keep(n)]
    return [Vertex(j, n) for j in range(spec.s) for n in cells]


def iter_edges(spec: LatticeSpec, vertices: Iterable[Vertex]):
    """Yield each edge ``(v, w)`` with both ends in ``vertices`` once."""
    vs = set(vertices)
    for v in sorted(vs):
        for w in neighbor_list(spec, v):
            if w in vs and v < w:
                yield v, w
