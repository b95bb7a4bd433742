"""Finite graphs with boundary and unique continuation checks.

A :class:`BoundaryGraph` splits its vertices into interior and boundary and
keeps only interior-interior and interior-boundary edges.  On such graphs we
test the two-points condition (every interior subset with at least two
elements has two extreme points), the triangle condition on boundary
neighborhoods, and whether the Dirichlet + Neumann problem for
``-Delta + V - lam`` has a nontrivial solution.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from ._io import atomic_write_json
from .lattice_core import LatticeFunction, LatticeSpec, Vertex, box_vertices, neighbor_list, realize

__all__ = [
    "A5Report",
    "BoundaryGraph",
    "TwoPointsReport",
    "boundary_graph_from_box",
    "check_a5",
    "dirichlet_neumann_nullity",
    "extreme_points",
    "graph_distance",
    "hexagon_ring",
    "kagome_flat_band_vector",
    "neumann_residual",
    "two_points_condition",
]

EXHAUSTIVE_CAP = 22


def _jsonable(v):
    if isinstance(v, Vertex):
        return [v.j, list(v.n)]
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


@dataclass(eq=False)
class BoundaryGraph:
    """Interior/boundary split of a finite graph.

    ``degree`` gives the degree used by the Laplacian and the Neumann
    operator; for patches cut from a lattice this is the lattice degree, so a
    boundary vertex keeps its full degree even though only its interior edges
    are retained.
    """

    interior: tuple
    boundary: tuple
    adjacency: dict
    degree: dict
    graph_id: str = "graph"

    def __post_init__(self):
        self.interior = tuple(self.interior)
        self.boundary = tuple(self.boundary)
        inner, outer = set(self.interior), set(self.boundary)
        if inner & outer:
            raise ValueError("interior and boundary overlap")
        if len(inner) != len(self.interior) or len(outer) != len(self.boundary):
            raise ValueError("duplicate vertices")
        for v, nb in self.adjacency.items():
            for w in nb:
                if v in outer and w in outer:
                    raise ValueError(f"boundary-boundary edge {v} -- {w}")
                if v not in self.adjacency.get(w, ()):
                    raise ValueError(f"edge {v} -- {w} is not symmetric")
        for v in self.vertices:
            self.adjacency.setdefault(v, frozenset())
            self.degree.setdefault(v, len(self.adjacency[v]))

    @classmethod
    def from_edges(cls, interior: Sequence, boundary: Sequence, edges: Iterable,
                   degree: Mapping | None = None, graph_id: str = "graph") -> "BoundaryGraph":
        outer = set(boundary)
        adj: dict = {v: set() for v in list(interior) + list(boundary)}
        for v, w in edges:
            if v in outer and w in outer:
                continue  # dropped, never part of the graph
            adj[v].add(w)
            adj[w].add(v)
        return cls(tuple(interior), tuple(boundary), {v: frozenset(s) for v, s in adj.items()},
                   dict(degree or {}), graph_id)

    @property
    def vertices(self) -> tuple:
        return self.interior + self.boundary

    @cached_property
    def is_connected(self) -> bool:
        vs = self.vertices
        if not vs:
            return True
        return len(_bfs(self.adjacency, vs[0])) == len(vs)

    @cached_property
    def _boundary_distances(self) -> np.ndarray:
        """``dist[b, i]`` from boundary ``b`` to interior ``i`` (inf if unreachable)."""
        out = np.full((len(self.boundary), len(self.interior)), np.inf)
        pos = {v: i for i, v in enumerate(self.interior)}
        for b, z in enumerate(self.boundary):
            for v, dist in _bfs(self.adjacency, z).items():
                if v in pos:
                    out[b, pos[v]] = dist
        return out

    def edges(self) -> list:
        order = {v: i for i, v in enumerate(self.vertices)}
        return sorted({(v, w) if order[v] < order[w] else (w, v)
                       for v, nb in self.adjacency.items() for w in nb}, key=lambda e: (order[e[0]], order[e[1]]))

    def to_dict(self) -> dict:
        return {"graph_id": self.graph_id,
                "interior": [_jsonable(v) for v in self.interior],
                "boundary": [_jsonable(v) for v in self.boundary],
                "edges": [[_jsonable(v), _jsonable(w)] for v, w in self.edges()],
                "degree": [[_jsonable(v), self.degree[v]] for v in self.vertices]}

    def to_json(self, path) -> None:
        atomic_write_json(path, self.to_dict())


def _bfs(adjacency: Mapping, source) -> dict:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in adjacency[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def boundary_graph_from_vertices(spec: LatticeSpec, interior: Iterable, graph_id: str = "patch") -> BoundaryGraph:
    """Boundary graph of an arbitrary finite vertex set of ``spec``.

    The boundary is every outside neighbor of the set; edges between two
    boundary vertices are dropped.
    """
    interior = sorted(dict.fromkeys(Vertex(v[0], tuple(v[1])) for v in interior))
    if not interior:
        raise ValueError("interior must be nonempty")
    inner = set(interior)
    boundary = sorted({w for v in interior for w in neighbor_list(spec, v) if w not in inner})
    edges = [(v, w) for v in interior for w in neighbor_list(spec, v)]
    degree = {v: len(neighbor_list(spec, v)) for v in interior + boundary}
    G = BoundaryGraph.from_edges(interior, boundary, edges, degree, graph_id)
    if not G.is_connected:
        raise ValueError(f"boundary graph {graph_id} is disconnected")
    return G


def graph_ball(spec: LatticeSpec, center, radius: int) -> list:
    """Vertices within ``radius`` edges of ``center``."""
    center = Vertex(center[0], tuple(center[1]))
    dist = {center: 0}
    frontier = [center]
    for r in range(radius):
        nxt = []
        for v in frontier:
            for w in neighbor_list(spec, v):
                if w not in dist:
                    dist[w] = r + 1
                    nxt.append(w)
        frontier = nxt
    return sorted(dist)


def boundary_graph_from_box(spec: LatticeSpec, R: float, norm: str = "euclidean") -> BoundaryGraph:
    """Interior = ``box_vertices(spec, R)``, boundary = their outside neighbors."""
    if R <= 0:
        raise ValueError("R must be positive")
    return boundary_graph_from_vertices(spec, box_vertices(spec, R, norm=norm), f"{spec.name}_R{R:g}_{norm}")


def graph_distance(G: BoundaryGraph, v, w) -> float:
    """Edge count of a shortest path (``math.inf`` if none)."""
    if v not in G.adjacency or w not in G.adjacency:
        raise KeyError("vertex not in graph")
    return _bfs(G.adjacency, v).get(w, math.inf)


def extreme_points(G: BoundaryGraph, S: Iterable) -> set:
    """Members of ``S`` that are the unique nearest member for some boundary vertex."""
    S = list(dict.fromkeys(S))
    if not S:
        raise ValueError("S must be nonempty")
    pos = {v: i for i, v in enumerate(G.interior)}
    try:
        cols = [pos[v] for v in S]
    except KeyError as exc:
        raise ValueError(f"{exc.args[0]} is not an interior vertex") from None
    D = G._boundary_distances[:, cols]
    out = set()
    for row in D:
        m = row.min()
        if not np.isfinite(m):
            continue
        hits = np.flatnonzero(row == m)
        if len(hits) == 1:
            out.add(S[hits[0]])
    return out


@dataclass
class TwoPointsReport:
    graph_id: str
    mode: str
    result: str  # "pass", "fail" or "no counterexample found"
    witness: tuple = ()
    subsets_checked: int = 0

    @property
    def passed(self) -> bool:
        return self.result != "fail"

    def to_dict(self) -> dict:
        return {"graph_id": self.graph_id, "condition": "two-points", "mode": self.mode,
                "result": self.result, "witness_vertices": [_jsonable(v) for v in self.witness],
                "subsets_checked": self.subsets_checked}


def _level_masks(G: BoundaryGraph) -> list[list[int]]:
    """Per boundary vertex, interior bitmasks grouped by increasing distance."""
    out = []
    for row in G._boundary_distances:
        levels = []
        for L in np.unique(row[np.isfinite(row)]):
            levels.append(int(sum(1 << int(i) for i in np.flatnonzero(row == L))))
        out.append(levels)
    return out


def _extreme_masks(levels: list[list[int]], S: np.ndarray) -> np.ndarray:
    ext = np.zeros_like(S)
    for lv in levels:
        nearest = np.zeros_like(S)
        done = np.zeros(S.shape, dtype=bool)
        for m in lv:
            inter = S & np.uint32(m)
            take = ~done & (inter != 0)
            nearest[take] = inter[take]
            done |= take
        ext |= np.where(np.bitwise_count(nearest) == 1, nearest, 0).astype(S.dtype)
    return ext


def two_points_condition(G: BoundaryGraph, mode: str = "exhaustive", k: int = 2000, seed: int = 0,
                         candidates: Sequence[Iterable] = (), chunk: int = 1 << 20) -> TwoPointsReport:
    """Search for an interior subset with at least 2 elements and at most 1 extreme point.

    ``exhaustive`` scans every subset in increasing bitmask order (bit ``i`` is
    ``G.interior[i]``) and returns the first failure.  ``random`` checks the
    supplied ``candidates`` and then ``k`` seeded random subsets; it can only
    report ``"no counterexample found"`` or a failure.
    """
    N = len(G.interior)
    if mode == "exhaustive":
        if N > EXHAUSTIVE_CAP:
            raise ValueError(f"exhaustive mode is capped at {EXHAUSTIVE_CAP} interior vertices, got {N}")
        levels = _level_masks(G)
        total = 1 << N
        checked = 0
        for start in range(0, total, chunk):
            S = np.arange(start, min(total, start + chunk), dtype=np.uint32)
            S = S[np.bitwise_count(S) >= 2]
            checked += len(S)
            bad = np.bitwise_count(_extreme_masks(levels, S)) < 2
            if bad.any():
                mask = int(S[np.argmax(bad)])
                witness = tuple(G.interior[i] for i in range(N) if mask >> i & 1)
                return TwoPointsReport(G.graph_id, mode, "fail", witness, checked)
        return TwoPointsReport(G.graph_id, mode, "pass", (), checked)
    if mode != "random":
        raise ValueError(f"unknown mode {mode!r}")
    checked = 0
    for cand in candidates:
        cand = tuple(dict.fromkeys(cand))
        if len(cand) < 2:
            continue
        checked += 1
        if len(extreme_points(G, cand)) < 2:
            return TwoPointsReport(G.graph_id, mode, "fail", cand, checked)
    if N >= 2:
        rng = np.random.default_rng(seed)
        for _ in range(k):
            size = int(rng.integers(2, N + 1))
            idx = np.sort(rng.choice(N, size=size, replace=False))
            S = tuple(G.interior[i] for i in idx)
            checked += 1
            if len(extreme_points(G, S)) < 2:
                return TwoPointsReport(G.graph_id, mode, "fail", S, checked)
    return TwoPointsReport(G.graph_id, mode, "no counterexample found", (), checked)


@dataclass
class A5Report:
    graph_id: str
    witnesses: list = field(default_factory=list)  # (boundary z, v, w) with v, w not adjacent

    @property
    def passed(self) -> bool:
        return not self.witnesses

    def to_dict(self) -> dict:
        return {"graph_id": self.graph_id, "condition": "a5",
                "result": "pass" if self.passed else "fail",
                "witness_vertices": [[_jsonable(x) for x in t] for t in self.witnesses]}


def check_a5(G: BoundaryGraph) -> A5Report:
    """Interior neighbors of every boundary vertex must be pairwise adjacent."""
    inner = set(G.interior)
    order = {v: i for i, v in enumerate(G.interior)}
    rep = A5Report(G.graph_id)
    for z in G.boundary:
        nb = sorted((v for v in G.adjacency[z] if v in inner), key=order.get)
        for a in range(len(nb)):
            for b in range(a + 1, len(nb)):
                if nb[b] not in G.adjacency[nb[a]]:
                    rep.witnesses.append((z, nb[a], nb[b]))
    return rep


def neumann_residual(G: BoundaryGraph, f: Mapping, v) -> complex:
    """``(1/deg v) sum_{w interior, w ~ v} (f(w) - f(v))`` at a boundary vertex."""
    if v not in set(G.boundary):
        raise ValueError(f"{v} is not a boundary vertex")
    inner = set(G.interior)
    fv = f.get(v, 0.0)
    return sum(f.get(w, 0.0) - fv for w in G.adjacency[v] if w in inner) / G.degree[v]


def _potential_values(G: BoundaryGraph, V) -> np.ndarray:
    if V is None:
        return np.zeros(len(G.interior))
    if callable(V):
        return np.array([float(V(v)) for v in G.interior])
    if isinstance(V, Mapping):
        return np.array([float(V.get(v, 0.0)) for v in G.interior])
    arr = np.asarray(V, dtype=float)
    if arr.shape != (len(G.interior),):
        raise ValueError("potential array must match the interior")
    return arr


def dirichlet_neumann_matrix(G: BoundaryGraph, V, lam: float) -> np.ndarray:
    """Rows: the equation on interior vertices, then the Neumann data on the boundary.

    Unknowns are the interior values; boundary values are fixed to zero.
    """
    N = len(G.interior)
    pos = {v: i for i, v in enumerate(G.interior)}
    pot = _potential_values(G, V)
    M = np.zeros((N + len(G.boundary), N))
    for i, v in enumerate(G.interior):
        M[i, i] = pot[i] - lam
        for w in G.adjacency[v]:
            if w in pos:
                M[i, pos[w]] -= 1.0 / G.degree[v]
    for b, z in enumerate(G.boundary):
        for w in G.adjacency[z]:
            if w in pos:
                M[N + b, pos[w]] += 1.0 / G.degree[z]
    return M


def dirichlet_neumann_nullity(G: BoundaryGraph, V, lam: float, rel_tol: float = 1e-10) -> int:
    """Dimension of the solutions with zero Dirichlet and zero Neumann data."""
    if not G.interior:
        return 0
    M = dirichlet_neumann_matrix(G, V, lam)
    sv = np.linalg.svd(M, compute_uv=False)
    scale = sv.max() if sv.size and sv.max() > 0 else 1.0
    return int(M.shape[1] - np.count_nonzero(sv > rel_tol * scale))


# --------------------------------------------------------------------------
# kagome flat band
# --------------------------------------------------------------------------

def _hexagon_origin(spec: LatticeSpec) -> np.ndarray:
    """Center of a hexagonal face near the cell origin (lowest in lexicographic order)."""
    box = box_vertices(spec, 3, norm="max")
    P = np.array([realize(spec, v) for v in box])
    r = spec.edge_length
    tol = 1e-9
    found = []
    for i in range(len(P)):
        dist = np.linalg.norm(P - P[i], axis=1)
        for j in np.flatnonzero(np.abs(dist - 2 * r) < tol):
            c = 0.5 * (P[i] + P[j])
            dc = np.linalg.norm(P - c, axis=1)
            if np.count_nonzero(np.abs(dc - r) < tol) == 6 and dc.min() > tol:
                coef = np.linalg.solve(spec.basis.T, c)
                if np.all(coef >= -tol) and np.all(coef < 1 - tol):
                    found.append(tuple(np.round(c, 12)))
    if not found:
        raise ValueError(f"{spec.name}: no hexagonal face found")
    return np.array(min(found))


def hexagon_ring(spec: LatticeSpec, hexagon_center: Sequence[int] = (0, 0)) -> tuple:
    """The six vertices around the hexagonal face translated by ``hexagon_center``, by angle."""
    c = _hexagon_origin(spec) + np.asarray(hexagon_center, dtype=float) @ spec.basis
    n0 = np.rint(np.linalg.solve(spec.basis.T, c)).astype(int)
    near = [Vertex(v.j, tuple(int(a + b) for a, b in zip(v.n, n0))) for v in box_vertices(spec, 2, norm="max")]
    ring = []
    for v in near:
        rel = realize(spec, v) - c
        if abs(np.linalg.norm(rel) - spec.edge_length) < 1e-9:
            ring.append((math.atan2(rel[1], rel[0]), v))
    if len(ring) != 6:
        raise ValueError("hexagon_center does not identify a hexagonal face")
    return tuple(v for _, v in sorted(ring))


def kagome_flat_band_vector(spec: LatticeSpec, hexagon_center: Sequence[int] = (0, 0), R: float = 3,
                            norm: str = "euclidean") -> LatticeFunction:
    """Alternating +1/-1 around one hexagon, zero elsewhere.

    Solves ``(-Delta - 1/2) f = 0`` everywhere: each hexagon vertex sees its
    two ring neighbors with the opposite sign, and each outside vertex
    touching the ring sees one +1 and one -1.
    """
    ring = hexagon_ring(spec, hexagon_center)
    box = set(box_vertices(spec, R, norm=norm))
    needed = set(ring) | {w for v in ring for w in neighbor_list(spec, v)}
    if not needed <= box:
        raise ValueError("hexagon and its neighbors are not contained in the box")
    return {v: (1.0 if i % 2 == 0 else -1.0) for i, v in enumerate(ring)}
