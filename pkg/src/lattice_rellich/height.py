"""Increasing height functions and the growth estimate they control.

An increasing height function ``h`` comes with a *successor* ``v0`` for every
vertex ``v``: a neighbor of ``v`` whose other neighbors all lie strictly
higher than ``v``.  Solving the equation at ``v0`` for ``u(v)`` gives::

    u(v) = deg(v0) (V(v0) - lam) u(v0) - sum_{w ~ v0, w != v} u(w)

so values propagate downward in ``h``.  Iterating over dependence shells
yields ``|u(v)| <= (C0 D0)^n sup_{shell n} |u|``, and super-exponential decay
of ``u`` then forces ``u(v) = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._io import atomic_write_json, write_csv
from .lattice_core import LatticeFunction, LatticeSpec, Vertex, box_vertices, builtin_lattice, neighbor_list, realize
from .operators import Potential

__all__ = [
    "DecayReport",
    "DependenceShell",
    "EquationResidualError",
    "GrowthReport",
    "HeightFunction",
    "builtin_height",
    "cone_membership",
    "decay_bound_sequence",
    "dependence_set",
    "dependence_shell",
    "dependence_shells",
    "growth_bound_check",
    "height_constant_a",
    "manufacture_solution",
    "verify_height",
]

CERTIFICATE_LEVEL = 1e-300


class EquationResidualError(ValueError):
    """The supplied function does not solve the equation where it is needed."""

    def __init__(self, vertex, residual):
        super().__init__(f"equation residual {residual:.3e} at {vertex} exceeds tolerance")
        self.vertex = vertex
        self.residual = residual


@dataclass(frozen=True, eq=False)
class HeightFunction:
    """Integer height ``h`` with successor selector and variation bound ``k0``."""

    spec: LatticeSpec
    h: Callable[[Vertex], int]
    successor: Callable[[Vertex], Vertex]
    k0: int
    name: str = "custom"
    domain: Callable[[Vertex], bool] = field(default=lambda v: True)

    def __call__(self, v) -> int:
        return int(self.h(Vertex(v[0], tuple(v[1]))))


def builtin_height(name: str, d: int = 2) -> HeightFunction:
    """Height function of a builtin lattice (the whole lattice is the domain).

    ============  =====================  ===========================  ==
    lattice       ``h(j, n)``            successor                    k0
    ============  =====================  ===========================  ==
    square        ``n1``                 ``(0, n + e1)``              1
    triangular    ``n1 + 2 n2``          ``(0, n + (0, 1))``          2
    hexagonal     ``n2 - n1``            ``(1, n - e1)`` / ``(0, n + e2)``  1
    ladder        ``n1``                 ``(j, n + e1)``              1
    ============  =====================  ===========================  ==

    In the hexagonal row the first successor applies to the left end of a
    horizontal edge (``j = 0``), the second to the right end.
    """
    if name == "kagome":
        raise ValueError("kagome: no increasing height function exists on this lattice")
    spec = builtin_lattice(name, d)
    dd = spec.d

    def plus(n, i, step=1):
        return tuple(a + (step if k == i else 0) for k, a in enumerate(n))

    if name in ("square", "ladder"):
        return HeightFunction(spec, lambda v: v.n[0], lambda v: Vertex(v.j, plus(v.n, 0)), 1, name)
    if name == "triangular":
        return HeightFunction(spec, lambda v: v.n[0] + 2 * v.n[1], lambda v: Vertex(0, plus(v.n, 1)), 2, name)
    if name == "hexagonal":
        def succ(v):
            if v.j == 0:
                return Vertex(1, plus(v.n, 0, -1))
            return Vertex(0, plus(v.n, 1))

        return HeightFunction(spec, lambda v: v.n[1] - v.n[0], succ, 1, name)
    raise ValueError(f"unknown lattice {name!r} (d={dd})")


@dataclass
class HeightReport:
    checked: int
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def verify_height(spec: LatticeSpec, hf: HeightFunction, sample_box_R: float) -> HeightReport:
    """Check bounded variation and the successor property on a sample box.

    Only vertices whose whole neighborhood lies in the box are checked.
    """
    box = box_vertices(spec, sample_box_R)
    if not box:
        raise ValueError("sample box is empty")
    inbox = set(box)
    report = HeightReport(0)
    for v in box:
        nb = neighbor_list(spec, v)
        if not all(w in inbox for w in nb) or not hf.domain(v):
            continue
        report.checked += 1
        hv = hf(v)
        for w in nb:
            if abs(hf(w) - hv) > hf.k0:
                report.violations.append({"vertex": v, "kind": "variation", "neighbor": w})
        v0 = hf.successor(v)
        if v0 not in nb:
            report.violations.append({"vertex": v, "kind": "successor_not_adjacent", "successor": v0})
            continue
        for w in neighbor_list(spec, v0):
            if w != v and hf(w) < hv + 1:
                report.violations.append({"vertex": v, "kind": "not_increasing", "neighbor": w})
    return report


def dependence_set(hf: HeightFunction, v, include_successor: bool = False) -> frozenset:
    """``N_{v0} \\ {v}``, optionally together with ``v0`` itself.

    The successor-inclusive variant is the full set of values the equation at
    ``v0`` expresses ``u(v)`` through; it is the one the growth estimate uses.
    """
    v = Vertex(v[0], tuple(v[1]))
    if not hf.domain(v):
        raise ValueError(f"{v} is outside the domain of the height function")
    v0 = hf.successor(v)
    out = {w for w in neighbor_list(hf.spec, v0) if w != v}
    if include_successor:
        out.add(v0)
    return frozenset(out)


@dataclass(frozen=True)
class DependenceShell:
    root: Vertex
    n: int
    members: tuple

    def sandwich_violations(self, hf: HeightFunction) -> list:
        """Members outside ``[h(root) + n, h(root) + 2 k0 n]``."""
        lo = hf(self.root) + self.n
        hi = hf(self.root) + 2 * hf.k0 * self.n
        return [w for w in self.members if not lo <= hf(w) <= hi]


def dependence_shells(hf: HeightFunction, v, n_max: int, include_successor: bool = False) -> list[DependenceShell]:
    """Shells ``1..n_max`` built by ``S_n = union of D(w) over w in S_{n-1}``."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    root = Vertex(v[0], tuple(v[1]))
    cache: dict = {}
    current = {root}
    shells = []
    for n in range(1, n_max + 1):
        nxt = set()
        for w in current:
            if w not in cache:
                cache[w] = dependence_set(hf, w, include_successor)
            nxt |= cache[w]
        current = nxt
        shells.append(DependenceShell(root, n, tuple(sorted(current))))
    return shells


def dependence_shell(hf: HeightFunction, v, n: int, include_successor: bool = False) -> DependenceShell:
    return dependence_shells(hf, v, n, include_successor)[-1]


def cone_membership(name: str, x, y, d: int = 2, eps: float = 1e-9) -> bool:
    """Closed-form description of the full domain of dependence of ``x``.

    Square and ladder cones are stated on translation indices; triangular on
    the ``(n1, n2)`` basis coordinates; hexagonal in realized coordinates,
    with a different cone for each end of a horizontal edge.
    """
    x = Vertex(x[0], tuple(x[1]))
    y = Vertex(y[0], tuple(y[1]))
    dn = [b - a for a, b in zip(x.n, y.n)]
    if name == "square":
        return sum(abs(t) for t in dn[1:]) <= dn[0]
    if name == "ladder":
        spread = sum(abs(t) for t in dn[1:])
        return spread <= dn[0] - (0 if x.j == y.j else 1)
    if name == "triangular":
        return dn[1] >= 0 and dn[0] + dn[1] >= 0
    if name == "hexagonal":
        spec = builtin_lattice("hexagonal")
        dy = realize(spec, y) - realize(spec, x)
        r3 = math.sqrt(3.0)
        if x.j == 0:
            return dy[0] <= eps and dy[1] >= -dy[0] / r3 - eps
        return dy[0] >= -eps and dy[1] >= dy[0] / r3 - eps
    raise ValueError(f"no closed-form dependence cone for lattice {name!r}")


def height_constant_a(hf: HeightFunction, R: float = 20.0) -> float:
    """Empirical ``a`` with ``h(w) <= a |w|`` (realized norm) over a box."""
    best = 0.0
    for w in box_vertices(hf.spec, R):
        r = float(np.linalg.norm(realize(hf.spec, w)))
        if r >= 1.0:
            best = max(best, hf(w) / r)
    return best


# --------------------------------------------------------------------------
# growth estimate
# --------------------------------------------------------------------------

def _residual(spec, V, lam, f, v0):
    nb = neighbor_list(spec, v0)
    val = -sum(f.get(w, 0.0) for w in nb) / len(nb) + (V(v0) - lam) * f.get(v0, 0.0)
    scale = max([abs(f.get(w, 0.0)) for w in nb] + [abs(f.get(v0, 0.0)), 1.0])
    return abs(val) / scale


@dataclass
class GrowthReport:
    root: Vertex
    C0: float
    D0: int
    rows: list  # dicts n, left, right, margin, holds

    @property
    def violations(self) -> list:
        return [r for r in self.rows if not r["holds"]]

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self, path) -> None:
        atomic_write_json(path, {"root": [self.root.j, list(self.root.n)], "C0": self.C0,
                                 "D0": self.D0, "rows": self.rows})


def growth_bound_check(spec: LatticeSpec, V: Potential, f: LatticeFunction, lam: float,
                       hf: HeightFunction, v, n_max: int, residual_tol: float = 1e-10,
                       rel_slack: float = 1e-9) -> GrowthReport:
    """Verify ``|f(v)| <= (C0 D0)^n sup_{shell n} |f|`` for ``n = 1..n_max``.

    Shells include successors, ``D0`` is the largest dependence set met and
    ``C0 = deg_max (1 + sup |V - lam|)`` over the vertices involved.  The
    equation must hold at the successor of ``v`` and of every member of the
    shells below ``n_max``; the residual there is measured relative to the
    largest value in the local stencil.
    """
    root = Vertex(v[0], tuple(v[1]))
    shells = dependence_shells(hf, root, n_max, include_successor=True)
    required = [root] + [w for s in shells[:-1] for w in s.members]
    seen = set()
    D0 = 0
    sup_pot = 0.0
    for w in required:
        if w in seen:
            continue
        seen.add(w)
        v0 = hf.successor(w)
        res = _residual(spec, V, lam, f, v0)
        if res > residual_tol:
            raise EquationResidualError(v0, res)
        D0 = max(D0, len(dependence_set(hf, w, include_successor=True)))
        sup_pot = max(sup_pot, abs(V(v0) - lam))
    C0 = max(spec.degrees) * (1.0 + sup_pot)
    left = abs(f.get(root, 0.0))
    rows = []
    for sh in shells:
        sup = max((abs(f.get(w, 0.0)) for w in sh.members), default=0.0)
        log_factor = sh.n * math.log(C0 * D0)
        right = sup * math.exp(log_factor) if log_factor < 700 else math.inf
        holds = left <= right * (1 + rel_slack) + 1e-300
        rows.append({"n": sh.n, "left": left, "right": right, "margin": right - left, "holds": bool(holds)})
    return GrowthReport(root, C0, D0, rows)


def manufacture_solution(spec: LatticeSpec, V: Potential, lam: float, hf: HeightFunction, v,
                         n_max: int, rng: np.random.Generator, complex_values: bool = False) -> LatticeFunction:
    """Exact solution on the shells of ``v`` by propagation from the far shell.

    Random values are prescribed on members of shell ``n_max`` that belong to
    no earlier shell; every other vertex is then solved from the equation at
    its successor, in order of decreasing height.  Requires the successor map
    to be injective on the vertices involved.
    """
    root = Vertex(v[0], tuple(v[1]))
    shells = dependence_shells(hf, root, n_max, include_successor=True)
    inner = {root}
    for s in shells[:-1]:
        inner.update(s.members)
    free = [w for w in shells[-1].members if w not in inner]
    f: LatticeFunction = {}
    for w in free:
        val = rng.uniform(-1, 1)
        if complex_values:
            val = val + 1j * rng.uniform(-1, 1)
        f[w] = val
    used = {}
    for w in sorted(inner, key=lambda u: (-hf(u), u)):
        v0 = hf.successor(w)
        if v0 in used:
            raise ValueError(f"successor {v0} is shared by {used[v0]} and {w}")
        used[v0] = w
        nb = neighbor_list(spec, v0)
        rest = sum(f[u] for u in nb if u != w)
        f[w] = len(nb) * (V(v0) - lam) * f[v0] - rest
    return f


# --------------------------------------------------------------------------
# decay-forces-zero
# --------------------------------------------------------------------------

@dataclass
class DecayReport:
    values: list
    log_values: list
    log_ratio: float
    status: str  # "certified", "not reached", "boundary", "A too small"
    certificate_n: int | None = None

    @property
    def decreasing(self) -> bool:
        return self.log_ratio < 0


def decay_bound_sequence(C0: float, D0: int, C_A: float, A: float, a: float, h_v: int,
                         n_max: int) -> DecayReport:
    """``b_n = C_A exp(-A h_v / a) (C0 D0 exp(-A/a))^n`` for ``n = 1..n_max``.

    Computed in log space, so the ratio is exactly 1 when ``A/a = ln(C0 D0)``.
    When the ratio is below 1 the first ``n`` with ``b_n < 1e-300`` is
    reported as a vanishing certificate.
    """
    if min(C0, C_A, A, a) <= 0 or D0 < 1 or n_max < 1 or h_v < 0:
        raise ValueError("decay_bound_sequence needs positive parameters, D0 >= 1, h_v >= 0")
    log_ratio = math.log(C0 * D0) - A / a
    if abs(log_ratio) <= 4 * np.finfo(float).eps * max(abs(math.log(C0 * D0)), A / a):
        log_ratio = 0.0
    log0 = math.log(C_A) - A * h_v / a
    logs = [log0 + n * log_ratio for n in range(1, n_max + 1)]
    values = [0.0 if t < -745 else math.inf if t > 709 else math.exp(t) for t in logs]
    target = math.log(CERTIFICATE_LEVEL)
    cert = None
    if log_ratio < 0:
        cert = next((n for n, t in enumerate(logs, start=1) if t < target), None)
        status = "certified" if cert is not None else "not reached"
    elif log_ratio == 0:
        status = "boundary"
    else:
        status = "A too small"
    return DecayReport(values, logs, log_ratio, status, cert)


def write_shells_csv(path, hf: HeightFunction, shells: Sequence[DependenceShell]) -> None:
    d = hf.spec.d
    header = ["n", "j"] + [f"n{i + 1}" for i in range(d)] + ["h"]
    rows = [[s.n, w.j, *w.n, hf(w)] for s in shells for w in s.members]
    write_csv(path, header, rows, fmt="{}")
