"""Momentum-space symbols, characteristic polynomials and Fermi surfaces.

The symbol of ``H_0 = -Delta`` is the ``s x s`` matrix of trigonometric
polynomials ``H_0(x) = sum_m A_m exp(-i m.x)``, obtained by sending the shift
``u(n) -> u(n + m)`` to multiplication by ``exp(-i m.x)``.  Everything here
accepts complex torus points, so the same code evaluates ``p(z, lam)`` on the
complexified torus.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from ._io import atomic_write_json, write_csv
from .lattice_core import LatticeSpec

__all__ = [
    "ExclusionSet",
    "FermiSample",
    "Symbol",
    "ThresholdSet",
    "band_functions",
    "char_poly",
    "dlambda_char_poly",
    "exclusion_set_T1",
    "fermi_slice",
    "grad_char_poly",
    "spectrum",
    "symbol_from_lattice",
    "thresholds",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class Symbol:
    """Hermitian trigonometric-polynomial matrix ``sum_m A_m exp(-i m.x)``.

    ``shifts`` has shape ``(K, d)`` and ``coeffs`` shape ``(K, s, s)``.
    """

    shifts: np.ndarray
    coeffs: np.ndarray
    name: str = "custom"
    lattice_d: int | None = None

    def __post_init__(self):
        shifts = np.array(self.shifts, dtype=int, ndmin=2)
        coeffs = np.array(self.coeffs, dtype=complex)
        if coeffs.ndim != 3 or coeffs.shape[0] != shifts.shape[0] or coeffs.shape[1] != coeffs.shape[2]:
            raise ValueError("coeffs must have shape (K, s, s) matching shifts (K, d)")
        object.__setattr__(self, "shifts", shifts)
        object.__setattr__(self, "coeffs", coeffs)
        lookup = {tuple(m): i for i, m in enumerate(shifts.tolist())}
        for i, m in enumerate(shifts.tolist()):
            partner = lookup.get(tuple(-a for a in m))
            if partner is None or not np.allclose(coeffs[partner], coeffs[i].conj().T, atol=1e-15):
                raise ValueError(f"coefficient at shift {m} violates A_(-m) = A_m^dagger")

    @property
    def d(self) -> int:
        return self.shifts.shape[1]

    @property
    def s(self) -> int:
        return self.coeffs.shape[1]

    @classmethod
    def from_coeff_map(cls, coeffs: dict, name: str = "custom") -> "Symbol":
        keys = sorted(coeffs)
        return cls(np.array(keys, dtype=int), np.array([coeffs[k] for k in keys]), name=name)

    def coeff_map(self) -> dict:
        return {tuple(m): self.coeffs[i].copy() for i, m in enumerate(self.shifts.tolist())}

    def _phases(self, z) -> np.ndarray:
        z = np.asarray(z)
        if z.shape[-1] != self.d:
            raise ValueError(f"torus points need {self.d} components, got shape {z.shape}")
        return np.exp(-1j * (z @ self.shifts.T))

    def matrix(self, z) -> np.ndarray:
        """``H_0(z)`` with shape ``z.shape[:-1] + (s, s)``."""
        return np.einsum("...k,kij->...ij", self._phases(z), self.coeffs)

    def matrix_derivatives(self, z) -> np.ndarray:
        """``dH_0/dz_i`` with shape ``z.shape[:-1] + (d, s, s)``."""
        ph = self._phases(z)
        dcoef = -1j * self.shifts.T[:, :, None, None] * self.coeffs[None]  # (d, K, s, s)
        return np.einsum("...k,akij->...aij", ph, dcoef)


def symbol_from_lattice(spec: LatticeSpec) -> Symbol:
    """Symbol of ``-Delta`` with entries ``-(deg_j deg_k)^(-1/2) sum exp(-i m.x)``."""
    s, d = spec.s, spec.d
    acc: dict = {}
    for j, k, m in spec.edge_generators:
        A = acc.setdefault(m, np.zeros((s, s), dtype=complex))
        A[j, k] -= 1.0 / math.sqrt(spec.degree(j) * spec.degree(k))
    keys = sorted(acc)
    return Symbol(np.array(keys, dtype=int).reshape(-1, d), np.array([acc[k] for k in keys]),
                  name=spec.name, lattice_d=d)


# --------------------------------------------------------------------------
# characteristic polynomial and derivatives
# --------------------------------------------------------------------------

def _adjugate(M: np.ndarray) -> np.ndarray:
    """Adjugate of a stack of square matrices (valid for singular ones)."""
    s = M.shape[-1]
    if s == 1:
        return np.ones_like(M)
    if s == 2:
        adj = np.empty_like(M)
        adj[..., 0, 0] = M[..., 1, 1]
        adj[..., 1, 1] = M[..., 0, 0]
        adj[..., 0, 1] = -M[..., 0, 1]
        adj[..., 1, 0] = -M[..., 1, 0]
        return adj
    adj = np.empty_like(M)
    idx = list(range(s))
    for i, j in itertools.product(idx, idx):
        rows = [r for r in idx if r != j]
        cols = [c for c in idx if c != i]
        minor = M[..., rows, :][..., :, cols]
        adj[..., i, j] = (-1) ** (i + j) * np.linalg.det(minor)
    return adj


def _shifted(sym: Symbol, z, lam) -> np.ndarray:
    H = sym.matrix(z)
    lam = np.asarray(lam, dtype=complex)
    return H - lam[..., None, None] * np.eye(sym.s)


def char_poly(sym: Symbol, z, lam):
    """``p(z, lam) = det(H_0(z) - lam)``; broadcasts over leading axes."""
    M = _shifted(sym, z, lam)
    if sym.s == 1:
        out = M[..., 0, 0]
    else:
        out = np.linalg.det(M)
    return out[()] if np.ndim(out) == 0 else out


def grad_char_poly(sym: Symbol, z, lam):
    """Analytic ``grad_z p(z, lam)`` via Jacobi's formula ``tr(adj(M) dM)``."""
    M = _shifted(sym, z, lam)
    adj = _adjugate(M)
    dH = sym.matrix_derivatives(z)
    return np.einsum("...ij,...aji->...a", adj, dH)


def dlambda_char_poly(sym: Symbol, z, lam):
    """``d p / d lam = -tr(adj(H_0(z) - lam))``."""
    adj = _adjugate(_shifted(sym, z, lam))
    out = -np.trace(adj, axis1=-2, axis2=-1)
    return out[()] if np.ndim(out) == 0 else out


def band_functions(sym: Symbol, x) -> np.ndarray:
    """Ascending eigenvalues of ``H_0(x)`` for real ``x``."""
    x = np.asarray(x, dtype=float)
    H = sym.matrix(x)
    if sym.s == 1:
        return H[..., 0].real
    return np.linalg.eigvalsh(H)


# --------------------------------------------------------------------------
# spectrum
# --------------------------------------------------------------------------

def _grid_points(d: int, G: int, periodic: bool) -> np.ndarray:
    if periodic:
        axis = np.arange(G) * (TWO_PI / G)
    else:
        axis = np.linspace(-math.pi, math.pi, G)
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _band_extrema(sym: Symbol, pts: np.ndarray, chunk: int = 1 << 17):
    s = sym.s
    lo = np.full(s, np.inf)
    hi = np.full(s, -np.inf)
    lo_x = np.zeros((s, sym.d))
    hi_x = np.zeros((s, sym.d))
    for start in range(0, len(pts), chunk):
        block = pts[start:start + chunk]
        E = band_functions(sym, block)
        imin = E.argmin(axis=0)
        imax = E.argmax(axis=0)
        for k in range(s):
            if E[imin[k], k] < lo[k]:
                lo[k], lo_x[k] = E[imin[k], k], block[imin[k]]
            if E[imax[k], k] > hi[k]:
                hi[k], hi_x[k] = E[imax[k], k], block[imax[k]]
    return lo, hi, lo_x, hi_x


def _polish(sym: Symbol, k: int, x0: np.ndarray, sign: float) -> float:
    def f(x):
        return sign * band_functions(sym, x)[k]

    res = optimize.minimize(f, x0, method="Nelder-Mead",
                            options={"xatol": 1e-11, "fatol": 1e-15, "maxiter": 4000})
    return sign * min(res.fun, f(x0))


def _merge(intervals, tol):
    out = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1] + tol:
            out[-1][1] = max(out[-1][1], float(hi))
        else:
            out.append([float(lo), float(hi)])
    return [tuple(iv) for iv in out]


def spectrum(sym: Symbol, grid_per_axis: int = 201, polish: bool = True,
             merge_tol: float | None = None) -> list[tuple[float, float]]:
    """``sigma(H_0)`` as a list of maximal closed intervals.

    Band ranges are sampled on ``grid_per_axis`` points per axis spanning
    ``[-pi, pi]`` (both ends included), optionally polished by a local
    optimizer started at the best grid point, and merged when gaps are below
    ``merge_tol`` (default: one grid step, the sampling resolution).
    """
    if grid_per_axis < 16:
        raise ValueError("grid_per_axis must be >= 16")
    pts = _grid_points(sym.d, grid_per_axis, periodic=False)
    lo, hi, lo_x, hi_x = _band_extrema(sym, pts)
    if polish:
        for k in range(sym.s):
            lo[k] = min(lo[k], _polish(sym, k, lo_x[k], 1.0))
            hi[k] = max(hi[k], _polish(sym, k, hi_x[k], -1.0))
    if merge_tol is None:
        merge_tol = TWO_PI / (grid_per_axis - 1)
    return _merge(zip(lo, hi), merge_tol)


# --------------------------------------------------------------------------
# thresholds
# --------------------------------------------------------------------------

@dataclass
class ThresholdSet:
    """Critical values of ``p`` on the real torus.

    ``unconverged`` lists candidates whose refinement failed; their grid
    values are kept in ``values`` and flagged here.
    """

    values: list[float]
    unconverged: list[dict] = field(default_factory=list)
    critical_points: list[tuple[float, np.ndarray]] = field(default_factory=list)

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


def _periodic_local_minima(F: np.ndarray, G: int, d: int) -> np.ndarray:
    grid = F.reshape((G,) * d)
    mask = np.ones_like(grid, dtype=bool)
    for ax in range(d):
        for shift in (1, -1):
            mask &= grid <= np.roll(grid, shift, axis=ax)
    return np.flatnonzero(mask.ravel())


def _joint_residual(sym: Symbol):
    def F(y):
        x, lam = y[:-1], y[-1]
        p = char_poly(sym, x, lam)
        g = grad_char_poly(sym, x, lam)
        return np.concatenate([[p.real], g.real])

    return F


def thresholds(sym: Symbol, grid_per_axis: int = 64, refine_tol: float = 1e-14,
               accept_tol: float = 1e-9, dedup_tol: float = 1e-6) -> ThresholdSet:
    """Energies ``lam`` with a real ``x`` where ``p = 0`` and ``grad_x p = 0``.

    For every band the grid local minima of ``|grad_x p(x, band_k(x))|`` are
    refined by Levenberg-Marquardt on the joint system
    ``(p, grad_x p)(x, lam) = 0``; this also captures band touchings
    (double roots), where the band functions are not differentiable.
    """
    if grid_per_axis < 32:
        raise ValueError("grid_per_axis must be >= 32")
    G, d = grid_per_axis, sym.d
    pts = _grid_points(d, G, periodic=True)
    E = band_functions(sym, pts)
    h = TWO_PI / G
    F = _joint_residual(sym)
    found: list[tuple[float, np.ndarray]] = []
    unconverged = []
    for k in range(sym.s):
        band = E[:, k]
        if np.ptp(band) < 1e-12:
            found.append((float(band.mean()), pts[0]))
            continue
        phi = np.linalg.norm(grad_char_poly(sym, pts, band).real, axis=-1)
        cand_tol = 2.0 * h * math.sqrt(d) * phi.max()
        for i in _periodic_local_minima(phi, G, d):
            if phi[i] > cand_tol:
                continue
            y0 = np.append(pts[i], band[i])
            res = optimize.least_squares(F, y0, method="lm", xtol=refine_tol,
                                         ftol=refine_tol, gtol=refine_tol, max_nfev=2000)
            if np.linalg.norm(res.fun) <= accept_tol and abs(res.x[-1] - band[i]) < 10 * h:
                found.append((float(res.x[-1]), np.mod(res.x[:-1], TWO_PI)))
            else:
                found.append((float(band[i]), pts[i]))
                unconverged.append({"band": k, "x": pts[i].tolist(), "grid_value": float(band[i]),
                                    "residual": float(np.linalg.norm(res.fun))})
    found.sort(key=lambda t: t[0])
    values: list[float] = []
    crit: list[tuple[float, np.ndarray]] = []
    for val, x in found:
        if values and abs(val - values[-1]) <= dedup_tol:
            continue
        values.append(val)
        crit.append((val, x))
    return ThresholdSet(values, unconverged, crit)


# --------------------------------------------------------------------------
# Fermi surfaces
# --------------------------------------------------------------------------

@dataclass
class FermiSample:
    """Real Fermi-surface points ``{x : |p(x, lam)| <= tol}``."""

    lam: float
    points: np.ndarray
    abs_p: np.ndarray
    gradient_norms: np.ndarray
    tol: float
    singular_cutoff: float = 1e-6

    @property
    def singular(self) -> np.ndarray:
        return self.gradient_norms < self.singular_cutoff * (1.0 + abs(self.lam))

    def __len__(self):
        return len(self.points)

    def to_csv(self, path) -> None:
        d = self.points.shape[1] if self.points.ndim == 2 else 0
        header = [f"x{i + 1}" for i in range(d)] + ["abs_p", "grad_norm"]
        rows = [list(map(float, x)) + [float(a), float(g)]
                for x, a, g in zip(self.points, self.abs_p, self.gradient_norms)]
        write_csv(path, header, rows)


def _line_function(sym: Symbol, base: np.ndarray, axis: int, lam: float):
    def f(t):
        x = base.copy()
        x[axis] = t
        return float(char_poly(sym, x, lam).real)

    return f


def fermi_slice(sym: Symbol, lam: float, grid_per_axis: int = 64, tol: float = 1e-10,
                singular_cutoff: float = 1e-6) -> FermiSample:
    """Sample the real Fermi surface ``M_lam`` by 1-D root finding along grid lines.

    Sign changes of ``p`` between neighboring grid nodes are bracketed and
    solved with Brent's method; non-crossing dips of ``|p|`` (double roots,
    such as band touchings) are refined by bounded minimization.
    """
    if grid_per_axis < 32:
        raise ValueError("grid_per_axis must be >= 32")
    if tol <= 0:
        raise ValueError("tol must be positive")
    G, d = grid_per_axis, sym.d
    h = TWO_PI / G
    pts = _grid_points(d, G, periodic=True)
    P = char_poly(sym, pts, lam).real.reshape((G,) * d)
    scale = np.abs(P).max() if P.size else 1.0
    dip_tol = 4.0 * h * max(scale, 1e-300)
    found = []
    for x in pts[np.abs(P.ravel()) <= tol]:
        found.append(x.copy())
    for ax in range(d):
        nxt = np.roll(P, -1, axis=ax)
        prv = np.roll(P, 1, axis=ax)
        cross = (P * nxt < 0) & (np.abs(P) > tol) & (np.abs(nxt) > tol)
        dips = ((np.abs(P) < np.abs(nxt)) & (np.abs(P) < np.abs(prv)) & (P * nxt > 0)
                & (P * prv > 0) & (np.abs(P) > tol) & (np.abs(P) < dip_tol))
        for flat in np.flatnonzero(cross.ravel()):
            base = pts[flat].copy()
            f = _line_function(sym, base, ax, lam)
            t = optimize.brentq(f, base[ax], base[ax] + h, xtol=1e-15, rtol=1e-15, maxiter=200)
            base[ax] = t
            found.append(base)
        for flat in np.flatnonzero(dips.ravel()):
            base = pts[flat].copy()
            f = _line_function(sym, base, ax, lam)
            res = optimize.minimize_scalar(lambda t: abs(f(t)), bounds=(base[ax] - h, base[ax] + h),
                                           method="bounded", options={"xatol": 1e-12})
            base[ax] = res.x
            if abs(f(res.x)) <= tol:
                found.append(base)
    if found:
        X = np.mod(np.array(found), TWO_PI)
        X = np.unique(np.round(X, 12), axis=0)
        absp = np.abs(char_poly(sym, X, lam))
        keep = absp <= tol
        X, absp = X[keep], absp[keep]
        grads = np.linalg.norm(grad_char_poly(sym, X, lam), axis=-1)
    else:
        X = np.zeros((0, d))
        absp = np.zeros(0)
        grads = np.zeros(0)
    return FermiSample(float(lam), X, absp, grads, tol, singular_cutoff)


# --------------------------------------------------------------------------
# exclusion sets
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ExclusionSet:
    """Energies excluded from unique continuation for a builtin lattice."""

    points: tuple = ()
    intervals: tuple = ()
    specified: bool = True

    def distance(self, lam: float) -> float:
        if not self.specified:
            raise ValueError("no exclusion set is available for this lattice")
        dists = [abs(lam - p) for p in self.points]
        for lo, hi in self.intervals:
            dists.append(0.0 if lo <= lam <= hi else min(abs(lam - lo), abs(lam - hi)))
        return min(dists) if dists else math.inf

    def contains(self, lam: float, tol: float = 0.0) -> bool:
        return self.distance(lam) <= tol


def exclusion_set_T1(name: str, d: int = 2) -> ExclusionSet:
    if name == "square":
        return ExclusionSet(points=(-1.0, 1.0))
    if name == "hexagonal":
        return ExclusionSet(points=(-1.0, 0.0, 1.0))
    if name == "kagome":
        return ExclusionSet(points=(-1.0, -0.25, 0.5))
    if name == "ladder":
        q = 2 * d + 1
        return ExclusionSet(intervals=((-1.0, (-2 * d + 1) / q), ((2 * d - 1) / q, 1.0)))
    if name == "triangular":
        return ExclusionSet(specified=False)
    raise ValueError(f"unknown lattice {name!r}")


# --------------------------------------------------------------------------
# exports
# --------------------------------------------------------------------------

def write_spectrum_json(path, lattice: str, d: int, intervals: Sequence) -> None:
    atomic_write_json(path, {"lattice": lattice, "d": d,
                             "intervals": [[float(a), float(b)] for a, b in intervals]})


def write_thresholds_json(path, lattice: str, d: int, values: Sequence[float]) -> None:
    atomic_write_json(path, {"lattice": lattice, "d": d, "values": [float(v) for v in values]})
