"""Explicit paths from complex Fermi-surface points to the real torus.

For the square lattice the surface is ``sum_j cos z_j = -d lam``; for the
hexagonal lattice, with ``zeta = ((z1 + z2)/2, (z1 - z2)/2)`` and
``eta = cos zeta``, it is ``eta2 (eta1 + eta2) = mu``.  Paths are built in
the cosine images (``w_j = cos z_j`` or ``eta_j``), where they are piecewise
linear or circular, and lifted back with a continuously tracked inverse
cosine.  Each image moves inside the ellipse ``cos({|Im zeta| <= gamma})``
it started in, which keeps the lifted path in the strip ``|Im z| < a``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._io import write_csv
from .momentum import Symbol, char_poly, grad_char_poly, symbol_from_lattice
from .lattice_core import builtin_lattice

__all__ = [
    "PathReport",
    "PathSample",
    "acos_branch",
    "cosine_ellipse",
    "hexagonal_connect",
    "in_strip",
    "random_hexagonal_start",
    "random_square_start",
    "square_connect",
    "verify_path",
]

TWO_PI = 2.0 * math.pi
STAGE_MARKS = tuple(j / 5 for j in range(6))


class BranchError(ValueError):
    """No inverse-cosine branch lies close enough to the hint."""


@dataclass(frozen=True)
class CosineEllipse:
    """Image of the strip ``|Im zeta| <= gamma`` under the cosine."""

    gamma: float

    @property
    def semi_major(self) -> float:
        return math.cosh(self.gamma)

    @property
    def semi_minor(self) -> float:
        return math.sinh(self.gamma)

    def level(self, eta: complex) -> float:
        """``(Re/cosh)^2 + (Im/sinh)^2``; at most 1 inside (``gamma > 0``)."""
        if self.gamma == 0:
            return math.inf if eta.imag != 0 or abs(eta.real) > 1 else abs(eta.real)
        return (eta.real / self.semi_major) ** 2 + (eta.imag / self.semi_minor) ** 2

    def contains(self, eta: complex, tol: float = 1e-12) -> bool:
        eta = complex(eta)
        if self.gamma == 0:
            return abs(eta.imag) <= tol and abs(eta.real) <= 1 + tol
        return self.level(eta) <= 1 + tol


def cosine_ellipse(gamma: float) -> CosineEllipse:
    """Semi-axes ``(cosh gamma, sinh gamma)``; ``gamma = 0`` is the segment ``[-1, 1]``."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    return CosineEllipse(float(gamma))


def acos_branch(w: complex, hint: complex, max_dist: float = math.pi / 2) -> complex:
    """Solution of ``cos zeta = w`` nearest to ``hint`` among ``+-acos(w) + 2 pi k``."""
    z0 = cmath.acos(w)
    best, dist = None, math.inf
    for base in (z0, -z0):
        k = round((hint - base).real / TWO_PI)
        cand = base + TWO_PI * k
        dd = abs(cand - hint)
        if dd < dist:
            best, dist = cand, dd
    if dist > max_dist:
        raise BranchError(f"no branch of acos({w}) within {max_dist:.3g} of {hint}")
    return best


def in_strip(z: Sequence[complex], a: float) -> bool:
    return float(np.sum(np.imag(np.asarray(z)) ** 2)) < a * a


@dataclass
class PathSample:
    """Samples ``c(t)`` of a path on ``{p(., lam) = 0}``."""

    lattice: str
    lam: float
    a: float
    t_grid: np.ndarray
    points: np.ndarray  # (T, d) complex
    images: np.ndarray  # cosine images along the path (T, d) complex
    residuals: np.ndarray
    stage_marks: tuple = STAGE_MARKS
    notes: list = field(default_factory=list)

    def at(self, t: float) -> int:
        """Index of the sample nearest to ``t``."""
        return int(np.argmin(np.abs(self.t_grid - t)))

    def to_csv(self, path) -> None:
        d = self.points.shape[1]
        header = ["t"] + [f"{p}{i + 1}" for i in range(d) for p in ("re_z", "im_z")] + ["residual"]
        rows = []
        for t, z, r in zip(self.t_grid, self.points, self.residuals):
            row = [float(t)]
            for zj in z:
                row += [float(zj.real), float(zj.imag)]
            rows.append(row + [float(r)])
        write_csv(path, header, rows)


def _t_grid(steps: int) -> np.ndarray:
    if steps < 10:
        raise ValueError("steps must be >= 10")
    return np.unique(np.concatenate([np.linspace(0.0, 1.0, steps), STAGE_MARKS]))


def _lift(images: np.ndarray, start: np.ndarray) -> np.ndarray:
    """Continuous inverse cosine of each column, anchored at ``start``."""
    out = np.empty_like(images)
    hint = np.asarray(start, dtype=complex).copy()
    for i, row in enumerate(images):
        for j, w in enumerate(row):
            hint[j] = acos_branch(w, hint[j])
        out[i] = hint
    return out


def _validate_start(sym: Symbol, z0, lam: float, a: float, surface_tol: float, singular_cutoff: float):
    z0 = np.asarray(z0, dtype=complex)
    if z0.shape != (sym.d,):
        raise ValueError(f"z0 must have {sym.d} components")
    res = abs(char_poly(sym, z0, lam))
    if res > surface_tol:
        raise ValueError(f"z0 is not on the Fermi surface (|p| = {res:.3e})")
    if np.linalg.norm(grad_char_poly(sym, z0, lam)) < singular_cutoff * (1 + abs(lam)):
        raise ValueError("z0 is a singular point of the Fermi surface")
    if not in_strip(z0, a):
        raise ValueError("z0 is outside the strip |Im z| < a")
    return z0


def _normalize(z: np.ndarray) -> np.ndarray:
    return np.mod(z.real, TWO_PI) + 1j * z.imag


# --------------------------------------------------------------------------
# square lattice
# --------------------------------------------------------------------------

def _pair_ramp(vals: np.ndarray, notes: list, label: str):
    """One balancing step: zero the smallest nonzero entry against an opposite-sign one.

    Returns ``(i, k, v_i)`` or ``None`` when every entry is already zero.
    """
    nz = [j for j in range(len(vals)) if vals[j] != 0.0]
    if not nz:
        notes.append(f"{label}: skipped (already zero)")
        return None
    i = min(nz, key=lambda j: (abs(vals[j]), j))
    opp = [j for j in nz if j != i and vals[j] * vals[i] < 0]
    if not opp:
        raise ValueError(f"{label}: no compensating index; the start is off the surface")
    k = min(opp, key=lambda j: (-abs(vals[j]), j))
    return i, k, vals[i]


def _square_images(w0: np.ndarray, lam: float, t: np.ndarray, notes: list) -> np.ndarray:
    d = len(w0)
    # breakpoints of the image path: list of (t, w) with linear interpolation between
    knots = [(0.0, w0.copy())]

    def run(t_start, t_end, nsub, part, label):
        w = knots[-1][1].copy()
        edges = np.linspace(t_start, t_end, nsub + 1)
        for s in range(nsub):
            vals = w.imag.copy() if part == "im" else w.real + lam
            vals[np.abs(vals) < 1e-13] = 0.0
            step = _pair_ramp(vals, notes, f"{label}[{s}]")
            if step is not None:
                i, k, vi = step
                delta = vi if part == "re" else 1j * vi
                w[i] -= delta
                w[k] += delta
                if part == "re":
                    w[i] = complex(-lam, w[i].imag)
                else:
                    w[i] = complex(w[i].real, 0.0)
            knots.append((edges[s + 1], w.copy()))

    run(0.0, STAGE_MARKS[2], max(d - 1, 1), "im", "imaginary balancing")
    w = knots[-1][1]
    knots[-1] = (knots[-1][0], w.real.astype(complex))
    if d >= 3:
        run(STAGE_MARKS[2], STAGE_MARKS[4], d - 2, "re", "real balancing")
    else:
        notes.append("real balancing: nothing to do for d = 2")
        knots.append((STAGE_MARKS[4], knots[-1][1].copy()))
    knots.append((1.0, np.full(d, -lam, dtype=complex)))
    kt = np.array([k[0] for k in knots])
    kw = np.array([k[1] for k in knots])
    out = np.empty((len(t), d), dtype=complex)
    for j in range(d):
        out[:, j] = np.interp(t, kt, kw[:, j].real) + 1j * np.interp(t, kt, kw[:, j].imag)
    return out


def square_connect(z0, lam: float, a: float, steps: int = 1000, d: int | None = None,
                   surface_tol: float = 1e-8, singular_cutoff: float = 1e-6) -> PathSample:
    """Path from ``z0`` on ``sum cos z_j = -d lam`` to ``(arccos(-lam), ...)``.

    Stages in the images ``w_j = cos z_j`` (``t_j = j/5``):

    * ``[0, t2]``: cancel imaginary parts pairwise, smallest first, against an
      entry of opposite sign; real parts are held fixed.
    * ``[t2, t4]``: with ``u_j = Re w_j + lam`` cancel all but two entries the
      same way.
    * ``[t4, 1]``: send the last two ``u_j`` to zero together.
    """
    z0 = np.asarray(z0, dtype=complex)
    d = d or len(z0)
    if not -1 < lam < 1:
        raise ValueError("square_connect needs lam in (-1, 1)")
    sym = symbol_from_lattice(builtin_lattice("square", d))
    z0 = _validate_start(sym, z0, lam, a, surface_tol, singular_cutoff)
    w0 = np.cos(z0)
    w0 = w0 + (-d * lam - w0.sum()) / d  # put the images exactly on the surface
    notes: list = []
    t = _t_grid(steps)
    images = _square_images(w0, lam, t, notes)
    lifted = _lift(images[1:], z0)
    points = np.vstack([z0[None, :], lifted])
    images[0] = np.cos(z0)
    residuals = np.abs(char_poly(sym, points, lam))
    return PathSample("square", float(lam), float(a), t, points, images, residuals, STAGE_MARKS, notes)


def random_square_start(rng: np.random.Generator, lam: float, d: int = 2, spread: float = 0.4) -> np.ndarray:
    """A regular complex point on the square-lattice surface near a real one."""
    for _ in range(1000):
        x = rng.uniform(0, TWO_PI, d - 1)
        target = -d * lam - np.cos(x).sum()
        if abs(target) >= 1:
            continue
        xd = math.acos(target) * rng.choice([-1, 1])
        z = x + 1j * rng.uniform(-spread, spread, d - 1)
        wd = -d * lam - np.cos(z).sum()
        zd = acos_branch(wd, xd + 0j, max_dist=math.inf)
        out = np.append(z, zd)
        if np.linalg.norm(np.sin(out)) > 1e-3:
            return _normalize(out)
    raise RuntimeError("could not sample a regular starting point")


# --------------------------------------------------------------------------
# hexagonal lattice
# --------------------------------------------------------------------------

def hexagonal_mu(lam: float) -> float:
    rho = 1.5 * (3 * lam * lam - 1)
    return (rho + 1) / 2


def _admissible_radius(mu: float) -> tuple[float, float]:
    q = math.sqrt(1 + 4 * mu)
    lo = max((-1 + q) / 2, (1 - q) / 2, 0.0)
    hi = min((1 + q) / 2, 1.0)
    return lo, hi


def _hex_images(eta0: np.ndarray, mu: float, t: np.ndarray, notes: list) -> np.ndarray:
    out = np.empty((len(t), 2), dtype=complex)
    first = t <= 0.5
    s1 = np.clip(t / 0.5, 0, 1)
    s2 = np.clip((t - 0.5) / 0.5, 0, 1)
    if mu == 0.0:
        # eta2 (eta1 + eta2) = 0: move along whichever factor vanishes
        e1, e2 = eta0
        if abs(e2) <= abs(e1 + e2):
            notes.append("mu = 0: branch eta2 = 0")
            free = e1
            end = min(max(free.real, -0.9), 0.9)
            path = np.where(first, free.real + 1j * free.imag * (1 - s1), free.real + (end - free.real) * s2)
            out[:, 0], out[:, 1] = path, 0.0
        else:
            notes.append("mu = 0: branch eta1 = -eta2")
            end = min(max(e2.real, -0.9), 0.9)
            path = np.where(first, e2.real + 1j * e2.imag * (1 - s1), e2.real + (end - e2.real) * s2)
            out[:, 0], out[:, 1] = -path, path
        return out
    r, theta = abs(eta0[1]), cmath.phase(eta0[1])
    theta_end = math.pi * round(theta / math.pi)
    sign = 1.0 if round(theta / math.pi) % 2 == 0 else -1.0
    lo, hi = _admissible_radius(mu)
    margin = 0.1 * (hi - lo)
    r_end = min(max(r, lo + margin), hi - margin)
    th = theta + (theta_end - theta) * s1
    rad = np.where(first, r, r + (r_end - r) * s2)
    eta2 = np.where(first, r * np.exp(1j * th), sign * rad)
    out[:, 1] = eta2
    out[:, 0] = mu / eta2 - eta2
    if abs(r - math.sqrt(abs(mu))) < 1e-14:
        notes.append("start on the focal radius r = sqrt(|mu|)")
    return out


def hexagonal_connect(z0, lam: float, a: float, steps: int = 1000, surface_tol: float = 1e-8,
                      singular_cutoff: float = 1e-6) -> PathSample:
    """Path from ``z0`` on the hexagonal Fermi surface to a real point.

    With ``eta2 = r exp(i theta)`` and ``eta1 = mu/eta2 - eta2``: on
    ``[0, 1/2]`` the phase turns linearly to the nearest multiple of ``pi``;
    on ``[1/2, 1]`` the (now real) ``eta2`` moves linearly to a radius where
    both ``eta1`` and ``eta2`` lie in ``(-1, 1)``.
    """
    if not -1 < lam < 1 or lam == 0:
        raise ValueError("hexagonal_connect needs lam in (-1, 1) without 0")
    mu = hexagonal_mu(lam)
    if not -0.25 < mu < 2:
        raise ValueError(f"mu = {mu} outside (-1/4, 2)")
    if abs(mu) < 1e-15:
        mu = 0.0
    sym = symbol_from_lattice(builtin_lattice("hexagonal"))
    z0 = _validate_start(sym, z0, lam, a, surface_tol, singular_cutoff)
    zeta0 = np.array([(z0[0] + z0[1]) / 2, (z0[0] - z0[1]) / 2])
    eta0 = np.cos(zeta0)
    notes: list = []
    t = _t_grid(steps)
    images = _hex_images(eta0, mu, t, notes)
    zeta = np.vstack([zeta0[None, :], _lift(images[1:], zeta0)])
    points = np.stack([zeta[:, 0] + zeta[:, 1], zeta[:, 0] - zeta[:, 1]], axis=1)
    images[0] = eta0
    residuals = np.abs(char_poly(sym, points, lam))
    return PathSample("hexagonal", float(lam), float(a), t, points, images, residuals, STAGE_MARKS, notes)


def hexagonal_identity_error(ps: PathSample) -> float:
    """Max of ``|cos z1 + cos z2 + cos(z1 - z2) - (2 eta2 (eta1 + eta2) - 1)|`` along a path."""
    z1, z2 = ps.points[:, 0], ps.points[:, 1]
    e1, e2 = np.cos((z1 + z2) / 2), np.cos((z1 - z2) / 2)
    lhs = np.cos(z1) + np.cos(z2) + np.cos(z1 - z2)
    return float(np.max(np.abs(lhs - (2 * e2 * (e1 + e2) - 1))))


def random_hexagonal_start(rng: np.random.Generator, lam: float, spread: float = 0.3) -> np.ndarray:
    """A regular complex point on the hexagonal surface with small imaginary part."""
    mu = hexagonal_mu(lam)
    sym = symbol_from_lattice(builtin_lattice("hexagonal"))
    for _ in range(1000):
        zeta1 = rng.uniform(0, TWO_PI) + 1j * rng.uniform(-spread, spread)
        e1 = cmath.cos(zeta1)
        disc = cmath.sqrt(e1 * e1 + 4 * mu)
        roots = [(-e1 + disc) / 2, (-e1 - disc) / 2]
        e2 = roots[int(rng.integers(2))]
        zeta2 = cmath.acos(e2) * rng.choice([-1, 1])
        if abs(zeta2.imag) > 2 * spread:
            continue
        z = np.array([zeta1 + zeta2, zeta1 - zeta2])
        if np.linalg.norm(grad_char_poly(sym, z, lam)) > 1e-3:
            return _normalize(z)
    raise RuntimeError("could not sample a regular starting point")


# --------------------------------------------------------------------------
# verification
# --------------------------------------------------------------------------

@dataclass
class PathReport:
    max_residual: float
    end_imag: float
    max_strip_norm: float
    max_jump: float
    tol: float
    a: float
    jump_bound: float

    @property
    def residual_ok(self) -> bool:
        return self.max_residual <= self.tol

    @property
    def endpoint_real(self) -> bool:
        return self.end_imag <= self.tol

    @property
    def in_strip(self) -> bool:
        return self.max_strip_norm < self.a

    @property
    def continuous(self) -> bool:
        return self.max_jump <= self.jump_bound

    @property
    def passed(self) -> bool:
        return self.residual_ok and self.endpoint_real and self.in_strip and self.continuous

    def to_dict(self) -> dict:
        return {"max_residual": self.max_residual, "end_imag": self.end_imag,
                "max_strip_norm": self.max_strip_norm, "max_jump": self.max_jump,
                "passed": self.passed}


def verify_path(ps: PathSample, sym: Symbol, lam: float, tol: float = 1e-8,
                jump_bound: float = 0.5) -> PathReport:
    """Residual, endpoint, strip and continuity checks on a sampled path."""
    res = np.abs(char_poly(sym, ps.points, lam))
    end_imag = float(np.max(np.abs(ps.points[-1].imag)))
    strip = float(np.sqrt(np.max(np.sum(ps.points.imag ** 2, axis=1))))
    jumps = np.max(np.abs(np.diff(ps.points, axis=0)), axis=1) if len(ps.points) > 1 else np.zeros(1)
    return PathReport(float(res.max()), end_imag, strip, float(jumps.max()), tol, ps.a, jump_bound)
