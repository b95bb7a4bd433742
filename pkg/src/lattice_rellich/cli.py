"""Command line front-end.

Every subcommand reads a :class:`RunConfig` (JSON file plus flag overrides),
echoes the effective configuration to ``<out>/config.json`` and writes its
artifacts atomically.  Exit status: 0 success, 1 a report or invariant
failed, 2 malformed input.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._io import atomic_write_json, atomic_write_text
from .fermi_connectivity import (hexagonal_connect, random_hexagonal_start, random_square_start,
                                 square_connect, verify_path)
from .height import builtin_height, decay_bound_sequence, growth_bound_check
from .lattice_core import BUILTIN_NAMES, Vertex, builtin_lattice
from .momentum import (exclusion_set_T1, fermi_slice, spectrum, symbol_from_lattice, thresholds,
                       write_spectrum_json, write_thresholds_json)
from .operators import Potential, assemble_truncated, eigensolve_symmetric, radiation_estimate
from .ucp import (boundary_graph_from_box, check_a5, dirichlet_neumann_nullity, hexagon_ring,
                  two_points_condition)

SUBCOMMANDS = ("info", "spectrum", "thresholds", "fermi", "ucp", "rellich-demo", "connect")


class ConfigError(ValueError):
    """Malformed configuration (exit status 2)."""


@dataclass
class RunConfig:
    lattice: str = "square"
    d: int = 2
    lam: float | None = None
    grid: int | None = None
    R: float | None = None
    alpha: float = 1.0
    C: float = 5.0
    seed: int = 0
    mode: str = "exhaustive"
    out: str = "out"
    norm: str = "euclidean"
    steps: int = 1000
    tol: float = 1e-8
    samples: int = 2000

    def validate(self) -> "RunConfig":
        if self.lattice not in BUILTIN_NAMES:
            raise ConfigError(f"unknown lattice {self.lattice!r}")
        if self.lattice in ("triangular", "hexagonal", "kagome") and self.d != 2:
            raise ConfigError(f"{self.lattice} is two-dimensional")
        if not 2 <= self.d <= 4:
            raise ConfigError("d must be between 2 and 4")
        if self.grid is not None and self.grid < 16:
            raise ConfigError("grid must be >= 16")
        if self.R is not None and not self.R > 0:
            raise ConfigError("R must be positive")
        for name in ("alpha", "C", "tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.mode not in ("exhaustive", "random"):
            raise ConfigError("mode must be 'exhaustive' or 'random'")
        if self.norm not in ("euclidean", "max"):
            raise ConfigError("norm must be 'euclidean' or 'max'")
        if self.steps < 10 or self.samples < 1:
            raise ConfigError("steps must be >= 10 and samples >= 1")
        if self.lam is not None and not math.isfinite(self.lam):
            raise ConfigError("lambda must be finite")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        doc = dict(doc)
        if "lambda" in doc:
            doc["lam"] = doc.pop("lambda")
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(doc)


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _symbol(cfg: RunConfig):
    return symbol_from_lattice(builtin_lattice(cfg.lattice, cfg.d))


def cmd_info(cfg: RunConfig, out: Path) -> int:
    spec = builtin_lattice(cfg.lattice, cfg.d)
    excl = exclusion_set_T1(cfg.lattice, cfg.d)
    _emit({"lattice": spec.to_dict(), "degrees": list(spec.degrees),
           "exclusion_set": {"points": list(excl.points), "intervals": [list(i) for i in excl.intervals],
                             "specified": excl.specified}})
    return 0


def cmd_spectrum(cfg: RunConfig, out: Path) -> int:
    grid = cfg.grid or (201 if cfg.d <= 2 else 101)
    ivs = spectrum(_symbol(cfg), grid)
    write_spectrum_json(out / "spectrum.json", cfg.lattice, cfg.d, ivs)
    _emit({"intervals": [list(iv) for iv in ivs]})
    return 0


def cmd_thresholds(cfg: RunConfig, out: Path) -> int:
    grid = cfg.grid or (64 if cfg.d <= 2 else 32)
    ts = thresholds(_symbol(cfg), grid)
    write_thresholds_json(out / "thresholds.json", cfg.lattice, cfg.d, ts.values)
    _emit({"values": ts.values, "unconverged": ts.unconverged})
    return 0


def cmd_fermi(cfg: RunConfig, out: Path) -> int:
    if cfg.lam is None:
        raise ConfigError("fermi needs --lambda")
    sample = fermi_slice(_symbol(cfg), cfg.lam, cfg.grid or 64, tol=min(cfg.tol, 1e-10))
    sample.to_csv(out / "fermi.csv")
    _emit({"points": len(sample), "singular": int(sample.singular.sum())})
    return 0


def cmd_ucp(cfg: RunConfig, out: Path) -> int:
    spec = builtin_lattice(cfg.lattice, cfg.d)
    R = cfg.R if cfg.R is not None else 1.0
    G = boundary_graph_from_box(spec, R, norm=cfg.norm)
    if cfg.mode == "exhaustive" and len(G.interior) > 22:
        raise ConfigError(f"exhaustive mode needs at most 22 interior vertices, got {len(G.interior)}")
    candidates = []
    if cfg.lattice == "kagome":
        try:
            candidates.append(hexagon_ring(spec, (0,) * spec.d))
        except ValueError:
            pass
    tp = two_points_condition(G, cfg.mode, k=cfg.samples, seed=cfg.seed, candidates=candidates)
    a5 = check_a5(G)
    report = {"graph": {"graph_id": G.graph_id, "interior": len(G.interior), "boundary": len(G.boundary)},
              "two_points": tp.to_dict(), "a5": a5.to_dict()}
    status = 0
    if tp.passed and a5.passed:
        # both hypotheses hold, so no instance may have a nontrivial Dirichlet+Neumann solution
        rng = np.random.default_rng(cfg.seed)
        nullities = [dirichlet_neumann_nullity(G, rng.uniform(-1, 1, len(G.interior)), rng.uniform(-1.5, 1.5))
                     for _ in range(20)]
        report["nullity_checks"] = {"instances": len(nullities), "max_nullity": max(nullities)}
        if max(nullities) > 0:
            status = 1
    if cfg.lattice == "kagome":
        report["flat_band_nullity"] = dirichlet_neumann_nullity(G, None, 0.5)
    atomic_write_json(out / "ucp.json", report)
    _emit(report)
    return status


def _tail_fraction(box, vec, radius) -> float:
    norms = np.array([v.norm for v in box])
    mass = np.abs(vec) ** 2
    return float(mass[norms > radius].sum() / mass.sum())


def cmd_rellich_demo(cfg: RunConfig, out: Path) -> int:
    spec = builtin_lattice(cfg.lattice, cfg.d)
    if cfg.lattice != "square":
        raise ConfigError("rellich-demo runs on the square lattice")
    R_max = cfg.R or 30.0
    R_list = [R_max / 3, 2 * R_max / 3, R_max]
    V = Potential.exponential(cfg.C, cfg.alpha, cfg.seed)
    band = (-1.0, 1.0)
    runs = []
    best = None
    for R in R_list:
        T = assemble_truncated(spec, V, R)
        w, Q = eigensolve_symmetric(T)
        tails = np.array([_tail_fraction(T.box, Q[:, i], R / 2) for i in range(len(w))])
        inside = (w > band[0]) & (w < band[1])
        i_loc = int(np.argmin(tails))
        runs.append({"R": R, "N": T.N, "eigenvalue": float(w[i_loc]), "tail_fraction": float(tails[i_loc]),
                     "min_tail_inside_band": float(tails[inside].min()) if inside.any() else None})
        best = (T, w[i_loc], Q[:, i_loc])
    T, lam, vec = best
    f = T.function(vec)
    radiation = radiation_estimate(f, R_list)
    hf = builtin_height("square", cfg.d)
    root = Vertex(0, (0,) * cfg.d)
    n_max = max(1, int(R_max / 3))
    growth = growth_bound_check(spec, V, f, float(lam), hf, root, n_max)
    decay = decay_bound_sequence(growth.C0, growth.D0, 1.0, math.log(growth.C0 * growth.D0) + 1.0, 1.0, 0, 1000)
    tails = [r["tail_fraction"] for r in runs]
    checks = {
        "tail_below_1e-10": tails[-1] < 1e-10,
        "tail_non_increasing": all(b <= max(a, 1e-25) for a, b in zip(tails, tails[1:])),
        "localized_state_outside_band": not band[0] <= lam <= band[1],
        "growth_bound_holds": growth.passed,
        "decay_certified": decay.status == "certified",
    }
    report = {"runs": runs, "eigenvalue": float(lam),
              "radiation": [[r, v] for r, v in radiation],
              "growth": {"C0": growth.C0, "D0": growth.D0, "rows": growth.rows},
              "decay": {"log_ratio": decay.log_ratio, "status": decay.status, "certificate_n": decay.certificate_n},
              "checks": checks, "consistent": all(checks.values())}
    atomic_write_json(out / "rellich.json", report)
    _emit({"checks": checks, "consistent": report["consistent"]})
    return 0 if report["consistent"] else 1


def cmd_connect(cfg: RunConfig, out: Path) -> int:
    if cfg.lam is None:
        raise ConfigError("connect needs --lambda")
    if cfg.lattice not in ("square", "hexagonal"):
        raise ConfigError("connect supports the square and hexagonal lattices")
    lam = cfg.lam
    if not -1 < lam < 1:
        raise ConfigError("lambda must lie in (-1, 1)")
    if exclusion_set_T1(cfg.lattice, cfg.d).contains(lam):
        raise ConfigError(f"lambda = {lam} belongs to the exclusion set")
    rng = np.random.default_rng(cfg.seed)
    sym = _symbol(cfg)
    if cfg.lattice == "square":
        z0 = random_square_start(rng, lam, cfg.d)
    else:
        z0 = random_hexagonal_start(rng, lam)
    a = float(np.linalg.norm(z0.imag)) * 1.05 + 1e-3
    if cfg.lattice == "square":
        ps = square_connect(z0, lam, a, cfg.steps)
    else:
        ps = hexagonal_connect(z0, lam, a, cfg.steps)
    rep = verify_path(ps, sym, lam, cfg.tol)
    ps.to_csv(out / "path.csv")
    _emit({"start": [[z.real, z.imag] for z in z0], "a": a, "report": rep.to_dict(), "notes": ps.notes})
    return 0 if rep.passed else 1


COMMANDS = {
    "info": cmd_info,
    "spectrum": cmd_spectrum,
    "thresholds": cmd_thresholds,
    "fermi": cmd_fermi,
    "ucp": cmd_ucp,
    "rellich-demo": cmd_rellich_demo,
    "connect": cmd_connect,
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lattice-rellich", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="JSON config; flags override its values")
    p.add_argument("--lattice", choices=BUILTIN_NAMES)
    p.add_argument("--d", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--grid", type=int)
    p.add_argument("--R", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--C", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=("exhaustive", "random"))
    p.add_argument("--out")
    p.add_argument("--norm", choices=("euclidean", "max"))
    p.add_argument("--steps", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--samples", type=int)
    return p


def run(subcommand: str, cfg: RunConfig) -> int:
    """Run one subcommand; returns the exit status."""
    cfg.validate()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "config.json", json.dumps({"subcommand": subcommand, **cfg.to_dict()},
                                                      indent=2, sort_keys=True) + "\n")
    return COMMANDS[subcommand](cfg, out)


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the diagnostic
        return 2 if exc.code else 0
    try:
        cfg = RunConfig.from_json(args.config) if args.config else RunConfig()
        overrides = {k: v for k, v in vars(args).items() if k not in ("subcommand", "config") and v is not None}
        cfg = dataclasses.replace(cfg, **overrides)
        return run(args.subcommand, cfg)
    except ValueError as exc:  # ConfigError and invalid inputs rejected by the modules
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
