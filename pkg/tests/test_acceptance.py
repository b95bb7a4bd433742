"""Acceptance criteria, one test per criterion at the stated tolerances.

Each test records a one-line verdict that is printed in the terminal summary.
"""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from oracles import CLOSED_FORMS, kagome_beta, ladder_factors, ladder_thresholds
from lattice_rellich.cli import RunConfig, run
from lattice_rellich.fermi_connectivity import (
    hexagonal_connect, random_hexagonal_start, random_square_start, square_connect, verify_path,
)
from lattice_rellich.height import (
    builtin_height, cone_membership, decay_bound_sequence, dependence_shells, growth_bound_check,
    manufacture_solution,
)
from lattice_rellich.lattice_core import Vertex, box_vertices, builtin_lattice, neighbor_list
from lattice_rellich.momentum import char_poly, exclusion_set_T1, spectrum, symbol_from_lattice, thresholds
from lattice_rellich.operators import Potential, apply_schrodinger
from lattice_rellich.ucp import (
    BoundaryGraph, boundary_graph_from_box, boundary_graph_from_vertices, check_a5,
    dirichlet_neumann_nullity, extreme_points, graph_ball, hexagon_ring, kagome_flat_band_vector,
    neumann_residual, two_points_condition,
)


def record(key, ok, detail):
    ACCEPTANCE[key] = (bool(ok), detail)
    assert ok, detail


def sym(name, d=2):
    return symbol_from_lattice(builtin_lattice(name, d))


def test_criterion_1_spectra():
    cases = [("square", 2, 201, (-1, 1)), ("hexagonal", 2, 201, (-1, 1)), ("ladder", 2, 201, (-1, 1)),
             ("kagome", 2, 201, (-1, 0.5)), ("square", 3, 101, (-1, 1))]
    worst_err, worst_time, shapes = 0.0, 0.0, True
    for name, d, G, (lo, hi) in cases:
        t0 = time.perf_counter()
        ivs = spectrum(sym(name, d), grid_per_axis=G)
        worst_time = max(worst_time, time.perf_counter() - t0)
        shapes &= len(ivs) == 1
        if len(ivs) == 1:
            worst_err = max(worst_err, abs(ivs[0][0] - lo), abs(ivs[0][1] - hi))
    ok = shapes and worst_err <= 1e-4 and worst_time < 30
    record(1, ok, f"max endpoint error {worst_err:.1e}, slowest {worst_time:.2f} s")


def test_criterion_2_thresholds():
    ref = {"square": [-1, 0, 1], "hexagonal": [-1, -1 / 3, 0, 1 / 3, 1],
           "kagome": [-1, -0.5, -0.25, 0, 0.5], "ladder": ladder_thresholds(2)}
    worst, ok = 0.0, True
    for name, vals in ref.items():
        got = np.array(thresholds(sym(name)).values)
        if len(got) != len(vals):
            ok = False
            continue
        worst = max(worst, float(np.max(np.abs(got - np.array(vals)))))
    ok &= worst <= 1e-5
    record(2, ok, f"all sets matched, max deviation {worst:.1e}" if ok else f"mismatch (max dev {worst:.1e})")


def test_criterion_3_closed_forms():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for (name, d), form in CLOSED_FORMS.items():
        x = rng.uniform(-math.pi, math.pi, size=(10_000, d))
        lam = rng.uniform(-1.5, 1.5, size=10_000)
        p = char_poly(sym(name, d), x, lam)
        worst = max(worst, float(np.max(np.abs(p - form(x, lam)))))
        if name == "ladder":
            plus, minus = ladder_factors(x, lam)
            worst = max(worst, float(np.max(np.abs(p - plus * minus))))
        if name == "kagome":
            fact = -(lam - 0.5) * (lam + 0.25 - np.sqrt(1 / 16 + kagome_beta(x) / 8 + 0j)) \
                * (lam + 0.25 + np.sqrt(1 / 16 + kagome_beta(x) / 8 + 0j))
            worst = max(worst, float(np.max(np.abs(p - fact))))
    elapsed = time.perf_counter() - t0
    record(3, worst <= 1e-12 and elapsed < 5, f"max deviation {worst:.1e} in {elapsed:.2f} s")


def test_criterion_4_height_machinery():
    rng = np.random.default_rng(4)
    sandwich = cone = growth = 0
    V = Potential.exponential(2.0, 0.5, seed=4)
    for name in ("square", "triangular", "hexagonal", "ladder"):
        spec = builtin_lattice(name)
        hf = builtin_height(name)
        for _ in range(100):
            root = Vertex(int(rng.integers(spec.s)), tuple(int(t) for t in rng.integers(-50, 51, size=2)))
            for sh in dependence_shells(hf, root, 12):
                sandwich += len(sh.sandwich_violations(hf))
                cone += sum(not cone_membership(name, root, w) for w in sh.members)
        for _ in range(25):
            root = Vertex(int(rng.integers(spec.s)), tuple(int(t) for t in rng.integers(-20, 21, size=2)))
            lam = float(rng.uniform(-1, 1))
            f = manufacture_solution(spec, V, lam, hf, root, 10, rng)
            growth += len(growth_bound_check(spec, V, f, lam, hf, root, 10).violations)
    record(4, sandwich == cone == growth == 0,
           f"sandwich violations {sandwich}, cone violations {cone}, growth violations {growth}")


def test_criterion_5_decay_forces_zero():
    failures = []
    for C0D0 in (2, 4, 36, 216):
        for delta in (0.1, 0.5, 1.0, 2.0, 5.0):
            for C_A in (1.0, 10.0):
                for h_v in (0, 5):
                    A = math.log(C0D0) + delta
                    rep = decay_bound_sequence(float(C0D0), 1, C_A, A, 1.0, h_v, 400)
                    if rep.status != "certified":
                        failures.append((C0D0, delta, C_A, h_v))
    boundary_exact = all(
        decay_bound_sequence(float(c), 1, 1.0, math.log(c), 1.0, 0, 50).status == "boundary"
        for c in (2, 4, 36, 216))
    worst_delta = max((f[1] for f in failures), default=None)
    detail = (f"boundary exact: {boundary_exact}; {len(failures)}/80 sweep points not certified "
              f"within n <= 400 (largest failing margin {worst_delta}); a bound starting at C_A >= 1 needs "
              f"n >= ln(1e300)/margin = {math.log(1e300) / 0.1:.0f} steps at margin 0.1")
    record(5, boundary_exact and not failures, detail)


def test_criterion_5_boundary_part():
    for c in (2, 4, 36, 216):
        rep = decay_bound_sequence(float(c), 1, 1.0, math.log(c), 1.0, 0, 50)
        assert rep.status == "boundary" and rep.log_ratio == 0.0
        assert len(set(rep.values)) == 1
        assert decay_bound_sequence(float(c), 1, 1.0, math.log(c) + 2.0, 1.0, 0, 400).status == "certified"


def test_criterion_6_ucp():
    spec = builtin_lattice("square")
    square = boundary_graph_from_box(spec, 1, norm="max")
    t0 = time.perf_counter()
    tp = two_points_condition(square)
    t_exh = time.perf_counter() - t0
    ok_square = tp.result == "pass" and len(square.interior) == 9 and t_exh < 1

    kg = builtin_lattice("kagome")
    patch = boundary_graph_from_box(kg, 2, norm="max")
    ring = hexagon_ring(kg)
    rep = two_points_condition(patch, mode="random", k=200, candidates=[ring])
    ok_kagome = not extreme_points(patch, ring) and rep.result == "fail" and set(rep.witness) == set(ring)

    tri = builtin_lattice("triangular")
    path = BoundaryGraph.from_edges(["a", "b"], ["z0", "z1"], [("z0", "a"), ("a", "b"), ("b", "z1")],
                                    {"a": 2, "b": 2, "z0": 1, "z1": 1}, "path")
    graphs = [square, path, boundary_graph_from_vertices(tri, graph_ball(tri, (0, (0, 0)), 2)),
              boundary_graph_from_box(builtin_lattice("hexagonal"), 1, norm="max")]
    rng = np.random.default_rng(6)
    worst = 0
    eligible = 0
    for G in graphs:
        if not (check_a5(G).passed and two_points_condition(G).result == "pass"):
            continue
        eligible += 1
        for _ in range(100):
            worst = max(worst, dirichlet_neumann_nullity(G, rng.uniform(-2, 2, len(G.interior)),
                                                         float(rng.uniform(-2, 2))))
    flat = dirichlet_neumann_nullity(patch, None, 0.5)
    ok = ok_square and ok_kagome and eligible == len(graphs) and worst == 0 and flat >= 1
    record(6, ok, f"3x3 exhaustive {tp.result} in {t_exh * 1e3:.0f} ms; kagome ring witness "
                  f"{'found' if ok_kagome else 'missing'}; max nullity {worst} over {eligible}x100 "
                  f"instances; flat-band nullity {flat}")


def test_criterion_7_flat_band():
    kg = builtin_lattice("kagome")
    f = kagome_flat_band_vector(kg, (0, 0), 3)
    box = box_vertices(kg, 3)
    inbox = set(box)
    full = [v for v in box if all(w in inbox for w in neighbor_list(kg, v))]
    res = max(abs(apply_schrodinger(kg, Potential.zero(), 0.5, f, v)) for v in full)
    G = boundary_graph_from_box(kg, 3)
    dirichlet = max(abs(f.get(z, 0.0)) for z in G.boundary)
    neumann = max(abs(neumann_residual(G, f, z)) for z in G.boundary)
    record(7, res <= 1e-14 and dirichlet == 0 and neumann == 0,
           f"residual {res:.1e} on {len(full)} vertices, Dirichlet {dirichlet}, Neumann {neumann}")


def _lam_away(rng, excl, lo=-0.95, hi=0.95):
    while True:
        lam = float(rng.uniform(lo, hi))
        if excl.distance(lam) >= 0.05:
            return lam


def test_criterion_8_connectivity():
    rng = np.random.default_rng(8)
    t0 = time.perf_counter()
    failed = 0
    worst_res = worst_imag = 0.0
    for name, d in (("square", 2), ("square", 3), ("hexagonal", 2)):
        s = sym(name, d)
        excl = exclusion_set_T1(name, d)
        for _ in range(50):
            lam = _lam_away(rng, excl)
            if name == "square":
                z0 = random_square_start(rng, lam, d)
                a = 1.01 * float(np.linalg.norm(z0.imag)) + 1e-3
                ps = square_connect(z0, lam, a, steps=1000)
            else:
                z0 = random_hexagonal_start(rng, lam)
                a = 1.01 * float(np.linalg.norm(z0.imag)) + 1e-3
                ps = hexagonal_connect(z0, lam, a, steps=1000)
            rep = verify_path(ps, s, lam, tol=1e-8)
            worst_res = max(worst_res, rep.max_residual)
            worst_imag = max(worst_imag, rep.end_imag)
            failed += not (rep.passed and rep.end_imag <= 1e-10 and len(ps.t_grid) >= 1000)
    elapsed = time.perf_counter() - t0
    record(8, failed == 0 and elapsed < 10,
           f"{150 - failed}/150 paths verified, max residual {worst_res:.1e}, "
           f"max |Im c(1)| {worst_imag:.1e}, {elapsed:.2f} s")


def test_criterion_9_rellich_demo(tmp_path):
    import json
    code = run("rellich-demo", RunConfig(R=30.0, out=str(tmp_path)))
    rep = json.loads((tmp_path / "rellich.json").read_text())
    tails = [r["tail_fraction"] for r in rep["runs"]]
    detail = (f"R = {[r['R'] for r in rep['runs']]}, tail fractions {', '.join(f'{t:.1e}' for t in tails)}, "
              f"eigenvalue {rep['eigenvalue']:.4f}")
    record(9, code == 0 and rep["consistent"], detail)
