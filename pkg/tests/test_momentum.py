import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lattice_rellich.lattice_core import builtin_lattice
from lattice_rellich.momentum import (
    Symbol, band_functions, char_poly, dlambda_char_poly, exclusion_set_T1, fermi_slice,
    grad_char_poly, spectrum, symbol_from_lattice, thresholds, write_spectrum_json,
    write_thresholds_json,
)

from oracles import CLOSED_FORMS, SPECTRA, THRESHOLDS, kagome_beta, ladder_factors

LATTICES = sorted(CLOSED_FORMS)


def sym_of(name, d=2):
    return symbol_from_lattice(builtin_lattice(name, d))


@pytest.mark.parametrize("name,d", LATTICES)
def test_char_poly_matches_closed_form(name, d):
    rng = np.random.default_rng(7)
    x = rng.uniform(-math.pi, math.pi, size=(2000, d))
    lam = rng.uniform(-1.5, 1.5, size=2000)
    got = char_poly(sym_of(name, d), x, lam)
    ref = CLOSED_FORMS[(name, d)](x, lam)
    assert np.max(np.abs(got - ref)) <= 1e-12
    assert np.max(np.abs(got.imag)) <= 1e-12


@pytest.mark.parametrize("name,d", LATTICES)
def test_symbol_is_hermitian_and_bands_are_roots(name, d):
    sym = sym_of(name, d)
    x = np.random.default_rng(1).uniform(-math.pi, math.pi, size=(200, d))
    H = sym.matrix(x)
    assert np.allclose(H, np.conj(np.swapaxes(H, -1, -2)), atol=1e-15)
    E = band_functions(sym, x)
    assert E.shape == (200, sym.s)
    for k in range(sym.s):
        assert np.max(np.abs(char_poly(sym, x, E[:, k]))) <= 1e-12


def test_kagome_factorization_and_flat_band():
    sym = sym_of("kagome")
    x = np.random.default_rng(2).uniform(-math.pi, math.pi, size=(500, 2))
    E = band_functions(sym, x)
    assert np.allclose(E[:, 2], 0.5, atol=1e-13)
    disc = np.sqrt(np.clip(1 / 16 + kagome_beta(x) / 8, 0, None))
    assert np.allclose(E[:, 0], -0.25 - disc, atol=1e-7)
    assert np.allclose(E[:, 1], -0.25 + disc, atol=1e-7)


def test_ladder_factors():
    for d in (2, 3):
        sym = sym_of("ladder", d)
        x = np.random.default_rng(d).uniform(-math.pi, math.pi, size=(300, d))
        E = band_functions(sym, x)
        plus, minus = ladder_factors(x, 0.0)
        assert np.allclose(np.sort(np.stack([-plus, -minus], axis=-1), axis=-1), E, atol=1e-12)


@pytest.mark.parametrize("name,d", LATTICES)
def test_gradients_match_finite_differences(name, d):
    sym = sym_of(name, d)
    rng = np.random.default_rng(3)
    h = 1e-6
    for _ in range(10):
        x = rng.uniform(-math.pi, math.pi, size=d)
        lam = rng.uniform(-1, 1)
        g = grad_char_poly(sym, x, lam)
        for i in range(d):
            e = np.zeros(d)
            e[i] = h
            fd = (char_poly(sym, x + e, lam) - char_poly(sym, x - e, lam)) / (2 * h)
            assert abs(g[i] - fd) <= 1e-7
        fd = (char_poly(sym, x, lam + h) - char_poly(sym, x, lam - h)) / (2 * h)
        assert abs(dlambda_char_poly(sym, x, lam) - fd) <= 1e-7


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-4, 4), min_size=2, max_size=2), st.floats(-2, 2))
def test_char_poly_is_real_and_periodic(x, lam):
    sym = sym_of("hexagonal")
    x = np.array(x)
    p = char_poly(sym, x, lam)
    assert abs(p.imag) <= 1e-14
    assert abs(p - char_poly(sym, x + np.array([2 * math.pi, -2 * math.pi]), lam)) <= 1e-12


def test_symbol_rejects_non_hermitian():
    with pytest.raises(ValueError):
        Symbol([[1, 0], [-1, 0]], [[[1.0]], [[2.0]]])
    with pytest.raises(ValueError):
        Symbol([[1, 0]], [[[1.0]]])
    sym = Symbol.from_coeff_map({(1,): [[-0.5]], (-1,): [[-0.5]]})
    assert char_poly(sym, np.array([0.0]), 0.0) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        sym.matrix(np.zeros(2))


@pytest.mark.parametrize("name,d", [k for k in LATTICES if k != ("square", 3)])
def test_spectrum(name, d):
    got = spectrum(sym_of(name, d), grid_per_axis=101)
    ref = SPECTRA[(name, d)]
    assert len(got) == len(ref)
    for (a, b), (c, e) in zip(got, ref):
        assert abs(a - c) <= 1e-6 and abs(b - e) <= 1e-6


def test_spectrum_square_d3():
    (a, b), = spectrum(sym_of("square", 3), grid_per_axis=41)
    assert a == pytest.approx(-1, abs=1e-8) and b == pytest.approx(1, abs=1e-8)


def test_spectrum_reports_gaps():
    # a two-band symbol with a gap: diag(cos x, 3 + cos x)
    A = np.diag([0.5, 0.5]).astype(complex)
    sym = Symbol([[1], [-1], [0]], [A, A, np.diag([0.0, 3.0])])
    got = spectrum(sym, grid_per_axis=64)
    assert len(got) == 2
    assert got[0] == pytest.approx((-1, 1), abs=1e-8)
    assert got[1] == pytest.approx((2, 4), abs=1e-8)


@pytest.mark.parametrize("key", sorted(THRESHOLDS))
def test_thresholds(key):
    ts = thresholds(sym_of(*key))
    ref = THRESHOLDS[key]
    assert not ts.unconverged
    assert len(ts.values) == len(ref)
    assert np.max(np.abs(np.array(ts.values) - np.array(ref))) <= 1e-6
    for lam, x in ts.critical_points:
        sym = sym_of(*key)
        assert abs(char_poly(sym, x, lam)) <= 1e-8
        assert np.linalg.norm(grad_char_poly(sym, x, lam)) <= 1e-7


def test_thresholds_square_d3_and_ladder_d3():
    sq = thresholds(sym_of("square", 3), grid_per_axis=32)
    assert np.allclose(sq.values, [-1, -1 / 3, 1 / 3, 1], atol=1e-6)
    from oracles import ladder_thresholds
    ld = thresholds(sym_of("ladder", 3), grid_per_axis=32)
    assert np.allclose(ld.values, sorted(set(np.round(ladder_thresholds(3), 12))), atol=1e-6)


def test_fermi_slice_examples():
    sym = sym_of("square")
    fs = fermi_slice(sym, 0.0)
    assert len(fs) > 0
    assert np.max(fs.abs_p) <= 1e-10
    assert np.min(np.linalg.norm(fs.points - math.pi / 2, axis=1)) <= 1e-9
    assert len(fermi_slice(sym, 2.0)) == 0
    # on the ladder at lam = 0 the surface splits into the two factor zero sets
    lad = sym_of("ladder")
    fl = fermi_slice(lad, 0.0)
    plus, minus = ladder_factors(fl.points, 0.0)
    on = (np.abs(plus) <= 1e-9) | (np.abs(minus) <= 1e-9)
    assert on.all() and (np.abs(plus) <= 1e-9).any() and (np.abs(minus) <= 1e-9).any()


def test_fermi_slice_flags_singular_points(tmp_path):
    fs = fermi_slice(sym_of("square"), -1.0)
    assert len(fs) >= 1 and fs.singular.all()
    fs.to_csv(tmp_path / "f.csv")
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "x1,x2,abs_p,grad_norm"
    with pytest.raises(ValueError):
        fermi_slice(sym_of("square"), 0.0, grid_per_axis=8)


def test_exclusion_sets():
    assert exclusion_set_T1("hexagonal").contains(0.0)
    assert exclusion_set_T1("kagome").distance(0.3) == pytest.approx(0.2)
    lad = exclusion_set_T1("ladder", 2)
    assert lad.contains(-0.7) and not lad.contains(0.0)
    with pytest.raises(ValueError):
        exclusion_set_T1("triangular").distance(0.1)
    with pytest.raises(ValueError):
        exclusion_set_T1("honeycomb")


def test_exports(tmp_path):
    import json
    write_spectrum_json(tmp_path / "s.json", "square", 2, [(-1, 1)])
    write_thresholds_json(tmp_path / "t.json", "square", 2, [-1, 0, 1])
    assert json.loads((tmp_path / "s.json").read_text())["intervals"] == [[-1.0, 1.0]]
    assert json.loads((tmp_path / "t.json").read_text())["values"] == [-1.0, 0.0, 1.0]
