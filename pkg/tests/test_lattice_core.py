import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lattice_rellich.lattice_core import (
    BUILTIN_NAMES, LatticeSpec, Vertex, box_vertices, builtin_document_name, builtin_lattice,
    iter_edges, load_builtin_document, neighbors, realize,
)

ALL = [("square", 2), ("square", 3), ("triangular", 2), ("hexagonal", 2), ("kagome", 2), ("ladder", 2)]


def translations(vs):
    return {w.n for w in vs}


@pytest.mark.parametrize("name,d,s,deg", [
    ("square", 2, 1, 4), ("square", 3, 1, 6), ("triangular", 2, 1, 6),
    ("hexagonal", 2, 2, 3), ("kagome", 2, 3, 4), ("ladder", 2, 2, 5), ("ladder", 3, 2, 7),
])
def test_builtin_sizes_and_degrees(name, d, s, deg):
    spec = builtin_lattice(name, d)
    assert spec.s == s
    assert set(spec.degrees) == {deg}
    assert len(spec.edge_generators) == sum(spec.degrees)


def test_builtin_errors():
    with pytest.raises(ValueError):
        builtin_lattice("honeycomb")
    with pytest.raises(ValueError):
        builtin_lattice("square", 1)


def test_square_neighbors():
    nb = neighbors(builtin_lattice("square"), Vertex(0, (0, 0)))
    assert translations(nb) == {(0, 1), (0, -1), (1, 0), (-1, 0)}


def test_hexagonal_neighbors():
    nb = neighbors(builtin_lattice("hexagonal"), Vertex(0, (0, 0)))
    assert nb == {Vertex(1, (0, 0)), Vertex(1, (-1, 0)), Vertex(1, (0, -1))}


def test_triangular_neighbors():
    nb = neighbors(builtin_lattice("triangular"), Vertex(0, (0, 0)))
    assert translations(nb) == {(1, 0), (-1, 0), (0, 1), (0, -1), (-1, 1), (1, -1)}


def test_invalid_cell_index():
    with pytest.raises(ValueError):
        neighbors(builtin_lattice("hexagonal"), Vertex(2, (0, 0)))
    with pytest.raises(ValueError):
        neighbors(builtin_lattice("square"), Vertex(0, (0, 0, 0)))


def test_realize_examples():
    assert np.allclose(realize(builtin_lattice("square"), Vertex(0, (2, 3))), [2, 3])
    assert np.allclose(realize(builtin_lattice("hexagonal"), Vertex(1, (0, 0))), [2, 0])
    assert np.allclose(realize(builtin_lattice("kagome"), Vertex(2, (0, 0))), [0.25, math.sqrt(3) / 4])
    assert realize(builtin_lattice("ladder", 2), Vertex(1, (0, 0))).shape == (3,)


@pytest.mark.parametrize("name,d", ALL)
def test_edge_lengths_uniform(name, d):
    spec = builtin_lattice(name, d)
    expected = 0.5 if name == "kagome" else 1.0
    for v, w in iter_edges(spec, box_vertices(spec, 2)):
        assert np.linalg.norm(realize(spec, v) - realize(spec, w)) == pytest.approx(expected, abs=1e-12)


def test_box_examples():
    assert translations(box_vertices(builtin_lattice("square"), 1)) == {(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)}
    assert len(box_vertices(builtin_lattice("hexagonal"), 1)) == 10
    assert len(box_vertices(builtin_lattice("kagome"), 0)) == 3
    box = box_vertices(builtin_lattice("hexagonal"), 3)
    assert box == sorted(box)


@pytest.mark.parametrize("name,d", ALL)
@settings(max_examples=30, deadline=None)
@given(data=st.data())
def test_adjacency_symmetric_and_translation_invariant(name, d, data):
    spec = builtin_lattice(name, d)
    j = data.draw(st.integers(0, spec.s - 1))
    n = tuple(data.draw(st.lists(st.integers(-50, 50), min_size=d, max_size=d)))
    v = Vertex(j, n)
    nb = neighbors(spec, v)
    assert v not in nb
    assert len(nb) == spec.degree(j)
    for w in nb:
        assert v in neighbors(spec, w)
    base = neighbors(spec, Vertex(j, (0,) * d))
    assert {w.shifted(w.j, n) for w in base} == nb


def test_validation_rejects_bad_specs():
    basis = [[1.0, 0.0], [0.0, 1.0]]
    with pytest.raises(ValueError):  # missing reverse generator
        LatticeSpec(2, basis, [[0.0, 0.0]], [(0, 0, (1, 0))])
    with pytest.raises(ValueError):  # loop
        LatticeSpec(2, basis, [[0.0, 0.0]], [(0, 0, (0, 0))])
    with pytest.raises(ValueError):  # cell points differ by a lattice vector
        LatticeSpec(2, basis, [[0.0, 0.0], [1.0, 0.0]],
                    [(0, 1, (0, 0)), (1, 0, (0, 0)), (0, 0, (1, 0)), (0, 0, (-1, 0)),
                     (0, 0, (0, 1)), (0, 0, (0, -1))])


@pytest.mark.parametrize("name,d", ALL)
def test_json_round_trip_and_shipped_documents(name, d):
    spec = builtin_lattice(name, d)
    assert LatticeSpec.from_json(spec.to_json()) == spec
    assert load_builtin_document(builtin_document_name(name, d)) == spec
    doc = json.loads(spec.to_json())
    assert set(doc) >= {"d", "D", "basis", "points", "edge_generators"}


def test_builtin_names():
    assert set(BUILTIN_NAMES) == {"square", "triangular", "hexagonal", "kagome", "ladder"}
