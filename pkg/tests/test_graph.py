import json

import numpy as np
import pytest
from hypothesis import given

from cvcluster.errors import ValidationError
from cvcluster.graph import (
    all_graphs,
    build_graph,
    graph_from_dict,
    linear_graph,
    load_graph,
    square_lattice,
)

from conftest import graphs


def test_linear_three_node():
    g = build_graph(3, [(1, 2), (2, 3)])
    assert g.n == 3
    assert g.edges == ((1, 2), (2, 3))
    assert g == linear_graph(3)


def test_single_vertex():
    g = build_graph(1, [])
    assert g.n == 1 and g.edges == ()
    assert g.max_degree() == 0


@pytest.mark.parametrize(
    "n, edges, fragment",
    [
        (2, [(1, 2), (2, 1)], "duplicate edge (2, 1)"),
        (2, [(1, 1)], "self-loop (1, 1)"),
        (2, [(1, 3)], "(1, 3) out of range"),
        (0, [], "positive integer"),
    ],
)
def test_build_graph_errors_name_the_pair(n, edges, fragment):
    with pytest.raises(ValidationError, match=fragment.replace("(", r"\(").replace(")", r"\)")):
        build_graph(n, edges)


def test_edges_are_normalised():
    g = build_graph(3, [(3, 2), (2, 1)])
    assert g.edges == ((1, 2), (2, 3))


def test_square_lattice_small():
    g = square_lattice(2, 2)
    assert g.n == 4 and len(g.edges) == 4


def test_square_lattice_centre_degree():
    g = square_lattice(3, 3)
    assert g.max_degree() == 4
    assert g.degree(5) == 4


def test_degenerate_lattice_is_a_wire():
    assert square_lattice(1, 4) == linear_graph(4)


def test_square_lattice_zero_dimension():
    with pytest.raises(ValidationError):
        square_lattice(0, 3)


def test_periodic_lattice_is_four_regular():
    g = square_lattice(4, 5, periodic=True)
    assert len(g.edges) == 2 * g.n
    assert g.is_regular() and g.max_degree() == 4


def test_adjacency_examples():
    assert build_graph(2, [(1, 2)]).adjacency_matrix().tolist() == [[0, 1], [1, 0]]
    a = linear_graph(3).adjacency_matrix()
    assert a.tolist() == [[0, 1, 0], [1, 0, 1], [0, 1, 0]]
    assert not build_graph(3, []).adjacency_matrix().any()


@given(graphs())
def test_adjacency_symmetric_zero_diagonal(g):
    a = g.adjacency_matrix()
    assert np.array_equal(a, a.T)
    assert not np.diag(a).any()
    assert g.max_degree() == a.sum(axis=1).max()


@given(graphs(min_n=2))
def test_remove_vertex(g):
    for v in g.vertices:
        h = g.remove_vertex(v)
        assert h.n == g.n - 1
        kept = [u for u in g.vertices if u != v]
        expected = {(kept.index(i) + 1, kept.index(j) + 1) for i, j in g.edges if v not in (i, j)}
        assert set(h.edges) == expected


def test_all_graphs_count():
    assert sum(1 for _ in all_graphs(4)) == 2**6


def test_components():
    g = build_graph(5, [(1, 2), (4, 5)])
    assert g.connected_components() == [[1, 2], [3], [4, 5]]


def test_json_round_trip(tmp_path):
    g = square_lattice(2, 3)
    path = tmp_path / "g.json"
    path.write_text(g.to_json())
    assert load_graph(path) == g
    assert graph_from_dict(json.loads(g.to_json())) == g


def test_malformed_json_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"n": 3,\n "edges": [[1, 2],, ]}')
    with pytest.raises(ValidationError, match="line 2"):
        load_graph(path)


def test_missing_field(tmp_path):
    with pytest.raises(ValidationError, match="edges"):
        graph_from_dict({"n": 2})
