import io

import pytest

from graphdn.dirichlet import dn_matrix, solve_dirichlet
from graphdn.errors import ValidationError
from graphdn.fileio import (
    graph_to_string,
    read_graph,
    write_convergence,
    write_dn_matrix,
    write_graph,
    write_measure_table,
    write_plot_data,
    write_solution,
)
from graphdn.graph import build_graph
from graphdn.measure import ClopenSet, SimpleBoundaryFunction, dn_function, measure_table
from graphdn.trees import AlphaBetaSpec, generate_ab_tree

from conftest import random_metric_graph

import numpy as np


def test_graph_round_trip_interval(tmp_path):
    g = build_graph([(0, 1, 0.1 + 0.2)])  # awkward float survives repr
    path = tmp_path / "g.txt"
    write_graph(g, path)
    back = read_graph(path)
    assert back == g


def test_graph_round_trip_tree_with_meta():
    g = generate_ab_tree(AlphaBetaSpec(alpha=0.3, depth=4, kappa2_per_level=(2.0,)))
    buf = io.StringIO(graph_to_string(g))
    back = read_graph(buf)
    assert back == g
    assert back.meta == g.meta
    assert back.boundary == g.boundary


def test_graph_round_trip_random():
    rng = np.random.default_rng(19)
    for _ in range(10):
        g = random_metric_graph(rng, max_vertices=15)
        assert read_graph(io.StringIO(graph_to_string(g))) == g


def test_writer_is_canonical():
    g = generate_ab_tree(AlphaBetaSpec(alpha=0.5, depth=3))
    assert graph_to_string(g) == graph_to_string(g)


@pytest.mark.parametrize(
    "text,fragment",
    [
        ("nonsense\n", "header"),
        ("graphdn-graph 1\nedge 0 1 1.0 1.0 0.0\n", "boundary"),
        ("graphdn-graph 1\nedge 0 x 1.0 1.0 0.0\nboundary 0 1\n", "malformed"),
        (
            "graphdn-graph 1\nvertices 5\nedge 0 1 1.0 1.0 0.0\nboundary 0 1\n",
            "declares",
        ),
        ("graphdn-graph 1\nwat 1 2\nboundary\n", "unknown record"),
    ],
)
def test_read_errors(text, fragment):
    with pytest.raises(ValidationError, match=fragment):
        read_graph(io.StringIO(text))


def test_solution_records():
    g = build_graph([(0, 1, 1.0)])
    sol = solve_dirichlet(g, {0: 0.0, 1: 1.0})
    buf = io.StringIO()
    write_solution(sol, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "graphdn-solution 1"
    assert "vertex 0 0.0" in lines
    assert "edge 0 0.0 1.0" in lines
    assert lines[-1] == "energy 1.0"


def test_dn_matrix_records():
    g = build_graph([(0, 1, 0.5)])
    buf = io.StringIO()
    write_dn_matrix(dn_matrix(g), buf)
    lines = buf.getvalue().splitlines()
    assert lines[1] == "boundary 0 1"
    assert lines[2] == "row 0 2.0 -2.0"


def test_convergence_and_plot_data():
    fam = AlphaBetaSpec(alpha=0.5, depth=2)
    f = SimpleBoundaryFunction.indicator(ClopenSet.cylinder(fam, "a"))
    rep = dn_function(f, ClopenSet.cylinder(fam, "b"), tol=1e-2, n_max=8)
    buf = io.StringIO()
    write_convergence(rep, buf)
    text = buf.getvalue()
    assert text.startswith("graphdn-convergence 1")
    assert "converged yes" in text

    buf = io.StringIO()
    write_plot_data(rep, buf)
    rows = [ln.split() for ln in buf.getvalue().splitlines()]
    assert [int(r[0]) for r in rows] == list(rep.depths)
    assert [float(r[1]) for r in rows] == list(rep.values)


def test_measure_table_records():
    fam = AlphaBetaSpec(alpha=0.5, depth=2)
    f = SimpleBoundaryFunction.indicator(ClopenSet.cylinder(fam, "a"))
    table = measure_table(f, partition_depth=1, tol=1e-4, n_max=9)
    buf = io.StringIO()
    write_measure_table(table, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "graphdn-measure 1"
    assert lines[1] == "partition-depth 1"
    assert lines[6] == "cell value residual converged"
    cells = [ln.split()[0] for ln in lines[7:]]
    assert cells == ["@a", "@b", "v0"]
