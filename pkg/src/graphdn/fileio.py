"""Canonical text formats for graphs, solutions, matrices, and tables.

Graph file grammar (one record per line, fields space-separated, floats in
``repr`` form so files round-trip bit-exactly and are byte-comparable):

    graphdn-graph 1
    vertices <n>
    edge <a> <b> <length> <weight> <kappa2>      # one per edge, index order
    boundary [<id> ...]                          # sorted ascending
    meta <vertex> <level> <@address|->           # optional, ascending vertex

Addresses are written with a leading ``@`` so the empty address stays
visible; ``-`` marks a vertex with a level but no address (the tree root).
Solution, Dirichlet-to-Neumann, convergence, and measure-table writers emit
similar fixed-order records and are documented by example in the README.
"""

from __future__ import annotations

import io
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .dirichlet import DirichletSolution, DNMatrix
from .errors import ValidationError
from .graph import Edge, MetricGraph, VertexMeta, build_graph
from .measure import ConvergenceReport, MeasureTable

__all__ = [
    "write_graph",
    "read_graph",
    "write_solution",
    "write_dn_matrix",
    "write_convergence",
    "write_plot_data",
    "write_measure_table",
]

GRAPH_MAGIC = "graphdn-graph 1"


@contextmanager
def _writable(target):
    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            yield fh
    else:
        yield target


def _fmt_address(address: str | None) -> str:
    return "-" if address is None else "@" + address


def write_graph(g: MetricGraph, target) -> None:
    with _writable(target) as fh:
        fh.write(GRAPH_MAGIC + "\n")
        fh.write(f"vertices {g.n_vertices}\n")
        for e in g.edges:
            fh.write(
                f"edge {e.a} {e.b} {e.length!r} {e.weight!r} {e.kappa2!r}\n"
            )
        fh.write("boundary" + "".join(f" {v}" for v in g.boundary_vertices) + "\n")
        if g.meta is not None:
            for v, m in enumerate(g.meta):
                if m is not None:
                    fh.write(f"meta {v} {m.level} {_fmt_address(m.address)}\n")


def read_graph(source) -> MetricGraph:
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != GRAPH_MAGIC:
        raise ValidationError(f"not a graph file (expected '{GRAPH_MAGIC}' header)")
    edges: list[Edge] = []
    boundary: list[int] | None = None
    meta: dict[int, VertexMeta] = {}
    declared = None
    for ln in lines[1:]:
        fields = ln.split()
        kind = fields[0]
        try:
            if kind == "vertices":
                declared = int(fields[1])
            elif kind == "edge":
                edges.append(
                    Edge(
                        int(fields[1]),
                        int(fields[2]),
                        float(fields[3]),
                        float(fields[4]),
                        float(fields[5]),
                    )
                )
            elif kind == "boundary":
                boundary = [int(x) for x in fields[1:]]
            elif kind == "meta":
                v = int(fields[1])
                level = int(fields[2])
                token = fields[3]
                address = None if token == "-" else token[1:]
                meta[v] = VertexMeta(level=level, address=address)
            else:
                raise ValidationError(f"unknown record {kind!r} in graph file")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed graph record: {ln!r}") from exc
    if boundary is None:
        raise ValidationError("graph file has no boundary record")
    g = build_graph(edges, boundary=boundary, meta=meta or None)
    if declared is not None and declared != g.n_vertices:
        raise ValidationError(
            f"graph file declares {declared} vertices but edges span "
            f"{g.n_vertices}"
        )
    return g


def write_solution(sol: DirichletSolution, target) -> None:
    with _writable(target) as fh:
        fh.write("graphdn-solution 1\n")
        fh.write(f"vertices {sol.graph.n_vertices}\n")
        for v, value in enumerate(sol.values):
            fh.write(f"vertex {v} {float(value)!r}\n")
        for i, s in enumerate(sol.edge_solutions):
            fh.write(f"edge {i} {s.c0!r} {s.c1!r}\n")
        fh.write(f"energy {sol.energy!r}\n")


def write_dn_matrix(dn: DNMatrix, target) -> None:
    with _writable(target) as fh:
        fh.write("graphdn-dn 1\n")
        fh.write("boundary" + "".join(f" {v}" for v in dn.boundary) + "\n")
        for v, row in zip(dn.boundary, np.asarray(dn.matrix)):
            fh.write(f"row {v}" + "".join(f" {float(x)!r}" for x in row) + "\n")


def write_convergence(report: ConvergenceReport, target) -> None:
    with _writable(target) as fh:
        fh.write("graphdn-convergence 1\n")
        fh.write(f"tolerance {report.tolerance!r}\n")
        fh.write(f"converged {'yes' if report.converged else 'no'}\n")
        fh.write(f"limit {report.limit!r}\n")
        extr = "-" if report.extrapolated is None else repr(report.extrapolated)
        fh.write(f"extrapolated {extr}\n")
        fh.write("depth value residual\n")
        for i, (n, v) in enumerate(zip(report.depths, report.values)):
            res = "-" if i == 0 else repr(report.residuals[i - 1])
            fh.write(f"{n} {v!r} {res}\n")


def write_plot_data(report: ConvergenceReport, target) -> None:
    """Bare (depth, value) columns for external plotting."""
    with _writable(target) as fh:
        for n, v in zip(report.depths, report.values):
            fh.write(f"{n} {v!r}\n")


def write_measure_table(table: MeasureTable, target) -> None:
    with _writable(target) as fh:
        fh.write("graphdn-measure 1\n")
        fh.write(f"partition-depth {table.partition_depth}\n")
        fh.write(f"additivity-residual {table.additivity_residual!r}\n")
        fh.write(f"positive-total {table.positive_total!r}\n")
        fh.write(f"negative-total {table.negative_total!r}\n")
        fh.write(f"signed-total {table.signed_total!r}\n")
        fh.write("cell value residual converged\n")
        for cell, report in zip(table.cells, table.reports):
            last = report.residuals[-1] if report.residuals else float("nan")
            fh.write(
                f"{cell.label()} {report.limit!r} {last!r} "
                f"{'yes' if report.converged else 'no'}\n"
            )


def graph_to_string(g: MetricGraph) -> str:
    buf = io.StringIO()
    write_graph(g, buf)
    return buf.getvalue()
