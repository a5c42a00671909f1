"""Vertex systems, Dirichlet solves, and Dirichlet-to-Neumann matrices.

Scattering every edge flux block to its endpoints yields a sparse symmetric
system over all vertices.  Rows at interior vertices express the derivative
matching (Kirchhoff) condition; rows at boundary vertices evaluate outward
boundary derivatives.  A Dirichlet solve eliminates the boundary rows and
solves the interior block, which is symmetric positive definite whenever the
graph is connected and has a boundary vertex.

Deep self-similar truncations produce edge lengths spanning many orders of
magnitude, so the interior block is symmetrically Jacobi-equilibrated before
factorization; a condition estimate of the scaled block is available on the
factorization object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
from scipy.sparse import csc_matrix, csr_matrix, diags
from scipy.sparse.linalg import LinearOperator, eigsh, onenormest, splu

from .edge import EdgeSolution, edge_dn_block, edge_energy
from .errors import DomainError, SingularInteriorError, ValidationError
from .graph import GraphPoint, MetricGraph

__all__ = [
    "assemble",
    "InteriorSystem",
    "DirichletSolution",
    "solve_dirichlet",
    "DNMatrix",
    "dn_matrix",
    "CurrentBalance",
    "current_balance",
    "EnergyIdentity",
    "energy_identity",
    "MaxPrincipleReport",
    "max_principle_check",
    "dirichlet_lower_bound",
]

_DENSE_EIG_LIMIT = 1200


def assemble(g: MetricGraph) -> csr_matrix:
    """Sparse symmetric vertex system: the sum of scattered edge blocks."""
    rows, cols, vals = [], [], []
    for e in g.edges:
        block = edge_dn_block(e.length, e.kappa2)
        rows += [e.a, e.b, e.a, e.b]
        cols += [e.a, e.b, e.b, e.a]
        vals += [block.h_aa, block.h_bb, block.h_ab, block.h_ba]
    n = g.n_vertices
    return csr_matrix((vals, (rows, cols)), shape=(n, n))


def _interior_components_without_boundary(g: MetricGraph) -> list[tuple[int, ...]]:
    interior = set(g.interior_vertices)
    seen: set[int] = set()
    bad: list[tuple[int, ...]] = []
    for start in g.interior_vertices:
        if start in seen:
            continue
        component = []
        touches_boundary = False
        stack = [start]
        seen.add(start)
        while stack:
            v = stack.pop()
            component.append(v)
            for _, w in g.adjacency[v]:
                if w in interior:
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
                else:
                    touches_boundary = True
        if not touches_boundary:
            bad.append(tuple(sorted(component)))
    return bad


class InteriorSystem:
    """Equilibrated factorization of the interior block of a vertex system.

    Immutable after construction; one factorization may serve many
    right-hand sides, including matrix-valued ones, concurrently.
    """

    def __init__(self, g: MetricGraph, matrix: csr_matrix | None = None):
        if not g.boundary:
            raise SingularInteriorError(
                "graph has no boundary vertex; the Dirichlet problem is "
                "undetermined",
                component=tuple(range(g.n_vertices)),
            )
        bad = _interior_components_without_boundary(g)
        if bad:
            raise SingularInteriorError(
                f"interior component {bad[0]} has no boundary contact",
                component=bad[0],
            )
        self.graph = g
        self.matrix = assemble(g) if matrix is None else matrix
        self.boundary = g.boundary_vertices
        self.interior = g.interior_vertices
        ii = np.asarray(self.interior, dtype=np.intp)
        bb = np.asarray(self.boundary, dtype=np.intp)
        self._a_ib = self.matrix[ii][:, bb].tocsr() if len(ii) else None
        if len(ii):
            a_ii = self.matrix[ii][:, ii].tocsc()
            d = a_ii.diagonal()
            scale = 1.0 / np.sqrt(d)
            s = diags(scale)
            self._scale = scale
            self._scaled = csc_matrix(s @ a_ii @ s)
            # SuperLU in symmetric mode: no partial pivoting, symmetric
            # fill-reducing order; the SPD-exploiting configuration.
            self._lu = splu(
                self._scaled,
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options={"SymmetricMode": True},
            )
        else:
            self._scale = np.zeros(0)
            self._scaled = None
            self._lu = None

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve the interior block against one or many right-hand sides."""
        if self._lu is None:
            return np.zeros_like(rhs)
        if rhs.ndim == 1:
            return self._scale * self._lu.solve(self._scale * rhs)
        scaled = self._scale[:, None] * rhs
        return self._scale[:, None] * self._lu.solve(scaled)

    def rhs_for(self, boundary_values: np.ndarray) -> np.ndarray:
        if self._a_ib is None:
            return np.zeros(0)
        return -self._a_ib @ boundary_values

    @cached_property
    def condition_estimate(self) -> float:
        """One-norm condition estimate of the equilibrated interior block."""
        n = len(self.interior)
        if n <= 1:
            return 1.0
        if n <= 64:
            return float(np.linalg.cond(self._scaled.toarray(), 1))
        norm_a = onenormest(self._scaled)
        inv = LinearOperator(
            (n, n), matvec=self._lu.solve, rmatvec=self._lu.solve
        )
        norm_inv = onenormest(inv)
        return float(norm_a * norm_inv)


@dataclass(frozen=True)
class DirichletSolution:
    """A solved Dirichlet problem: vertex values plus per-edge closed forms.

    ``boundary_values`` and ``boundary_derivatives`` follow the sorted
    boundary-vertex order; derivatives are outward (away from the graph) and
    sum the contributions of every incident edge at relative-boundary
    vertices.
    """

    graph: MetricGraph
    values: np.ndarray
    boundary_values: np.ndarray
    boundary_derivatives: np.ndarray
    edge_solutions: tuple[EdgeSolution, ...]
    energy: float

    @cached_property
    def _boundary_pos(self) -> dict[int, int]:
        return {v: i for i, v in enumerate(self.graph.boundary_vertices)}

    def derivative_at(self, v: int) -> float:
        """Outward boundary derivative at boundary vertex ``v``."""
        try:
            return float(self.boundary_derivatives[self._boundary_pos[v]])
        except KeyError:
            raise DomainError(f"vertex {v} is not a boundary vertex") from None

    def flux_sum(self, vertices: Sequence[int] | None = None) -> float:
        if vertices is None:
            return float(self.boundary_derivatives.sum())
        return float(sum(self.derivative_at(v) for v in vertices))

    def value_at(self, point: GraphPoint) -> float:
        return self.edge_solutions[point.edge](point.offset)

    def continuity_residual(self) -> float:
        """Largest gap between edge-endpoint evaluations and vertex values."""
        worst = 0.0
        for e, s in zip(self.graph.edges, self.edge_solutions):
            worst = max(worst, abs(s(0.0) - self.values[e.a]))
            worst = max(worst, abs(s(s.length) - self.values[e.b]))
        return worst

    def kirchhoff_residuals(self) -> tuple[np.ndarray, np.ndarray]:
        """Per interior vertex: |sum of outward edge derivatives| and scale.

        The scale is the sum of the absolute single-edge contributions, the
        natural yardstick for the cancellation the condition demands.
        """
        g = self.graph
        sums = np.zeros(g.n_vertices)
        scales = np.zeros(g.n_vertices)
        for e, s in zip(g.edges, self.edge_solutions):
            da, db = s.outward_a(), s.outward_b()
            sums[e.a] += da
            sums[e.b] += db
            scales[e.a] += abs(da)
            scales[e.b] += abs(db)
        idx = np.asarray(g.interior_vertices, dtype=np.intp)
        return np.abs(sums[idx]), scales[idx]


def _coerce_boundary_values(g: MetricGraph, data) -> np.ndarray:
    bverts = g.boundary_vertices
    if isinstance(data, Mapping):
        extra = set(data) - set(bverts)
        if extra:
            raise ValidationError(
                f"data given for non-boundary vertex {min(extra)}",
                element=("vertex", min(extra)),
            )
        missing = set(bverts) - set(data)
        if missing:
            raise ValidationError(
                f"no boundary value for vertex {min(missing)}",
                element=("vertex", min(missing)),
            )
        return np.array([float(data[v]) for v in bverts])
    arr = np.asarray(data, dtype=float)
    if arr.shape != (len(bverts),):
        raise ValidationError(
            f"expected {len(bverts)} boundary values, got shape {arr.shape}"
        )
    return arr.copy()


def solve_dirichlet(
    g: MetricGraph, data, system: InteriorSystem | None = None
) -> DirichletSolution:
    """Solve the Dirichlet problem with the given boundary values.

    ``data`` is a mapping from boundary vertex id to value, or a sequence
    in sorted boundary-vertex order.  A prebuilt :class:`InteriorSystem`
    may be passed to reuse its factorization.
    """
    sys_ = InteriorSystem(g) if system is None else system
    ub = _coerce_boundary_values(g, data)

    values = np.zeros(g.n_vertices)
    values[np.asarray(sys_.boundary, dtype=np.intp)] = ub
    if sys_.interior:
        ui = sys_.solve(sys_.rhs_for(ub))
        values[np.asarray(sys_.interior, dtype=np.intp)] = ui

    solutions = []
    flux = np.zeros(g.n_vertices)
    energy = 0.0
    for e in g.edges:
        block = edge_dn_block(e.length, e.kappa2)
        va, vb = float(values[e.a]), float(values[e.b])
        s = EdgeSolution(
            length=e.length,
            kappa2=e.kappa2,
            value_a=va,
            value_b=vb,
            c0=va,
            c1=-(block.h_aa * va + block.h_ab * vb),
        )
        solutions.append(s)
        energy += edge_energy(s)
        # Outward derivatives from the closed form, not matrix residuals.
        flux[e.a] += block.h_aa * va + block.h_ab * vb
        flux[e.b] += block.h_ba * va + block.h_bb * vb

    bidx = np.asarray(sys_.boundary, dtype=np.intp)
    values.flags.writeable = False
    ub.flags.writeable = False
    bder = flux[bidx]
    bder.flags.writeable = False
    return DirichletSolution(
        graph=g,
        values=values,
        boundary_values=ub,
        boundary_derivatives=bder,
        edge_solutions=tuple(solutions),
        energy=float(energy),
    )


@dataclass(frozen=True)
class DNMatrix:
    """Dense Dirichlet-to-Neumann matrix over the sorted boundary vertices."""

    boundary: tuple[int, ...]
    matrix: np.ndarray

    def symmetry_residual(self) -> float:
        return float(np.abs(self.matrix - self.matrix.T).max())

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.T))[0])

    def constant_residual(self) -> float:
        """Max |row sum|; near zero exactly when the potential vanishes."""
        return float(np.abs(self.matrix.sum(axis=1)).max())

    def quadratic(self, boundary_values: Sequence[float]) -> float:
        u = np.asarray(boundary_values, dtype=float)
        return float(u @ self.matrix @ u)


def dn_matrix(g: MetricGraph, system: InteriorSystem | None = None) -> DNMatrix:
    """Dirichlet-to-Neumann matrix: boundary values to outward derivatives.

    Column ``j`` holds the boundary derivatives of the solve with indicator
    data at the j-th sorted boundary vertex; algebraically the Schur
    complement of the interior block.
    """
    sys_ = InteriorSystem(g) if system is None else system
    bb = np.asarray(sys_.boundary, dtype=np.intp)
    a_bb = sys_.matrix[bb][:, bb].toarray()
    if not sys_.interior:
        matrix = a_bb
    else:
        rhs = -sys_._a_ib.toarray()
        x = sys_.solve(rhs)
        matrix = a_bb + sys_._a_ib.T @ x
    matrix = np.asarray(matrix)
    matrix.flags.writeable = False
    return DNMatrix(boundary=tuple(sys_.boundary), matrix=matrix)


@dataclass(frozen=True)
class CurrentBalance:
    """Total outward boundary flux against the potential integral of u."""

    flux_sum: float
    potential_integral: float
    residual: float


def _edge_potential_integral(s: EdgeSolution) -> float:
    # int_e kappa2 * u dx = kappa (uA + uB) tanh(kappa l / 2) for kappa > 0.
    kappa = math.sqrt(s.kappa2)
    z = kappa * s.length
    total = s.value_a + s.value_b
    if z < 1e-6:
        return s.kappa2 * total * (s.length / 2.0) * (1.0 - z * z / 12.0)
    return kappa * total * math.tanh(0.5 * z)


def current_balance(sol: DirichletSolution) -> CurrentBalance:
    """Conservation of current: boundary flux equals ``int u * kappa2``."""
    flux = sol.flux_sum()
    integral = sum(_edge_potential_integral(s) for s in sol.edge_solutions)
    return CurrentBalance(
        flux_sum=float(flux),
        potential_integral=float(integral),
        residual=float(flux - integral),
    )


@dataclass(frozen=True)
class EnergyIdentity:
    """Boundary quadratic form against the edgewise energy sum."""

    form_value: float
    energy: float
    residual: float


def energy_identity(sol: DirichletSolution) -> EnergyIdentity:
    """Compare <DN u, u> on the boundary with the edgewise energy.

    The two sides are computed independently: the left through the full
    Dirichlet-to-Neumann matrix (one indicator solve per boundary vertex),
    the right from the closed-form edge energies of this solution.
    """
    dn = dn_matrix(sol.graph)
    form = dn.quadratic(sol.boundary_values)
    return EnergyIdentity(
        form_value=form,
        energy=sol.energy,
        residual=float(form - sol.energy),
    )


@dataclass(frozen=True)
class MaxPrincipleViolation:
    kind: str  # "vertex" or "edge"
    index: int
    value: float


@dataclass(frozen=True)
class MaxPrincipleReport:
    violations: tuple[MaxPrincipleViolation, ...]
    lower: float
    upper: float
    checked_vertices: int
    checked_edges: int
    skipped_constant: bool

    @property
    def passed(self) -> bool:
        return not self.violations


def max_principle_check(
    sol: DirichletSolution, slack: float = 1e-12
) -> MaxPrincipleReport:
    """Check that interior values stay strictly between the boundary extremes.

    Inspects every interior vertex value and the single interior extremum of
    every hyperbolic edge solution (linear solutions are monotone).  Constant
    boundary data is skipped, since the open interval is then empty.
    Report-only: violations are returned, never raised.
    """
    lo = float(sol.boundary_values.min())
    hi = float(sol.boundary_values.max())
    if hi == lo:
        return MaxPrincipleReport(
            violations=(),
            lower=lo,
            upper=hi,
            checked_vertices=0,
            checked_edges=0,
            skipped_constant=True,
        )
    tol = slack * max(1.0, abs(lo), abs(hi))
    violations = []
    n_v = 0
    for v in sol.graph.interior_vertices:
        n_v += 1
        value = float(sol.values[v])
        if value <= lo - tol or value >= hi + tol:
            violations.append(MaxPrincipleViolation("vertex", v, value))
    n_e = 0
    for i, s in enumerate(sol.edge_solutions):
        n_e += 1
        extremum = s.interior_extremum()
        if extremum is None:
            continue
        _, value = extremum
        if value <= lo - tol or value >= hi + tol:
            violations.append(MaxPrincipleViolation("edge", i, value))
    return MaxPrincipleReport(
        violations=tuple(violations),
        lower=lo,
        upper=hi,
        checked_vertices=n_v,
        checked_edges=n_e,
        skipped_constant=False,
    )


def dirichlet_lower_bound(g: MetricGraph) -> float:
    """Smallest eigenvalue of the raw interior block; positive by theory.

    This is a Galerkin restriction to the span of edgewise closed-form
    shapes, so only positivity is meaningful, not the magnitude.  An empty
    interior returns ``inf``.
    """
    if not g.boundary:
        raise SingularInteriorError(
            "graph has no boundary vertex", component=tuple(range(g.n_vertices))
        )
    interior = np.asarray(g.interior_vertices, dtype=np.intp)
    if len(interior) == 0:
        return math.inf
    a = assemble(g)
    a_ii = a[interior][:, interior]
    if len(interior) <= _DENSE_EIG_LIMIT:
        return float(np.linalg.eigvalsh(a_ii.toarray())[0])
    vals = eigsh(a_ii.tocsc(), k=1, sigma=0, which="LM", return_eigenvectors=False)
    return float(vals[0])
