"""Boundary flux functionals on clopen sets of the ideal tree boundary.

The ideal boundary of an infinite binary scaling tree is a Cantor set of
descending paths together with the isolated root boundary vertex.  Its
clopen subsets are finite unions of address-prefix cylinders, optionally
including the root vertex.  For a simple boundary function F (a finite
linear combination of clopen indicators) and a clopen set E, the flux
functional is approximated by exhaustion: solve the Dirichlet problem on
the depth-n truncation with boundary data read off from F, sum the outward
boundary derivatives over the vertices whose cells lie in E, and track the
sequence over n.  Convergence of the sequence is reported as data, never
raised.

Finite truncations satisfy the structural identities exactly up to solver
error: the functional is symmetric in (F-set, E), additive over partitions
of E, and its diagonal quadratic form is the solution energy.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterable, Sequence

from .dirichlet import DirichletSolution, solve_dirichlet
from .errors import DomainError, ValidationError
from .trees import (
    ADDRESS_ALPHABET,
    AlphaBetaSpec,
    cylinder_leaves,
    generate_ab_tree,
)

__all__ = [
    "ClopenSet",
    "SimpleBoundaryFunction",
    "ConvergenceReport",
    "MeasureTable",
    "combine",
    "dn_at_depth",
    "dn_function",
    "measure_table",
    "symmetry_residual",
    "quadratic_form",
]

# Convergence is declared once this many trailing first differences sit
# below the tolerance.  Tunable in one place.
CONSECUTIVE_BELOW_TOL = 3


def _validate_prefixes(prefixes: Iterable[str]) -> list[str]:
    out = []
    for p in prefixes:
        for ch in p:
            if ch not in ADDRESS_ALPHABET:
                raise DomainError(f"invalid address symbol {ch!r} in prefix {p!r}")
        out.append(p)
    return out


def _normalize(prefixes: Iterable[str]) -> tuple[str, ...]:
    """Canonical antichain: drop nested prefixes, merge full sibling pairs."""
    pool = set(_validate_prefixes(prefixes))
    pool = {
        p for p in pool if not any(q != p and p.startswith(q) for q in pool)
    }
    merged = True
    while merged:
        merged = False
        for p in sorted(pool):
            if p and p.endswith("a") and p[:-1] + "b" in pool:
                pool.discard(p)
                pool.discard(p[:-1] + "b")
                pool.add(p[:-1])
                merged = True
                break
    return tuple(sorted(pool))


def _complement_prefixes(prefixes: tuple[str, ...]) -> tuple[str, ...]:
    # Walk the address tree; emit maximal nodes disjoint from every prefix.
    cells: list[str] = []

    def descend(node: str) -> None:
        if node in prefixes:
            return
        if not any(p.startswith(node) for p in prefixes):
            cells.append(node)
            return
        for ch in ADDRESS_ALPHABET:
            descend(node + ch)

    descend("")
    return tuple(sorted(cells))


@dataclass(frozen=True, eq=False)
class ClopenSet:
    """A clopen subset of the ideal boundary of one tree family.

    Held as a canonical antichain of address prefixes (sibling pairs merged,
    nested prefixes dropped) plus a flag for the isolated root boundary
    vertex.  Equality and hashing use the canonical form and the family
    identity, ignoring truncation depth.
    """

    family: AlphaBetaSpec
    prefixes: tuple[str, ...]
    include_root: bool = False

    def __post_init__(self):
        object.__setattr__(self, "prefixes", _normalize(self.prefixes))

    @classmethod
    def cylinder(
        cls, family: AlphaBetaSpec, prefix: str, include_root: bool = False
    ) -> "ClopenSet":
        return cls(family, (prefix,), include_root)

    @classmethod
    def whole_boundary(cls, family: AlphaBetaSpec) -> "ClopenSet":
        return cls(family, ("",), include_root=True)

    @classmethod
    def cantor_part(cls, family: AlphaBetaSpec) -> "ClopenSet":
        """All descending paths, without the root boundary vertex."""
        return cls(family, ("",), include_root=False)

    @classmethod
    def root_vertex(cls, family: AlphaBetaSpec) -> "ClopenSet":
        return cls(family, (), include_root=True)

    def _key(self) -> tuple:
        return (self.family.family_key(), self.prefixes, self.include_root)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClopenSet):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    @property
    def is_empty(self) -> bool:
        return not self.prefixes and not self.include_root

    def complement(self) -> "ClopenSet":
        return ClopenSet(
            self.family,
            _complement_prefixes(self.prefixes),
            not self.include_root,
        )

    def disjoint_from(self, other: "ClopenSet") -> bool:
        if self.include_root and other.include_root:
            return False
        for p in self.prefixes:
            for q in other.prefixes:
                if p.startswith(q) or q.startswith(p):
                    return False
        return True

    def contains_cell(self, address: str) -> bool:
        """Whether the depth cell headed by ``address`` lies in the set.

        Raises when a set prefix strictly extends the address, i.e. the cell
        straddles the set and a deeper truncation is required.
        """
        for p in self.prefixes:
            if address.startswith(p):
                return True
            if p.startswith(address) and p != address:
                raise DomainError(
                    f"cell {address!r} straddles prefix {p!r}; "
                    "refine the truncation"
                )
        return False

    @property
    def min_truncation_depth(self) -> int:
        longest = max((len(p) for p in self.prefixes), default=0)
        return max(2, longest + 1)

    def resolve(self, graph) -> tuple[int, ...]:
        """Truncation boundary vertices carrying this set's cells."""
        verts: set[int] = set()
        for p in self.prefixes:
            verts.update(cylinder_leaves(graph, p))
        if self.include_root:
            verts.update(cylinder_leaves(graph, "", include_root_vertex=True)[:1])
        return tuple(sorted(verts))

    def label(self) -> str:
        parts = [f"@{p}" for p in self.prefixes]
        if self.include_root:
            parts.append("v0")
        return "+".join(parts) if parts else "empty"


def _check_same_family(a: AlphaBetaSpec, b: AlphaBetaSpec) -> None:
    if a.family_key() != b.family_key():
        raise ValidationError(
            "clopen sets belong to different tree families: "
            f"{a.family_key()} vs {b.family_key()}"
        )


@dataclass(frozen=True)
class SimpleBoundaryFunction:
    """Finite linear combination of indicators of pairwise disjoint sets."""

    terms: tuple[tuple[float, ClopenSet], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "terms", tuple((float(c), s) for c, s in self.terms)
        )
        if not self.terms:
            raise ValidationError("a simple boundary function needs >= 1 term")
        family = self.terms[0][1].family
        for _, s in self.terms[1:]:
            _check_same_family(family, s.family)
        for i in range(len(self.terms)):
            for j in range(i + 1, len(self.terms)):
                if not self.terms[i][1].disjoint_from(self.terms[j][1]):
                    raise ValidationError(
                        f"terms {i} and {j} overlap: "
                        f"{self.terms[i][1].label()} vs {self.terms[j][1].label()}"
                    )

    @classmethod
    def indicator(cls, s: ClopenSet) -> "SimpleBoundaryFunction":
        return cls(((1.0, s),))

    @property
    def family(self) -> AlphaBetaSpec:
        return self.terms[0][1].family

    @property
    def min_truncation_depth(self) -> int:
        return max(s.min_truncation_depth for _, s in self.terms)

    def value_at_cell(self, address: str) -> float:
        return sum(c for c, s in self.terms if s.contains_cell(address))

    def root_value(self) -> float:
        return sum(c for c, s in self.terms if s.include_root)

    def boundary_data(self, graph) -> dict[int, float]:
        """Dirichlet data on a truncation: each cell's value of F."""
        data: dict[int, float] = {}
        for v in graph.boundary_vertices:
            m = graph.meta[v]
            if m is None or (m.address is None and m.level != 0):
                raise DomainError(f"boundary vertex {v} carries no address")
            if m.address is None:
                data[v] = self.root_value()
            else:
                data[v] = self.value_at_cell(m.address)
        return data

    def label(self) -> str:
        return " + ".join(f"{c:g}*{s.label()}" for c, s in self.terms)


def combine(
    pairs: Sequence[tuple[float, SimpleBoundaryFunction]],
) -> SimpleBoundaryFunction:
    """Linear combination of simple functions, refined to disjoint cells."""
    if not pairs:
        raise ValidationError("nothing to combine")
    family = pairs[0][1].family
    for _, f in pairs[1:]:
        _check_same_family(family, f.family)
    depth = max(
        (len(p) for _, f in pairs for _, s in f.terms for p in s.prefixes),
        default=0,
    )

    def cells(k: int) -> list[str]:
        out = [""]
        for _ in range(k):
            out = [c + ch for c in out for ch in ADDRESS_ALPHABET]
        return out

    by_value: dict[float, list[str]] = {}
    for address in cells(depth):
        value = sum(a * f.value_at_cell(address) for a, f in pairs)
        if value != 0.0:
            by_value.setdefault(value, []).append(address)
    root = sum(a * f.root_value() for a, f in pairs)

    terms: list[tuple[float, ClopenSet]] = []
    for value in sorted(by_value):
        with_root = value == root and root != 0.0
        terms.append(
            (value, ClopenSet(family, tuple(by_value[value]), include_root=with_root))
        )
        if with_root:
            root = 0.0
    if root != 0.0:
        terms.append((root, ClopenSet.root_vertex(family)))
    if not terms:
        # The zero function: one zero-weighted cylinder keeps the type total.
        terms.append((0.0, ClopenSet.cantor_part(family)))
    return SimpleBoundaryFunction(tuple(terms))


@lru_cache(maxsize=16)
def _solved_truncation(f: SimpleBoundaryFunction, depth: int) -> DirichletSolution:
    graph = generate_ab_tree(replace(f.family, depth=depth))
    return solve_dirichlet(graph, f.boundary_data(graph))


def dn_at_depth(f: SimpleBoundaryFunction, e: ClopenSet, depth: int) -> float:
    """Boundary flux of the depth-``depth`` truncation solve through E."""
    _check_same_family(f.family, e.family)
    needed = max(f.min_truncation_depth, e.min_truncation_depth)
    if depth < needed:
        raise DomainError(
            f"depth {depth} too shallow; these sets need depth >= {needed}"
        )
    sol = _solved_truncation(f, depth)
    return sol.flux_sum(e.resolve(sol.graph))


@dataclass(frozen=True)
class ConvergenceReport:
    """Exhaustion values per depth with first differences and a verdict.

    ``converged`` means the trailing ``CONSECUTIVE_BELOW_TOL`` residuals all
    sit below the tolerance; ``limit`` is the finest value and
    ``extrapolated`` a geometric extrapolation from the observed ratio,
    reported for information only.
    """

    depths: tuple[int, ...]
    values: tuple[float, ...]
    residuals: tuple[float, ...]
    tolerance: float
    converged: bool
    limit: float
    extrapolated: float | None
    ratio: float | None


def _report(depths, values, tol) -> ConvergenceReport:
    residuals = tuple(
        abs(values[i] - values[i - 1]) for i in range(1, len(values))
    )
    tail = residuals[-CONSECUTIVE_BELOW_TOL:]
    converged = len(tail) >= CONSECUTIVE_BELOW_TOL and all(r <= tol for r in tail)
    ratio = None
    extrapolated = None
    if len(values) >= 3:
        d1 = values[-1] - values[-2]
        d0 = values[-2] - values[-3]
        if d0 != 0.0:
            ratio = d1 / d0
            if abs(ratio) < 1.0:
                extrapolated = values[-1] + d1 * ratio / (1.0 - ratio)
    return ConvergenceReport(
        depths=tuple(depths),
        values=tuple(values),
        residuals=residuals,
        tolerance=tol,
        converged=converged,
        limit=values[-1],
        extrapolated=extrapolated,
        ratio=ratio,
    )


def dn_function(
    f: SimpleBoundaryFunction,
    e: ClopenSet,
    tol: float,
    n_max: int,
    n_min: int | None = None,
) -> ConvergenceReport:
    """Exhaustion approximation of the boundary flux functional.

    Solves every truncation from ``n_min`` (default: the shallowest depth
    at which both F and E resolve) through ``n_max`` and reports the value
    sequence.  Non-convergence is reported, not raised.
    """
    if not tol > 0.0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    if n_max < 2:
        raise DomainError(f"n_max must be at least 2, got {n_max}")
    _check_same_family(f.family, e.family)
    lowest = max(f.min_truncation_depth, e.min_truncation_depth)
    start = lowest if n_min is None else n_min
    if start < lowest:
        raise DomainError(f"n_min {start} too shallow; need >= {lowest}")
    if n_max < start:
        raise DomainError(f"n_max {n_max} below the starting depth {start}")
    depths = range(start, n_max + 1)
    values = [dn_at_depth(f, e, n) for n in depths]
    return _report(list(depths), values, tol)


@dataclass(frozen=True)
class MeasureTable:
    """Flux values of F over a clopen partition of the whole ideal boundary.

    Cells are the depth-``partition_depth`` cylinders plus the root vertex;
    per-cell exhaustion reports are kept alongside the final values.  The
    additivity residual is the largest gap, over all solved depths, between
    the cell sum and the whole-boundary value.
    """

    partition_depth: int
    cells: tuple[ClopenSet, ...]
    reports: tuple[ConvergenceReport, ...]
    values: tuple[float, ...]
    additivity_residual: float
    positive_total: float
    negative_total: float
    signed_total: float
    converged: bool

    def labels(self) -> tuple[str, ...]:
        return tuple(c.label() for c in self.cells)


def measure_table(
    f: SimpleBoundaryFunction,
    partition_depth: int,
    tol: float,
    n_max: int,
    n_min: int | None = None,
) -> MeasureTable:
    """Evaluate the flux functional of F on a full cylinder partition."""
    if partition_depth < 1:
        raise DomainError(f"partition depth must be >= 1, got {partition_depth}")
    family = f.family
    addresses = [""]
    for _ in range(partition_depth):
        addresses = [a + ch for a in addresses for ch in ADDRESS_ALPHABET]
    cells = [ClopenSet.cylinder(family, a) for a in addresses]
    cells.append(ClopenSet.root_vertex(family))

    lowest = max(
        [f.min_truncation_depth, partition_depth + 1]
        + [c.min_truncation_depth for c in cells]
    )
    start = lowest if n_min is None else n_min
    if start < lowest:
        raise DomainError(f"n_min {start} too shallow; need >= {lowest}")
    if n_max < start:
        raise DomainError(f"n_max {n_max} below the starting depth {start}")

    depths = list(range(start, n_max + 1))
    whole = ClopenSet.whole_boundary(family)
    per_cell = {c: [] for c in cells}
    whole_values = []
    additivity = 0.0
    for n in depths:
        total = dn_at_depth(f, whole, n)
        whole_values.append(total)
        cell_sum = 0.0
        for c in cells:
            v = dn_at_depth(f, c, n)
            per_cell[c].append(v)
            cell_sum += v
        additivity = max(additivity, abs(cell_sum - total))

    reports = tuple(_report(depths, per_cell[c], tol) for c in cells)
    values = tuple(r.limit for r in reports)
    return MeasureTable(
        partition_depth=partition_depth,
        cells=tuple(cells),
        reports=reports,
        values=values,
        additivity_residual=float(additivity),
        positive_total=float(sum(v for v in values if v > 0.0)),
        negative_total=float(sum(v for v in values if v < 0.0)),
        signed_total=float(sum(values)),
        converged=all(r.converged for r in reports),
    )


def symmetry_residual(first: ClopenSet, second: ClopenSet, depth: int) -> float:
    """|flux(1_first through second) - flux(1_second through first)|."""
    forward = dn_at_depth(SimpleBoundaryFunction.indicator(first), second, depth)
    backward = dn_at_depth(SimpleBoundaryFunction.indicator(second), first, depth)
    return abs(forward - backward)


def quadratic_form(f: SimpleBoundaryFunction, depth: int) -> float:
    """The diagonal form <flux(F), F> at one truncation depth.

    Computed as the boundary sum of data times outward derivative, which by
    linearity of the solve equals the double sum of pairwise cylinder fluxes
    weighted by the coefficients of F, and equals the truncation energy.
    """
    if depth < f.min_truncation_depth:
        raise DomainError(
            f"depth {depth} too shallow; F needs >= {f.min_truncation_depth}"
        )
    sol = _solved_truncation(f, depth)
    return float(sol.boundary_values @ sol.boundary_derivatives)
