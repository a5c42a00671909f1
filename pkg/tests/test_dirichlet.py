import math

import numpy as np
import pytest

from graphdn.dirichlet import (
    InteriorSystem,
    assemble,
    current_balance,
    dirichlet_lower_bound,
    dn_matrix,
    energy_identity,
    max_principle_check,
    solve_dirichlet,
)
from graphdn.errors import SingularInteriorError, ValidationError
from graphdn.graph import build_graph
from graphdn.trees import AlphaBetaSpec, generate_ab_tree

from conftest import graph_corpus
from oracles import dense_dn, dense_solve

COTH1 = 1.3130352854993312
CSCH1 = 0.8509181282393216


def interval(kappa2=0.0, length=1.0):
    return build_graph([(0, 1, length, 1.0, kappa2)])


def star3():
    return build_graph([(3, 0, 1.0), (3, 1, 1.0), (3, 2, 1.0)])


class TestAssemble:
    def test_interval(self):
        a = assemble(interval()).toarray()
        assert np.allclose(a, [[1, -1], [-1, 1]], atol=0)

    def test_path_of_two(self):
        g = build_graph([(0, 2, 1.0), (2, 1, 1.0)])
        a = assemble(g).toarray()
        # vertex order 0, 1, 2 with 2 the midpoint
        expected = np.array([[1, 0, -1], [0, 1, -1], [-1, -1, 2]])
        assert np.allclose(a, expected, atol=0)

    def test_star(self):
        a = assemble(star3()).toarray()
        assert a[3, 3] == 3.0
        assert all(a[v, v] == 1.0 for v in range(3))
        assert all(a[3, v] == -1.0 for v in range(3))


class TestSolve:
    def test_star_center_third(self):
        sol = solve_dirichlet(star3(), {0: 1.0, 1: 0.0, 2: 0.0})
        assert math.isclose(sol.values[3], 1.0 / 3.0, rel_tol=1e-14)

    def test_constants_are_harmonic(self):
        g = build_graph([(0, 2, 1.0), (2, 3, 0.5), (3, 1, 2.0), (2, 1, 1.5)])
        sol = solve_dirichlet(g, {v: 4.2 for v in g.boundary_vertices})
        assert np.allclose(sol.values, 4.2, rtol=1e-13)
        assert sol.energy <= 1e-20

    def test_interval_hyperbolic(self):
        sol = solve_dirichlet(interval(kappa2=1.0), {0: 0.0, 1: 1.0})
        s = sol.edge_solutions[0]
        exact = math.sinh(0.25) / math.sinh(1.0)
        assert math.isclose(s(0.25), exact, rel_tol=1e-12)

    def test_sequence_data(self):
        sol = solve_dirichlet(star3(), [1.0, 0.0, 0.0])
        assert math.isclose(sol.values[3], 1.0 / 3.0, rel_tol=1e-14)

    def test_data_validation(self):
        with pytest.raises(ValidationError, match="no boundary value"):
            solve_dirichlet(star3(), {0: 1.0})
        with pytest.raises(ValidationError, match="non-boundary"):
            solve_dirichlet(star3(), {0: 1.0, 1: 0.0, 2: 0.0, 3: 0.5})

    def test_no_boundary_is_singular(self):
        cycle = build_graph(
            [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)], boundary=set()
        )
        with pytest.raises(SingularInteriorError):
            solve_dirichlet(cycle, {})

    def test_derivative_extraction_matches_dense(self):
        for g in graph_corpus(8, seed=77, max_vertices=12):
            data = {v: float(i % 3) for i, v in enumerate(g.boundary_vertices)}
            sol = solve_dirichlet(g, data)
            dense = dense_solve(g, data)
            scale = max(1.0, np.abs(dense).max())
            assert np.abs(sol.values - dense).max() <= 1e-9 * scale


class TestDNMatrix:
    def test_interval_scaling(self):
        dn = dn_matrix(interval(length=0.5))
        assert np.allclose(dn.matrix, [[2, -2], [-2, 2]], atol=0)

    def test_star_closed_form(self):
        dn = dn_matrix(star3())
        expected = (np.full((3, 3), -1.0) + 3 * np.eye(3)) / 3.0
        assert np.abs(dn.matrix - expected).max() < 1e-14

    def test_interval_hyperbolic(self):
        dn = dn_matrix(interval(kappa2=1.0))
        expected = np.array([[COTH1, -CSCH1], [-CSCH1, COTH1]])
        assert np.abs(dn.matrix - expected).max() < 1e-13

    def test_corpus_structure(self):
        for g in graph_corpus(40, seed=5):
            dn = dn_matrix(g)
            scale = max(1.0, np.abs(dn.matrix).max())
            assert dn.symmetry_residual() <= 1e-10 * scale
            assert dn.min_eigenvalue() >= -1e-10 * scale
            if all(e.kappa2 == 0.0 for e in g.edges):
                assert dn.constant_residual() <= 1e-10 * scale
            else:
                assert dn.min_eigenvalue() > 0.0
            oracle = dense_dn(g)
            assert np.abs(dn.matrix - oracle).max() <= 1e-9 * scale


class TestIdentities:
    def test_current_balance_zero_potential(self):
        sol = solve_dirichlet(star3(), {0: 1.0, 1: 0.0, 2: 0.0})
        expected = np.array([2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0])
        assert np.abs(sol.boundary_derivatives - expected).max() < 1e-13
        cb = current_balance(sol)
        assert abs(cb.flux_sum) <= 1e-10
        assert cb.potential_integral == 0.0

    def test_current_balance_interval(self):
        sol = solve_dirichlet(interval(kappa2=1.0), {0: 0.0, 1: 1.0})
        cb = current_balance(sol)
        expected = (math.cosh(1.0) - 1.0) / math.sinh(1.0)
        assert math.isclose(cb.flux_sum, expected, rel_tol=1e-12)
        assert abs(cb.residual) <= 1e-12

    def test_energy_identity_examples(self):
        sol = solve_dirichlet(interval(), {0: 0.0, 1: 1.0})
        ei = energy_identity(sol)
        assert math.isclose(ei.form_value, 1.0, rel_tol=1e-14)
        assert math.isclose(ei.energy, 1.0, rel_tol=1e-14)

        sol = solve_dirichlet(star3(), {0: 1.0, 1: 0.0, 2: 0.0})
        ei = energy_identity(sol)
        assert math.isclose(ei.energy, 2.0 / 3.0, rel_tol=1e-13)

        sol = solve_dirichlet(interval(kappa2=1.0), {0: 0.0, 1: 1.0})
        ei = energy_identity(sol)
        assert math.isclose(ei.energy, COTH1, rel_tol=1e-12)
        assert abs(ei.residual) <= 1e-12

    def test_identity_residuals_on_corpus(self):
        rng = np.random.default_rng(17)
        for g in graph_corpus(30, seed=9):
            data = {
                v: float(rng.uniform(-1, 1)) for v in g.boundary_vertices
            }
            sol = solve_dirichlet(g, data)
            ei = energy_identity(sol)
            scale = max(abs(ei.form_value), abs(ei.energy), 1e-12)
            assert abs(ei.residual) <= 1e-8 * scale
            cb = current_balance(sol)
            flux_scale = max(
                np.abs(sol.boundary_derivatives).sum(),
                abs(cb.potential_integral),
                1e-12,
            )
            assert abs(cb.residual) <= 1e-8 * flux_scale

    def test_solution_invariants_on_corpus(self):
        rng = np.random.default_rng(23)
        for g in graph_corpus(20, seed=31):
            data = {v: float(rng.uniform(0, 1)) for v in g.boundary_vertices}
            sol = solve_dirichlet(g, data)
            norm = max(1e-30, np.abs(sol.values).max())
            assert sol.continuity_residual() <= 1e-10 * norm
            residuals, scales = sol.kirchhoff_residuals()
            assert np.all(residuals <= 1e-8 * np.maximum(scales, 1.0))
            assert sol.energy >= 0.0


class TestMaxPrinciple:
    def test_star_passes(self):
        sol = solve_dirichlet(star3(), {0: 1.0, 1: 0.0, 2: 0.0})
        report = max_principle_check(sol)
        assert report.passed
        assert report.checked_vertices == 1

    def test_constant_skipped(self):
        sol = solve_dirichlet(star3(), {0: 1.0, 1: 1.0, 2: 1.0})
        report = max_principle_check(sol)
        assert report.skipped_constant

    def test_tree_random_01_data(self):
        rng = np.random.default_rng(2)
        spec = AlphaBetaSpec(alpha=0.35, depth=6, kappa2_per_level=(1.0, 0.5))
        g = generate_ab_tree(spec)
        for _ in range(5):
            data = {v: float(rng.integers(0, 2)) for v in g.boundary_vertices}
            if len(set(data.values())) < 2:
                continue
            report = max_principle_check(solve_dirichlet(g, data))
            assert report.passed
            assert report.checked_edges == len(g.edges)


class TestLowerBound:
    def test_path_of_two(self):
        g = build_graph([(0, 2, 1.0), (2, 1, 1.0)])
        assert math.isclose(dirichlet_lower_bound(g), 2.0, rel_tol=1e-14)

    def test_star(self):
        assert math.isclose(dirichlet_lower_bound(star3()), 3.0, rel_tol=1e-14)

    def test_empty_interior(self):
        assert dirichlet_lower_bound(interval()) == math.inf

    def test_deep_truncation_positive(self):
        g = generate_ab_tree(AlphaBetaSpec(alpha=0.3, depth=8))
        assert dirichlet_lower_bound(g) > 0.0


class TestInteriorSystem:
    def test_condition_estimate_reasonable(self):
        g = generate_ab_tree(AlphaBetaSpec(alpha=0.3, depth=7))
        system = InteriorSystem(g)
        assert 1.0 <= system.condition_estimate < 1e8

    def test_shared_factorization(self):
        g = star3()
        system = InteriorSystem(g)
        a = solve_dirichlet(g, {0: 1.0, 1: 0.0, 2: 0.0}, system=system)
        b = solve_dirichlet(g, {0: 0.0, 1: 1.0, 2: 0.0}, system=system)
        assert math.isclose(a.values[3], b.values[3], rel_tol=1e-14)
