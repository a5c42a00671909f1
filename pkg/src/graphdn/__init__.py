"""Dirichlet problems, Dirichlet-to-Neumann maps, and boundary measures on
metric graphs with self-similar binary tree families."""

from .dirichlet import (
    DirichletSolution,
    DNMatrix,
    assemble,
    current_balance,
    dirichlet_lower_bound,
    dn_matrix,
    energy_identity,
    max_principle_check,
    solve_dirichlet,
)
from .edge import EdgeDNBlock, EdgeSolution, edge_dn_block, edge_energy, solve_edge
from .errors import DomainError, SingularInteriorError, ValidationError
from .graph import (
    Edge,
    GraphPoint,
    GraphReport,
    MetricGraph,
    VertexMeta,
    build_graph,
    geodesic_distance,
    graph_report,
)
from .measure import (
    ClopenSet,
    ConvergenceReport,
    MeasureTable,
    SimpleBoundaryFunction,
    dn_at_depth,
    dn_function,
    measure_table,
    quadratic_form,
    symmetry_residual,
)
from .randomwalk import WalkEstimate, random_walk_oracle
from .trees import (
    AlphaBetaSpec,
    HarmonicClosedForm,
    add_shortcut_edges,
    closed_form_harmonic,
    cylinder_leaves,
    generate_ab_tree,
)

__version__ = "0.1.0"
