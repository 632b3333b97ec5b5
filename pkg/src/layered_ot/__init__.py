"""Exact discrete optimal transport on layered geometries.

Scenario generators, exact primal/dual solvers for two- and three-marginal
couplings, structural certifiers (graph decompositions, extremality and twist
checks), and uniqueness probes for the optimal face.
"""

from .costs import CostModel, eval_cost, grad_x_cost, cost_table, subtwist_gap
from .measures import (DiscreteMeasure, Layer, LayeredSpace, MixedMeasureSpec,
                       make_layered_scenario, make_tilted_scenario,
                       make_threemarginal_scenario, make_counterexample_atomic,
                       make_counterexample_perpendicular,
                       make_mixed_boundary_scenario, make_random_measure)
from .solver import (TransportPlan, DualCertificate, MinimizingSet, FaceProbe,
                     solve_two_marginal, solve_three_marginal, minimizing_set,
                     probe_optimal_face)
from .vertices import (enumerate_vertices_bruteforce, enumerate_vertices_three,
                       oracle_optimum, support_is_acyclic,
                       support_columns_independent)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
