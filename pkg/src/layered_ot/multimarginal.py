"""Reduction machinery for multi-marginal instances.

Absorbing the trailing potentials of a solved N-marginal instance yields a
reduced cost over the leading marginals; restricting the optimal plan stays
optimal for the reduced problem, the projected tight set equals the reduced
tight set, and extremality chains through the conditional polytopes.  All of
it is exact on discrete supports because the absorbed extremum is a finite
max/min with stored attainment witnesses.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import CapacityError, UsageError
from .solver import TransportPlan, minimizing_set
from .vertices import support_is_acyclic, support_columns_independent


@dataclass
class ReducedCost:
    """Tabulated reduced cost over the leading marginals with witnesses."""

    table: np.ndarray          # (m1, m2) reduced values
    witness: np.ndarray        # absorbed-marginal index attaining the extremum
    absorbed_potentials: tuple
    sense: str
    xi: np.ndarray             # extremum of <x+y, z> - phi3(z) for the surplus case


@dataclass
class RestrictionPair:
    full: TransportPlan
    restricted: TransportPlan


def build_reduced_cost(model, duals, mu, nu, gamma, table3=None):
    """Reduce a solved three-marginal instance to its leading two marginals.

    In max sense the reduced cost is c2(x, y) = max_z [c(x, y, z) - phi3(z)];
    tabulated exactly by enumerating the absorbed support, with the attaining
    index stored for the projected-tight-set check.
    """
    from .costs import cost_table

    if len(duals.potentials) != 3:
        raise UsageError("reduced costs need a three-marginal dual certificate")
    phi3 = duals.potentials[2]
    if table3 is None:
        table3 = cost_table(model, mu, nu, gamma)
    shifted = table3 - phi3[None, None, :]
    if duals.sense == "max":
        witness = np.argmax(shifted, axis=2)
        table = np.max(shifted, axis=2)
    else:
        witness = np.argmin(shifted, axis=2)
        table = np.min(shifted, axis=2)
    xy = mu.points @ nu.points.T
    xi = table - xy
    return ReducedCost(table=table, witness=witness, absorbed_potentials=(phi3,),
                       sense=duals.sense, xi=xi)


def restrict_plan(plan, j=2):
    """Push the plan forward onto its first j marginals (mass is just summed)."""
    if plan.arity <= j:
        raise UsageError("restriction needs a strictly smaller arity")
    entries = {}
    for idx, mass in plan.entries.items():
        key = idx[:j]
        entries[key] = entries.get(key, 0.0) + mass
    restricted = TransportPlan(entries, plan.marginals[:j], sense=plan.sense)
    restricted.validate()
    return RestrictionPair(full=plan, restricted=restricted)


def reduced_cost_identity_error(plan, reduced, duals):
    """Max over support of |c2(x,y) - (c(x,y,z) - phi3(z))|; 0 when z attains."""
    phi3 = duals.potentials[2]
    table3 = plan.cost
    if table3 is None:
        raise UsageError("plan does not carry its cost table")
    worst = 0.0
    for (i, j, k) in plan.entries:
        worst = max(worst, abs(reduced.table[i, j] - (table3[i, j, k] - phi3[k])))
    return worst


def restriction_objective_identity_error(plan, restriction, reduced, duals):
    """|obj(lambda_2 under c2) - (obj(lambda under c) + absorbed potential mass)|."""
    gamma = plan.marginals[2]
    phi3 = duals.potentials[2]
    absorbed = float(phi3 @ gamma.weights)
    lhs = restriction.restricted.objective(reduced.table)
    rhs = plan.objective() - absorbed
    return abs(lhs - rhs)


@dataclass
class SetCompareReport:
    equal: bool
    only_in_projection: list
    only_in_reduced: list
    projected_size: int
    reduced_size: int

    @property
    def projection_contained(self):
        return not self.only_in_projection


def check_projected_minimizing_set(tight3, tight2, axes=(0, 1)):
    """Compare the projection of the 3-marginal tight set with the reduced one."""
    projected = tight3.project(axes)
    reduced = frozenset(tight2.indices)
    only_proj = sorted(projected - reduced)
    only_red = sorted(reduced - projected)
    return SetCompareReport(equal=not only_proj and not only_red,
                            only_in_projection=only_proj,
                            only_in_reduced=only_red,
                            projected_size=len(projected),
                            reduced_size=len(reduced))


def projected_sets_from_duals(cert3, table3, reduced, mu, nu, tol3=None, tol2=None):
    """Tight sets of the full and reduced problems at a compatible tolerance chain."""
    tight3 = minimizing_set(cert3, table3, tol_s=tol3)
    phi1, phi2 = cert3.potentials[0], cert3.potentials[1]
    cert2 = type(cert3)(potentials=(phi1, phi2), objective=float("nan"),
                        gap=0.0, sense=cert3.sense)
    if tol2 is None:
        tol2 = max(tight3.tol_s, 1e-7 * (1.0 + float(np.max(np.abs(reduced.table)))))
    tight2 = minimizing_set(cert2, reduced.table, tol_s=tol2)
    return tight3, tight2


@dataclass
class ChainReport:
    restricted_extreme: bool
    conditional_extreme: bool
    direct_extreme: bool

    @property
    def chain_extreme(self):
        return self.restricted_extreme and self.conditional_extreme


def check_extreme_chain(plan, restricted, size_cap=5):
    """Extremality of the pair (full plan, restriction) through the chain.

    The restriction must be a vertex of its own coupling polytope (acyclic
    support) and the full plan a vertex of the conditional polytope coupling
    the restricted support atoms with the absorbed marginal; together these
    certify extremality of the full plan.  The direct exact column-independence
    test is reported alongside as the brute-force verdict.
    """
    if any(m.size > size_cap for m in plan.marginals):
        raise CapacityError(f"marginal sizes exceed the chain-test cap {size_cap}")
    restricted_extreme = support_is_acyclic(restricted)

    # conditional polytope: restricted support atoms versus the absorbed marginal
    pair_ids = {pair: t for t, pair in enumerate(sorted(restricted.entries))}
    adj = {}
    n_pairs = len(pair_ids)
    for (i, j, k) in plan.entries:
        a = pair_ids[(i, j)]
        b = n_pairs + k
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    seen = set()
    conditional_extreme = True
    for root in adj:
        if root in seen:
            continue
        stack = [(root, -1)]
        seen.add(root)
        while stack and conditional_extreme:
            u, par = stack.pop()
            skipped = False
            for v in adj[u]:
                if v == par and not skipped:
                    skipped = True
                    continue
                if v in seen:
                    conditional_extreme = False
                    break
                seen.add(v)
                stack.append((v, u))

    direct = support_columns_independent(plan)
    return ChainReport(restricted_extreme=restricted_extreme,
                       conditional_extreme=conditional_extreme,
                       direct_extreme=direct)
