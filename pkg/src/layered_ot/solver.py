"""Exact primal/dual solutions of the discrete coupling problems.

Two-marginal instances go through the transportation network simplex; the
three-marginal surplus problem is flattened and handed to the dense revised
simplex.  Max-sense problems are solved by negating the objective internally,
with duals reported in the natural sign convention of the problem (potentials
dominate the cost from above in max sense).  Every solve validates its own
duality gap, dual feasibility and complementary slackness before returning.
"""

from dataclasses import dataclass

import numpy as np

from .costs import cost_table
from .dense_simplex import simplex_equality
from .exceptions import CapacityError, SolverError, UsageError
from .network_simplex import transportation_simplex

GAP_TOL_FACTOR = 1e-8
CS_TOL_FACTOR = 1e-9
FEAS_TOL = 1e-9
DEFAULT_TOL_S_FACTOR = 1e-7
DEFAULT_TOL_PLAN = 1e-7
THREE_MARGINAL_PRODUCT_CAP = 20 ** 3


class TransportPlan:
    """Sparse nonnegative coupling over the product of marginal supports."""

    def __init__(self, entries, marginals, sense="min", cost=None):
        self.arity = len(marginals)
        self.entries = {tuple(k): float(v) for k, v in entries.items() if v != 0.0}
        self.marginals = tuple(marginals)
        self.sense = sense
        self.cost = cost          # dense cost table over the product, if known
        if self.arity not in (2, 3):
            raise UsageError("plans couple 2 or 3 marginals")

    def marginal_weights(self, axis):
        out = np.zeros(self.marginals[axis].size)
        for idx, mass in self.entries.items():
            out[idx[axis]] += mass
        return out

    @property
    def total_mass(self):
        return float(sum(self.entries.values()))

    def objective(self, table=None):
        table = self.cost if table is None else table
        return float(sum(mass * table[idx] for idx, mass in self.entries.items()))

    def support(self):
        return sorted(self.entries)

    def as_dense(self):
        dense = np.zeros(tuple(m.size for m in self.marginals))
        for idx, mass in self.entries.items():
            dense[idx] = mass
        return dense

    def validate(self, tol=1e-9):
        if any(mass < -tol for mass in self.entries.values()):
            raise SolverError("plan carries negative mass")
        if abs(self.total_mass - 1.0) > tol:
            raise SolverError("plan mass differs from 1", mass=self.total_mass)
        for axis, meas in enumerate(self.marginals):
            err = float(np.max(np.abs(self.marginal_weights(axis) - meas.weights)))
            if err > tol:
                raise SolverError("plan marginal mismatch", axis=axis, error=err)
        return True

    def max_entry_diff(self, other):
        keys = set(self.entries) | set(other.entries)
        return max((abs(self.entries.get(k, 0.0) - other.entries.get(k, 0.0)) for k in keys),
                   default=0.0)

    def __repr__(self):
        return f"TransportPlan(arity={self.arity}, support={len(self.entries)})"


@dataclass
class DualCertificate:
    """Potentials per marginal, the dual objective, and the realized gap."""

    potentials: tuple
    objective: float
    gap: float
    sense: str = "min"

    def slack_table(self, table):
        """Per-tuple dual slack, nonnegative up to tolerance when feasible."""
        expanded = 0.0
        for axis, pot in enumerate(self.potentials):
            shape = [1] * len(self.potentials)
            shape[axis] = -1
            expanded = expanded + pot.reshape(shape)
        return table - expanded if self.sense == "min" else expanded - table


@dataclass
class MinimizingSet:
    """Index tuples where the dual constraint is tight at tolerance tol_s."""

    indices: frozenset
    tol_s: float

    def __contains__(self, idx):
        return tuple(idx) in self.indices

    def project(self, axes):
        return frozenset(tuple(idx[a] for a in axes) for idx in self.indices)


@dataclass
class FaceProbe:
    """Evidence about the dimension of the optimal face."""

    optimal_value: float
    witness_plans: list
    face_dimension_lb: int
    max_pair_diff: float
    trials: int


def _certificate_checks(plan, cert, table):
    """Gap, feasibility and complementary-slackness residuals for a solve."""
    primal = plan.objective(table)
    gap = abs(primal - cert.objective)
    scale = 1.0 + float(np.max(np.abs(table)))
    slack = cert.slack_table(table)
    feas = float(slack.min())
    cs = max((abs(slack[idx]) for idx in plan.entries), default=0.0)
    return {
        "primal": primal,
        "gap": gap,
        "gap_bound": GAP_TOL_FACTOR * (1.0 + abs(primal)),
        "feasibility_min_slack": feas,
        "cs_max_slack": cs,
        "cs_bound": CS_TOL_FACTOR * scale,
    }


def _validate_or_raise(plan, cert, table):
    checks = _certificate_checks(plan, cert, table)
    if checks["gap"] > checks["gap_bound"]:
        raise SolverError("duality gap not closed", **checks)
    if checks["feasibility_min_slack"] < -FEAS_TOL * (1.0 + float(np.max(np.abs(table)))):
        raise SolverError("dual infeasible", **checks)
    if checks["cs_max_slack"] > max(checks["cs_bound"], 1e-9):
        raise SolverError("complementary slackness violated", **checks)
    plan.validate()
    return checks


def solve_two_marginal(mu, nu, model, sense=None, pivot_cap=None):
    """Exact vertex solution and dual certificate of the two-marginal problem."""
    if model.arity != 2:
        raise UsageError("two-marginal solve needs a two-marginal cost")
    sense = sense or model.sense
    table = cost_table(model, mu, nu)
    if not np.all(np.isfinite(table)):
        raise UsageError("cost is not finite on the product of supports")
    plan, cert = _solve_table_two(mu, nu, table, sense, pivot_cap=pivot_cap)
    _validate_or_raise(plan, cert, table)
    return plan, cert


def _first_charged(measure):
    """Index of the first support point carrying positive mass (gauge anchor)."""
    idx = np.flatnonzero(measure.weights > 0)
    return int(idx[0]) if idx.size else 0


def _solve_table_two(mu, nu, table, sense, support=None, pivot_cap=None):
    """Network-simplex solve of a (possibly support-restricted) cost table."""
    m, n = mu.size, nu.size
    work = table if sense == "min" else -table
    if support is None:
        tails = np.repeat(np.arange(m), n)
        heads = m + np.tile(np.arange(n), m)
        costs = work.ravel()
        pairs = [(i, j) for i in range(m) for j in range(n)]
    else:
        pairs = sorted(support)
        tails = np.array([i for i, _ in pairs], dtype=int)
        heads = m + np.array([j for _, j in pairs], dtype=int)
        costs = np.array([work[i, j] for i, j in pairs])
    res = transportation_simplex(mu.weights, nu.weights, tails, heads, costs,
                                 pivot_cap=pivot_cap)
    entries = {pairs[a]: res.flows[a] for a in range(len(pairs)) if res.flows[a] > 0.0}
    plan = TransportPlan(entries, (mu, nu), sense=sense, cost=table)
    if res.duals_valid:
        phi, psi = (res.phi, res.psi) if sense == "min" else (-res.phi, -res.psi)
        shift = phi[_first_charged(mu)]
        phi = phi - shift
        psi = psi + shift
        dual_obj = float(phi @ mu.weights + psi @ nu.weights)
        primal = plan.objective(table)
        cert = DualCertificate(potentials=(phi, psi), objective=dual_obj,
                               gap=abs(primal - dual_obj), sense=sense)
    else:
        cert = None
    return plan, cert


def solve_two_marginal_table(mu, nu, table, sense="min", pivot_cap=None):
    """Exact two-marginal solve of an explicit cost table (e.g. a reduced cost)."""
    table = np.asarray(table, dtype=float)
    if table.shape != (mu.size, nu.size):
        raise UsageError("cost table shape does not match the marginals")
    plan, cert = _solve_table_two(mu, nu, table, sense, pivot_cap=pivot_cap)
    _validate_or_raise(plan, cert, table)
    return plan, cert


def solve_three_marginal(mu, nu, gamma, model, sense="max", product_cap=None,
                         pivot_cap=None):
    """Dense-simplex solve of the three-marginal coupling problem."""
    if model.arity != 3:
        raise UsageError("three-marginal solve needs a three-marginal cost")
    cap = THREE_MARGINAL_PRODUCT_CAP if product_cap is None else product_cap
    if mu.size * nu.size * gamma.size > cap:
        raise CapacityError(
            f"support product {mu.size * nu.size * gamma.size} exceeds cap {cap}")
    table = cost_table(model, mu, nu, gamma)
    plan, cert = _solve_table_three(mu, nu, gamma, table, sense, pivot_cap=pivot_cap)
    _validate_or_raise(plan, cert, table)
    return plan, cert


def _three_marginal_system(sizes, support):
    """Equality-form constraint matrix over the given support triples."""
    m1, m2, m3 = sizes
    rows = m1 + (m2 - 1) + (m3 - 1)
    A = np.zeros((rows, len(support)))
    for col, (i, j, k) in enumerate(support):
        A[i, col] = 1.0
        if j < m2 - 1:
            A[m1 + j, col] = 1.0
        if k < m3 - 1:
            A[m1 + m2 - 1 + k, col] = 1.0
    return A


def _solve_table_three(mu, nu, gamma, table, sense, support=None, pivot_cap=None):
    sizes = (mu.size, nu.size, gamma.size)
    if support is None:
        support = [(i, j, k) for i in range(sizes[0])
                   for j in range(sizes[1]) for k in range(sizes[2])]
    else:
        support = sorted(support)
    A = _three_marginal_system(sizes, support)
    b = np.concatenate([mu.weights, nu.weights[:-1], gamma.weights[:-1]])
    work = np.array([table[idx] for idx in support])
    if sense == "max":
        work = -work
    res = simplex_equality(A, b, work, pivot_cap=pivot_cap)
    entries = {support[c]: res.x[c] for c in range(len(support)) if res.x[c] > 0.0}
    plan = TransportPlan(entries, (mu, nu, gamma), sense=sense, cost=table)

    m1, m2, m3 = sizes
    y = res.duals
    phi1 = y[:m1].copy()
    phi2 = np.concatenate([y[m1:m1 + m2 - 1], [0.0]])
    phi3 = np.concatenate([y[m1 + m2 - 1:], [0.0]])
    if sense == "max":
        phi1, phi2, phi3 = -phi1, -phi2, -phi3
    a0, b0 = phi1[_first_charged(mu)], phi2[_first_charged(nu)]
    phi1 = phi1 - a0
    phi2 = phi2 - b0
    phi3 = phi3 + a0 + b0
    dual_obj = float(phi1 @ mu.weights + phi2 @ nu.weights + phi3 @ gamma.weights)
    primal = plan.objective(table)
    cert = DualCertificate(potentials=(phi1, phi2, phi3), objective=dual_obj,
                           gap=abs(primal - dual_obj), sense=sense)
    return plan, cert


def minimizing_set(cert, table, tol_s=None):
    """Tuples where the dual constraint is tight within tol_s."""
    if tol_s is None:
        tol_s = DEFAULT_TOL_S_FACTOR * (1.0 + float(np.max(np.abs(table))))
    slack = cert.slack_table(table)
    idx = np.argwhere(slack <= tol_s)
    return MinimizingSet(indices=frozenset(map(tuple, idx.tolist())), tol_s=tol_s)


def probe_optimal_face(plan, cert, trials=20, seed=0, tol_s=None, tol_face=None,
                       tol_plan=DEFAULT_TOL_PLAN, objectives=None):
    """Re-optimize random objectives over the optimal face and bound its dimension.

    The optimal face is exactly the set of feasible couplings supported on the
    tight set of the dual certificate, so each trial solves the instance
    restricted to those tuples under a fresh random objective.  Witnesses that
    differ entrywise by more than tol_plan certify face dimension >= 1 (the
    reported lower bound is the rank of the witness differences); coinciding
    witnesses are uniqueness evidence, not proof.
    """
    table = plan.cost
    if table is None:
        raise UsageError("plan does not carry its cost table")
    checks = _certificate_checks(plan, cert, table)
    if checks["gap"] > checks["gap_bound"]:
        raise UsageError("face probe requires an optimal plan (gap not closed)")
    v_star = plan.objective(table)
    if tol_face is None:
        tol_face = 1e-6 * (1.0 + float(np.max(np.abs(table))))

    tight = minimizing_set(cert, table, tol_s=tol_s)
    support = sorted(tight.indices)
    missing = [idx for idx in plan.entries if idx not in tight.indices]
    if missing:
        raise SolverError("plan support escapes the tight set", offenders=len(missing))

    rng = np.random.default_rng(seed)
    witnesses = [plan]
    trial_objectives = list(objectives or [])
    for _ in range(trials):
        trial_objectives.append(rng.uniform(-1.0, 1.0, size=len(support)))

    for obj in trial_objectives:
        obj = np.asarray(obj, dtype=float)
        fake = np.full(table.shape, 0.0)
        for c, idx in enumerate(support):
            fake[idx] = obj[c]
        if plan.arity == 2:
            w, _ = _solve_table_two(plan.marginals[0], plan.marginals[1], fake,
                                    "min", support=support)
        else:
            w, _ = _solve_table_three(plan.marginals[0], plan.marginals[1],
                                      plan.marginals[2], fake, "min", support=support)
        drift = abs(w.objective(table) - v_star)
        if drift > tol_face:
            raise SolverError("face witness drifted off the optimal value",
                              drift=drift, tol_face=tol_face)
        witnesses.append(TransportPlan(w.entries, plan.marginals, sense=plan.sense,
                                       cost=table))

    base = witnesses[0]
    diffs = []
    max_diff = 0.0
    for w in witnesses[1:]:
        max_diff = max(max_diff, base.max_entry_diff(w))
        row = np.array([w.entries.get(idx, 0.0) - base.entries.get(idx, 0.0)
                        for idx in support])
        diffs.append(row)
    if max_diff > tol_plan:
        dim_lb = int(np.linalg.matrix_rank(np.stack(diffs), tol=tol_plan))
    else:
        dim_lb = 0
    return FaceProbe(optimal_value=v_star, witness_plans=witnesses,
                     face_dimension_lb=dim_lb, max_pair_diff=max_diff,
                     trials=len(trial_objectives))
