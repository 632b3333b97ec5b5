"""Per-theorem scenario runs and the two non-uniqueness counterexamples.

Each runner assembles a scenario, solves it exactly, executes the structural
certifiers, and returns a verdict: hypothesis booleans, one named check per
conclusion, and the solved objects for dumping.  Conclusions are skipped when
a hypothesis fails, except that the non-uniqueness probe still runs (failing
hypotheses are exactly where the counterexamples live).
"""

from dataclasses import dataclass, field

import numpy as np

from .costs import CostModel
from .exceptions import ConfigurationError
from .measures import (DiscreteMeasure, MixedMeasureSpec, circle_chart,
                       make_counterexample_atomic, make_counterexample_perpendicular,
                       make_layered_scenario, make_mixed_boundary_scenario,
                       make_threemarginal_scenario, make_tilted_scenario)
from .multimarginal import (build_reduced_cost, check_extreme_chain,
                            check_projected_minimizing_set, projected_sets_from_duals,
                            reduced_cost_identity_error, restrict_plan,
                            restriction_objective_identity_error)
from .solver import (TransportPlan, probe_optimal_face, solve_three_marginal,
                     solve_two_marginal, solve_two_marginal_table, _certificate_checks,
                     _solve_table_two)
from .structure import (build_support_map, check_boundary_normal_lines,
                        check_cP_extremality, check_cyclical_monotonicity,
                        check_subtwist_uniqueness_setup, count_twist,
                        decompose_graphs, kappa_and_fP)

THEOREM_IDS = ("T3.1", "T3.2", "T4.1", "T5.3", "T6.1", "C6.2")


@dataclass
class CheckResult:
    name: str
    status: str                 # PASS | FAIL | SKIP
    details: dict = field(default_factory=dict)


@dataclass
class TheoremVerdict:
    theorem_id: str
    hypothesis_checks: list     # (name, bool)
    checks: list                # CheckResult
    artifacts: dict = field(default_factory=dict)

    @property
    def hypotheses_hold(self):
        return all(ok for _, ok in self.hypothesis_checks)

    @property
    def all_passed(self):
        return all(c.status != "FAIL" for c in self.checks)


def _check(name, ok, **details):
    return CheckResult(name=name, status="PASS" if ok else "FAIL", details=details)


def _skip(name, **details):
    return CheckResult(name=name, status="SKIP", details=details)


def _cost_model_from_config(config):
    family = config.get("cost.family", "quadratic")
    if family == "power":
        return CostModel("power", p=float(config.get("cost.p", 2.0)))
    if family in ("quadratic", "logcosh", "surplus3"):
        return CostModel(family)
    raise ConfigurationError(f"cost family {family!r} not usable in scenarios")


def _duality_check(plan, cert):
    checks = _certificate_checks(plan, cert, plan.cost)
    ok = (checks["gap"] <= checks["gap_bound"]
          and checks["cs_max_slack"] <= max(checks["cs_bound"], 1e-9))
    return _check("duality", ok, gap=checks["gap"], cs=checks["cs_max_slack"])


def _layered_conclusions(plan, cert, src, tgt, space, model, K, trials, seed,
                          tol_face=None):
    """The shared conclusion battery of the layered two-marginal theorems."""
    checks = [_duality_check(plan, cert)]
    probe = probe_optimal_face(plan, cert, trials=trials, seed=seed,
                               tol_face=tol_face)
    checks.append(_check("face_probe", probe.face_dimension_lb == 0,
                         dim_lb=probe.face_dimension_lb, trials=probe.trials,
                         max_pair_diff=probe.max_pair_diff))
    support = build_support_map(plan)
    kfp = kappa_and_fP(support, space, model)
    ext = check_cP_extremality(support, kfp)
    checks.append(_check("cp_extremality", ext.is_extreme,
                         violations=len(ext.violating_pairs),
                         condition1=ext.condition1_holds))
    order = {idx: pos for pos, idx in enumerate(space.partition_order)}
    kappa_minimal = all(
        order[info.kappa] == min(order[int(t)] for t in info.partners_by_layer)
        for info in kfp.values())
    checks.append(_check("kappa_minimal", kappa_minimal))
    try:
        dec = decompose_graphs(plan, space, src)
        alpha_err = max(abs(v - 1.0) for v in dec.alpha_sums().values())
        rec_err = dec.max_reconstruction_error()
        checks.append(_check("graph_decomposition",
                             len(dec.maps) <= K and alpha_err <= 1e-9
                             and rec_err <= 1e-12,
                             maps=len(dec.maps), alpha_err=alpha_err,
                             reconstruction_err=rec_err))
    except Exception as exc:                         # structure violation
        checks.append(_check("graph_decomposition", False, error=str(exc)))
    tw = count_twist(src, tgt, model, space, samples=100, seed=seed, bound=K)
    checks.append(_check("twist_count", tw.within_bound,
                         max_count=tw.max_count, bound=K))
    mono = check_cyclical_monotonicity(support, samples=2000, seed=seed)
    checks.append(_check("cyclical_monotonicity", mono.holds,
                         violations=len(mono.violations),
                         two_cycles=mono.checked_two_cycles,
                         long_cycles=mono.checked_long_cycles))
    artifacts = {"plan": plan, "cert": cert, "probe": probe, "support": support}
    return checks, artifacts


def run_t31(config):
    K = int(config.get("geometry.K", 2))
    grid = int(config.get("geometry.grid", 20))
    n = int(config.get("geometry.n", 1))
    seed = int(config.get("seed", 0))
    trials = int(config.get("probe.trials", 20))
    perturb = float(config.get("measure.perturb", 0.1))
    t = config.get("measure.t")
    model = _cost_model_from_config(config)
    hyp = [("strictly_convex_cost", model.family in ("quadratic", "power", "logcosh")
            and (model.family != "power" or model.p > 1.0)),
           ("layers_distinct", True),
           ("upper_layers_ac", not bool(config.get("measure.layer1_atomic", False)) or K >= 1)]
    src, tgt, space = make_layered_scenario(
        K=K, n=n, grid=grid, seed=seed, t=t, perturb=perturb,
        layer1_atomic=bool(config.get("measure.layer1_atomic", False)))
    plan, cert = solve_two_marginal(src, tgt, model)
    checks, artifacts = _layered_conclusions(plan, cert, src, tgt, space, model,
                                             K, trials, seed,
                                             tol_face=config.get("probe.tol_face"))
    artifacts.update(source=src, target=tgt, space=space)
    return TheoremVerdict("T3.1", hyp, checks, artifacts)


def run_t32(config):
    K = int(config.get("geometry.K", 2))
    grid = int(config.get("geometry.grid", 20))
    seed = int(config.get("seed", 0))
    trials = int(config.get("probe.trials", 20))
    perturb = float(config.get("measure.perturb", 0.1))
    perp_layer = config.get("geometry.perp_layer")
    perp_layer = int(perp_layer) if perp_layer is not None else None
    min_dot = float(config.get("geometry.min_normal_dot", 0.1))
    model = CostModel("quadratic")
    if perp_layer is not None:
        perturb = 0.0           # keep the violated instance exactly symmetric
    src, tgt, space = make_tilted_scenario(K=K, grid=grid, seed=seed,
                                           perturb=perturb, perp_layer=perp_layer)
    n_src = space.source_layer.normal
    dots = [abs(float(n_src @ layer.normal)) for layer in space.layers]
    hyp = [("normals_not_perpendicular", min(dots) >= min_dot),
           ("quadratic_cost", True)]
    plan, cert = solve_two_marginal(src, tgt, model)
    if min(dots) >= min_dot:
        checks, artifacts = _layered_conclusions(plan, cert, src, tgt, space, model,
                                                 K, trials, seed,
                                                 tol_face=config.get("probe.tol_face"))
    else:
        probe = probe_optimal_face(plan, cert, trials=trials, seed=seed)
        checks = [_skip("face_probe", reason="hypothesis violated"),
                  _skip("cp_extremality", reason="hypothesis violated"),
                  _skip("graph_decomposition", reason="hypothesis violated"),
                  _check("counterexample_probe", probe.face_dimension_lb >= 1,
                         dim_lb=probe.face_dimension_lb)]
        artifacts = {"plan": plan, "cert": cert, "probe": probe}
    artifacts.update(source=src, target=tgt, space=space, normal_dots=dots)
    return TheoremVerdict("T3.2", hyp, checks, artifacts)


def run_t41(config):
    K = int(config.get("geometry.K", 2))
    L = int(config.get("geometry.L", 2))
    grid = int(config.get("geometry.grid", 6))
    seed = int(config.get("seed", 0))
    trials = int(config.get("probe.trials", 10))
    perturb = float(config.get("measure.perturb", 0.1))
    model = CostModel("surplus3")
    mu, nu, gamma, space_y, space_z = make_threemarginal_scenario(
        K=K, L=L, grid=grid, seed=seed, perturb=perturb,
        t=config.get("measure.t"), r=config.get("measure.r"))
    hyp = [("layers_distinct", True), ("upper_layers_ac", True)]
    plan, cert = solve_three_marginal(mu, nu, gamma, model)
    checks = [_duality_check(plan, cert)]

    probe = probe_optimal_face(plan, cert, trials=trials, seed=seed,
                               tol_face=config.get("probe.tol_face"))
    checks.append(_check("face_probe", probe.face_dimension_lb == 0,
                         dim_lb=probe.face_dimension_lb))

    support = build_support_map(plan)
    ylay, zlay = nu.layer_tag, gamma.layer_tag
    worst_cell = 0
    for i, jks in support.partners.items():
        cells = {}
        for (j, k) in jks:
            cell = (int(ylay[j]), int(zlay[k]))
            cells[cell] = cells.get(cell, 0) + 1
        worst_cell = max(worst_cell, max(cells.values()))
    checks.append(_check("support_cells",
                         support.max_partners() <= K * L and worst_cell <= 1,
                         max_partners=support.max_partners(),
                         max_per_cell=worst_cell, bound=K * L))

    tw = count_twist(mu, (nu, gamma), model, space_y, samples=100, seed=seed,
                     support_map=support, bound=K * L)
    checks.append(_check("twist_count", tw.within_bound,
                         max_count=tw.max_count, bound=K * L))

    reduced = build_reduced_cost(model, cert, mu, nu, gamma, table3=plan.cost)
    rp = restrict_plan(plan)
    ident = reduced_cost_identity_error(plan, reduced, cert)
    checks.append(_check("reduced_cost_identity", ident <= 1e-9, error=ident))
    obj_err = restriction_objective_identity_error(plan, rp, reduced, cert)
    re_plan, _ = solve_two_marginal_table(mu, nu, reduced.table, sense="max")
    reopt_err = abs(re_plan.objective(reduced.table)
                    - rp.restricted.objective(reduced.table))
    checks.append(_check("restriction_optimal", obj_err <= 1e-8 and reopt_err <= 1e-8,
                         identity_err=obj_err, reopt_err=reopt_err))
    tight3, tight2 = projected_sets_from_duals(cert, plan.cost, reduced, mu, nu)
    proj = check_projected_minimizing_set(tight3, tight2)
    checks.append(_check("projected_tight_set", proj.equal,
                         projected=proj.projected_size, reduced=proj.reduced_size))
    if max(m.size for m in plan.marginals) <= 5:
        chain = check_extreme_chain(plan, rp.restricted)
        checks.append(_check("extreme_chain",
                             chain.chain_extreme == chain.direct_extreme,
                             chain=chain.chain_extreme, direct=chain.direct_extreme))
    mono = check_cyclical_monotonicity(support, samples=2000, seed=seed)
    checks.append(_check("cyclical_monotonicity", mono.holds,
                         violations=len(mono.violations)))
    artifacts = {"plan": plan, "cert": cert, "probe": probe, "support": support,
                 "reduced": reduced, "restriction": rp,
                 "mu": mu, "nu": nu, "gamma": gamma}
    return TheoremVerdict("T4.1", hyp, checks, artifacts)


def make_boundary_target(measure, metadata, radii=(1.6, 2.4), inner_split=0.37,
                         shrink=0.5, coarsen=2):
    """Target for the mixed-boundary scenarios: radial pairs plus a shrunk image.

    Every boundary node gets two targets along its own outward normal carrying
    its mass split (inner_split, 1 - inner_split), which forces the radial
    multi-image structure; interior mass goes to a shrunk copy of a coarsened
    interior grid, whose within-cell snap map is monotone.  The resulting
    support is cyclically monotone by construction, so the plan it induces is
    optimal, and generic weights make it the unique optimum.
    """
    r1, r2 = radii
    pts, wts = [], []
    interior_pts, interior_w = [], []
    for i, info in enumerate(metadata):
        if info["region"] == "boundary":
            u = np.asarray(info["normal"], dtype=float)
            wb = float(measure.weights[i])
            pts.append(r1 * u)
            wts.append(inner_split * wb)
            pts.append(r2 * u)
            wts.append((1.0 - inner_split) * wb)
        else:
            interior_pts.append(measure.points[i])
            interior_w.append(float(measure.weights[i]))
    if interior_pts:
        interior_pts = np.asarray(interior_pts)
        lo = interior_pts.min() - 1e-9
        hi = interior_pts.max() + 1e-9
        spread = hi - lo
        # coarse parent cells: snap each fine cell to its parent's center
        ncells = max(2, int(round(np.sqrt(len(interior_pts)) / coarsen)))
        cell = spread / ncells
        agg = {}
        for x, w in zip(interior_pts, interior_w):
            key = tuple(int(np.floor((c - lo) / cell)) for c in x)
            agg[key] = agg.get(key, 0.0) + w
        for key in sorted(agg):
            center = np.array([lo + (k + 0.5) * cell for k in key])
            pts.append(shrink * center)
            wts.append(agg[key])
    return DiscreteMeasure(np.asarray(pts), np.asarray(wts))


def _boundary_scenario(config):
    grid = int(config.get("geometry.grid", 32))
    seed = int(config.get("seed", 0))
    s = float(config.get("measure.s", 0.5))
    shape = config.get("geometry.shape", "ball")
    perturb = float(config.get("measure.perturb", 0.15))
    rng = np.random.default_rng(seed)
    jitter = {}

    def density(p):
        key = tuple(np.round(p, 12))
        if key not in jitter:
            jitter[key] = 1.0 + perturb * rng.uniform(-1.0, 1.0)
        return jitter[key]

    spec = MixedMeasureSpec(s=s, interior_density=density if perturb else None,
                            boundary_density=density if perturb else None)
    measure, metadata = make_mixed_boundary_scenario(spec, shape=shape, grid=grid)
    target = make_boundary_target(measure, metadata,
                                  radii=(float(config.get("geometry.r1", 1.6)),
                                         float(config.get("geometry.r2", 2.4))),
                                  inner_split=float(config.get("measure.inner_split", 0.37)))
    return measure, metadata, target


def run_t61(config, theorem_id="T6.1"):
    seed = int(config.get("seed", 0))
    trials = int(config.get("probe.trials", 10))
    tol = float(config.get("check.normal_tol", 1e-6))
    max_multi = float(config.get("check.interior_multi_max", 0.05))
    measure, metadata, target = _boundary_scenario(config)
    model = CostModel("quadratic")
    hyp = [("strictly_convex_domain", config.get("geometry.shape", "ball")
            in ("ball", "ellipsoid")),
           ("quadratic_cost", True),
           ("mixed_measure", 0.0 < float(config.get("measure.s", 0.5)) < 1.0)]
    plan, cert = solve_two_marginal(measure, target, model)
    checks = [_duality_check(plan, cert)]
    rep = check_boundary_normal_lines(plan, metadata, tol=tol)
    checks.append(_check("boundary_normal_lines", rep.holds,
                         boundary_multi=rep.boundary_multi,
                         violations=len(rep.normal_violations), tol=tol))
    checks.append(_check("interior_single_valued",
                         rep.interior_single_fraction >= 1.0 - max_multi,
                         fraction=rep.interior_single_fraction,
                         interior_multi=len(rep.interior_multi)))
    probe = probe_optimal_face(plan, cert, trials=trials, seed=seed,
                               tol_face=config.get("probe.tol_face"))
    checks.append(_check("face_probe", probe.face_dimension_lb == 0,
                         dim_lb=probe.face_dimension_lb))
    artifacts = {"plan": plan, "cert": cert, "probe": probe, "report": rep,
                 "source": measure, "target": target, "metadata": metadata}
    return TheoremVerdict(theorem_id, hyp, checks, artifacts)


def run_t53(config):
    seed = int(config.get("seed", 0))
    samples = int(config.get("check.gap_samples", 20))
    chart_nodes = int(config.get("check.chart_nodes", 720))
    verdict = run_t61(config, theorem_id="T5.3")
    target = verdict.artifacts["target"]
    chart = circle_chart(chart_nodes)
    model = CostModel("quadratic")
    rep = check_subtwist_uniqueness_setup(model, chart, target,
                                          samples=samples, seed=seed)
    verdict.checks.insert(1, _check("subtwist_critical_points",
                                    rep.subtwist_supported,
                                    max_count=rep.max_count))
    verdict.artifacts["subtwist"] = rep
    return verdict


RUNNERS = {
    "T3.1": run_t31,
    "T3.2": run_t32,
    "T4.1": run_t41,
    "T5.3": run_t53,
    "T6.1": run_t61,
    "C6.2": run_t61,
}


def run_theorem_scenario(theorem_id, config=None):
    """Generator -> solver -> certifiers for one theorem scenario."""
    if theorem_id not in RUNNERS:
        raise ConfigurationError(f"unknown theorem id {theorem_id!r}; "
                                 f"known: {', '.join(THEOREM_IDS)}")
    return RUNNERS[theorem_id](dict(config or {}))


# ---------------------------------------------------------------------------
# counterexample fixtures
# ---------------------------------------------------------------------------


def atomic_counterexample_maps(source, target):
    """The two alternating quarter-interval assignment plans, bit-reproducibly.

    Cells are assigned by cell-center membership in half-open quarter
    intervals; the first map sends [0,1/4) u [1/2,3/4) to the upper atom, the
    second swaps the roles.
    """
    upper = int(np.argmax(target.points[:, 1]))
    lower = 1 - upper

    def first_block(x1):
        return (0.0 <= x1 < 0.25) or (0.5 <= x1 < 0.75)

    t1_entries, t2_entries = {}, {}
    for i in range(source.size):
        x1 = float(source.points[i, 0])
        w = float(source.weights[i])
        if first_block(x1):
            t1_entries[(i, upper)] = w
            t2_entries[(i, lower)] = w
        else:
            t1_entries[(i, lower)] = w
            t2_entries[(i, upper)] = w
    plan_t1 = TransportPlan(t1_entries, (source, target), sense="min")
    plan_t2 = TransportPlan(t2_entries, (source, target), sense="min")
    return plan_t1, plan_t2


@dataclass
class CounterexampleReport:
    name: str
    checks: list
    artifacts: dict = field(default_factory=dict)

    @property
    def all_passed(self):
        return all(c.status != "FAIL" for c in self.checks)


def reproduce_counterexample(name, grid=None, seed=0, trials=20):
    """Regression fixture for the two non-uniqueness examples."""
    model = CostModel("quadratic")
    if name == "atomic":
        grid = 100 if grid is None else int(grid)
        if grid % 4 != 0:
            raise ConfigurationError("atomic counterexample needs grid divisible by 4")
        source, target, _space = make_counterexample_atomic(grid=grid)
        plan, cert = solve_two_marginal(source, target, model)
        value = plan.objective()
        t1, t2 = atomic_counterexample_maps(source, target)
        table = plan.cost
        t1.cost = table
        t2.cost = table
        checks = []
        for label, alt in (("map_one", t1), ("map_two", t2)):
            alt.validate()
            atom_masses = alt.marginal_weights(1)
            checks.append(_check(f"{label}_feasible",
                                 np.allclose(atom_masses, 0.5, atol=1e-12),
                                 masses=tuple(float(v) for v in atom_masses)))
            checks.append(_check(f"{label}_optimal",
                                 abs(alt.objective(table) - value) <= 1e-10,
                                 objective=alt.objective(table), optimum=value))
        checks.append(_check("maps_equal_cost",
                             abs(t1.objective(table) - t2.objective(table)) <= 1e-12,
                             difference=abs(t1.objective(table) - t2.objective(table))))
        checks.append(_check("maps_differ", t1.max_entry_diff(t2) > 1e-6,
                             max_diff=t1.max_entry_diff(t2)))
        analytic = 4.0 / 3.0
        checks.append(_check("value_near_analytic", abs(value - analytic) <= 1e-3,
                             value=value, analytic=analytic))
        # steer two probe objectives toward the alternating maps, then randomize
        support = sorted({(i, j) for i in range(source.size) for j in range(2)})
        obj_t1 = np.array([-1.0 if (i, j) in t1.entries else 1.0 for (i, j) in support])
        obj_t2 = np.array([-1.0 if (i, j) in t2.entries else 1.0 for (i, j) in support])
        probe = probe_optimal_face(plan, cert, trials=trials, seed=seed,
                                   objectives=[obj_t1, obj_t2])
        checks.append(_check("face_probe", probe.face_dimension_lb >= 1,
                             dim_lb=probe.face_dimension_lb))
        recovered = (probe.witness_plans[1].max_entry_diff(t1) <= 1e-12
                     and probe.witness_plans[2].max_entry_diff(t2) <= 1e-12)
        checks.append(_check("probe_recovers_maps", recovered))
        artifacts = {"plan": plan, "cert": cert, "probe": probe,
                     "map_one": t1, "map_two": t2}
        return CounterexampleReport("atomic", checks, artifacts)

    if name == "perpendicular":
        grid = 10 if grid is None else int(grid)
        mu, nu = make_counterexample_perpendicular(grid=grid)
        plan, cert = solve_two_marginal(mu, nu, model)
        table = plan.cost
        split = float(mu.weights @ (mu.points[:, 0] ** 2)
                      + nu.weights @ (nu.points[:, 1] ** 2))
        rng = np.random.default_rng(seed)
        objectives = []
        worst_split_err = 0.0
        for _ in range(100):
            fake = rng.uniform(-1.0, 1.0, size=table.shape)
            witness, _ = _solve_table_two(mu, nu, fake, "min")
            objectives.append(witness.objective(table))
            worst_split_err = max(worst_split_err,
                                  abs(objectives[-1] - split))
        spread = max(objectives) - min(objectives)
        checks = [
            _check("objective_spread", spread <= 1e-12, spread=spread, plans=100),
            _check("separability_identity", worst_split_err <= 1e-12,
                   worst=worst_split_err, split_value=split),
        ]
        probe = probe_optimal_face(plan, cert, trials=trials, seed=seed)
        checks.append(_check("face_probe", probe.face_dimension_lb >= 1,
                             dim_lb=probe.face_dimension_lb))
        artifacts = {"plan": plan, "cert": cert, "probe": probe,
                     "objectives": objectives}
        return CounterexampleReport("perpendicular", checks, artifacts)

    raise ConfigurationError(f"unknown counterexample {name!r}")
