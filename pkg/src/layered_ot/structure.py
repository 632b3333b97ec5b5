"""Structural certifiers on solved instances.

All checkers are pure functions of immutable inputs: support maps, layer
minima and the within-layer argmax (kappa and f_P), discrete (c,P)-extremality
scans, twist counting through x-gradient collinearity, graph decompositions,
cyclical monotonicity, boundary normal lines, and sub-twist critical-point
counting on charts.
"""

from dataclasses import dataclass

import numpy as np

from .costs import eval_cost, grad_x_cost, subtwist_gap
from .exceptions import DataError, StructureViolationError, UsageError

DEFAULT_TOL_SUPPORT = 1e-10
DEFAULT_TOL_COL = 1e-7
FP_TIE_TOL = 1e-10
RECONSTRUCT_TOL = 1e-12
CYCLE_TOL = 1e-9


@dataclass
class SupportMap:
    """Partners of every charged source, sorted by (layer, index)."""

    partners: dict
    mass: dict
    dropped_mass: float
    tol_support: float
    plan: object

    def domain(self):
        return sorted(self.partners)

    def partner_count(self, i):
        return len(self.partners.get(i, ()))

    def max_partners(self):
        return max((len(v) for v in self.partners.values()), default=0)


def _target_layer_array(plan, axis=1):
    meas = plan.marginals[axis]
    if meas.layer_tag is not None:
        return meas.layer_tag
    return np.ones(meas.size, dtype=int)


def build_support_map(plan, tol_support=DEFAULT_TOL_SUPPORT):
    """Realized set-valued map of the plan: sources to their mass-bearing partners."""
    layers = _target_layer_array(plan)
    partners = {}
    mass = {}
    dropped = 0.0
    for idx, m in plan.entries.items():
        if m <= tol_support:
            dropped += m
            continue
        i, rest = idx[0], idx[1:]
        key = rest if len(rest) > 1 else rest[0]
        partners.setdefault(i, []).append(key)
        mass[(i, key)] = mass.get((i, key), 0.0) + m
    for i, lst in partners.items():
        if plan.arity == 2:
            lst.sort(key=lambda j: (int(layers[j]), j))
        else:
            lst.sort()
        partners[i] = tuple(lst)
    return SupportMap(partners=partners, mass=mass, dropped_mass=dropped,
                      tol_support=tol_support, plan=plan)


@dataclass
class KappaInfo:
    kappa: int
    f_p: tuple          # argmax partners in layer kappa (len > 1 reports a tie)
    partners_by_layer: dict


def kappa_and_fP(support, space, model, potentials=None, tie_tol=FP_TIE_TOL):
    """Layer minimum kappa(i) and within-layer cost argmax f_P(i) per source.

    Ties in the argmax are reported as multi-valued f_P rather than broken:
    the uniqueness argument needs genuine singletons.
    """
    plan = support.plan
    if plan.arity != 2:
        raise UsageError("kappa/f_P are two-marginal notions")
    if plan.marginals[1].layer_tag is None and space.num_layers > 1:
        raise DataError("support partners carry no layer tags on a multi-layer space")
    layers = _target_layer_array(plan)
    src_pts = plan.marginals[0].points
    tgt_pts = plan.marginals[1].points
    order = {idx: pos for pos, idx in enumerate(space.partition_order)}
    out = {}
    for i, js in support.partners.items():
        by_layer = {}
        for j in js:
            tag = int(layers[j])
            if tag not in order:
                raise DataError(f"partner {j} carries layer {tag} outside the partition")
            by_layer.setdefault(tag, []).append(j)
        kappa = min(by_layer, key=lambda tag: order[tag])
        cands = by_layer[kappa]
        vals = [eval_cost(model, src_pts[i], tgt_pts[j]) for j in cands]
        best = max(vals)
        f_p = tuple(j for j, v in zip(cands, vals) if v >= best - tie_tol)
        out[i] = KappaInfo(kappa=kappa, f_p=f_p, partners_by_layer=by_layer)
    return out


@dataclass
class ExtremalityReport:
    condition1_holds: bool
    violating_pairs: list      # (i1, i2, shared_target)
    tolerance: float
    checked_pairs: int

    @property
    def is_extreme(self):
        return self.condition1_holds and not self.violating_pairs


def check_cP_extremality(support, kfp, M=None, N=None, tie_tol=FP_TIE_TOL):
    """Discrete two-condition extremality scan over all source pairs.

    M defaults to every charged source that is not an atom; N defaults to all
    first-layer targets plus the non-atomic targets of the later layers (the
    discrete surrogate of the full-measure sets where the potentials
    differentiate).
    """
    plan = support.plan
    layers = _target_layer_array(plan)
    mu, nu = plan.marginals[0], plan.marginals[1]
    if M is None:
        M = {i for i in support.partners if not mu.is_atom(i)}
    else:
        M = set(M)
    if N is None:
        first = min(int(t) for t in np.unique(layers))
        N = {j for j in range(nu.size)
             if int(layers[j]) == first or not nu.is_atom(j)}
    else:
        N = set(N)

    dom_F = set(support.partners) & M
    dom_fP = {i for i in dom_F if kfp[i].f_p}
    condition1 = dom_F == dom_fP

    sources = sorted(dom_F)
    partner_sets = {i: set(support.partners[i]) for i in sources}
    violations = []
    checked = 0
    for a in range(len(sources)):
        i1 = sources[a]
        for b in range(a + 1, len(sources)):
            i2 = sources[b]
            checked += 1
            for y1 in kfp[i1].f_p:
                for y2 in kfp[i2].f_p:
                    shared = (partner_sets[i1] - {y1}) & (partner_sets[i2] - {y2}) & N
                    for y_star in sorted(shared):
                        violations.append((i1, i2, y_star))
    return ExtremalityReport(condition1_holds=condition1, violating_pairs=violations,
                             tolerance=tie_tol, checked_pairs=checked)


@dataclass
class TwistReport:
    counts: list
    max_count: int
    bound: int
    tol_col: float

    @property
    def within_bound(self):
        return self.bound <= 0 or self.max_count <= self.bound


def _collinearity_ok(d, normal, tol_col):
    """d parallel to the normal (sine residual) or vanishing outright."""
    nd = float(np.linalg.norm(d))
    if nd <= tol_col:
        return True
    resid = d - (d @ normal) * normal
    return float(np.linalg.norm(resid)) / nd <= tol_col


def count_twist(sources, targets, model, space, tol_col=DEFAULT_TOL_COL,
                samples=100, seed=0, support_map=None, bound=0):
    """Size of the x-gradient level sets at sampled base pairs.

    For each sampled base pair the count collects targets whose x-gradient
    differs from the base gradient by a vector parallel to the source normal
    (the manifold-gradient equality) or by nothing at all.  With a support map
    the candidates are the realized partners of the sampled source, matching
    the level sets the layered theorems actually bound; without one every
    target tuple is a candidate.
    """
    rng = np.random.default_rng(seed)
    normal = space.source_layer.normal if space.source_layer is not None else None
    if normal is None:
        raise DataError("space carries no source layer normal")
    src_pts = sources.points

    if model.arity == 2:
        tgt_pts = targets.points
        if support_map is not None:
            pool = [(i, j) for i, js in support_map.partners.items() for j in js]
        else:
            pool = [(i, j) for i in range(sources.size) for j in range(targets.size)]
        if not pool:
            return TwistReport(counts=[], max_count=0, bound=bound, tol_col=tol_col)
        picks = rng.choice(len(pool), size=min(samples, len(pool)), replace=False)
        counts = []
        for p in picks:
            i0, j0 = pool[p]
            x0 = src_pts[i0]
            g0 = grad_x_cost(model, x0, tgt_pts[j0]).grad_x
            if support_map is not None:
                cands = support_map.partners[i0]
            else:
                cands = range(targets.size)
            c = 0
            for j in cands:
                d = grad_x_cost(model, x0, tgt_pts[j]).grad_x - g0
                if _collinearity_ok(d, normal, tol_col):
                    c += 1
            counts.append(c)
    else:
        nu, gamma = targets
        if support_map is None:
            raise UsageError("three-marginal twist counting requires a support map")
        pool = [(i, jk) for i, jks in support_map.partners.items() for jk in jks]
        picks = rng.choice(len(pool), size=min(samples, len(pool)), replace=False)
        counts = []
        for p in picks:
            i0, (j0, k0) = pool[p]
            x0 = src_pts[i0]
            g0 = grad_x_cost(model, x0, nu.points[j0], gamma.points[k0]).grad_x
            c = 0
            for (j, k) in support_map.partners[i0]:
                d = grad_x_cost(model, x0, nu.points[j], gamma.points[k]).grad_x - g0
                if _collinearity_ok(d, normal, tol_col):
                    c += 1
            counts.append(c)
    return TwistReport(counts=counts, max_count=max(counts, default=0),
                       bound=bound, tol_col=tol_col)


@dataclass
class GraphDecomposition:
    maps: dict            # layer k -> {source i: target j}
    alphas: dict          # layer k -> {source i: fraction of mu(i)}
    residual: float
    plan: object

    def reconstruct(self):
        mu = self.plan.marginals[0]
        entries = {}
        for k, assign in self.maps.items():
            for i, j in assign.items():
                entries[(i, j)] = entries.get((i, j), 0.0) + \
                    self.alphas[k][i] * float(mu.weights[i])
        return entries

    def max_reconstruction_error(self):
        rebuilt = self.reconstruct()
        keys = set(rebuilt) | set(self.plan.entries)
        return max(abs(rebuilt.get(key, 0.0) - self.plan.entries.get(key, 0.0))
                   for key in keys)

    def alpha_sums(self):
        out = {}
        for k, al in self.alphas.items():
            for i, a in al.items():
                out[i] = out.get(i, 0.0) + a
        return out


def decompose_graphs(plan, space, mu, tol_support=DEFAULT_TOL_SUPPORT):
    """Write the plan as layer-indexed partial maps with source weights.

    Requires at most one partner per (source, layer); violations raise with
    the offending sources listed.
    """
    if plan.arity != 2:
        raise UsageError("graph decomposition applies to two-marginal plans")
    support = build_support_map(plan, tol_support=tol_support)
    layers = _target_layer_array(plan)
    offenders = []
    maps = {}
    alphas = {}
    for i, js in support.partners.items():
        seen_layers = {}
        for j in js:
            tag = int(layers[j])
            if tag in seen_layers:
                offenders.append((i, tag, seen_layers[tag], j))
            seen_layers[tag] = j
        if offenders and offenders[-1][0] == i:
            continue
        wi = float(mu.weights[i])
        for tag, j in seen_layers.items():
            maps.setdefault(tag, {})[i] = j
            alphas.setdefault(tag, {})[i] = support.mass[(i, j)] / wi
    if offenders:
        raise StructureViolationError(
            f"{len(offenders)} sources carry two partners inside one layer",
            offenders=offenders)
    return GraphDecomposition(maps=maps, alphas=alphas,
                              residual=support.dropped_mass, plan=plan)


@dataclass
class MonotonicityReport:
    violations: list
    checked_two_cycles: int
    checked_long_cycles: int
    tol: float

    @property
    def holds(self):
        return not self.violations


def check_cyclical_monotonicity(support, model=None, cycle_len_max=5,
                                samples=10_000, seed=0, tol=CYCLE_TOL):
    """Exhaustive 2-cycle check plus sampled longer cycles on the support.

    A cycle reassigns each sampled source to the next pair's target block; in
    min sense the support must not beat the reassignment by more than tol (the
    inequality flips for max-sense problems).
    """
    plan = support.plan
    table = plan.cost
    if table is None:
        raise UsageError("support plan does not carry its cost table")
    sign = 1.0 if plan.sense == "min" else -1.0
    pairs = sorted(plan.entries)
    P = len(pairs)
    ii = np.array([p[0] for p in pairs])
    own = np.array([table[idx] for idx in pairs])
    if plan.arity == 2:
        jj = np.array([p[1] for p in pairs])
        cross = table[np.ix_(ii, jj)]
    else:
        jj = np.array([p[1] for p in pairs])
        kk = np.array([p[2] for p in pairs])
        cross = table[ii[:, None], jj[None, :], kk[None, :]]
    # cross[a, b] reroutes source a to the target block of pair b
    delta = sign * (cross + cross.T - own[:, None] - own[None, :])
    bad = np.argwhere(delta < -tol)
    violations = [(pairs[a], pairs[b], float(delta[a, b]))
                  for a, b in bad if a < b]
    checked_two = P * (P - 1) // 2

    rng = np.random.default_rng(seed)
    checked_long = 0
    if P >= 3 and cycle_len_max >= 3:
        for _ in range(samples):
            k = int(rng.integers(3, cycle_len_max + 1))
            if k > P:
                continue
            sel = rng.choice(P, size=k, replace=False)
            base = sum(own[s] for s in sel)
            shifted = sum(table[(pairs[sel[t]][0],) + pairs[sel[(t + 1) % k]][1:]]
                          for t in range(k))
            checked_long += 1
            if sign * (shifted - base) < -tol:
                violations.append((tuple(pairs[s] for s in sel), "cycle", float(shifted - base)))
    return MonotonicityReport(violations=violations, checked_two_cycles=checked_two,
                              checked_long_cycles=checked_long, tol=tol)


@dataclass
class BoundaryReport:
    interior_total: int
    interior_multi: list
    boundary_multi: int
    normal_violations: list
    tol: float

    @property
    def interior_single_fraction(self):
        if self.interior_total == 0:
            return 1.0
        return 1.0 - len(self.interior_multi) / self.interior_total

    @property
    def holds(self):
        return not self.normal_violations


def check_boundary_normal_lines(plan, metadata, tol=1e-6):
    """Boundary sources may split only along their outward normal.

    Interior sources with several partners are collected (the continuum result
    sends them to a single point); boundary sources with several partners must
    have all pairwise partner differences parallel to the recorded normal.
    """
    support = build_support_map(plan)
    tgt_pts = plan.marginals[1].points
    interior_total = 0
    interior_multi = []
    boundary_multi = 0
    normal_violations = []
    for i, js in support.partners.items():
        info = metadata[i]
        if info["region"] == "interior":
            interior_total += 1
            if len(js) > 1:
                interior_multi.append(i)
            continue
        if len(js) <= 1:
            continue
        boundary_multi += 1
        normal = np.asarray(info["normal"], dtype=float)
        for a in range(len(js)):
            for b in range(a + 1, len(js)):
                d = tgt_pts[js[b]] - tgt_pts[js[a]]
                if not _collinearity_ok(d, normal, tol):
                    normal_violations.append((i, js[a], js[b]))
    return BoundaryReport(interior_total=interior_total, interior_multi=interior_multi,
                          boundary_multi=boundary_multi,
                          normal_violations=normal_violations, tol=tol)


def count_gap_critical_points(profile, tol_zero=1e-4):
    """Manifold critical points of a gap profile from its tangential residuals.

    Counts sign changes between consecutive clearly-nonzero nodes plus maximal
    runs of near-zero nodes (a run is one critical point whether or not the
    sign flips across it, which catches degenerate touch points).  Open charts
    count interior features only.
    """
    g = np.asarray(profile.tangential)
    n = g.shape[0]
    scale = float(np.max(np.abs(g)))
    if scale == 0.0:
        return n
    near = np.abs(g) <= tol_zero * scale
    closed = profile.chart.closed

    count = 0
    idx = range(n) if closed else range(1, n - 1)
    # near-zero runs
    in_run = False
    run_count = 0
    for i in idx:
        if near[i] and not in_run:
            run_count += 1
            in_run = True
        elif not near[i]:
            in_run = False
    if closed and near[0] and near[n - 1] and run_count > 1:
        run_count -= 1            # the run wraps around
    count += run_count
    # sign changes between adjacent far nodes
    far = [i for i in range(n) if not near[i]]
    if len(far) >= 2:
        limit = len(far) if closed else len(far) - 1
        for t in range(limit):
            i = far[t]
            j = far[(t + 1) % len(far)]
            gap_nodes = (j - i) % n if closed else j - i
            if gap_nodes != 1:
                continue          # separated by a near run, already counted
            if not closed and (i < 1 or j > n - 1):
                continue
            if np.sign(g[i]) != np.sign(g[j]):
                count += 1
    return count


@dataclass
class SubtwistReport:
    counts: list
    max_count: int
    tol_zero: float

    @property
    def subtwist_supported(self):
        return self.max_count <= 2


def check_subtwist_uniqueness_setup(model, chart, targets, samples=20, seed=0,
                                    tol_zero=1e-4):
    """Count gap critical points over sampled target pairs on the chart."""
    rng = np.random.default_rng(seed)
    pts = targets.points
    n = targets.size
    if n < 2:
        raise UsageError("need at least two targets to form gap profiles")
    counts = []
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    picks = rng.choice(len(pairs), size=min(samples, len(pairs)), replace=False)
    for p in picks:
        a, b = pairs[p]
        profile = subtwist_gap(model, pts[a], pts[b], chart)
        counts.append(count_gap_critical_points(profile, tol_zero=tol_zero))
    return SubtwistReport(counts=counts, max_count=max(counts, default=0),
                          tol_zero=tol_zero)
