"""Primal network simplex for the transportation problem on an explicit arc list.

The basis is a spanning tree over sources, sinks and an artificial root; the
root is attached through artificial big-M arcs which are excluded from
entering, so they drain to zero on any feasible instance and surviving ones
only tie balanced components together.  Pivots update the tree incrementally:
flows change along the pivot cycle, the detached subtree is re-hung along the
entering arc, and its potentials shift by a constant.  Entering arcs come from
round-robin block pricing (Dantzig within the block) with a Bland first-negative
fallback after a degenerate stall; a hard pivot cap turns stalls into
diagnostics.  The returned flows are recomputed exactly from the final tree by
leaf stripping, so the plan is a plain linear combination of the input margins.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import SolverError

ENTER_TOL_FACTOR = 1e-11
FLOW_CLAMP = 1e-9
PRICE_BLOCK = 8192


@dataclass
class SimplexResult:
    flows: np.ndarray          # per real arc
    phi: np.ndarray            # source potentials
    psi: np.ndarray            # sink potentials
    objective: float
    dual_objective: float
    iterations: int
    duals_valid: bool


def _tree_structure(num_nodes, root, tree_arcs, tails, heads):
    """Parent/parent-arc/depth arrays and BFS order of a tree given by arc ids."""
    tree_adj = [[] for _ in range(num_nodes)]
    for a in tree_arcs:
        tree_adj[tails[a]].append((heads[a], a))
        tree_adj[heads[a]].append((tails[a], a))
    parent = [-1] * num_nodes
    parent_arc = [-1] * num_nodes
    depth = [0] * num_nodes
    order = [root]
    seen = [False] * num_nodes
    seen[root] = True
    qi = 0
    while qi < len(order):
        u = order[qi]
        qi += 1
        for (v, a) in tree_adj[u]:
            if not seen[v]:
                seen[v] = True
                parent[v] = u
                parent_arc[v] = a
                depth[v] = depth[u] + 1
                order.append(v)
    if not all(seen):
        raise SolverError("basis tree does not span the node set")
    return parent, parent_arc, depth, order


def _tree_flows(order, root, parent, parent_arc, tails, balance):
    """Exact basic flows by leaf stripping (subtree balance per parent arc)."""
    net = list(balance)
    flows = {}
    for v in reversed(order):
        if v == root:
            continue
        a = parent_arc[v]
        flows[a] = net[v] if tails[a] == v else -net[v]
        net[parent[v]] += net[v]
    return flows


def _tree_potentials(order, root, parent, parent_arc, tails, costs):
    """Potentials with rc = c - p[tail] + p[head] vanishing on tree arcs."""
    full = [0.0] * len(order)
    for v in order:
        if v == root:
            full[v] = 0.0
            continue
        a = parent_arc[v]
        u = parent[v]
        full[v] = costs[a] + full[u] if tails[a] == v else full[u] - costs[a]
    return full


def transportation_simplex(supply, demand, tails, heads, costs,
                           pivot_cap=None, stall_limit=None):
    """Solve min sum c_a x_a over the arc list with the given margins.

    supply and demand must balance; tails index sources (0..m-1), heads index
    sinks as m..m+n-1.  Returns a SimplexResult; raises SolverError if the arc
    set admits no feasible flow or the pivot budget is exhausted.
    """
    supply = np.asarray(supply, dtype=float)
    demand = np.asarray(demand, dtype=float)
    m, n = supply.shape[0], demand.shape[0]
    num_real = len(tails)
    root = m + n
    num_nodes = m + n + 1

    cost_scale = 1.0 + float(np.max(np.abs(costs))) if num_real else 1.0
    big_m = (cost_scale + 1.0) * (m + n + 1)
    enter_tol = ENTER_TOL_FACTOR * cost_scale
    if pivot_cap is None:
        pivot_cap = 60 * (m + n) + 10_000
    if stall_limit is None:
        stall_limit = 4 * (m + n) + 50

    tails_np = np.concatenate([np.asarray(tails, dtype=int),
                               np.arange(m), np.full(n, root)])
    heads_np = np.concatenate([np.asarray(heads, dtype=int),
                               np.full(m, root), m + np.arange(n)])
    costs_np = np.concatenate([np.asarray(costs, dtype=float),
                               np.full(m + n, big_m)])
    num_arcs = num_real + m + n
    tails_l = tails_np.tolist()
    heads_l = heads_np.tolist()
    costs_l = costs_np.tolist()

    balance = np.concatenate([supply, -demand, [0.0]])
    if abs(balance.sum()) > 1e-9:
        raise SolverError("unbalanced margins", imbalance=float(balance.sum()))

    # initial tree: the artificial star around the root
    in_tree = np.zeros(num_arcs, dtype=bool)
    in_tree[num_real:] = True
    parent = [root] * (m + n) + [-1]
    parent_arc = [num_real + i for i in range(m)] + \
                 [num_real + m + j for j in range(n)] + [-1]
    depth = [1] * (m + n) + [0]
    children = [set() for _ in range(num_nodes)]
    children[root] = set(range(m + n))
    p = np.zeros(num_nodes)
    p[:m] = big_m
    p[m:m + n] = -big_m
    flows = [0.0] * num_arcs
    for i in range(m):
        flows[num_real + i] = float(supply[i])
    for j in range(n):
        flows[num_real + m + j] = float(demand[j])

    def rebuild_exact():
        """Full recompute of tree arrays, exact flows and potentials."""
        nonlocal parent, parent_arc, depth, children, p, flows
        tree_arcs = np.flatnonzero(in_tree)
        parent, parent_arc, depth, order = _tree_structure(
            num_nodes, root, tree_arcs, tails_l, heads_l)
        children = [set() for _ in range(num_nodes)]
        for v in range(num_nodes):
            if parent[v] >= 0:
                children[parent[v]].add(v)
        fl = _tree_flows(order, root, parent, parent_arc, tails_l, balance.tolist())
        flows = [0.0] * num_arcs
        for a, f in fl.items():
            flows[a] = f
        p = np.asarray(_tree_potentials(order, root, parent, parent_arc,
                                        tails_l, costs_l))
        return order

    def cycle_paths(e):
        """Tail-side and head-side pivot paths of (arc, sign); sign -1 drops flow."""
        u, v = tails_l[e], heads_l[e]
        u_path, v_path = [], []
        while depth[u] > depth[v]:
            a = parent_arc[u]
            u_path.append((a, +1 if heads_l[a] == u else -1))
            u = parent[u]
        while depth[v] > depth[u]:
            a = parent_arc[v]
            v_path.append((a, +1 if tails_l[a] == v else -1))
            v = parent[v]
        while u != v:
            a = parent_arc[u]
            u_path.append((a, +1 if heads_l[a] == u else -1))
            u = parent[u]
            a = parent_arc[v]
            v_path.append((a, +1 if tails_l[a] == v else -1))
            v = parent[v]
        return u_path, v_path

    def rehang(e, leave):
        """Re-root the subtree cut off by the leaving arc onto the entering arc."""
        tl, hl = tails_l[leave], heads_l[leave]
        c = tl if parent_arc[tl] == leave else hl
        other = hl if c == tl else tl
        children[other].discard(c)
        # which endpoint of e sits inside the cut subtree: walk up to look for c
        x = tails_l[e]
        node = x
        inside = False
        while node != -1:
            if node == c:
                inside = True
                break
            node = parent[node]
        if not inside:
            x = heads_l[e]
        y = heads_l[e] if x == tails_l[e] else tails_l[e]
        # reverse the parent chain x -> ... -> c
        chain = [x]
        while chain[-1] != c:
            chain.append(parent[chain[-1]])
        arcs_up = [parent_arc[v] for v in chain]
        for idx in range(len(chain) - 1):
            lo, hi = chain[idx], chain[idx + 1]
            parent[hi] = lo
            parent_arc[hi] = arcs_up[idx]
            children[lo].add(hi)
            children[hi].discard(lo)
        parent[x] = y
        parent_arc[x] = e
        children[y].add(x)
        # refresh depth and potentials across the moved subtree
        new_px = p[y] + costs_l[e] if tails_l[e] == x else p[y] - costs_l[e]
        shift = float(new_px - p[x])
        stack = [x]
        moved = []
        while stack:
            u2 = stack.pop()
            moved.append(u2)
            depth[u2] = depth[parent[u2]] + 1
            stack.extend(children[u2])
        p[moved] += shift

    iterations = 0
    stall = 0
    bland = False
    block_start = 0
    since_rebuild = 0
    while True:
        if iterations >= pivot_cap:
            raise SolverError("pivot budget exhausted before optimality",
                              iterations=iterations)
        e = -1
        if bland or num_real <= PRICE_BLOCK:
            rc_all = costs_np[:num_real] - p[tails_np[:num_real]] \
                + p[heads_np[:num_real]]
            rc_all[in_tree[:num_real]] = 0.0
            cand = np.flatnonzero(rc_all < -enter_tol)
            if cand.size:
                e = int(cand[0]) if bland else int(cand[np.argmin(rc_all[cand])])
        else:
            scanned = 0
            while scanned < num_real:
                stop = min(block_start + PRICE_BLOCK, num_real)
                blk = slice(block_start, stop)
                rc = costs_np[blk] - p[tails_np[blk]] + p[heads_np[blk]]
                rc[in_tree[blk]] = 0.0
                best = int(np.argmin(rc))
                scanned += stop - block_start
                hit = rc[best] < -enter_tol
                start_of_block = blk.start
                block_start = stop % num_real
                if hit:
                    e = start_of_block + best
                    break
        if e < 0:
            # confirm optimality against exactly recomputed potentials
            rebuild_exact()
            since_rebuild = 0
            rc_all = costs_np[:num_real] - p[tails_np[:num_real]] \
                + p[heads_np[:num_real]]
            rc_all[in_tree[:num_real]] = 0.0
            cand = np.flatnonzero(rc_all < -enter_tol)
            if cand.size == 0:
                break
            e = int(cand[np.argmin(rc_all[cand])])

        u_path, v_path = cycle_paths(e)
        drops = [(flows[a], a) for (a, sgn) in u_path if sgn < 0] + \
                [(flows[a], a) for (a, sgn) in v_path if sgn < 0]
        if not drops:
            raise SolverError("unbounded pivot cycle (corrupt instance)", arc=e)
        delta = max(min(f for f, _ in drops), 0.0)
        leave = min(a for f, a in drops if f <= delta)
        flows[e] = delta
        for (a, sgn) in u_path:
            flows[a] += sgn * delta
        for (a, sgn) in v_path:
            flows[a] += sgn * delta
        if delta <= 1e-14:
            stall += 1
            if stall > stall_limit:
                bland = True
        else:
            stall = 0
            bland = False

        in_tree[leave] = False
        in_tree[e] = True
        rehang(e, leave)
        iterations += 1
        since_rebuild += 1
        if since_rebuild >= 4096:
            rebuild_exact()
            since_rebuild = 0

    rebuild_exact()

    fl = np.array(flows)
    neg = fl.min() if num_arcs else 0.0
    if neg < -FLOW_CLAMP:
        raise SolverError("negative basic flow", worst=float(neg))
    fl = np.maximum(fl, 0.0)

    art_flow = float(fl[num_real:].sum())
    if art_flow > FLOW_CLAMP:
        raise SolverError("arc set admits no feasible flow", stranded_mass=art_flow)

    # Potentials per real-tree component, then a gauge shift per component so
    # every listed arc keeps nonnegative slack.  Surviving zero-flow artificial
    # arcs only tie balanced components to the root, so the shifts exist and
    # leave the dual objective unchanged; the big-M values never leak out.
    real_tree = np.flatnonzero(in_tree[:num_real])
    tree_adj = [[] for _ in range(m + n)]
    for a in real_tree:
        tree_adj[tails_l[a]].append((heads_l[a], a))
        tree_adj[heads_l[a]].append((tails_l[a], a))
    comp = np.full(num_nodes, -1, dtype=int)
    phi = np.zeros(m)
    psi = np.zeros(n)
    n_comp = 0
    for start in range(m + n):
        if comp[start] >= 0:
            continue
        comp[start] = n_comp
        p_local = {start: 0.0}
        stack = [start]
        while stack:
            u = stack.pop()
            for (v, a) in tree_adj[u]:
                if comp[v] >= 0:
                    continue
                comp[v] = n_comp
                if tails_l[a] == v:
                    p_local[v] = costs_l[a] + p_local[u]
                else:
                    p_local[v] = p_local[u] - costs_l[a]
                stack.append(v)
        for v, val in p_local.items():
            if v < m:
                phi[v] = val
            else:
                psi[v - m] = -val
        n_comp += 1

    if n_comp > 1:
        slack = costs_np[:num_real] - phi[tails_np[:num_real]] \
            - psi[heads_np[:num_real] - m]
        min_slack = np.full((n_comp, n_comp), np.inf)
        ca = comp[tails_np[:num_real]]
        cb = comp[heads_np[:num_real]]
        np.minimum.at(min_slack, (ca, cb), slack)
        shifts = np.zeros(n_comp)
        for _ in range(n_comp):        # Bellman-Ford: t_a <= t_b + min_slack[a, b]
            relaxed = np.min(np.where(np.isfinite(min_slack),
                                      shifts[None, :] + min_slack, np.inf), axis=1)
            new = np.minimum(shifts, relaxed)
            if np.array_equal(new, shifts):
                break
            shifts = new
        phi = phi + shifts[comp[:m]]
        psi = psi - shifts[comp[m:m + n]]

    gauge = phi[0]
    phi = phi - gauge
    psi = psi + gauge

    real_flows = fl[:num_real]
    objective = float(real_flows @ costs_np[:num_real])
    dual_objective = float(phi @ supply + psi @ demand)
    return SimplexResult(flows=real_flows, phi=phi, psi=psi, objective=objective,
                         dual_objective=dual_objective, iterations=iterations,
                         duals_valid=True)
