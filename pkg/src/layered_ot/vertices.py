"""Exact enumeration of coupling-polytope vertices and extremality tests.

Two-marginal vertices are the feasible spanning-forest bases of the bipartite
support graph; they are enumerated by breadth-first traversal of the basis
exchange graph (every feasible basis is reachable from any other through
simplex pivots), with integer flows obtained by clearing denominators, so the
enumeration is exact.  Three-marginal vertices come from the same traversal on
the flattened equality system over the rationals.  Both routes are independent
of the floating-point solvers they certify.
"""

from fractions import Fraction
from math import gcd

from .exceptions import CapacityError, UsageError
from .solver import TransportPlan

TWO_MARGINAL_SIZE_CAP = 6
THREE_MARGINAL_SIZE_CAP = 5
BASIS_BUDGET = 2_000_000


def _exact_margins(*weight_arrays):
    """Integer margins on a common denominator; rebalances float round-off."""
    fracs = [[Fraction(float(w)) for w in arr] for arr in weight_arrays]
    totals = [sum(fs) for fs in fracs]
    for t in totals:
        if abs(float(t) - 1.0) > 1e-9:
            raise UsageError("weights do not sum to 1")
    base = totals[0]
    fracs = [[f * base / t for f in fs] for fs, t in zip(fracs, totals)]
    denom = 1
    for fs in fracs:
        for f in fs:
            denom = denom * f.denominator // gcd(denom, f.denominator)
    return [[int(f * denom) for f in fs] for fs in fracs], denom


def _northwest_tree(a, b):
    """Staircase initial basis: exactly m+n-1 cells, flows implied by the tree."""
    m, n = len(a), len(b)
    a = list(a)
    b = list(b)
    arcs = []
    i = j = 0
    while True:
        arcs.append((i, j))
        t = min(a[i], b[j])
        a[i] -= t
        b[j] -= t
        if i == m - 1 and j == n - 1:
            break
        if a[i] == 0 and i < m - 1:
            i += 1
        else:
            j += 1
    return arcs


def _tree_arrays(m, n, arcs):
    """Parent/parent-arc/depth over the bipartite tree rooted at source 0."""
    adj = [[] for _ in range(m + n)]
    for a_idx, (i, j) in enumerate(arcs):
        adj[i].append((m + j, a_idx))
        adj[m + j].append((i, a_idx))
    parent = [-1] * (m + n)
    parc = [-1] * (m + n)
    depth = [0] * (m + n)
    order = [0]
    seen = [False] * (m + n)
    seen[0] = True
    qi = 0
    while qi < len(order):
        u = order[qi]
        qi += 1
        for v, a_idx in adj[u]:
            if not seen[v]:
                seen[v] = True
                parent[v] = u
                parc[v] = a_idx
                depth[v] = depth[u] + 1
                order.append(v)
    if not all(seen):
        return None
    return parent, parc, depth, order


def _tree_flows_int(m, n, arcs, supply, demand, structure):
    parent, parc, depth, order = structure
    net = list(supply) + [-d for d in demand]
    flows = [0] * len(arcs)
    for v in reversed(order):
        if v == 0:
            continue
        a_idx = parc[v]
        i, _ = arcs[a_idx]
        flows[a_idx] = net[v] if i == v else -net[v]
        net[parent[v]] += net[v]
    return flows


def _cycle_int(m, arcs, structure, enter):
    """Pivot cycle of a non-tree cell: list of (arc index, sign)."""
    parent, parc, depth, _ = structure
    i0, j0 = enter
    u, v = i0, m + j0
    path = []
    while depth[u] > depth[v]:
        a = parc[u]
        path.append((a, +1 if m + arcs[a][1] == u else -1))
        u = parent[u]
    while depth[v] > depth[u]:
        a = parc[v]
        path.append((a, +1 if arcs[a][0] == v else -1))
        v = parent[v]
    while u != v:
        a = parc[u]
        path.append((a, +1 if m + arcs[a][1] == u else -1))
        u = parent[u]
        a = parc[v]
        path.append((a, +1 if arcs[a][0] == v else -1))
        v = parent[v]
    return path


def enumerate_vertices_bruteforce(mu, nu, size_cap=TWO_MARGINAL_SIZE_CAP,
                                  basis_budget=BASIS_BUDGET):
    """All vertices of the transportation polytope of (mu, nu), exactly.

    Enumerates the feasible spanning-forest bases by pivoting (integer flows on
    a common denominator) and collapses them to distinct vertices.  Returns a
    list of TransportPlan.  Heavily degenerate margins (many ties) can carry
    vastly more bases than vertices; the basis budget then trips a
    CapacityError rather than silently truncating the vertex list.
    """
    m, n = mu.size, nu.size
    if m > size_cap or n > size_cap:
        raise CapacityError(f"sizes ({m},{n}) exceed the exact enumeration cap {size_cap}")
    (supply, demand), denom = _exact_margins(mu.weights, nu.weights)

    start = tuple(sorted(_northwest_tree(supply, demand)))
    seen_bases = {start}
    queue = [start]
    vertices = {}
    all_cells = [(i, j) for i in range(m) for j in range(n)]

    while queue:
        arcs = queue.pop()
        arcs_list = list(arcs)
        arc_set = set(arcs)
        structure = _tree_arrays(m, n, arcs_list)
        if structure is None:
            continue
        flows = _tree_flows_int(m, n, arcs_list, supply, demand, structure)
        if any(f < 0 for f in flows):
            continue
        sig = frozenset((arcs_list[a], f) for a, f in enumerate(flows) if f > 0)
        if sig not in vertices:
            vertices[sig] = {cell: Fraction(f, denom)
                             for cell, f in ((arcs_list[a], flows[a])
                                             for a in range(len(flows))) if f > 0}
        for cell in all_cells:
            if cell in arc_set:
                continue
            path = _cycle_int(m, arcs_list, structure, cell)
            drops = [(flows[a], a) for a, sgn in path if sgn < 0]
            if not drops:
                continue
            delta = min(f for f, _ in drops)
            for f, a in drops:
                if f != delta:
                    continue
                new_basis = tuple(sorted(arc_set - {arcs_list[a]} | {cell}))
                if new_basis not in seen_bases:
                    if len(seen_bases) >= basis_budget:
                        raise CapacityError("basis enumeration budget exhausted")
                    seen_bases.add(new_basis)
                    queue.append(new_basis)

    plans = []
    for sig, entries in vertices.items():
        plans.append(TransportPlan({k: float(v) for k, v in entries.items()},
                                   (mu, nu)))
    plans.sort(key=lambda p: sorted(p.entries))
    return plans


# ---------------------------------------------------------------------------
# exact equality-form enumeration (three-marginal couplings)
# ---------------------------------------------------------------------------


def _frac_solve(cols, rhs):
    """Solve the square Fraction system given by columns; None if singular."""
    r = len(rhs)
    M = [[cols[c][i] for c in range(r)] + [rhs[i]] for i in range(r)]
    for col in range(r):
        piv = next((k for k in range(col, r) if M[k][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        pv = M[col][col]
        M[col] = [v / pv for v in M[col]]
        for k in range(r):
            if k != col and M[k][col] != 0:
                f = M[k][col]
                M[k] = [vk - f * vc for vk, vc in zip(M[k], M[col])]
    return [M[i][r] for i in range(r)]


def _frac_inverse(cols):
    r = len(cols[0])
    M = [[cols[c][i] for c in range(r)] + [Fraction(int(i == k)) for k in range(r)]
         for i in range(r)]
    for col in range(r):
        piv = next((k for k in range(col, r) if M[k][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        pv = M[col][col]
        M[col] = [v / pv for v in M[col]]
        for k in range(r):
            if k != col and M[k][col] != 0:
                f = M[k][col]
                M[k] = [vk - f * vc for vk, vc in zip(M[k], M[col])]
    return [[M[i][r + j] for j in range(r)] for i in range(r)]


def _columns_three(sizes, support):
    """Sparse row indices (full-rank reduced system) per support triple."""
    m1, m2, m3 = sizes
    cols = []
    for (i, j, k) in support:
        rows = [i]
        if j < m2 - 1:
            rows.append(m1 + j)
        if k < m3 - 1:
            rows.append(m1 + m2 - 1 + k)
        cols.append(tuple(rows))
    return cols


def _phase1_basis(r, col_rows, b):
    """Exact Bland phase-1 simplex from the artificial identity basis."""
    n = len(col_rows)
    basis = list(range(n, n + r))          # artificial columns

    def col_vec(c):
        if c >= n:
            return [Fraction(int(i == c - n)) for i in range(r)]
        return [Fraction(int(i in col_rows[c])) for i in range(r)]

    guard = 0
    while True:
        guard += 1
        if guard > 20_000:
            raise CapacityError("phase-1 pivot budget exhausted")
        inv = _frac_inverse([col_vec(c) for c in basis])
        x_b = [sum(inv[i][k] * b[k] for k in range(r)) for i in range(r)]
        cb = [Fraction(int(basis[i] >= n)) for i in range(r)]
        y = [sum(cb[i] * inv[i][k] for i in range(r)) for k in range(r)]
        entering = None
        for c in range(n):
            if c in basis:
                continue
            rc = -sum(y[k] for k in col_rows[c])
            if rc < 0:
                entering = c
                break
        if entering is None:
            if any(basis[i] >= n and x_b[i] != 0 for i in range(r)):
                raise UsageError("infeasible margins in exact enumeration")
            # swap zero-level artificials for real columns
            for i in range(r):
                if basis[i] >= n:
                    for c in range(n):
                        if c in basis:
                            continue
                        d = [sum(inv[row][k] for k in col_rows[c]) for row in range(r)]
                        if d[i] != 0:
                            basis[i] = c
                            break
                    else:
                        raise UsageError("redundant row in exact enumeration")
            return sorted(basis)
        d = [sum(inv[row][k] for k in col_rows[entering]) for row in range(r)]
        best = None
        leave = None
        for i in range(r):
            if d[i] > 0:
                ratio = x_b[i] / d[i]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave is None:
            raise UsageError("unbounded direction in a coupling polytope")
        basis[leave] = entering


def enumerate_vertices_three(mu, nu, gamma, size_cap=THREE_MARGINAL_SIZE_CAP,
                             basis_budget=200_000):
    """All vertices of the three-index coupling polytope, exactly (small sizes)."""
    sizes = (mu.size, nu.size, gamma.size)
    if max(sizes) > size_cap:
        raise CapacityError(f"sizes {sizes} exceed the exact enumeration cap {size_cap}")
    (w1, w2, w3), denom = _exact_margins(mu.weights, nu.weights, gamma.weights)
    m1, m2, m3 = sizes
    r = m1 + m2 + m3 - 2
    support = [(i, j, k) for i in range(m1) for j in range(m2) for k in range(m3)]
    col_rows = _columns_three(sizes, support)
    b = ([Fraction(v, denom) for v in w1] + [Fraction(v, denom) for v in w2[:-1]]
         + [Fraction(v, denom) for v in w3[:-1]])

    start = tuple(_phase1_basis(r, col_rows, b))
    seen = {start}
    queue = [start]
    vertices = {}

    def col_vec(c):
        return [Fraction(int(i in col_rows[c])) for i in range(r)]

    while queue:
        basis = queue.pop()
        inv = _frac_inverse([col_vec(c) for c in basis])
        if inv is None:
            continue
        x_b = [sum(inv[i][k] * b[k] for k in range(r)) for i in range(r)]
        if any(v < 0 for v in x_b):
            continue
        sig = frozenset((support[basis[i]], x_b[i]) for i in range(r) if x_b[i] > 0)
        if sig not in vertices:
            vertices[sig] = {support[basis[i]]: x_b[i] for i in range(r) if x_b[i] > 0}
        basis_set = set(basis)
        for c in range(len(support)):
            if c in basis_set:
                continue
            d = [sum(inv[row][k] for k in col_rows[c]) for row in range(r)]
            ratios = [(x_b[i] / d[i], i) for i in range(r) if d[i] > 0]
            if not ratios:
                continue
            delta = min(rt for rt, _ in ratios)
            for rt, i in ratios:
                if rt != delta:
                    continue
                new_basis = tuple(sorted(basis_set - {basis[i]} | {c}))
                if new_basis not in seen:
                    if len(seen) >= basis_budget:
                        raise CapacityError("basis enumeration budget exhausted")
                    seen.add(new_basis)
                    queue.append(new_basis)

    plans = []
    for sig, entries in vertices.items():
        plans.append(TransportPlan({k: float(v) for k, v in entries.items()},
                                   (mu, nu, gamma)))
    plans.sort(key=lambda p: sorted(p.entries))
    return plans


def oracle_optimum(plans, table, sense="min"):
    """Best objective over an enumerated vertex list."""
    values = [p.objective(table) for p in plans]
    return min(values) if sense == "min" else max(values)


def support_is_acyclic(plan):
    """Vertices of a two-marginal polytope are exactly the forest-supported plans."""
    if plan.arity != 2:
        raise UsageError("acyclicity test is for two-marginal plans")
    m = plan.marginals[0].size
    adj = {}
    for (i, j) in plan.entries:
        adj.setdefault(i, []).append(m + j)
        adj.setdefault(m + j, []).append(i)
    seen = set()
    for root in adj:
        if root in seen:
            continue
        stack = [(root, -1)]
        seen.add(root)
        while stack:
            u, par = stack.pop()
            skipped_parent = False
            for v in adj[u]:
                if v == par and not skipped_parent:
                    skipped_parent = True
                    continue
                if v in seen:
                    return False
                seen.add(v)
                stack.append((v, u))
    return True


def support_columns_independent(plan):
    """Exact test that the active columns of the coupling system are independent.

    A feasible point of the polytope is extreme iff its support columns are
    linearly independent; this is the direct certificate for any arity.
    """
    support = sorted(plan.entries)
    if plan.arity == 2:
        m2 = plan.marginals[1].size
        sizes3 = (plan.marginals[0].size, m2, 1)
        support3 = [(i, j, 0) for (i, j) in support]
        col_rows = _columns_three(sizes3, support3)
        r = sizes3[0] + m2 - 1
    else:
        sizes3 = tuple(m.size for m in plan.marginals)
        col_rows = _columns_three(sizes3, support)
        r = sum(sizes3) - 2
    # exact incremental elimination: dependent column -> not extreme
    pivots = {}
    for rows in col_rows:
        v = [Fraction(int(i in rows)) for i in range(r)]
        for lead, pv in pivots.items():
            if v[lead] != 0:
                f = v[lead]
                v = [a - f * bb for a, bb in zip(v, pv)]
        lead = next((i for i in range(r) if v[i] != 0), None)
        if lead is None:
            return False
        scale = v[lead]
        pivots[lead] = [a / scale for a in v]
    return True
