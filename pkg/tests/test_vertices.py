"""Exact enumeration against independent small-case oracles.

The two-marginal enumerator is checked against a test-local exhaustive filter
over all spanning trees (acyclicity by union-find, exact rational flows); the
three-marginal enumerator against an exhaustive basis filter over all column
subsets.  Both confirm the pivoting traversal reaches every vertex.
"""

from fractions import Fraction
from itertools import combinations

import pytest

import layered_ot as lot
from layered_ot import CostModel
from layered_ot.exceptions import CapacityError
from layered_ot.vertices import (_exact_margins, support_columns_independent,
                                 support_is_acyclic)


def _spanning_tree_vertices(mu, nu):
    """All transportation-polytope vertices by filtering every spanning tree."""
    (supply, demand), denom = _exact_margins(mu.weights, nu.weights)
    m, n = len(supply), len(demand)
    cells = [(i, j) for i in range(m) for j in range(n)]
    vertices = set()
    for tree in combinations(cells, m + n - 1):
        parent = list(range(m + n))

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        acyclic = True
        for (i, j) in tree:
            a, b = find(i), find(m + j)
            if a == b:
                acyclic = False
                break
            parent[a] = b
        if not acyclic:
            continue
        # solve the tree flows by peeling leaves
        deg = {}
        inc = {}
        for (i, j) in tree:
            deg[i] = deg.get(i, 0) + 1
            deg[m + j] = deg.get(m + j, 0) + 1
            inc.setdefault(i, []).append((i, j))
            inc.setdefault(m + j, []).append((i, j))
        bal = {v: (supply[v] if v < m else -demand[v - m]) for v in range(m + n)}
        flows = {}
        live = set(tree)
        while live:
            leaf = next(v for v in deg if deg[v] == 1)
            (i, j) = next(c for c in inc[leaf] if c in live)
            f = bal[i] if leaf == i else -bal[m + j]
            flows[(i, j)] = f
            live.discard((i, j))
            bal[i] -= f
            bal[m + j] += f
            for v in (i, m + j):
                deg[v] -= 1
        if all(f >= 0 for f in flows.values()):
            vertices.add(frozenset((c, f) for c, f in flows.items() if f > 0))
    return vertices


def _plan_signature(plan, denom):
    return frozenset((idx, round(mass * denom)) for idx, mass in plan.entries.items())


def test_birkhoff_two_by_two():
    mu = lot.DiscreteMeasure([[0.0], [1.0]], [0.5, 0.5])
    nu = lot.DiscreteMeasure([[2.0], [3.0]], [0.5, 0.5])
    verts = lot.enumerate_vertices_bruteforce(mu, nu)
    assert len(verts) == 2          # identity and swap
    supports = {tuple(sorted(v.entries)) for v in verts}
    assert supports == {((0, 0), (1, 1)), ((0, 1), (1, 0))}


def test_birkhoff_three_by_three_degenerate():
    mu = lot.DiscreteMeasure([[float(i)] for i in range(3)], [Fraction(1, 3)] * 3)
    nu = lot.DiscreteMeasure([[float(i) + 9] for i in range(3)], [Fraction(1, 3)] * 3)
    verts = lot.enumerate_vertices_bruteforce(mu, nu)
    assert len(verts) == 6          # the permutation matrices


@pytest.mark.parametrize("sizes", [(3, 2), (3, 3), (4, 3)])
def test_enumeration_matches_spanning_tree_filter(sizes):
    m, n = sizes
    mu = lot.make_random_measure(m, seed=10 * m + n)
    nu = lot.make_random_measure(n, seed=20 * m + n)
    verts = lot.enumerate_vertices_bruteforce(mu, nu)
    expected = _spanning_tree_vertices(mu, nu)
    (_, _), denom = _exact_margins(mu.weights, nu.weights)
    got = {frozenset((idx, round(mass * denom)) for idx, mass in v.entries.items())
           for v in verts}
    normalized_expected = {
        frozenset((c, int(f)) for c, f in sig) for sig in expected}
    assert got == normalized_expected


def test_enumeration_oracle_equivalence_with_solver():
    model = CostModel("quadratic")
    for s in range(10):
        m = 2 + s % 4
        n = 2 + (s * 7) % 4
        mu = lot.make_random_measure(m, seed=1000 + s)
        nu = lot.make_random_measure(n, seed=2000 + s)
        plan, _ = lot.solve_two_marginal(mu, nu, model)
        verts = lot.enumerate_vertices_bruteforce(mu, nu)
        oracle = lot.oracle_optimum(verts, plan.cost, "min")
        assert abs(oracle - plan.objective()) <= 1e-10
        # every enumerated vertex is feasible and forest-supported
        for v in verts:
            v.validate()
            assert support_is_acyclic(v)


def test_enumeration_size_cap():
    mu = lot.make_random_measure(7, seed=1)
    nu = lot.make_random_measure(3, seed=2)
    with pytest.raises(CapacityError):
        lot.enumerate_vertices_bruteforce(mu, nu)


def _exhaustive_three_vertices(mu, nu, ga):
    """Vertices of the 3-index polytope by filtering all column subsets."""
    from layered_ot.vertices import _columns_three, _frac_solve
    sizes = (mu.size, nu.size, ga.size)
    (w1, w2, w3), denom = _exact_margins(mu.weights, nu.weights, ga.weights)
    r = sum(sizes) - 2
    support = [(i, j, k) for i in range(sizes[0])
               for j in range(sizes[1]) for k in range(sizes[2])]
    col_rows = _columns_three(sizes, support)
    b = ([Fraction(v, denom) for v in w1] + [Fraction(v, denom) for v in w2[:-1]]
         + [Fraction(v, denom) for v in w3[:-1]])
    vertices = set()
    for basis in combinations(range(len(support)), r):
        cols = [[Fraction(int(i in col_rows[c])) for i in range(r)] for c in basis]
        x = _frac_solve(cols, b)
        if x is None or any(v < 0 for v in x):
            continue
        vertices.add(frozenset((support[basis[i]], x[i]) for i in range(r)
                               if x[i] > 0))
    return vertices


def test_three_marginal_enumeration_matches_exhaustive():
    mu = lot.make_random_measure(2, seed=5)
    nu = lot.make_random_measure(2, seed=6)
    ga = lot.make_random_measure(2, seed=7)
    verts = lot.enumerate_vertices_three(mu, nu, ga)
    expected = _exhaustive_three_vertices(mu, nu, ga)
    got = {frozenset((idx, Fraction(mass).limit_denominator(10 ** 12))
                     for idx, mass in v.entries.items()) for v in verts}
    normalized = {frozenset((idx, Fraction(f)) for idx, f in sig)
                  for sig in expected}
    assert len(verts) == len(expected)
    assert {frozenset(dict(s).keys()) for s in got} == \
        {frozenset(dict(s).keys()) for s in normalized}


def test_three_marginal_enumeration_medium_instance():
    model = CostModel("surplus3")
    mu = lot.make_random_measure(3, seed=21)
    nu = lot.make_random_measure(3, seed=22)
    ga = lot.make_random_measure(2, seed=23)
    plan, _ = lot.solve_three_marginal(mu, nu, ga, model)
    verts = lot.enumerate_vertices_three(mu, nu, ga)
    oracle = lot.oracle_optimum(verts, plan.cost, "max")
    assert abs(oracle - plan.objective()) <= 1e-10


def test_extremality_certificates():
    mu = lot.make_random_measure(3, seed=31)
    nu = lot.make_random_measure(3, seed=32)
    verts = lot.enumerate_vertices_bruteforce(mu, nu)
    v0, v1 = verts[0], verts[1]
    assert support_columns_independent(v0)
    assert support_columns_independent(v1)
    # a strict midpoint of two distinct vertices is not extreme
    from layered_ot.solver import TransportPlan
    mid_entries = {}
    for idx in set(v0.entries) | set(v1.entries):
        mid_entries[idx] = 0.5 * v0.entries.get(idx, 0.0) + 0.5 * v1.entries.get(idx, 0.0)
    mid = TransportPlan(mid_entries, (mu, nu))
    assert not support_columns_independent(mid)
    assert not support_is_acyclic(mid)
