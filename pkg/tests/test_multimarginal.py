import numpy as np
import pytest

import layered_ot as lot
from layered_ot import CostModel
from layered_ot.exceptions import CapacityError
from layered_ot.multimarginal import (build_reduced_cost, check_extreme_chain,
                                      check_projected_minimizing_set,
                                      projected_sets_from_duals,
                                      reduced_cost_identity_error, restrict_plan,
                                      restriction_objective_identity_error)
from layered_ot.solver import (DualCertificate, TransportPlan, minimizing_set,
                               solve_two_marginal_table)

SURPLUS = CostModel("surplus3")


def _solved_instance(sizes=(3, 3, 2), seed=0):
    mu = lot.make_random_measure(sizes[0], seed=seed)
    nu = lot.make_random_measure(sizes[1], seed=seed + 37)
    ga = lot.make_random_measure(sizes[2], seed=seed + 74)
    plan, cert = lot.solve_three_marginal(mu, nu, ga, SURPLUS)
    return mu, nu, ga, plan, cert


def test_reduced_cost_single_atom_third_marginal():
    mu = lot.make_random_measure(3, seed=1)
    nu = lot.make_random_measure(3, seed=2)
    ga = lot.DiscreteMeasure([[0.5, 0.5]], [1.0])
    plan, cert = lot.solve_three_marginal(mu, nu, ga, SURPLUS)
    red = build_reduced_cost(SURPLUS, cert, mu, nu, ga, table3=plan.cost)
    phi3 = cert.potentials[2]
    expected = plan.cost[:, :, 0] - phi3[0]     # one-point sup
    assert np.allclose(red.table, expected, atol=1e-12)
    assert np.all(red.witness == 0)


def test_reduced_cost_zero_potential_is_discrete_sup():
    mu = lot.make_random_measure(2, seed=3)
    nu = lot.make_random_measure(2, seed=4)
    ga = lot.make_random_measure(3, seed=5)
    table3 = lot.cost_table(SURPLUS, mu, nu, ga)
    cert = DualCertificate(potentials=(np.zeros(2), np.zeros(2), np.zeros(3)),
                           objective=0.0, gap=0.0, sense="max")
    red = build_reduced_cost(SURPLUS, cert, mu, nu, ga, table3=table3)
    # xi(x+y) = max_z <x+y, z> when the absorbed potential vanishes
    for i in range(2):
        for j in range(2):
            w = mu.points[i] + nu.points[j]
            assert np.isclose(red.xi[i, j], max(float(w @ z) for z in ga.points))


def test_xi_subgradient_monotone():
    # attaining arguments of a sup of affine maps are cyclically monotone
    rng = np.random.default_rng(8)
    zs = rng.uniform(-1, 1, size=(6, 2))
    phi3 = rng.uniform(-0.5, 0.5, size=6)

    def attain(w):
        vals = zs @ w - phi3
        return zs[int(np.argmax(vals))]

    for _ in range(50):
        w1 = rng.uniform(-2, 2, size=2)
        w2 = rng.uniform(-2, 2, size=2)
        z1, z2 = attain(w1), attain(w2)
        assert float((z1 - z2) @ (w1 - w2)) >= -1e-12


def test_restrict_product_plan():
    mu = lot.make_random_measure(2, seed=11)
    nu = lot.make_random_measure(3, seed=12)
    ga = lot.make_random_measure(2, seed=13)
    entries = {}
    for i in range(2):
        for j in range(3):
            for k in range(2):
                entries[(i, j, k)] = float(mu.weights[i] * nu.weights[j]
                                           * ga.weights[k])
    plan = TransportPlan(entries, (mu, nu, ga))
    pair = restrict_plan(plan)
    for (i, j), mass in pair.restricted.entries.items():
        assert np.isclose(mass, float(mu.weights[i] * nu.weights[j]))


def test_restriction_identities_and_reoptimization():
    mu, nu, ga, plan, cert = _solved_instance(sizes=(3, 3, 3), seed=5)
    red = build_reduced_cost(SURPLUS, cert, mu, nu, ga, table3=plan.cost)
    pair = restrict_plan(plan)
    assert reduced_cost_identity_error(plan, red, cert) <= 1e-9
    assert restriction_objective_identity_error(plan, pair, red, cert) <= 1e-8
    replan, _ = solve_two_marginal_table(mu, nu, red.table, sense="max")
    assert abs(replan.objective(red.table)
               - pair.restricted.objective(red.table)) <= 1e-8


def test_projected_tight_set_equality():
    for seed in (0, 3, 9):
        mu, nu, ga, plan, cert = _solved_instance(sizes=(4, 4, 4), seed=seed)
        red = build_reduced_cost(SURPLUS, cert, mu, nu, ga, table3=plan.cost)
        t3, t2 = projected_sets_from_duals(cert, plan.cost, red, mu, nu)
        rep = check_projected_minimizing_set(t3, t2)
        assert rep.equal, (rep.only_in_projection, rep.only_in_reduced)


def test_projected_tight_set_one_sided_when_tightened():
    mu, nu, ga, plan, cert = _solved_instance(sizes=(3, 3, 3), seed=2)
    red = build_reduced_cost(SURPLUS, cert, mu, nu, ga, table3=plan.cost)
    tight3 = minimizing_set(cert, plan.cost, tol_s=1e-12)
    cert2 = DualCertificate(potentials=(cert.potentials[0], cert.potentials[1]),
                            objective=0.0, gap=0.0, sense="max")
    tight2 = minimizing_set(cert2, red.table, tol_s=1e-7)
    rep = check_projected_minimizing_set(tight3, tight2)
    assert rep.projection_contained        # tightened S only shrinks the projection


def test_extreme_chain_single_atom_third():
    mu = lot.make_random_measure(3, seed=31)
    nu = lot.make_random_measure(3, seed=32)
    ga = lot.DiscreteMeasure([[0.0, 0.0]], [1.0])
    plan, cert = lot.solve_three_marginal(mu, nu, ga, SURPLUS)
    pair = restrict_plan(plan)
    rep = check_extreme_chain(plan, pair.restricted)
    assert rep.chain_extreme
    assert rep.direct_extreme


def test_extreme_chain_matches_direct_on_seeded_instances():
    for seed in range(6):
        mu, nu, ga, plan, cert = _solved_instance(sizes=(3, 3, 2), seed=40 + seed)
        pair = restrict_plan(plan)
        rep = check_extreme_chain(plan, pair.restricted)
        assert rep.chain_extreme == rep.direct_extreme
        assert rep.direct_extreme          # solver vertices are extreme


def test_extreme_chain_midpoint_not_extreme():
    mu = lot.make_random_measure(3, seed=51)
    nu = lot.make_random_measure(3, seed=52)
    ga = lot.make_random_measure(2, seed=53)
    verts = lot.enumerate_vertices_three(mu, nu, ga)
    assert len(verts) >= 2
    v0, v1 = verts[0], verts[1]
    mid_entries = {}
    for idx in set(v0.entries) | set(v1.entries):
        mid_entries[idx] = 0.5 * v0.entries.get(idx, 0.0) \
            + 0.5 * v1.entries.get(idx, 0.0)
    mid = TransportPlan(mid_entries, (mu, nu, ga))
    pair = restrict_plan(mid)
    rep = check_extreme_chain(mid, pair.restricted)
    assert not rep.direct_extreme
    assert not rep.chain_extreme


def test_extreme_chain_capacity():
    mu = lot.make_random_measure(6, seed=61)
    nu = lot.make_random_measure(3, seed=62)
    ga = lot.make_random_measure(2, seed=63)
    entries = {(i, 0, 0): float(mu.weights[i]) for i in range(6)}
    # rebalance onto the actual marginals is irrelevant; the cap trips first
    plan = TransportPlan(entries, (mu, nu, ga))
    with pytest.raises(CapacityError):
        check_extreme_chain(plan, plan)
