import numpy as np
import pytest

from layered_ot import CostModel, eval_cost, grad_x_cost, cost_table, subtwist_gap
from layered_ot.costs import grad_x_fd
from layered_ot.exceptions import ConfigurationError, DomainError, UsageError
from layered_ot.measures import circle_chart, segment_chart
from layered_ot.structure import count_gap_critical_points

FAMILIES = [CostModel("quadratic"), CostModel("power", p=1.5),
            CostModel("power", p=3.0), CostModel("logcosh"),
            CostModel("surplus3")]


def test_eval_cost_pinned_values():
    assert eval_cost(CostModel("quadratic"), [0.0, 0.0], [1.0, 1.0]) == 2.0
    assert eval_cost(CostModel("surplus3"), [1.0, 0.0], [1.0, 0.0], [1.0, 0.0]) == 3.0
    assert eval_cost(CostModel("power", p=3.0), [0.0, 0.0], [0.0, 2.0]) == 8.0


def test_grad_pinned_values():
    g = grad_x_cost(CostModel("quadratic"), [1.0, 0.0], [0.0, 0.0]).grad_x
    assert np.allclose(g, [2.0, 0.0])
    g = grad_x_cost(CostModel("surplus3"), [0.3, 0.1], [1.0, 2.0], [3.0, 4.0]).grad_x
    assert np.allclose(g, [4.0, 6.0])
    # p=3 at x-y=(0,2): gradient is 3*|u|*u = (0,12); finite differences agree
    model = CostModel("power", p=3.0)
    x, y = np.array([0.0, 2.0]), np.array([0.0, 0.0])
    g = grad_x_cost(model, x, y).grad_x
    assert np.allclose(g, [0.0, 12.0], atol=1e-12)
    assert np.allclose(g, grad_x_fd(model, x, y), atol=1e-6)


def test_arity_and_domain_errors():
    with pytest.raises(UsageError):
        eval_cost(CostModel("quadratic"), [0.0], [0.0], [0.0])
    with pytest.raises(UsageError):
        eval_cost(CostModel("surplus3"), [0.0], [0.0])
    with pytest.raises(DomainError):
        grad_x_cost(CostModel("power", p=1.5), [1.0, 1.0], [1.0, 1.0])
    with pytest.raises(ConfigurationError):
        CostModel("power", p=1.0)
    with pytest.raises(ConfigurationError):
        CostModel("mystery")


@pytest.mark.parametrize("model", FAMILIES, ids=lambda m: f"{m.family}-p{m.p}")
def test_gradient_matches_finite_differences(model):
    # 100 seeded random tuples per family, 1e-5 relative agreement
    rng = np.random.default_rng(42)
    for _ in range(100):
        pts = [rng.uniform(-2.0, 2.0, size=3) for _ in range(model.arity)]
        if model.family == "power" and model.p < 2.0:
            if np.linalg.norm(pts[0] - pts[1]) < 1e-3:
                continue
        g = grad_x_cost(model, *pts).grad_x
        fd = grad_x_fd(model, *pts)
        scale = max(1.0, float(np.linalg.norm(fd)))
        assert np.linalg.norm(g - fd) / scale <= 1e-5


@pytest.mark.parametrize("model", [CostModel("power", p=1.5),
                                   CostModel("power", p=2.0),
                                   CostModel("power", p=3.0),
                                   CostModel("logcosh")],
                         ids=["p1.5", "p2", "p3", "logcosh"])
def test_strict_convexity_witness(model):
    # <grad h(u) - grad h(v), u - v> > 0 for u != v
    rng = np.random.default_rng(7)
    zero = np.zeros(3)
    for _ in range(100):
        u = rng.uniform(-2.0, 2.0, size=3)
        v = rng.uniform(-2.0, 2.0, size=3)
        if np.linalg.norm(u - v) < 1e-9 or min(np.linalg.norm(u), np.linalg.norm(v)) < 1e-6:
            continue
        gu = grad_x_cost(model, u, zero).grad_x
        gv = grad_x_cost(model, v, zero).grad_x
        assert float((gu - gv) @ (u - v)) > 0.0


def test_surplus3_symmetric_under_permutations():
    rng = np.random.default_rng(3)
    model = CostModel("surplus3")
    for _ in range(25):
        x, y, z = (rng.uniform(-1, 1, size=2) for _ in range(3))
        base = eval_cost(model, x, y, z)
        assert np.isclose(base, eval_cost(model, y, z, x))
        assert np.isclose(base, eval_cost(model, z, y, x))


def test_cost_table_matches_pointwise():
    import layered_ot as lot
    mu = lot.make_random_measure(4, seed=1)
    nu = lot.make_random_measure(3, seed=2)
    for model in (CostModel("quadratic"), CostModel("power", p=3.0), CostModel("logcosh")):
        table = cost_table(model, mu, nu)
        for i in range(4):
            for j in range(3):
                assert np.isclose(table[i, j],
                                  eval_cost(model, mu.points[i], nu.points[j]))
    ga = lot.make_random_measure(2, seed=3)
    table3 = cost_table(CostModel("surplus3"), mu, nu, ga)
    assert np.isclose(table3[1, 2, 0],
                      eval_cost(CostModel("surplus3"), mu.points[1], nu.points[2],
                                ga.points[0]))


def test_subtwist_gap_quadratic_circle():
    # gap of |x-y1|^2 - |x-y2|^2 with y = (+-2, 0) is -8 x_1 on the plane
    chart = circle_chart(720)
    model = CostModel("quadratic")
    profile = subtwist_gap(model, [2.0, 0.0], [-2.0, 0.0], chart)
    assert np.allclose(profile.values, -8.0 * chart.positions[:, 0], atol=1e-12)
    assert count_gap_critical_points(profile) == 2


def test_subtwist_gap_rejects_coincident_targets():
    chart = circle_chart(64)
    with pytest.raises(UsageError):
        subtwist_gap(CostModel("quadratic"), [1.0, 0.0], [1.0, 0.0], chart)


def test_subtwist_gap_affine_on_segment_interior():
    # linear cost <x, y>: the gap is affine, no interior critical points
    model = CostModel("custom",
                      cost_fn=lambda x, y: float(np.dot(x, y)),
                      grad_x_fn=lambda x, y: np.asarray(y, dtype=float))
    chart = segment_chart([0.0, 0.0], [1.0, 0.5], 101)
    profile = subtwist_gap(model, [1.0, 2.0], [0.0, -1.0], chart)
    assert count_gap_critical_points(profile) == 0
