import numpy as np
import pytest

import layered_ot as lot
from layered_ot.exceptions import ConfigurationError, DataError, UnsupportedShapeError
from layered_ot.measures import Layer, LayeredSpace, dump_measure_tsv


def test_layered_scenario_k1_uniform_cells():
    src, tgt, space = lot.make_layered_scenario(K=1, n=1, grid=4)
    assert src.size == 4
    assert np.allclose(src.weights, 0.25)
    assert np.allclose(src.points[:, 0], [0.125, 0.375, 0.625, 0.875])
    assert np.all(src.points[:, 1] == 0.0)


def test_layered_scenario_k2_mass_bookkeeping():
    _, tgt, _ = lot.make_layered_scenario(K=2, n=1, grid=2, t=[0.5, 0.5])
    assert tgt.size == 4
    assert np.allclose(tgt.weights, 0.25)
    assert sorted(tgt.per_layer_mass()) == [1, 2]


def test_layered_scenario_per_layer_mass_exact():
    # derived check: sum the weights per layer tag after generation
    t = [0.2, 0.3, 0.5]
    _, tgt, _ = lot.make_layered_scenario(K=3, n=2, grid=5, t=t)
    masses = tgt.per_layer_mass()
    for k, tk in enumerate(t, start=1):
        assert abs(masses[k] - tk) <= 1e-12


def test_layered_scenario_rejects_bad_simplex():
    with pytest.raises(ConfigurationError):
        lot.make_layered_scenario(K=2, n=1, grid=4, t=[0.5, 0.6])
    with pytest.raises(ConfigurationError):
        lot.make_layered_scenario(K=2, n=1, grid=4, t=[1.2, -0.2])
    with pytest.raises(ConfigurationError):
        lot.make_layered_scenario(K=0, n=1, grid=4)


def test_layered_scenario_perturbed_masses_still_exact():
    src, tgt, _ = lot.make_layered_scenario(K=2, n=1, grid=20, seed=3, perturb=0.2,
                                            t=[0.3, 0.7])
    assert abs(src.weights.sum() - 1.0) <= 1e-12
    masses = tgt.per_layer_mass()
    assert abs(masses[1] - 0.3) <= 1e-12
    assert abs(masses[2] - 0.7) <= 1e-12


def test_layer1_atomic_allowed_only_on_first_layer():
    _, tgt, _ = lot.make_layered_scenario(K=2, n=1, grid=4, layer1_atomic=True)
    atoms = tgt.atom_mask
    assert atoms[tgt.layer_tag == 1].all()
    assert not atoms[tgt.layer_tag == 2].any()


def test_counterexample_atomic_construction():
    src, tgt, space = lot.make_counterexample_atomic(grid=100)
    assert src.size == 100
    assert tgt.size == 2
    assert np.allclose(tgt.weights, [0.5, 0.5])          # two half-mass atoms
    assert abs(src.weights.sum() - 1.0) <= 1e-12
    assert set(map(tuple, tgt.points)) == {(1.0, 1.0), (1.0, -1.0)}
    assert [l.offset for l in space.layers] == [1.0, -1.0]


def test_counterexample_perpendicular_geometry():
    mu, nu = lot.make_counterexample_perpendicular(grid=10)
    assert mu.size == nu.size == 10
    assert np.allclose(mu.weights, 0.1)
    assert np.allclose(nu.weights, 0.1)
    # supports orthogonal: <x, y> vanishes exactly on the grid
    inner = mu.points @ nu.points.T
    assert np.all(inner == 0.0)


def test_counterexample_perpendicular_second_moments():
    # analytic second moment of the uniform segment is 1/3; the midpoint rule
    # hits 1/3 - 1/(12 g^2) exactly, so the sum converges at rate g^-2
    for grid in (10, 20, 40):
        mu, nu = lot.make_counterexample_perpendicular(grid=grid)
        total = float(mu.weights @ mu.points[:, 0] ** 2
                      + nu.weights @ nu.points[:, 1] ** 2)
        exact = 2.0 * (1.0 / 3.0 - 1.0 / (12.0 * grid * grid))
        assert abs(total - exact) <= 1e-14
        assert abs(total - 2.0 / 3.0) <= 2.0 / (12.0 * grid * grid) + 1e-14


def test_mixed_boundary_ball_normals_radial():
    spec = lot.MixedMeasureSpec(s=0.5)
    meas, meta = lot.make_mixed_boundary_scenario(spec, shape="ball", grid=16)
    for i, info in enumerate(meta):
        if info["region"] == "boundary":
            x = meas.points[i]
            assert abs(np.linalg.norm(x) - 1.0) <= 1e-12
            assert np.linalg.norm(x - info["normal"]) <= 1e-10


def test_mixed_boundary_degenerate_split():
    meas, meta = lot.make_mixed_boundary_scenario(lot.MixedMeasureSpec(s=1.0),
                                                  shape="ball", grid=8)
    assert all(info["region"] == "interior" for info in meta)


def test_mixed_boundary_split_bookkeeping():
    spec = lot.MixedMeasureSpec(s=0.7)
    meas, meta = lot.make_mixed_boundary_scenario(spec, shape="ball", grid=32)
    interior = sum(meas.weights[i] for i, m in enumerate(meta)
                   if m["region"] == "interior")
    assert abs(interior - 0.7) <= 1e-10
    assert abs(meas.weights.sum() - 1.0) <= 1e-10


def test_mixed_boundary_rejects_nonconvex_shape():
    with pytest.raises(UnsupportedShapeError):
        lot.make_mixed_boundary_scenario(lot.MixedMeasureSpec(s=0.5),
                                         shape="box", grid=8)


def test_mixed_boundary_ellipse_normals_outward():
    spec = lot.MixedMeasureSpec(s=0.4)
    meas, meta = lot.make_mixed_boundary_scenario(spec, shape="ellipsoid", grid=24,
                                                  axes=(1.0, 0.6))
    for i, info in enumerate(meta):
        if info["region"] == "boundary":
            x = meas.points[i]
            n = info["normal"]
            assert abs(np.linalg.norm(n) - 1.0) <= 1e-12
            assert float(n @ x) > 0.0          # outward


def test_measure_invariants():
    with pytest.raises(DataError):
        lot.DiscreteMeasure([[0.0], [1.0]], [0.6, 0.5])
    with pytest.raises(DataError):
        lot.DiscreteMeasure([[0.0], [1.0]], [1.2, -0.2])
    with pytest.raises(DataError):
        lot.DiscreteMeasure([[0.0], [0.0]], [0.5, 0.5])   # coincident points


def test_layered_space_offsets_distinct():
    basis = np.array([[1.0, 0.0]])
    normal = np.array([0.0, 1.0])
    l1 = Layer(offset=1.0, anchor=np.array([0.0, 1.0]), basis=basis,
               normal=normal, index=1)
    l2 = Layer(offset=1.0, anchor=np.array([0.0, 1.0]), basis=basis,
               normal=normal, index=2)
    with pytest.raises(DataError):
        LayeredSpace((l1, l2))


def test_layer_rejects_bad_frames():
    with pytest.raises(DataError):
        Layer(offset=0.0, anchor=np.zeros(2), basis=np.array([[1.0, 0.0]]),
              normal=np.array([0.0, 2.0]), index=1)
    with pytest.raises(DataError):
        Layer(offset=0.0, anchor=np.zeros(2), basis=np.array([[1.0, 1.0]]),
              normal=np.array([0.0, 1.0]), index=1)


def test_random_measure_dyadic_and_normalized():
    m = lot.make_random_measure(6, dim=2, seed=4)
    assert m.size == 6
    assert float(m.weights.sum()) == 1.0       # dyadic weights add exactly
    assert np.all(m.weights > 0)


def test_tilted_scenario_normal_dots_and_perp_flip():
    _, _, space = lot.make_tilted_scenario(K=3, grid=10, seed=1)
    n_src = space.source_layer.normal
    dots = [abs(float(n_src @ l.normal)) for l in space.layers]
    assert min(dots) >= 0.1
    _, _, space_perp = lot.make_tilted_scenario(K=2, grid=10, perp_layer=2)
    dots = [abs(float(n_src @ l.normal)) for l in space_perp.layers]
    assert dots[1] == 0.0


def test_threemarginal_scenario_masses():
    mu, nu, ga, _, _ = lot.make_threemarginal_scenario(K=2, L=3, grid=5, seed=2,
                                                       t=[0.4, 0.6],
                                                       r=[0.2, 0.3, 0.5])
    assert abs(nu.per_layer_mass()[1] - 0.4) <= 1e-12
    assert abs(ga.per_layer_mass()[3] - 0.5) <= 1e-12


def test_dump_measure_tsv(tmp_path):
    _, tgt, _ = lot.make_layered_scenario(K=2, n=1, grid=3)
    path = tmp_path / "measure.tsv"
    dump_measure_tsv(tgt, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0].startswith("#")
    assert len(lines) == tgt.size + 1
    fields = lines[1].split("\t")
    assert len(fields) == 1 + tgt.dim + 1     # weight, coords, layer
