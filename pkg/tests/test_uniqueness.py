import numpy as np
import pytest

import layered_ot as lot
from layered_ot.exceptions import ConfigurationError
from layered_ot.uniqueness import (atomic_counterexample_maps,
                                   reproduce_counterexample, run_theorem_scenario)


def test_unknown_theorem_id():
    with pytest.raises(ConfigurationError):
        run_theorem_scenario("T9.9", {})


def test_t31_end_to_end_unique_evidence():
    v = run_theorem_scenario("T3.1", {"geometry.K": 2, "geometry.grid": 30,
                                      "cost.family": "quadratic",
                                      "measure.t": [0.3, 0.7], "seed": 11})
    assert v.hypotheses_hold
    assert v.all_passed
    by_name = {c.name: c for c in v.checks}
    assert by_name["face_probe"].details["dim_lb"] == 0
    assert by_name["cp_extremality"].details["violations"] == 0
    assert by_name["graph_decomposition"].details["maps"] == 2


def test_t31_repeated_probe_seeds_agree():
    # unique-evidence verdicts must be stable across probe seeds
    dims = []
    for seed in (1, 2, 3):
        v = run_theorem_scenario("T3.1", {"geometry.K": 2, "geometry.grid": 15,
                                          "cost.family": "power", "cost.p": 3,
                                          "seed": seed})
        dims.append({c.name: c for c in v.checks}["face_probe"].details["dim_lb"])
    assert dims == [0, 0, 0]


def test_t32_hypothesis_violation_skips_and_probes():
    v = run_theorem_scenario("T3.2", {"geometry.K": 2, "geometry.grid": 16,
                                      "geometry.perp_layer": 2, "seed": 7})
    assert not v.hypotheses_hold
    statuses = {c.name: c.status for c in v.checks}
    assert statuses["face_probe"] == "SKIP"
    assert statuses["cp_extremality"] == "SKIP"
    probe = {c.name: c for c in v.checks}["counterexample_probe"]
    assert probe.status == "PASS"
    assert probe.details["dim_lb"] >= 1


def test_t32_tilted_passes():
    v = run_theorem_scenario("T3.2", {"geometry.K": 3, "geometry.grid": 18,
                                      "seed": 5})
    assert v.hypotheses_hold
    assert v.all_passed
    assert min(v.artifacts["normal_dots"]) >= 0.1


def test_t41_small_instance_with_chain():
    v = run_theorem_scenario("T4.1", {"geometry.K": 2, "geometry.L": 2,
                                      "geometry.grid": 2, "seed": 3})
    names = [c.name for c in v.checks]
    assert "extreme_chain" in names
    assert v.all_passed


def test_t41_acceptance_size():
    v = run_theorem_scenario("T4.1", {"geometry.K": 2, "geometry.L": 2,
                                      "geometry.grid": 6, "seed": 9})
    assert v.all_passed
    cells = {c.name: c for c in v.checks}["support_cells"]
    assert cells.details["max_partners"] <= 4
    assert cells.details["max_per_cell"] == 1


def test_t53_subtwist_critical_points():
    v = run_theorem_scenario("T5.3", {"geometry.grid": 20, "seed": 3})
    assert v.all_passed
    sub = {c.name: c for c in v.checks}["subtwist_critical_points"]
    assert sub.details["max_count"] == 2


def test_t61_boundary_structure():
    v = run_theorem_scenario("T6.1", {"geometry.grid": 24, "seed": 3})
    assert v.all_passed
    by_name = {c.name: c for c in v.checks}
    assert by_name["boundary_normal_lines"].details["violations"] == 0
    assert by_name["boundary_normal_lines"].details["boundary_multi"] > 0
    assert by_name["interior_single_valued"].details["fraction"] >= 0.95
    assert by_name["face_probe"].details["dim_lb"] == 0


def test_atomic_maps_push_forward_exactly():
    src, tgt, _ = lot.make_counterexample_atomic(grid=60)
    t1, t2 = atomic_counterexample_maps(src, tgt)
    for alt in (t1, t2):
        assert np.allclose(alt.marginal_weights(1), 0.5, atol=1e-12)
        assert np.allclose(alt.marginal_weights(0), src.weights, atol=1e-15)
    # each source sends its whole cell to exactly one atom
    assert all(len([j for (i2, j) in t1.entries if i2 == i]) == 1
               for i in range(src.size))
    assert t1.max_entry_diff(t2) > 0


def test_reproduce_atomic_counterexample():
    rep = reproduce_counterexample("atomic", grid=100, seed=0, trials=10)
    assert rep.all_passed
    by_name = {c.name: c for c in rep.checks}
    assert by_name["maps_equal_cost"].details["difference"] <= 1e-12
    assert by_name["value_near_analytic"].details["value"] == pytest.approx(
        4.0 / 3.0 - 1.0 / 120000.0, abs=1e-12)
    assert by_name["face_probe"].details["dim_lb"] >= 1


def test_reproduce_atomic_rejects_unaligned_grid():
    with pytest.raises(ConfigurationError):
        reproduce_counterexample("atomic", grid=30)


def test_reproduce_perpendicular_counterexample():
    rep = reproduce_counterexample("perpendicular", grid=10, seed=0, trials=10)
    assert rep.all_passed
    by_name = {c.name: c for c in rep.checks}
    assert by_name["objective_spread"].details["spread"] <= 1e-12
    assert by_name["objective_spread"].details["plans"] == 100
    assert by_name["face_probe"].details["dim_lb"] >= 1


def test_reproduce_unknown_counterexample():
    with pytest.raises(ConfigurationError):
        reproduce_counterexample("diagonal")
