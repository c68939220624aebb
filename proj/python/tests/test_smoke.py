import json
import math

import numpy as np
import pytest

import igs_sparsify as igs


def test_normalize_adjacency_path_graph():
    a = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    n = igs.normalize_adjacency(a)
    assert n.shape == (3, 3)
    assert n[0, 0] == pytest.approx(0.5)
    assert n[1, 1] == pytest.approx(1 / 3)
    assert n[0, 1] == pytest.approx(1 / math.sqrt(6))
    np.testing.assert_array_equal(n, n.T)


def test_soft_mask_zero_phi_is_one_half():
    np.testing.assert_array_equal(igs.soft_mask(np.zeros((4, 4))), np.full((4, 4), 0.5))


def test_binarize_removes_floor_of_percent():
    rng = np.random.default_rng(0)
    scores = rng.random((10, 10))
    support = np.ones((10, 10)) - np.eye(10)
    mask = igs.binarize_mask(scores, support, 10.0)
    assert np.triu(mask, 1).sum() == 45 - 4
    np.testing.assert_array_equal(mask, mask.T)
    assert igs.removal_count(45, 10.0) == 4


def test_exact_sum_is_order_invariant():
    terms = [1e16, 1.0, -1e16, 1e-3]
    assert igs.exact_sum(terms) == igs.exact_sum(list(reversed(terms))) == math.fsum(terms)


def test_synthetic_cohort_shape_and_planted_block():
    ds = igs.generate_synthetic(nodes=12, graphs=20, seed=3)
    assert len(ds["adjacency"]) == 20
    assert ds["adjacency"][0].shape == (12, 12)
    assert sorted(set(ds["labels"])) == [0, 1]
    assert len(ds["planted_edges"]) == 9
    assert len(ds["subnetworks"]) == 12


def test_subnetwork_aggregate_singletons():
    names, agg = igs.subnetwork_aggregate(np.array([[0.0, 0.3], [0.3, 0.0]]), ["P", "Q"])
    assert names == ["P", "Q"]
    assert agg[0, 1] == 0.3


def test_plan_defaults_and_errors():
    resolved = json.loads(igs.resolve_plan('{"dataset": {"synthetic": {}}}'))
    assert resolved["gcn"]["layers"] == 4
    assert resolved["gcn"]["hidden"] == 256
    assert resolved["framework"]["iterations"] == 55
    assert resolved["method_params"]["lambda"] == 0.0001
    with pytest.raises(igs.ConfigError):
        igs.resolve_plan('{"dataset": {"synthetic": {}}, "unknown": 1}')
    with pytest.raises(ValueError):
        igs.resolve_plan('{"dataset": {"synthetic": {}}, "method": "Nope"}')


def test_run_and_report(tmp_path):
    manifest = igs.write_synthetic(tmp_path / "data", nodes=8, graphs=30, seed=1)
    plan = {
        "methods": ["IGS", "GradJoint"],
        "dataset": {"manifest": str(manifest)},
        "gcn": {"layers": 2, "hidden": 4, "dropout": 0, "learning_rate": 0.01,
                "batch_size": 8, "patience": 3, "max_epochs": 6},
        "framework": {"iterations": 2, "removal_percent": 10},
        "split_seeds": 1,
        "output_dir": str(tmp_path / "out"),
    }
    rows = igs.run_plan(json.dumps(plan))
    assert [r["method"] for r in rows] == ["IGS", "GradJoint"]
    assert all(0.0 <= r["mean_test_acc"] <= 1.0 for r in rows)
    assert igs.emit_reports(tmp_path / "out") == rows
    assert (tmp_path / "out" / "reports" / "summary.csv").exists()


def test_empty_report_directory(tmp_path):
    with pytest.raises(igs.IngestionError, match="no runs found"):
        igs.emit_reports(tmp_path)
