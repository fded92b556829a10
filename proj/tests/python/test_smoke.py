"""Smoke tests for the imgbk python module."""

import math
import sys
import tempfile

import imgbk


def approx(a, b, tol=1e-9):
    return abs(a - b) <= tol


def test_build_and_analyze():
    feats = [[0.0, 1.0], [1.0, 0.0], [0.5, 0.5], [0.2, 0.8]]
    g = imgbk.build_graph([(0, 1), (1, 2), (2, 3)], feats, [0, 0, 1, 1])
    assert g.n_nodes == 4
    assert g.n_edges == 3
    imgbk.validate_graph(g)
    assert approx(imgbk.graph_homophily(g), 2.0 / 3.0)
    assert approx(imgbk.class_homophily(g, 0), 0.75)
    assert imgbk.class_counts(g) == [2, 2]
    assert approx(imgbk.imbalance_ratio([5, 10, 20]), 4.0)


def test_sbm_roundtrip_and_profile():
    bundle = imgbk.sbm_generate(
        class_sizes=[60, 40, 20],
        p_in=[0.15, 0.15, 0.05],
        p_out=0.02,
        feature_dim=6,
        class_mean_separation=1.5,
        noise_std=0.5,
        seed=3,
    )
    assert bundle.graph.n_nodes == 120
    stats = imgbk.profile(bundle)
    assert 0.0 <= stats["graph_homophily"] <= 1.0
    assert approx(stats["imbalance_ratio"], 3.0)

    with tempfile.TemporaryDirectory() as tmp:
        imgbk.save_dataset(bundle, tmp)
        back = imgbk.load_dataset(tmp)
        assert back.graph.n_nodes == bundle.graph.n_nodes
        assert back.graph.csr_neighbors == bundle.graph.csr_neighbors
        assert (back.graph.features == bundle.graph.features).all()
        assert back.masks.train == bundle.masks.train


def test_splits_and_gate_table():
    bundle = imgbk.sbm_generate(
        class_sizes=[80, 40], p_in=[0.2, 0.1], p_out=0.03, feature_dim=4, seed=1
    )
    masks = imgbk.split_random(bundle.graph, seed=5)
    n = bundle.graph.n_nodes
    assert masks.count_train() + masks.count_val() + masks.count_test() == n

    extreme = imgbk.make_extreme_split(bundle.graph, masks, [1], k=5, seed=0)
    kept = sum(
        1
        for i in range(n)
        if extreme.train[i] and bundle.graph.labels[i] == 1
    )
    assert kept == 5

    table = imgbk.fast_gate_table(bundle.graph, masks, epsilon=0.1)
    assert len(table["alpha"]) == bundle.graph.n_edge_directions
    assert all(0.0 < a < 1.0 for a in table["alpha"])


def test_training_is_deterministic_and_learns():
    bundle = imgbk.sbm_generate(
        class_sizes=[90, 60],
        p_in=[0.15, 0.15],
        p_out=0.01,
        feature_dim=8,
        class_mean_separation=1.5,
        noise_std=0.5,
        seed=4,
    )
    out1 = imgbk.train(bundle, model="fast-im-gbk", loss="balanced", hidden=8,
                       epochs=300, patience=120, seed=0)
    out2 = imgbk.train(bundle, model="fast-im-gbk", loss="balanced", hidden=8,
                       epochs=300, patience=120, seed=0)
    assert out1["train_loss"] == out2["train_loss"]
    assert out1["test"]["accuracy"] == out2["test"]["accuracy"]
    assert out1["test"]["accuracy"] >= 0.8
    assert 0.0 <= out1["test"]["auc_ovr_macro"] <= 1.0


def test_metrics():
    assert approx(imgbk.accuracy([0, 1, 0], [0, 1, 1]), 2.0 / 3.0)
    assert approx(imgbk.macro_f1([0, 1], [0, 1], 2), 1.0)
    scores = [[0.1, 0.9], [0.8, 0.2], [0.3, 0.7]]
    assert approx(imgbk.auc_ovr_macro(scores, [1, 0, 1]), 1.0)


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    failures = 0
    for test in tests:
        try:
            test()
            print(f"PASS {test.__name__}")
        except Exception as exc:  # noqa: BLE001
            failures += 1
            print(f"FAIL {test.__name__}: {exc}")
    if failures:
        sys.exit(1)


if __name__ == "__main__":
    main()
