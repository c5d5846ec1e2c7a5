import json

import numpy as np
import pytest

import cwerm

SMALL = {
    "data": {"classes": 3, "n_per_class": 60, "dim": 4, "separation": 5.0, "label_noise": 0.2},
    "coreset": {"ratio": 0.2},
    "meta": {"iterations": 10, "meta_lr": 0.01},
    "train": {"hidden": [8], "epochs": 4, "batch_size": 16},
    "harness": {"seeds": [0, 1], "arms": ["ERM", "CW-ERM"], "ratios": [0.2, 1.0]},
}


def test_blobs_shapes_and_determinism():
    x, y, ids = cwerm.make_blobs(3, 10, 2, 4.0, 1.0, 7)
    assert x.shape == (30, 2)
    assert sorted(set(y.tolist())) == [0, 1, 2]
    assert len(set(ids.tolist())) == 30
    x2, _, _ = cwerm.make_blobs(3, 10, 2, 4.0, 1.0, 7)
    assert np.array_equal(x, x2)


def test_moderate_selection_hand_example():
    x = np.array([[0.0], [1.0], [2.0], [3.0], [10.0]])
    y = np.zeros(5, dtype=np.int64)
    # Median 2, distances 2,1,0,1,8, median distance 1: rows 1 and 3 are closest.
    assert cwerm.select_moderate(x, y, 0.4) == [1, 3]


def test_broadcast_hand_example():
    x = np.array([[0.0], [0.9], [2.0]])
    weights, source = cwerm.broadcast_weights(x, [0, 2], [0.5, 1.5])
    assert weights == [0.5, 0.5, 1.5]
    assert source == [0, 0, 2]


def test_run_report():
    report = cwerm.run(SMALL, "CW-ERM", 0)
    assert report["schema"] == cwerm.REPORT_SCHEMA == 1
    assert report["method"] == "CW-ERM"
    assert 0.0 <= report["test_accuracy"] <= 1.0
    assert report["audit"]["test_isolated"] is True
    again = cwerm.run(json.dumps(SMALL), "CW-ERM", 0)
    assert again["test_accuracy"] == report["test_accuracy"]


def test_compare_and_sweep_shapes():
    cmp = cwerm.compare(SMALL)
    assert [row["method"] for row in cmp["rows"]] == ["ERM", "CW-ERM"]
    sweep = cwerm.sweep(SMALL)
    assert len(sweep["rows"]) == 3
    assert sweep["rows"][-1]["label"] == "uniform"


def test_errors():
    with pytest.raises(cwerm.ConfigError):
        cwerm.validate_config({"data": {"colour": "red"}})
    with pytest.raises(cwerm.ConfigError):
        cwerm.validate_config("{not json")
    with pytest.raises(cwerm.CwermError):
        cwerm.select_moderate(np.zeros((3, 2)), np.zeros(2, dtype=np.int64), 0.5)
    assert issubclass(cwerm.ConfigError, cwerm.CwermError)
