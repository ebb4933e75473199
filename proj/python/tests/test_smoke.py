import math

import numpy as np
import pytest

import iwsn


def test_filters():
    h, g = iwsn.filter_pair("bior2.2")
    r2 = math.sqrt(2)
    np.testing.assert_allclose(h, np.array([-1 / 8, 1 / 4, 3 / 4, 1 / 4, -1 / 8]) * r2, rtol=0, atol=1e-16)
    np.testing.assert_allclose(g, np.array([1 / 4, -1 / 2, 1 / 4]) * r2, rtol=0, atol=1e-16)
    assert iwsn.bases() == ["bior1.1", "bior2.2", "bior1.3", "bior2.6"]
    for b in iwsn.bases():
        h, g = iwsn.filter_pair(b)
        assert h.sum() == pytest.approx(r2)
        assert g.sum() == pytest.approx(0.0, abs=1e-15)


def test_scatter_shapes_and_constant_plane():
    x = np.full((20, 24), 0.625)
    out = iwsn.scatter(x)
    assert out["S0"].shape == (10, 12)
    assert [u.shape for u in out["U"]] == [(10, 12), (5, 6), (3, 3)]
    np.testing.assert_allclose(out["S0"], 0.625, rtol=1e-14)
    for u in out["U"]:
        assert np.abs(u).max() < 1e-14


def test_features_match_flattened_modulus_planes():
    rng = np.random.default_rng(3)
    x = rng.random((40, 48))
    for variant in ("classic", "improved"):
        out = iwsn.scatter(x, variant=variant)
        feats = iwsn.extract_features(x, variant=variant)
        assert feats.size == iwsn.feature_length(48, 40, variant=variant)
        np.testing.assert_array_equal(feats, np.concatenate([u.ravel() for u in out["U"]]))


def test_periodic_shift():
    rng = np.random.default_rng(5)
    x = rng.random((32, 32))
    kw = dict(boundary="periodic", bases=["bior1.1"] * 3)
    base = iwsn.scatter(x, **kw)
    for m in (1, 2, 3):
        moved = iwsn.scatter(np.roll(x, (2**m, 2**m), axis=(0, 1)), **kw)
        np.testing.assert_array_equal(moved["U"][m - 1], np.roll(base["U"][m - 1], (1, 1), axis=(0, 1)))


def test_flops():
    assert iwsn.fc_flops(64, 16, True) == 1040
    assert iwsn.fc_flops(16, 16, True) == 272
    assert 66.30e6 <= iwsn.fc_flops(1036800, 64, True) <= 66.40e6
    spec = """input width=1280 height=720 channels=3
conv2d k=7 p=0 s=1 out=3 bias=1
relu
avgpool k=5 p=0 s=1
fc out=128 bias=1
relu
fc out=64 bias=1
"""
    assert iwsn.network_flops(spec)["total"] == 821_091_304
    small = iwsn.pipeline_flops(640, 360)["total"]
    big = iwsn.pipeline_flops(1280, 720)["total"]
    assert big / small == pytest.approx(4.0, rel=0.02)


def test_mlp_training_and_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    x = rng.normal(size=(60, 4))
    y = [int(v) for v in (x[:, 0] + x[:, 1] > 0)]
    model = iwsn.make_mlp([4, 8, 2], 3)
    trained, loss = iwsn.train(model, x, y, lr=0.05, epochs=40, batch_size=10, seed=2)
    assert loss[-1] < loss[0]
    again, _ = iwsn.train(model, x, y, lr=0.05, epochs=40, batch_size=10, seed=2)
    assert again == trained
    pred = [int(np.argmax(trained.forward(row))) for row in x]
    assert np.mean(np.array(pred) == np.array(y)) > 0.9
    path = str(tmp_path / "m.bin")
    trained.save(path)
    assert iwsn.MlpModel.load(path) == trained
    assert trained.weights(0).shape == (4, 8)
    z = iwsn.zero_mlp([4, 3]).forward(np.ones(4))
    np.testing.assert_array_equal(z, np.zeros(3))


def test_metrics():
    counts = [[332, 19], [26, 736]]
    t = iwsn.class_metrics(counts, 0)
    assert (t["tp"], t["fn"], t["fp"], t["tn"]) == (332, 19, 26, 736)
    assert t["tpr"] == pytest.approx(332 / 351)
    assert round(iwsn.efficiency(66.7, 472e9), 3) == 0.141
    assert round(iwsn.efficiency(149.3, 3000e9), 3) == 0.050
    assert "overall" in iwsn.evaluation_report(counts, ["nest", "other"])


def test_pipeline(tmp_path):
    records = iwsn.synth_dataset(str(tmp_path / "img"), per_class=4, width=64, height=64)
    assert len(records) == 20
    plane = iwsn.load_channel(str(tmp_path / "img" / records[0][0]))
    assert plane.shape == (64, 64)
    cfg = "epochs=5\nhidden=8\n"
    s = iwsn.run_extract(str(tmp_path / "img" / "manifest.tsv"), str(tmp_path / "f.bin"), cfg)
    assert s["written"] == 20 and not s["failures"]
    r = iwsn.run_train(str(tmp_path / "f.bin"), str(tmp_path / "m.bin"), cfg)
    assert len(r["loss"]) == 5
    name, scores = iwsn.run_infer(r["model"], str(tmp_path / "img" / records[0][0]), cfg)
    assert name in {"nest", "kite", "textile", "plastic", "background"}
    assert scores.shape == (5,)


def test_errors():
    with pytest.raises(iwsn.DataError):
        iwsn.filter_pair("haar")
    with pytest.raises(iwsn.DataError):
        iwsn.scatter(np.zeros((3, 3)), bases=["bior2.6"], depth=1)
    with pytest.raises(ValueError):
        iwsn.scatter(np.zeros(5))
    with pytest.raises(iwsn.NumericError):
        model = iwsn.make_mlp([2, 2], 1)
        iwsn.train(model, np.array([[1e300, -1e300]]), [0], lr=1e300, epochs=5)
