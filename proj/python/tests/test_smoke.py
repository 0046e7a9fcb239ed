import math
import os
import subprocess

import numpy as np
import pytest

import sitpose


def test_tof_roundtrip():
    r = sitpose.sample_received(0.7, 0.2, 1.234)
    phase = sitpose.phase_from_samples(r)
    assert phase == pytest.approx(1.234, abs=1e-9)
    depth = sitpose.depth_from_phase(phase)
    assert depth == pytest.approx(299792458.0 * 1.234 / (4 * math.pi * 10e6), rel=1e-12)


def test_angle_between():
    assert sitpose.angle_between([1, 0, 0], [0, 1, 0]) == pytest.approx(90.0)
    assert sitpose.angle_between([1, 0, 0], [-2, 0, 0]) == 180.0
    with pytest.raises(sitpose.DegenerateError):
        sitpose.angle_between([0, 0, 0], [1, 0, 0])


def test_synth_features_shape_and_determinism():
    x, y = sitpose.synth_features(10, seed=3)
    assert x.shape == (70, 10)
    assert sorted(set(y.tolist())) == list(range(7))
    x2, _ = sitpose.synth_features(10, seed=3)
    assert np.array_equal(x, x2)
    assert sitpose.synth_features(2, include_head_xyz=True)[0].shape[1] == 12


def test_model_train_predict_roundtrip(tmp_path):
    x, y = sitpose.synth_features(20, seed=5)
    model = sitpose.Model.train("dt", x, y)
    p = model.predict_proba(x)
    assert p.shape == (140, 7)
    assert np.allclose(p.sum(axis=1), 1.0)
    assert (model.predict(x) == y).mean() > 0.9

    path = tmp_path / "dt.bin"
    model.save(path)
    again = sitpose.Model.load(path)
    assert np.array_equal(again.predict_proba(x), p)
    assert sitpose.Model.from_bytes(model.to_bytes()).kind == "dt"


def test_ensemble_matches_soft_vote():
    x, y = sitpose.synth_features(20, seed=6)
    ens = sitpose.Ensemble.train(["dt", "gbdt"], x, y, weights=[2.0, 1.0])
    assert ens.members == ["dt", "gbdt"]
    p = ens.predict_proba(x[:5])
    assert np.allclose(p.sum(axis=1), 1.0)
    label, probs = sitpose.soft_vote([[0.6, 0.3, 0.1], [0.3, 0.4, 0.3]], [2, 1])
    assert label == 0
    assert probs == pytest.approx([0.5, 1 / 3, 1 / 6])


def test_corrupted_model_is_rejected():
    x, y = sitpose.synth_features(5, seed=1)
    raw = bytearray(sitpose.Model.train("dt", x, y).to_bytes())
    raw[20] ^= 0x40
    with pytest.raises(sitpose.ModelFormatError, match="checksum"):
        sitpose.Model.from_bytes(bytes(raw))
    with pytest.raises(sitpose.ModelFormatError):
        sitpose.Model.from_bytes(b"garbage!")


def test_metrics_exact_fractions():
    truth = [0] * 10 + [1] * 10
    pred = [0] * 8 + [1] * 2 + [0] + [1] * 9
    m = sitpose.metrics(truth, pred, num_classes=2)
    assert m["f1"][0] == pytest.approx(16 / 19, abs=1e-12)
    assert m["weighted_f1"] == pytest.approx(113 / 133, abs=1e-12)
    assert m["confusion"] == [[8, 2], [1, 9]]


def test_cross_validate(tmp_path):
    csv = tmp_path / "d.csv"
    sitpose.generate_csv(csv, 15, seed=2)
    r = sitpose.cross_validate(csv, ["dt", "gbdt"], folds=3)
    assert set(r["members"]) == {"dt", "gbdt"}
    assert 0.0 <= r["ensemble"]["weighted_f1"] <= 1.0
    assert "[mean ensemble]" in r["report"]


def test_monitor_bad_posture_window():
    mon = sitpose.Monitor()
    lines = []
    for i in range(60):
        lines += mon.tick("HunchingOver" if i < 46 else "SittingStraight")
    assert lines == ["ALERT 60 BadPosture posture=HunchingOver incorrect=46/60"]
    rep = sitpose.parse_report(mon.report())
    assert rep["session_s"] == 60
    assert rep["bad_posture_windows"] == 1
    with pytest.raises(sitpose.InvalidArgument):
        mon.tick("Slouching")


@pytest.mark.skipif("SITPOSE_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_help():
    out = subprocess.run([os.environ["SITPOSE_CLI"], "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "train" in out.stdout
