import csv

import numpy as np
import pytest

import avdoa


def test_gcc_peak_sign():
    rng = np.random.default_rng(0)
    base = rng.standard_normal(8192 + 64)
    l = base[32:32 + 8192]
    p = base[32 - 7:32 - 7 + 8192]  # p lags l by 7 samples
    g = avdoa.gcc_phat_pair(l, p)
    assert g.shape == (51,)
    assert int(np.argmax(g)) - 25 == -7
    same = avdoa.gcc_phat_pair(l, l)
    assert same[25] == pytest.approx(1.0, abs=1e-12)


def test_srp_recovers_clean_azimuth():
    src = avdoa.synth_source("speech_like_ar", seed=3)
    frame = avdoa.render_far_field([src], [63.0])
    assert frame.shape == (4, src.shape[0])
    gcc = avdoa.gcc_feature(frame)
    assert gcc.shape == (6, 51)
    scores = avdoa.srp_phat(gcc)
    assert scores.shape == (360,)
    (doa,) = avdoa.decode_srp(scores, 1)
    assert avdoa.angular_error(doa, 63.0) <= 5.0


def test_visual_encoding():
    empty = avdoa.encode_visual([])
    assert empty.shape == (2, 51)
    assert np.allclose(empty, 1 / 51)
    enc = avdoa.encode_visual([(300.0, 200.0, 40.0, 50.0)])
    assert enc.max() <= 1.0 and enc.min() > 0.0
    assert int(np.argmax(enc[0])) == round(320.0 / 640.0 * 50)


def test_bbox_matches_projection():
    cam = avdoa.Camera()  # looks along world +x
    head = (2.0, 0.3, 0.1)
    box = avdoa.synthesize_bbox(head, cam, noise_var=(0.0, 0.0, 0.0))
    u, v = cam.project(head)
    assert box[0] + box[2] / 2 == pytest.approx(u)
    assert box[1] + box[3] / 2 == pytest.approx(v)
    assert box[2] == pytest.approx(cam.intrinsics.fu * 0.14 / 2.0)
    assert avdoa.synthesize_bbox((-2.0, 0.0, 0.0), cam, noise_var=(0.0, 0.0, 0.0)) is None


def test_metrics():
    assert avdoa.angular_error(-179, 179) == pytest.approx(2.0)
    assert avdoa.angular_error(90, -90) == pytest.approx(180.0)
    r = avdoa.mae_acc([[5.0]], [[0.0]])
    assert r["acc"] == 100.0 and r["mae"] == pytest.approx(5.0)
    swapped = avdoa.mae_acc([[10.0, -50.0]], [[-50.0, 10.0]])
    assert swapped["mae"] == 0.0


def test_validation_raises():
    with pytest.raises(avdoa.Error):
        avdoa.gcc_phat_pair(np.zeros(8), np.zeros(9))
    with pytest.raises(avdoa.Error):
        avdoa.load_checkpoint("/nonexistent/model.ckpt")


def test_pipeline_round_trip(tmp_path):
    frames, dr = avdoa.simulate(tmp_path / "ds", frames=60, p_two=0.3, visibility=1.0, seed=2)
    assert frames == 60 and dr == 100.0
    avdoa.extract_features(tmp_path / "ds", tmp_path / "feat", snr_db=20.0, seed=2)
    losses = avdoa.train(tmp_path / "feat", tmp_path / "model", model="avaw", epochs=2, batch=16,
                         widths=[16, 16, 16], seed=2)
    assert len(losses) == 2 and all(np.isfinite(losses))

    net = avdoa.load_checkpoint(tmp_path / "model" / "model.ckpt")
    assert net.kind == "avaw" and net.hidden == [16, 16, 16]
    post, weights = net.predict(np.zeros((3, 306)), np.full((3, 102), 1 / 51))
    assert post.shape == (3, 360) and np.all((post > 0) & (post < 1))
    assert np.allclose(weights.sum(axis=1), 1.0)

    summary = avdoa.evaluate(tmp_path / "model" / "model.ckpt", tmp_path / "feat", tmp_path / "eval")
    assert 0.0 <= summary["mae"] <= 180.0 and summary["frames"] == 12
    with open(tmp_path / "eval" / "summary.csv") as f:
        assert next(csv.reader(f))[-1] == "overall_acc"

    grid = avdoa.robustness(tmp_path / "model" / "model.ckpt", tmp_path / "ds", tmp_path / "grid",
                            snr_levels=[0.0, None], fdsp_percent=[0, 50], seed=2)
    assert len(grid) == 2 and len(grid[0]) == 2

    base = avdoa.baseline(tmp_path / "ds", tmp_path / "srp")
    assert base["mae"] < 10.0
