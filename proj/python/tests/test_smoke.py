"""Smoke tests for the Python bindings: every exposed operation is exercised
once against known values; the heavy numerical checks live in the C++ suite."""

import math

import pytest

import ecgmon


def test_crc32_check_value():
    assert ecgmon.crc32(b"123456789") == 0xCBF43926
    assert ecgmon.crc32(b"") == 0


def test_filter_design_and_response():
    filt = ecgmon.butterworth_lowpass(4, 40.0, 360.0)
    assert filt.order == 4
    assert filt.cutoff_hz == 40.0
    assert len(filt.sections) == 2
    assert filt.magnitude_at(0.0) == pytest.approx(1.0, abs=1e-9)
    assert filt.magnitude_at(40.0) == pytest.approx(math.sqrt(0.5), rel=0.01)

    fs = 360.0
    tone = [math.sin(2.0 * math.pi * 40.0 * i / fs) for i in range(7200)]
    out = ecgmon.apply_filter(filt, tone)
    tail = out[3600:]
    gain = math.sqrt(sum(v * v for v in tail) / len(tail)) / math.sqrt(0.5)
    assert gain == pytest.approx(math.sqrt(0.5), rel=0.01)

    zp = ecgmon.apply_zero_phase(filt, tone)
    assert len(zp) == len(tone)

    with pytest.raises(ecgmon.EcgmonError):
        ecgmon.butterworth_lowpass(3, 40.0, 360.0)  # odd order


def test_detection_and_features():
    samples, truth = ecgmon.synth_ecg(seconds=30.0, mean_bpm=75.0, seed=7)
    peaks = ecgmon.detect_r_peaks(samples, 360)
    assert len(peaks) == len(truth)
    assert all(abs(p - t) <= 2 for p, t in zip(peaks, truth))

    feats = ecgmon.extract_features(samples, 360)
    names = ecgmon.feature_names()
    assert len(names) == 10
    for name in names:
        assert name in feats
        assert math.isfinite(feats[name])
    assert feats["heart_rate_bpm"] == pytest.approx(75.0, rel=0.1)


def test_metrics_reference_case():
    report = ecgmon.classification_report(
        [[2659, 492], [261, 2889]], ["Heart Disease", "Not Heart Disease"]
    )
    assert ecgmon.round2_half_up(report["accuracy"]) == 0.88
    assert ecgmon.round2_half_up(report["per_class"][0]["precision"]) == 0.91
    assert report["per_class"][0]["support"] == 3151
    assert report["total"] == 6301

    counts = ecgmon.confusion_matrix([0, 0, 1, 1], [0, 1, 1, 1])
    assert counts == [[1, 1], [0, 2]]

    assert ecgmon.auc_score([0, 0, 1, 1], [0.1, 0.4, 0.35, 0.8]) == pytest.approx(0.75)


def test_frame_codec_round_trip():
    wire = ecgmon.encode_frame(
        device_id=b"\xa0\xa1\xa2\xa3\xa4\xa5\xa6\xa7",
        session_id=b"\xb0\xb1\xb2\xb3\xb4\xb5\xb6\xb7",
        sequence_number=7,
        sample_rate_hz=360,
        gain_uv_per_lsb=4.0,
        samples=[-100, 25, 1000, -32768],
    )
    assert wire.hex() == (
        "454347310100a0a1a2a3a4a5a6a7b0b1b2b3b4b5b6b70700000068010000"
        "804004009cff1900e8030080996f67e0"
    )
    frame = ecgmon.decode_frame(wire)
    assert frame["sequence_number"] == 7
    assert frame["samples"] == [-100, 25, 1000, -32768]
    assert not frame["end_of_session"]

    corrupted = bytearray(wire)
    corrupted[20] ^= 0xFF
    with pytest.raises(ecgmon.EcgmonError):
        ecgmon.decode_frame(bytes(corrupted))


def test_quantization_round_trip():
    assert ecgmon.quantize([1.0], 4.0) == [250]
    assert ecgmon.dequantize([250], 4.0) == [1.0]
    assert ecgmon.quantize([1000.0], 4.0) == [32767]  # saturation


def test_train_save_load_predict(tmp_path):
    rows = []
    labels = []
    for i in range(64):
        label = i % 2
        mu = 2.0 if label else -2.0
        rows.append([mu + 0.1 * ((i * 7) % 11 - 5) for _ in range(6)])
        labels.append(label)

    model, history = ecgmon.train_model(
        rows, labels, rows, labels, hidden_widths=[16, 8], max_epochs=60, seed=3
    )
    assert model.input_dim == 6
    assert model.hidden_widths == [16, 8]
    assert history and history[-1]["epoch"] == len(history)
    lrs = [h["lr"] for h in history]
    assert all(b <= a for a, b in zip(lrs, lrs[1:]))

    preds = model.predict(rows)
    assert sum(p == y for p, y in zip(preds, labels)) == len(labels)

    path = tmp_path / "model.mlpw"
    model.save(path)
    loaded = ecgmon.load_model(path)
    assert loaded.predict_proba(rows) == model.predict_proba(rows)
