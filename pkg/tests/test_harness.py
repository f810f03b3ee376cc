import json
import math

import numpy as np
import pytest

from oddmsar import harness
from oddmsar.config import load_preset
from oddmsar.io import read_iq
from oddmsar.harness import BerPoint, MetricRecord, ber_gap, snr_at_ber


@pytest.fixture(scope="module")
def cfg():
    return load_preset("table2_sub6")


def pts(scheme, coded, pairs, bits=10**6):
    return [BerPoint(scheme, coded, float(s), 1, bits, int(round(b * bits))) for s, b in pairs]


def test_trial_rng_is_keyed():
    a = harness.trial_rng(1, 2, 3).random(4)
    assert np.array_equal(a, harness.trial_rng(1, 2, 3).random(4))
    assert not np.array_equal(a, harness.trial_rng(1, 3, 2).random(4))
    assert not np.array_equal(a, harness.trial_rng(2, 2, 3).random(4))


def test_ber_point_statistics():
    p = BerPoint("oddm", False, 0.0, 1, 1000, 10)
    assert p.ber == 0.01
    assert p.stderr == pytest.approx(math.sqrt(0.01 * 0.99 / 1000))
    assert math.isnan(BerPoint("oddm", False, 0.0, 0, 0, 0).ber)


def test_snr_at_ber_log_interpolation():
    curve = pts("oddm", False, [(0, 1e-1), (10, 1e-2), (20, 1e-4), (30, 0.0)])
    assert snr_at_ber(curve, 1e-3) == pytest.approx(15.0)
    assert snr_at_ber(curve, 1e-2) == pytest.approx(10.0)
    assert math.isnan(snr_at_ber(curve, 1e-6))  # zero-error points do not bracket
    assert math.isnan(snr_at_ber(curve, 0.5))


def test_ber_gap_sign():
    curve = pts("oddm", True, [(0, 1e-2), (10, 1e-4)]) + pts("ofdm", True, [(0, 1e-1), (10, 1e-3)])
    assert ber_gap(curve, 1e-3, coded=True) == pytest.approx(5.0)
    assert math.isnan(ber_gap(curve, 1e-3, coded=False))


def test_message_bits_fill_the_frame():
    from oddmsar.coding import CodingConfig, coded_length

    code = CodingConfig()
    n = harness._message_bits(8192, code)
    assert coded_length(n, code) <= 8192 < coded_length(n + 1, code)


def small(cfg, **kw):
    base = dict(sweep__snr_db=(6.0, 60.0), sweep__trials=25, sweep__max_trials=50,
                sweep__target_errors=100)
    base.update(kw)
    return cfg.with_overrides(**base)


def test_sweep_is_reproducible(cfg):
    c = small(cfg, scheme__waveforms=("oddm",), scheme__coding=("uncoded",))
    a = harness.ber_points_to_csv(harness.run_ber_sweep(c), c.seed)
    b = harness.ber_points_to_csv(harness.run_ber_sweep(c), c.seed)
    assert a == b
    assert a.splitlines()[0] == "scheme,coded,snr_db,trials,bits,errors,ber,stderr,seed,provenance"


def test_workers_match_serial(cfg):
    c = small(cfg, sweep__snr_db=(6.0,), scheme__waveforms=("ofdm",), scheme__coding=("coded",))
    assert harness.run_ber_sweep(c, workers=2) == harness.run_ber_sweep(c)


def test_stopping_rule(cfg):
    c = small(cfg, sweep__snr_db=(0.0, 60.0, 70.0), scheme__waveforms=("oddm",),
              scheme__coding=("uncoded",))
    # plenty of errors at 0 dB: stop after the minimum trial count
    out = harness.run_ber_sweep(c, target_errors=1)
    assert out[0].trials == 25 and out[0].errors >= 1
    # an unreachable error target runs to the cap
    out = harness.run_ber_sweep(c, target_errors=10**9)
    assert out[0].trials == 50
    # the curve ends at its first error-free point
    assert [p.snr_db for p in out] == [0.0, 60.0]
    assert out[1].errors == 0
    assert out[0].bits == 50 * 128 * 32 * 2


def test_ber_decreases_with_snr(cfg):
    c = small(cfg, sweep__snr_db=(0.0, 8.0, 16.0), scheme__waveforms=("oddm", "ofdm"),
              scheme__coding=("uncoded",), sweep__max_trials=25)
    out = harness.run_ber_sweep(c)
    for w in ("oddm", "ofdm"):
        ber = [p.ber for p in out if p.scheme == w]
        assert all(x > y for x, y in zip(ber, ber[1:]))


def test_estimated_cfo_path_runs(cfg):
    c = small(cfg, sweep__snr_db=(30.0,), scheme__genie_cfo=False, sweep__max_trials=25,
              scheme__coding=("uncoded",))
    out = harness.run_ber_sweep(c)
    assert all(p.ber < 0.01 for p in out)


def test_mse_sweep_matches_closed_form(cfg):
    c = cfg.with_overrides(sweep__snr_db=(0.0, 20.0))
    recs = harness.run_mse_sweep(c, trials=100)
    by = {(r.scheme, r.snr_db): r for r in recs}
    for snr in (0.0, 20.0):
        mc, cf, pn = by["proposed", snr], by["closed_form", snr], by["pn", snr]
        assert abs(mc.value - cf.value) < 3 * mc.stderr
        assert pn.value > mc.value
    assert by["closed_form", 0.0].value == pytest.approx(1 / 128)


def test_records_csv_roundtrip_floats(tmp_path):
    r = MetricRecord("proposed", 0.1, "mse", 1 / 3, 5, 0.0, 7, "abc")
    text = harness.records_to_csv([r], tmp_path / "m.csv")
    header, row = text.splitlines()
    assert header == "scheme,snr_db,metric,value,trials,stderr,seed,provenance"
    assert float(row.split(",")[3]) == 1 / 3
    assert (tmp_path / "m.csv").read_text() == text
    with pytest.raises(ValueError):
        MetricRecord("x", 0.0, "m", 1.0, 1, -1.0)


def test_frame_plan(cfg):
    plan = harness.frame_plan(cfg)
    assert plan["prf_hz"] == pytest.approx(2000.0)
    assert plan["min_numerology"] == 1
    assert plan["feasible"]


def test_config_echo(cfg):
    d = json.loads(harness.config_echo(cfg, {"command": "x"}))
    assert d["config"]["seed"] == cfg.seed
    assert d["command"] == "x"
    assert "provenance" in d


def test_sar_demo_outputs(cfg, tmp_path):
    c = cfg.with_overrides(sar__decimation=8)
    res = harness.run_sar_demo(c, out_dir=tmp_path)
    m = {(r.scheme, r.metric): r.value for r in res["records"]}
    assert m["proposed", "pslr"] < -100
    assert m["lfm", "pslr"] == pytest.approx(-13.26, abs=0.5)
    assert m["proposed", "recon_error"] < 1e-6
    assert res["lfm_distorted"]
    assert res["doppler_hz"] == pytest.approx(126.8e3, rel=0.01)
    for name in ("sar_profiles.csv", "sar_metrics.csv", "sar_image.pgm", "sar_image_db.csv",
                 "lfm_image.pgm", "sar_raw.iq", "sar_image.iq"):
        assert (tmp_path / name).stat().st_size > 0
    raw, meta = read_iq(tmp_path / "sar_raw.iq")
    assert raw.shape == res["raw"].pulses.shape
    assert meta["cp_len"] == res["raw"].cp_len and meta["prf_hz"] == 250.0
    assert np.allclose(raw, res["raw"].pulses, rtol=1e-6, atol=1e-6 * np.abs(raw).max())


def test_sar_demo_empty_scene(cfg, tmp_path):
    scene = tmp_path / "empty.csv"
    scene.write_text("cell_index,rcs_G_q\n")
    res = harness.run_sar_demo(cfg, scene, full_image=False)
    metrics = {r.metric for r in res["records"]}
    assert "recon_error" not in metrics
    assert {"pslr", "islr", "distortion"} <= metrics
    assert not res["lfm_distorted"]
    assert res["noise_var"] > 0
