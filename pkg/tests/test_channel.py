import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import crandn
from oddmsar.channel import (
    ChannelKind,
    DDChannelMatrix,
    Scene,
    apply_dd_channel,
    apply_time_channel,
    awgn,
    cfo_compensate,
    cfo_estimate_cp,
    dump_realization,
    fractional_delay_response,
    large_scale_gain,
    rain_attenuation,
    read_scene,
    sample_comm_channel,
    sar_channel_from_scene,
    to_dd_matrix,
    write_scene,
)
from oddmsar.config import load_preset
from oddmsar.errors import ConfigError
from oddmsar.grid_frame import C
from oddmsar.waveform import TimeSequence, add_cp, oddm_demodulate, oddm_modulate, remove_cp


def time_oracle(X, H):
    """Loop evaluation of r[i] = sum_{l,k} H[l,k] s[(i-l) mod MN] exp(j2pi k (i-l)/MN).

    Cyclic indexing stands in for a prefix at least as long as the delay spread.
    """
    M, N = X.shape
    s = oddm_modulate(X).samples
    MN = M * N
    r = np.zeros(MN, dtype=complex)
    for l in range(H.shape[0]):
        for k in range(H.shape[1]):
            if H[l, k] == 0:
                continue
            for i in range(MN):
                r[i] += H[l, k] * s[(i - l) % MN] * np.exp(2j * np.pi * k * (i - l) / MN)
    return oddm_demodulate(r, M, N)


def random_dd(rng, L, K, paths):
    H = np.zeros((L + 1, K + 1), dtype=complex)
    for _ in range(paths):
        H[rng.integers(0, L + 1), rng.integers(0, K + 1)] = complex(*rng.standard_normal(2))
    return H


@given(seed=st.integers(0, 2**31), M=st.sampled_from([4, 8, 16]), N=st.sampled_from([2, 4, 8]))
def test_dd_relation_matches_time_oracle(seed, M, N):
    rng = np.random.default_rng(seed)
    H = random_dd(rng, min(M - 1, 5), N - 1, 3)
    X = crandn(rng, M, N)
    Y = apply_dd_channel(X, DDChannelMatrix(H))
    ref = time_oracle(X, H)
    assert np.linalg.norm(Y - ref) <= 1e-9 * max(np.linalg.norm(ref), 1e-300)


def test_time_path_with_prefix_matches_dd(rng):
    M, N = 16, 8
    H = random_dd(rng, 6, 3, 4)
    X = crandn(rng, M, N)
    r = apply_time_channel(add_cp(oddm_modulate(X), 6), DDChannelMatrix(H))
    assert np.allclose(oddm_demodulate(remove_cp(r), M, N), apply_dd_channel(X, DDChannelMatrix(H)))


def test_identity_and_scaling(rng):
    X = crandn(rng, 8, 4)
    assert np.allclose(apply_dd_channel(X, DDChannelMatrix(np.array([[2.0 - 1j]]))), (2 - 1j) * X)


def test_pure_delay_wraps_with_phase(rng):
    M, N = 8, 4
    X = crandn(rng, M, N)
    H = np.zeros((2, 1))
    H[1, 0] = 1.0
    Y = apply_dd_channel(X, DDChannelMatrix(H))
    assert np.allclose(Y[1:], X[:-1])
    # row 0 receives the last delay bin of the previous subpulse period
    assert np.allclose(Y[0], X[-1] * np.exp(-2j * np.pi * np.arange(N) / N))


@given(seed=st.integers(0, 2**31))
def test_dd_channel_is_linear(seed):
    rng = np.random.default_rng(seed)
    H = DDChannelMatrix(random_dd(rng, 3, 2, 3))
    A, B = crandn(rng, 8, 4), crandn(rng, 8, 4)
    a = complex(*rng.standard_normal(2))
    assert np.allclose(apply_dd_channel(a * A + B, H), a * apply_dd_channel(A, H) + apply_dd_channel(B, H))


def test_dd_channel_rejects_oversized(rng):
    with pytest.raises(ValueError):
        apply_dd_channel(crandn(rng, 4, 4), DDChannelMatrix(np.ones((5, 1))))
    with pytest.raises(ValueError):
        DDChannelMatrix(np.array([[np.nan]]))


def test_time_channel_rejects_delay_beyond_prefix(rng):
    seq = add_cp(oddm_modulate(crandn(rng, 8, 4)), 2)
    with pytest.raises(ValueError):
        apply_time_channel(seq, DDChannelMatrix(np.ones((4, 1))))


def test_padded_and_taps():
    H = DDChannelMatrix(np.array([[1, 0], [0, 2j]]))
    assert H.padded(4).shape == (4, 2)
    assert H.taps() == [(0, 0.0, 1 + 0j), (1, 1.0, 2j)]
    assert H.kind is ChannelKind.COMM


def test_rain_modes():
    link = load_preset("table2_sub6").link
    assert rain_attenuation(link, mode="none") == 1.0
    # median of the log-normal dB attenuation
    assert rain_attenuation(link, mode="median") == pytest.approx(10 ** (math.exp(-2.4) / 20))
    r = [rain_attenuation(link, np.random.default_rng(i)) for i in range(200)]
    assert all(x >= 1.0 for x in r)
    with pytest.raises(ValueError):
        rain_attenuation(link, None)


def test_large_scale_gain_free_space():
    link = load_preset("table2_sub6").link
    g = large_scale_gain(link, rain="none")
    lam = C / link.carrier
    expect = math.sqrt((lam / (4 * math.pi * link.distance)) ** 2 * link.sat_gain * link.user_gain)
    assert g == pytest.approx(expect)


def test_comm_channel_structure():
    cfg = load_preset("table2_sub6")
    real = sample_comm_channel(cfg.link, 4, 16, cfg.grid, cfg.geometry, np.random.default_rng(3), g=1.0)
    assert len(real.paths) == 5
    delays = [p.delay_tap for p in real.paths]
    assert delays[0] == 0 and len(set(delays)) == 5 and max(delays) <= 16
    # satellite Doppler Vs sin(squint) f0 / c, about 63.4 kHz in the sub-6 scenario
    assert real.sat_doppler == pytest.approx(63.4e3, rel=1e-3)
    assert real.common_doppler_tap == 2
    assert real.common_frac_doppler == pytest.approx(real.sat_doppler / 30e3 - 2)
    assert abs(real.paths[0].gain) == pytest.approx(math.sqrt(5 / 6))


def test_comm_channel_average_power():
    cfg = load_preset("table2_sub6")
    rng = np.random.default_rng(0)
    power = [sum(abs(p.gain) ** 2 for p in sample_comm_channel(cfg.link, 4, 16, cfg.grid, cfg.geometry,
                                                               rng, g=1.0).paths)
             for _ in range(4000)]
    assert np.mean(power) == pytest.approx(1.0, abs=0.02)


def test_comm_channel_rejects():
    cfg = load_preset("table2_sub6")
    with pytest.raises(ConfigError):
        sample_comm_channel(cfg.link, -1, 4, cfg.grid, cfg.geometry, np.random.default_rng(0))


def test_to_dd_matrix_comm_carrier_phase():
    cfg = load_preset("table2_sub6")
    real = sample_comm_channel(cfg.link, 2, 8, cfg.grid, cfg.geometry, np.random.default_rng(1), g=1.0)
    H = to_dd_matrix(real)
    for p, tau in zip(real.paths, real.path_delays()):
        ph = np.exp(-2j * np.pi * ((cfg.link.carrier * tau) % 1.0))
        assert H.entries[p.delay_tap, p.doppler_tap] == pytest.approx(p.gain * ph)
    Hc = to_dd_matrix(real, cfo_coupling=True, MN=4096)
    kap = real.common_frac_doppler
    for p in real.paths:
        l, k = p.delay_tap, p.doppler_tap
        assert Hc.entries[l, k] == pytest.approx(H.entries[l, k] * np.exp(-2j * np.pi * kap * l / 4096))
    with pytest.raises(ValueError):
        to_dd_matrix(real, cfo_coupling=True)


def test_genie_cfo_leaves_coupled_dd_channel():
    # time channel with fractional Doppler, then removal of the fraction:
    # exactly the DD relation with the coupling phase folded into the taps
    cfg = load_preset("table2_sub6")
    grid = cfg.grid
    M, N = grid.M, grid.N
    rng = np.random.default_rng(7)
    real = sample_comm_channel(cfg.link, 4, 16, grid, cfg.geometry, rng, g=1.0)
    X = crandn(rng, M, N)
    r = apply_time_channel(add_cp(oddm_modulate(X), 17), real)
    r = cfo_compensate(r, real.common_frac_doppler)
    Y = oddm_demodulate(remove_cp(r), M, N)
    ref = apply_dd_channel(X, to_dd_matrix(real, cfo_coupling=True, MN=M * N))
    assert np.linalg.norm(Y - ref) <= 1e-9 * np.linalg.norm(ref)


@given(frac=st.floats(-0.49, 0.49), seed=st.integers(0, 2**31))
def test_cfo_estimate_noiseless(frac, seed):
    rng = np.random.default_rng(seed)
    s = add_cp(oddm_modulate(crandn(rng, 16, 4)), 8)
    r = apply_time_channel(s, DDChannelMatrix(np.array([[1.0]])), extra_doppler=frac)
    assert cfo_estimate_cp(r) == pytest.approx(frac, abs=1e-9)
    assert np.allclose(cfo_compensate(r, frac).samples, s.samples)


def test_cfo_estimate_requires_prefix():
    with pytest.raises(ValueError):
        cfo_estimate_cp(TimeSequence(np.ones(8)))


@given(d=st.integers(0, 31))
def test_fractional_delay_integer_is_cyclic_shift(d):
    x = np.random.default_rng(d).standard_normal(32)
    for ro in (None, 0.1):
        y = np.fft.ifft(np.fft.fft(x) * fractional_delay_response(32, [d], ro)[0])
        assert np.allclose(y, np.roll(x, d))


def test_awgn_statistics():
    w = awgn(200000, 0.5, np.random.default_rng(0))
    assert np.var(w) == pytest.approx(0.5, rel=0.02)
    assert abs(np.mean(w.real * w.imag)) < 5e-3
    with pytest.raises(ValueError):
        awgn(4, -1.0, np.random.default_rng(0))


def test_sar_channel_doppler_and_delays():
    cfg = load_preset("table2_sub6")
    geo = cfg.geometry
    scene = Scene.points(geo.range_cells, [0, 5, 127], [1.0, 0.5, 2.0])
    real = sar_channel_from_scene(scene, geo, cfg.link, cfg.grid, 0.0)
    nu_hz = (real.doppler_tap + real.frac_doppler) * cfg.grid.doppler_res
    # two-way Doppler 2 Vs sin(squint) / lambda
    assert nu_hz == pytest.approx(2 * 7600 * 0.5 * 5e9 / C)
    assert nu_hz == pytest.approx(126.8e3, rel=1e-3)
    assert np.allclose(real.delay_taps(), np.arange(128), atol=1e-6)
    lam = C / 5e9
    R = scene.ranges(geo)
    expect = np.sqrt(scene.rcs * lam**2 / ((4 * math.pi) ** 3 * R**4) * cfg.link.sat_gain**2)
    assert np.allclose(real.cell_gains, expect, rtol=1e-12)
    H = to_dd_matrix(real)
    assert H.kind is ChannelKind.SAR
    assert np.count_nonzero(H.entries) == 3


def test_sar_channel_off_grid_rejected():
    cfg = load_preset("table2_sub6")
    geo = cfg.geometry
    scene = Scene.points(geo.range_cells, [10], [1.0])
    real = sar_channel_from_scene(scene, geo, cfg.link, cfg.grid, 0.2)
    with pytest.raises(ValueError):
        to_dd_matrix(real)


def test_scene_roundtrip(tmp_path):
    geo = load_preset("table2_sub6").geometry
    scene = Scene.points(geo.range_cells, [3, 70], [0.25, 1.5], azimuth=[0.0, -12.5])
    path = tmp_path / "s.csv"
    write_scene(scene, path)
    back = read_scene(path, geo)
    assert np.allclose(back.rcs, scene.rcs) and np.allclose(back.azimuth, scene.azimuth)


def test_scene_by_slant_range(tmp_path):
    geo = load_preset("table2_sub6").geometry
    path = tmp_path / "s.csv"
    path.write_text(f"slant_range_m,rcs_G_q\n{geo.first_cell_range + 9.9 * geo.range_res},2.0\n")
    assert np.flatnonzero(read_scene(path, geo).rcs).tolist() == [10]


@pytest.mark.parametrize("body", ["cell_index,rcs\n1,1\n", "cell_index,rcs_G_q\n500,1\n",
                                  "cell_index,rcs_G_q\n1,-1\n", "cell_index,rcs_G_q\nx,1\n"])
def test_scene_malformed(tmp_path, body):
    geo = load_preset("table2_sub6").geometry
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(ConfigError):
        read_scene(path, geo)


def test_dump_realization_is_json():
    cfg = load_preset("table2_sub6")
    real = sample_comm_channel(cfg.link, 2, 8, cfg.grid, cfg.geometry, np.random.default_rng(0))
    payload = json.loads(dump_realization(real))
    assert isinstance(payload, dict)
