import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import crandn
from oddmsar import _fft
from oddmsar.channel import DDChannelMatrix, apply_dd_channel
from oddmsar.errors import ConfigError, PilotError
from oddmsar.sensing import (
    EstimatedCSI,
    PilotPattern,
    csi_to_json,
    doppler_phase,
    embed_pilot,
    extract_pilot_block,
    pad_truth,
    pn_sensing_baseline,
    pn_sequence,
    sense_channel,
    sensing_mse,
    strongest_doppler,
    threshold_taps,
    zc_sequence,
)
from oddmsar.waveform import oddm_modulate, papr


def planted(rng, M, L, K, paths=4):
    H = np.zeros((L + 1, K + 1), dtype=complex)
    for _ in range(paths):
        H[rng.integers(0, L + 1), rng.integers(0, K + 1)] = complex(*rng.standard_normal(2))
    return H


def test_zc_small_values():
    # exp(-j pi m^2 / 4) for m = 0..3
    assert np.allclose(zc_sequence(4), [1, np.exp(-1j * np.pi / 4), -1, np.exp(-1j * np.pi / 4)])
    # exp(-j pi m (m+1) / 3) for m = 0..2
    assert np.allclose(zc_sequence(3), [1, np.exp(-2j * np.pi / 3), 1])


@given(M=st.integers(2, 200), root=st.integers(1, 50))
def test_zc_cazac(M, root):
    if math.gcd(root, M) != 1:
        with pytest.raises(PilotError):
            zc_sequence(M, root)
        return
    u = zc_sequence(M, root)
    assert np.allclose(np.abs(u), 1)
    assert np.allclose(np.abs(np.fft.fft(u)), math.sqrt(M))
    acf = np.fft.ifft(np.abs(np.fft.fft(u)) ** 2)
    assert np.allclose(acf[1:], 0, atol=1e-9)


def test_pn_unit_modulus():
    u = pn_sequence(64, np.random.default_rng(0))
    assert np.allclose(np.abs(u), 1)


def test_pattern_validation():
    with pytest.raises(ConfigError):
        PilotPattern.zadoff_chu(16, 7, 2)  # odd N
    with pytest.raises(ConfigError):
        PilotPattern.zadoff_chu(16, 8, 4)  # 2K+1 > N
    p = PilotPattern.zadoff_chu(16, 8, 2, energy=4.0)
    assert p.energy == pytest.approx(4.0)
    assert p.guard_columns == [1, 2, 6, 7]
    with pytest.raises(PilotError):
        PilotPattern(np.ones(8), 1, 4).noise_gain()  # all-ones spectrum has zero bins


def test_zc_noise_gain_is_inverse_energy():
    p = PilotPattern.zadoff_chu(64, 16, 3, energy=10.0)
    assert p.noise_gain() == pytest.approx(1 / 10.0)


def test_embed_and_extract(rng):
    p = PilotPattern.zadoff_chu(16, 8, 2)
    X = embed_pilot(crandn(rng, 16, 8), p)
    assert np.allclose(X[:, 0], p.pilot)
    assert np.all(X[:, [1, 2, 6, 7]] == 0)
    assert extract_pilot_block(X, p).shape == (16, 3)


def test_pilot_grid_papr_is_one():
    p = PilotPattern.zadoff_chu(64, 16, 3)
    assert papr(oddm_modulate(embed_pilot(np.zeros((64, 16)), p))) == pytest.approx(1.0, abs=1e-12)


def test_doppler_phase_signed_index():
    M, N = 8, 4
    C = doppler_phase(M, N, [0, 1, 2, 3])
    m = np.arange(M)
    assert np.allclose(C[:, 1], np.exp(2j * np.pi * m / 32))
    assert np.allclose(C[:, 2], np.exp(-2j * np.pi * 2 * m / 32))  # [2 + 2]_4 - 2 = -2
    assert np.allclose(C[:, 3], np.exp(-2j * np.pi * m / 32))


@given(seed=st.integers(0, 2**31), M=st.sampled_from([8, 16, 31, 64]),
       K=st.integers(0, 3))
def test_noiseless_sensing_exact(seed, M, K):
    rng = np.random.default_rng(seed)
    N = 2 * K + 2
    p = PilotPattern.zadoff_chu(M, N, K)
    H = planted(rng, M, M - 1, K)
    Y = apply_dd_channel(embed_pilot(np.zeros((M, N)), p), DDChannelMatrix(H))
    est = sense_channel(extract_pilot_block(Y, p), p)
    assert np.abs(est.matrix - pad_truth(H, M, K)).max() < 1e-9


def test_sensing_batch_matches_loop(rng):
    M, N, K = 16, 8, 2
    p = PilotPattern.zadoff_chu(M, N, K)
    YP = crandn(rng, 5, M, K + 1)
    batch = sense_channel(YP, p).matrix
    for b in range(5):
        assert np.allclose(batch[b], sense_channel(YP[b], p).matrix)


def test_sensing_uses_2k_plus_2_transforms(rng):
    M, N, K = 32, 8, 3
    p = PilotPattern.zadoff_chu(M, N, K)
    with _fft.count_transforms() as c:
        sense_channel(crandn(rng, M, K + 1), p)
    assert dict(c) == {M: 2 * (K + 1)}


def test_sensing_noise_variance(rng):
    M, N, K = 64, 8, 2
    p = PilotPattern.zadoff_chu(M, N, K)
    s2 = 0.3
    errs = [sense_channel(np.sqrt(s2 / 2) * crandn(rng, M, K + 1), p, s2).matrix for _ in range(300)]
    assert np.mean(np.abs(errs) ** 2) == pytest.approx(s2 / M, rel=0.05)
    assert sense_channel(np.zeros((M, K + 1)), p, s2).noise_var == pytest.approx(s2 / M)


def test_pn_baseline_interference_free_only_with_ideal_code(rng):
    M, N, K = 32, 8, 2
    H = planted(rng, M, 10, K)
    zc = PilotPattern.zadoff_chu(M, N, K)
    Yz = extract_pilot_block(apply_dd_channel(embed_pilot(np.zeros((M, N)), zc), DDChannelMatrix(H)), zc)
    assert np.allclose(pn_sensing_baseline(Yz, zc).matrix, sense_channel(Yz, zc).matrix)
    pn = PilotPattern(pn_sequence(M, rng), K, N)
    Yp = extract_pilot_block(apply_dd_channel(embed_pilot(np.zeros((M, N)), pn), DDChannelMatrix(H)), pn)
    assert sensing_mse(pn_sensing_baseline(Yp, pn), pad_truth(H, M, K)) > 1e-4


def test_strongest_and_threshold():
    H = np.zeros((8, 3), dtype=complex)
    H[2, 1] = 3.0
    H[5, 1] = 0.5
    H[0, 0] = 1e-3
    csi = EstimatedCSI(H, 0.01)
    assert strongest_doppler(csi) == 1
    taps = threshold_taps(csi, 3.0)
    assert [(l, k) for l, k, _ in taps] == [(2, 1), (5, 1)]
    assert len(threshold_taps(csi, 0.0)) == H.size
    with pytest.raises(ValueError):
        threshold_taps(csi, -1.0)


def test_pad_truth_and_mse():
    H = np.ones((2, 2))
    P = pad_truth(H, 4, 2)
    assert P.shape == (4, 3) and P.sum() == 4
    with pytest.raises(ValueError):
        pad_truth(np.ones((5, 1)), 4, 0)
    assert sensing_mse(P + 1, P) == 1.0


def test_csi_json(tmp_path):
    H = np.zeros((4, 2), dtype=complex)
    H[1, 1] = 1 - 2j
    text = csi_to_json(EstimatedCSI(H, 0.0), tmp_path / "c.json", factor=1.0)
    data = json.loads(text)
    assert data["taps"] == [{"l": 1, "k": 1, "re": 1.0, "im": -2.0}]
    assert json.loads((tmp_path / "c.json").read_text()) == data
