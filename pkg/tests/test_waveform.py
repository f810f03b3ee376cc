import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import crandn
from oddmsar.errors import ConfigError
from oddmsar.waveform import (
    QamConfig,
    TimeSequence,
    add_cp,
    cp_length,
    ddop_pulse,
    matched_filter,
    oddm_demodulate,
    oddm_modulate,
    ofdm_demodulate,
    ofdm_modulate,
    papr,
    pulse_shape,
    qam_constellation,
    qam_demap,
    qam_map,
    remove_cp,
)


def modulate_by_sum(X):
    """Direct evaluation of s[n M + m] = N^-1/2 sum_k X[m, k] exp(j 2 pi n k / N)."""
    M, N = X.shape
    s = np.zeros(M * N, dtype=complex)
    for n in range(N):
        for m in range(M):
            s[n * M + m] = sum(X[m, k] * np.exp(2j * np.pi * n * k / N) for k in range(N)) / np.sqrt(N)
    return s


def test_modulation_matches_direct_sum(rng):
    X = crandn(rng, 8, 4)
    assert np.allclose(oddm_modulate(X).samples, modulate_by_sum(X), atol=1e-12)


@given(M=st.sampled_from([1, 4, 16, 33]), N=st.sampled_from([1, 2, 8, 12]), seed=st.integers(0, 2**31))
def test_roundtrip_property(M, N, seed):
    X = crandn(np.random.default_rng(seed), M, N)
    Y = oddm_demodulate(oddm_modulate(X), M, N)
    assert np.linalg.norm(Y - X) <= 1e-12 * np.linalg.norm(X)


@given(seed=st.integers(0, 2**31))
def test_modulation_is_unitary(seed):
    X = crandn(np.random.default_rng(seed), 16, 8)
    assert np.isclose(np.linalg.norm(oddm_modulate(X).samples), np.linalg.norm(X))


def test_demodulate_batch(rng):
    X = crandn(rng, 3, 8, 4)
    s = np.stack([oddm_modulate(x).samples for x in X])
    assert np.allclose(oddm_demodulate(s, 8, 4), X)


def test_demodulate_rejects_prefix(rng):
    seq = add_cp(oddm_modulate(crandn(rng, 8, 4)), 3)
    with pytest.raises(ValueError):
        oddm_demodulate(seq, 8, 4)
    with pytest.raises(ValueError):
        oddm_demodulate(np.zeros(10), 8, 4)


def test_qpsk_gray_labels():
    # first bit picks the in-phase sign, second the quadrature sign; 0 maps positive
    sym = qam_map(np.array([0, 0, 0, 1, 1, 0, 1, 1]), QamConfig(4))
    expect = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2)
    assert np.allclose(sym, expect)


@pytest.mark.parametrize("order", [4, 16, 64])
def test_constellation_unit_energy_and_gray(order):
    cfg = QamConfig(order)
    pts = qam_constellation(cfg)
    assert pts.size == order
    assert np.isclose(np.mean(np.abs(pts) ** 2), 1.0)
    k = cfg.bits_per_symbol
    labels = [np.array([(i >> (k - 1 - b)) & 1 for b in range(k)]) for i in range(order)]
    d_min = np.min([abs(a - b) for i, a in enumerate(pts) for b in pts[i + 1:]])
    for i, a in enumerate(pts):
        for j, b in enumerate(pts):
            if i != j and np.isclose(abs(a - b), d_min):
                assert np.sum(labels[i] != labels[j]) == 1


@given(order=st.sampled_from([4, 16, 64]), seed=st.integers(0, 2**31))
def test_qam_demap_inverts_map(order, seed):
    cfg = QamConfig(order)
    bits = np.random.default_rng(seed).integers(0, 2, 60 * cfg.bits_per_symbol)
    assert np.array_equal(qam_demap(qam_map(bits, cfg), cfg), bits)


def test_qam_rejects():
    with pytest.raises(ConfigError):
        QamConfig(8)
    with pytest.raises(ValueError):
        qam_map(np.array([0, 1, 1]), QamConfig(4))


def test_cp_roundtrip(rng):
    seq = oddm_modulate(crandn(rng, 8, 4))
    withcp = add_cp(seq, 5)
    assert len(withcp) == 37
    assert np.allclose(withcp.prefix, seq.samples[-5:])
    assert np.allclose(remove_cp(withcp).samples, seq.samples)
    with pytest.raises(ValueError):
        add_cp(withcp, 2)
    assert cp_length(10e-6, 2e-6, 1e-6) == 8


def test_pulse_energy_and_symmetry():
    p = ddop_pulse(0.1, 8, 4)
    assert np.isclose(p.energy, 1.0)
    assert p.taps.size == 2 * 8 * 4
    with pytest.raises(ConfigError):
        ddop_pulse(1.5)


@given(os_=st.sampled_from([2, 4]), rolloff=st.sampled_from([0.0, 0.1, 0.35, 1.0]),
       seed=st.integers(0, 2**31))
def test_shape_then_matched_filter_is_identity(os_, rolloff, seed):
    # square-root Nyquist pulses: the cascade is ISI-free at the symbol instants
    X = crandn(np.random.default_rng(seed), 16, 4)
    seq = add_cp(oddm_modulate(X), 4)
    rx = matched_filter(pulse_shape(seq, ddop_pulse(rolloff, 4, os_)), ddop_pulse(rolloff, 4, os_))
    assert rx.cp_len == 4
    assert np.allclose(remove_cp(rx).samples, seq.body, atol=1e-12)


def test_shaped_prefix_is_cyclic(rng):
    seq = add_cp(oddm_modulate(crandn(rng, 16, 4)), 4)
    shaped = pulse_shape(seq, ddop_pulse(0.1, 4, 2))
    assert np.allclose(shaped.prefix, shaped.body[-8:])


def test_ofdm_roundtrip(rng):
    X = crandn(rng, 64)
    assert np.allclose(ofdm_demodulate(ofdm_modulate(X)), X)


def test_papr_values():
    assert papr(np.ones(8)) == 1.0
    x = np.zeros(8)
    x[0] = 1
    assert papr(x) == 8.0
    assert papr(TimeSequence(np.array([1.0, -1.0]))) == 1.0
    with pytest.raises(ValueError):
        papr(np.zeros(4))
