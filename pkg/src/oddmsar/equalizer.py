"""Per-Doppler-column MMSE equalization in the delay-Doppler domain.

With a single dominant Doppler column ``k_c`` the received column ``y_n``
depends only on transmitted column ``(n - k_c)_N`` through a
factor-circulant matrix. Phase-correcting with ``C_n`` makes it circulant,
so the MMSE filter reduces to a per-bin scaling between two DFTs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _fft
from .errors import SingularChannelError
from .sensing import doppler_phase

__all__ = [
    "EqualizerInput",
    "mmse_equalize",
    "dense_mmse_equalize",
    "column_channel_matrix",
    "ofdm_mmse_equalize",
    "ber",
]


@dataclass(frozen=True)
class EqualizerInput:
    received: np.ndarray
    csi_column: np.ndarray
    common_doppler: int
    noise_var: float

    def __post_init__(self):
        Y = np.asarray(self.received)
        M, N = Y.shape[-2:]
        if not 0 <= self.common_doppler < N:
            raise ValueError(f"Doppler column {self.common_doppler} outside [0, {N})")
        if self.noise_var < 0:
            raise ValueError("noise variance must be non-negative")
        if np.asarray(self.csi_column).shape[-1] != M:
            raise ValueError("CSI column length must equal M")


def _eq_phases(M: int, N: int, kc: int):
    Cn = doppler_phase(M, N, np.arange(N))
    # k_c enters the IO relation unwrapped, so no signed-index mapping here
    Ckc = np.exp(2j * np.pi * kc * np.arange(M) / (M * N))
    return Cn, Ckc


def mmse_equalize(inp: EqualizerInput, eps: float = 1e-12) -> np.ndarray:
    """Fast MMSE equalizer; ``3N`` length-``M`` transforms per grid.

    ``eps`` is added to the diagonal when ``noise_var`` is zero. A zero
    diagonal with both ``noise_var`` and ``eps`` zero raises
    :class:`SingularChannelError`. A leading batch axis on ``received`` and
    ``csi_column`` is supported.
    """
    Y = np.asarray(inp.received, dtype=complex)
    h = np.asarray(inp.csi_column, dtype=complex)
    M, N = Y.shape[-2:]
    kc = inp.common_doppler
    Cn, Ckc = _eq_phases(M, N, kc)

    Yt = _fft.fft(Y / Cn, axis=-2)
    D = math.sqrt(M) * _fft.fft(h[..., :, None] / Cn, axis=-2)
    denom = np.abs(D) ** 2 + inp.noise_var
    if inp.noise_var == 0:
        denom = denom + eps
    if np.any(denom == 0):
        raise SingularChannelError("zero frequency bin with no regularisation")
    Xs = _fft.ifft(np.conj(D) * (Yt / denom), axis=-2) * Cn / Ckc[:, None]
    # received column n carries transmitted column (n - kc) mod N
    return np.roll(Xs, -kc, axis=-1)


def column_channel_matrix(h, M: int, N: int, kc: int, n: int) -> np.ndarray:
    """Dense ``M x M`` map from transmitted column ``(n-kc)_N`` to received column ``n``.

    Built entry by entry from the DD input-output relation; used as the
    brute-force reference for :func:`mmse_equalize`.
    """
    h = np.asarray(h, dtype=complex)
    src = (n - kc) % N
    G = np.zeros((M, M), dtype=complex)
    for m in range(M):
        for l in range(M):
            if h[l] == 0:
                continue
            g = h[l] * np.exp(2j * np.pi * kc * (m - l) / (M * N))
            if m < l:
                g *= np.exp(-2j * np.pi * src / N)
            G[m, (m - l) % M] += g
    return G


def dense_mmse_equalize(Y, h, kc: int, sigma2: float) -> np.ndarray:
    """Reference MMSE with an explicit ``M x M`` inverse per column."""
    Y = np.asarray(Y, dtype=complex)
    M, N = Y.shape
    X = np.zeros_like(Y)
    for n in range(N):
        G = column_channel_matrix(h, M, N, kc, n)
        W = G.conj().T @ np.linalg.inv(G @ G.conj().T + sigma2 * np.eye(M))
        X[:, (n - kc) % N] = W @ Y[:, n]
    return X


def ofdm_mmse_equalize(received, csi_freq, sigma2: float) -> np.ndarray:
    """Per-subcarrier MMSE: ``conj(H) y / (|H|^2 + sigma2)``."""
    Hf = np.asarray(csi_freq)
    return np.conj(Hf) * np.asarray(received) / (np.abs(Hf) ** 2 + sigma2)


def ber(measured, truth) -> float:
    a = np.asarray(measured).ravel()
    b = np.asarray(truth).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("empty bit vectors")
    return float(np.count_nonzero(a != b) / a.size)
