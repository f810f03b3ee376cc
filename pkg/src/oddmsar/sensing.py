"""Pilot design and delay-Doppler channel sensing.

The pilot vector ``u`` occupies Doppler column 0 of an otherwise empty (or
guard-protected) grid. After the channel, Doppler column ``n`` of the
received grid is a factor-circulant filtering of ``u`` by the channel's
``n``-th Doppler column, so each column is recovered with one forward and
one inverse length-``M`` DFT.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _fft
from .errors import ConfigError, PilotError

__all__ = [
    "zc_sequence",
    "pn_sequence",
    "PilotPattern",
    "embed_pilot",
    "extract_pilot_block",
    "EstimatedCSI",
    "doppler_phase",
    "sense_channel",
    "strongest_doppler",
    "threshold_taps",
    "pad_truth",
    "sensing_mse",
    "pn_sensing_baseline",
    "csi_to_json",
]


def zc_sequence(M: int, root: int = 1) -> np.ndarray:
    """Zadoff-Chu sequence of length ``M``.

    Even ``M`` uses ``exp(-j pi r m^2 / M)``, odd ``M`` the
    ``exp(-j pi r m (m+1) / M)`` form.
    """
    if M < 1:
        raise ConfigError("sequence length must be positive")
    if math.gcd(root, M) != 1:
        raise PilotError(f"root {root} is not coprime with length {M}")
    m = np.arange(M, dtype=np.int64)
    # reduce the exponent modulo 2M to keep the phase argument small
    arg = (m * m) if M % 2 == 0 else (m * (m + 1))
    arg = (root * arg) % (2 * M)
    return np.exp(-1j * np.pi * arg / M)


def pn_sequence(M: int, rng: np.random.Generator) -> np.ndarray:
    """Random unit-modulus QPSK code."""
    bits = rng.integers(0, 4, size=M)
    return np.exp(1j * (np.pi / 4 + np.pi / 2 * bits))


@dataclass(frozen=True)
class PilotPattern:
    """Pilot column ``u`` with a Doppler guard of ``K`` columns on each side.

    ``N`` is the number of Doppler bins of the grid the pattern is placed
    on. The DFT of ``u`` is computed once here so that sensing itself only
    spends transforms on received data.
    """

    pilot: np.ndarray
    guard: int
    N: int
    spectrum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        u = np.asarray(self.pilot, dtype=complex)
        if u.ndim != 1 or u.size < 1:
            raise ValueError("pilot must be a non-empty vector")
        if self.guard < 0:
            raise ConfigError("guard width must be non-negative")
        if self.N % 2:
            raise ConfigError("Doppler dimension N must be even")
        if 2 * self.guard + 1 > self.N:
            raise ConfigError(f"guard of {self.guard} columns does not fit in N={self.N}")
        object.__setattr__(self, "pilot", u)
        object.__setattr__(self, "spectrum", np.fft.fft(u, norm="ortho"))

    @classmethod
    def zadoff_chu(cls, M: int, N: int, guard: int, root: int = 1, energy: float | None = None):
        u = zc_sequence(M, root)
        if energy is not None:
            u = u * math.sqrt(energy / M)
        return cls(u, guard, N)

    @property
    def M(self) -> int:
        return self.pilot.size

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.pilot) ** 2))

    @property
    def guard_columns(self) -> list[int]:
        K = self.guard
        return sorted({*range(1, K + 1), *range(self.N - K, self.N)} - {0})

    def noise_gain(self) -> float:
        """Factor mapping grid noise variance to sensing noise variance."""
        s = np.abs(self.spectrum) ** 2
        if np.any(s == 0):
            raise PilotError("pilot spectrum has a zero bin")
        return float(np.sum(1.0 / s) / self.M**2)


def embed_pilot(data, pattern: PilotPattern) -> np.ndarray:
    """Place ``u`` in column 0 and clear the guard columns."""
    X = np.array(data, dtype=complex, copy=True)
    M, N = X.shape
    if M != pattern.M or N != pattern.N:
        raise ValueError(f"grid {M}x{N} does not match the {pattern.M}x{pattern.N} pattern")
    X[:, 0] = pattern.pilot
    X[:, pattern.guard_columns] = 0
    return X


def extract_pilot_block(Y, pattern: PilotPattern) -> np.ndarray:
    """Doppler columns ``0..K`` of a received grid (leading batch axes kept)."""
    Y = np.asarray(Y)
    if Y.shape[-2:] != (pattern.M, pattern.N):
        raise ValueError("received grid does not match the pattern")
    return Y[..., : pattern.guard + 1]


@dataclass(frozen=True)
class EstimatedCSI:
    """Estimated ``M x (K+1)`` channel and its per-entry noise variance."""

    matrix: np.ndarray
    noise_var: float = 0.0

    @property
    def M(self) -> int:
        return self.matrix.shape[-2]

    @property
    def K(self) -> int:
        return self.matrix.shape[-1] - 1

    def column(self, k: int) -> np.ndarray:
        return self.matrix[..., k]


def doppler_phase(M: int, N: int, n) -> np.ndarray:
    """Diagonals of ``C_n`` as an ``(M, len(n))`` array.

    ``C_n = diag(exp(j 2 pi n~ m / (M N)))`` with the signed Doppler index
    ``n~ = [n + N/2]_N - N/2``.
    """
    n = np.atleast_1d(np.asarray(n))
    signed = (n + N // 2) % N - N // 2
    m = np.arange(M)[:, None]
    return np.exp(2j * np.pi * signed[None, :] * m / (M * N))


def sense_channel(YP, pattern: PilotPattern, sigma2: float = 0.0) -> EstimatedCSI:
    """Recover ``M x (K+1)`` DD taps from the pilot block.

    Column by column: undo the factor phase, divide by the pilot spectrum,
    transform back and reapply the phase. Leading batch axes on ``YP`` are
    processed together.
    """
    YP = np.asarray(YP, dtype=complex)
    M = pattern.M
    K1 = pattern.guard + 1
    if YP.shape[-2:] != (M, K1):
        raise ValueError(f"pilot block must be {M}x{K1}, got {YP.shape[-2:]}")
    spec = pattern.spectrum
    if np.any(np.abs(spec) == 0):
        raise PilotError("pilot spectrum has a zero bin")
    Cn = doppler_phase(M, pattern.N, np.arange(K1))
    Yt = _fft.fft(YP / Cn, axis=-2)
    H = Cn * _fft.ifft(Yt / spec[:, None], axis=-2) / math.sqrt(M)
    return EstimatedCSI(H, sigma2 * pattern.noise_gain())


def strongest_doppler(csi: EstimatedCSI) -> int:
    energy = np.sum(np.abs(csi.matrix) ** 2, axis=-2)
    while energy.ndim > 1:
        energy = energy.sum(axis=0)
    return int(np.argmax(energy))


def threshold_taps(csi: EstimatedCSI, factor: float, rel_floor: float = 1e-9):
    """Entries above ``factor * sqrt(noise_var)`` as ``(l, k, value)``.

    A relative floor of ``rel_floor * max|H|`` stands in for the threshold
    when the noise variance is zero. ``factor = 0`` keeps everything.
    """
    if factor < 0:
        raise ValueError("threshold factor must be non-negative")
    H = csi.matrix
    if factor == 0:
        mask = np.ones(H.shape, dtype=bool)
    else:
        thr = max(factor * math.sqrt(csi.noise_var), rel_floor * float(np.abs(H).max(initial=0.0)))
        mask = np.abs(H) > thr
    return [(int(l), int(k), complex(H[l, k])) for l, k in zip(*np.nonzero(mask))]


def pad_truth(H, M: int, K: int) -> np.ndarray:
    """Zero-pad a true DD matrix to ``M x (K+1)``."""
    E = getattr(H, "entries", H)
    E = np.asarray(E, dtype=complex)
    if E.shape[0] > M or E.shape[1] > K + 1:
        raise ValueError(f"true channel {E.shape} does not fit in {M}x{K + 1}")
    out = np.zeros((M, K + 1), dtype=complex)
    out[: E.shape[0], : E.shape[1]] = E
    return out


def sensing_mse(H_est, H_true) -> float:
    """``||H_est - H_true||^2 / (M (K+1))``; leading batch axes are averaged."""
    A = getattr(H_est, "matrix", H_est)
    A = np.asarray(A)
    B = np.asarray(H_true)
    if A.shape[-2:] != B.shape[-2:]:
        raise ValueError(f"shape mismatch {A.shape} vs {B.shape}")
    return float(np.mean(np.abs(A - B) ** 2))


def pn_sensing_baseline(YP, pattern: PilotPattern, sigma2: float = 0.0) -> EstimatedCSI:
    """Correlation-detection estimate with the pattern's pilot as the code.

    ``h[l] = (1/E0) sum_m y~[m] conj(u[(m-l)_M])`` on each phase-corrected
    column. With an ideal (perfect-autocorrelation) code this equals
    :func:`sense_channel`; any other code leaves cross-tap interference.
    """
    YP = np.asarray(YP, dtype=complex)
    M = pattern.M
    K1 = pattern.guard + 1
    if YP.shape[-2:] != (M, K1):
        raise ValueError(f"pilot block must be {M}x{K1}")
    u = pattern.pilot
    Cn = doppler_phase(M, pattern.N, np.arange(K1))
    z = YP / Cn
    # circular cross-correlation via unnormalised DFTs
    corr = np.fft.ifft(np.fft.fft(z, axis=-2) * np.conj(np.fft.fft(u))[:, None], axis=-2)
    E0 = pattern.energy
    return EstimatedCSI(Cn * corr / E0, sigma2 / E0)


def csi_to_json(csi: EstimatedCSI, path=None, factor: float = 0.0) -> str:
    taps = threshold_taps(csi, factor)
    payload = {
        "noise_var": csi.noise_var,
        "shape": list(csi.matrix.shape),
        "taps": [{"l": l, "k": k, "re": v.real, "im": v.imag} for l, k, v in taps],
    }
    text = json.dumps(payload, indent=2)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text
