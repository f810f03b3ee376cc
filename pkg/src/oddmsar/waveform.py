"""ODDM modulation, cyclic prefix handling, DDOP pulse shaping and the OFDM baseline.

Two transmit paths exist. The matrix path maps the M x N delay-Doppler grid
to ``s = vec(X F_N^H)`` at the critical rate ``T0/M``. The waveform path
additionally passes ``s`` through a square-root raised-cosine subpulse at
``oversample`` samples per delay bin and undoes it with a matched filter.

Symbol grids are plain ``(M, N)`` complex arrays indexed ``[delay, doppler]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _fft
from .errors import ConfigError

__all__ = [
    "QamConfig",
    "qam_map",
    "qam_demap",
    "qam_constellation",
    "TimeSequence",
    "oddm_modulate",
    "oddm_demodulate",
    "add_cp",
    "remove_cp",
    "cp_length",
    "DDOPPulse",
    "ddop_pulse",
    "pulse_shape",
    "matched_filter",
    "ofdm_modulate",
    "ofdm_demodulate",
    "papr",
]


# --------------------------------------------------------------------------
# QAM
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class QamConfig:
    order: int = 4
    gray_mapping: bool = True

    def __post_init__(self):
        if self.order not in (4, 16, 64):
            raise ConfigError(f"unsupported QAM order {self.order}")
        if not self.gray_mapping:
            raise ConfigError("only Gray-mapped constellations are provided")

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))

    @property
    def _levels(self) -> int:
        return int(np.sqrt(self.order))

    @property
    def scale(self) -> float:
        # average energy of an L x L grid with levels +-1, +-3, ... is 2 (L^2 - 1) / 3
        L = self._levels
        return float(np.sqrt(2.0 * (L * L - 1) / 3.0))


def _gray_to_binary(g: np.ndarray) -> np.ndarray:
    b = g.copy()
    shift = g >> 1
    while np.any(shift):
        b ^= shift
        shift >>= 1
    return b


def _bits_to_int(bits: np.ndarray) -> np.ndarray:
    k = bits.shape[-1]
    weights = 1 << np.arange(k - 1, -1, -1)
    return (bits.astype(np.int64) * weights).sum(axis=-1)


def _int_to_bits(values: np.ndarray, k: int) -> np.ndarray:
    shifts = np.arange(k - 1, -1, -1)
    return ((values[..., None] >> shifts) & 1).astype(np.uint8)


def qam_map(bits, cfg: QamConfig = QamConfig()) -> np.ndarray:
    """Map bits to unit-energy Gray QAM symbols.

    Each symbol takes ``log2(order)`` bits: the first half select the
    in-phase level, the second half the quadrature level. A zero bit maps
    to the positive half-plane, so for 4-QAM ``00 -> (1 + 1j)/sqrt(2)``.
    """
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    k = cfg.bits_per_symbol
    if bits.size % k:
        raise ValueError(f"bit count {bits.size} is not a multiple of {k}")
    groups = bits.reshape(-1, k)
    half = k // 2
    L = cfg._levels
    idx_i = _gray_to_binary(_bits_to_int(groups[:, :half]))
    idx_q = _gray_to_binary(_bits_to_int(groups[:, half:]))
    re = (L - 1) - 2 * idx_i
    im = (L - 1) - 2 * idx_q
    return (re + 1j * im) / cfg.scale


def qam_demap(symbols, cfg: QamConfig = QamConfig()) -> np.ndarray:
    """Hard-decision inverse of :func:`qam_map`."""
    z = np.asarray(symbols).ravel() * cfg.scale
    L = cfg._levels
    half = cfg.bits_per_symbol // 2

    def axis_bits(x):
        idx = np.clip(np.rint(((L - 1) - x) / 2.0), 0, L - 1).astype(np.int64)
        gray = idx ^ (idx >> 1)
        return _int_to_bits(gray, half)

    return np.concatenate([axis_bits(z.real), axis_bits(z.imag)], axis=1).ravel()


def qam_constellation(cfg: QamConfig = QamConfig()) -> np.ndarray:
    k = cfg.bits_per_symbol
    all_bits = _int_to_bits(np.arange(cfg.order), k).ravel()
    return qam_map(all_bits, cfg)


# --------------------------------------------------------------------------
# Time sequences and the matrix path
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TimeSequence:
    """Sampled baseband signal, optionally with a cyclic prefix.

    ``cp_len`` counts prefix samples at the critical rate; the stored
    prefix spans ``cp_len * oversample`` samples.
    """

    samples: np.ndarray
    cp_len: int = 0
    oversample: int = 1

    @property
    def cp_samples(self) -> int:
        return self.cp_len * self.oversample

    @property
    def body(self) -> np.ndarray:
        return self.samples[..., self.cp_samples:]

    @property
    def prefix(self) -> np.ndarray:
        return self.samples[..., : self.cp_samples]

    def __len__(self) -> int:
        return self.samples.shape[-1]


def oddm_modulate(X) -> TimeSequence:
    """Matrix-path ODDM modulation ``s = vec(X F_N^H)`` (column-major)."""
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2:
        raise ValueError("symbol grid must be two-dimensional")
    s = _fft.ifft(X, axis=1)
    return TimeSequence(s.reshape(-1, order="F"))


def oddm_demodulate(r, M: int, N: int) -> np.ndarray:
    """Inverse of :func:`oddm_modulate`: ``Y = vec^-1(r) F_N``.

    ``r`` may be a :class:`TimeSequence` without prefix or a raw vector of
    length ``M N``. A leading batch axis is accepted on raw arrays.
    """
    if isinstance(r, TimeSequence):
        if r.cp_len or r.oversample != 1:
            raise ValueError("remove the cyclic prefix and matched-filter first")
        r = r.samples
    r = np.asarray(r)
    if r.shape[-1] != M * N:
        raise ValueError(f"expected {M * N} samples, got {r.shape[-1]}")
    grid = r.reshape(r.shape[:-1] + (N, M)).swapaxes(-1, -2)
    return _fft.fft(grid, axis=-1)


def cp_length(tau_max: float, tau_min: float, sample_interval: float) -> int:
    return int(np.ceil((tau_max - tau_min) / sample_interval - 1e-9))


def add_cp(seq: TimeSequence, L: int) -> TimeSequence:
    if seq.cp_len:
        raise ValueError("sequence already carries a cyclic prefix")
    if L < 0:
        raise ValueError("CP length must be non-negative")
    body = seq.samples
    n = L * seq.oversample
    if n > body.shape[-1]:
        raise ValueError(f"CP of {L} samples exceeds the signal length")
    if n == 0:
        return replace(seq, cp_len=0)
    return replace(seq, samples=np.concatenate([body[..., -n:], body], axis=-1), cp_len=L)


def remove_cp(seq: TimeSequence) -> TimeSequence:
    return TimeSequence(seq.samples[..., seq.cp_samples:], 0, seq.oversample)


# --------------------------------------------------------------------------
# DDOP subpulse and the waveform path
# --------------------------------------------------------------------------


def _raised_cosine(f: np.ndarray, rolloff: float) -> np.ndarray:
    """Raised-cosine spectrum for unit symbol rate, ``f`` in cycles/symbol."""
    af = np.abs(f)
    lo = 0.5 * (1.0 - rolloff)
    hi = 0.5 * (1.0 + rolloff)
    out = np.zeros_like(af)
    out[af <= lo] = 1.0
    band = (af > lo) & (af <= hi)
    if rolloff > 0:
        out[band] = 0.5 * (1.0 + np.cos(np.pi / rolloff * (af[band] - lo)))
    else:
        # brick wall: split the band edge so aliased copies still sum to one
        out[af == lo] = 0.5
    return out


@dataclass(frozen=True)
class DDOPPulse:
    """Square-root Nyquist subpulse ``a(t)`` with zero-ISI interval ``T0/M``.

    ``taps`` holds one period of the pulse sampled at ``T0/(M os)`` over
    ``2 D`` delay bins, normalised so that ``sum |taps|^2 / os == 1``
    (unit energy with time measured in delay bins). The pulse is defined
    through its raised-cosine power spectrum, which is what the shaping and
    matched filters apply on each block's DFT grid.
    """

    rolloff: float
    half_span: int
    oversample: int
    taps: np.ndarray = field(repr=False)

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.taps) ** 2) / self.oversample)

    def response(self, n_samples: int) -> np.ndarray:
        """Amplitude response on an ``n_samples``-point DFT grid at rate ``os/T``."""
        os_ = self.oversample
        f = np.fft.fftfreq(n_samples, d=1.0 / os_)
        return np.sqrt(os_ * _raised_cosine(f, self.rolloff))


def ddop_pulse(rolloff: float = 0.1, half_span: int = 8, oversample: int = 2) -> DDOPPulse:
    if not 0.0 <= rolloff <= 1.0:
        raise ConfigError("rolloff must lie in [0, 1]")
    if half_span < 1 or oversample < 1:
        raise ConfigError("half span and oversampling factor must be positive")
    n = 2 * half_span * oversample
    f = np.fft.fftfreq(n, d=1.0 / oversample)
    spectrum = np.sqrt(oversample * _raised_cosine(f, rolloff))
    taps = np.fft.fftshift(np.fft.ifft(spectrum)).real * np.sqrt(oversample)
    return DDOPPulse(rolloff, half_span, oversample, taps)


def _filter_block(x: np.ndarray, resp: np.ndarray) -> np.ndarray:
    return np.fft.ifft(np.fft.fft(x, axis=-1) * resp, axis=-1)


def pulse_shape(seq: TimeSequence, pulse: DDOPPulse) -> TimeSequence:
    """Upsample by ``pulse.oversample`` and filter with ``a(t)``.

    Filtering is circular over the body, so a prefix present on ``seq`` is
    regenerated at the higher rate and still equals the body's tail.
    """
    if seq.oversample != 1:
        raise ValueError("input must be critically sampled")
    os_ = pulse.oversample
    body = seq.body
    n = body.shape[-1]
    if 2 * pulse.half_span > n:
        raise ValueError("pulse span exceeds the sequence length")
    up = np.zeros(body.shape[:-1] + (n * os_,), dtype=complex)
    up[..., ::os_] = body
    shaped = _filter_block(up, pulse.response(n * os_))
    out = TimeSequence(shaped, 0, os_)
    return add_cp(out, seq.cp_len) if seq.cp_len else out


def matched_filter(wave: TimeSequence, pulse: DDOPPulse) -> TimeSequence:
    """Filter with ``a(-t)`` and sample at the delay-bin rate.

    For a unit-energy pulse the shaping and matched filter cascade is the
    identity at the sampling instants, and white noise of variance ``v``
    per input sample leaves with variance ``v``.
    """
    os_ = pulse.oversample
    if wave.oversample != os_:
        raise ValueError("oversampling factor of waveform and pulse differ")
    body = wave.body
    n = body.shape[-1]
    if n % os_:
        raise ValueError("waveform length is not a multiple of the oversampling factor")
    if 2 * pulse.half_span * os_ > n:
        raise ValueError("pulse span exceeds the waveform length")
    filtered = _filter_block(body, np.conj(pulse.response(n)))
    out = TimeSequence(filtered[..., ::os_], 0, 1)
    return add_cp(out, wave.cp_len) if wave.cp_len else out


# --------------------------------------------------------------------------
# OFDM baseline and PAPR
# --------------------------------------------------------------------------


def ofdm_modulate(X_freq) -> TimeSequence:
    """One OFDM symbol per row; subcarrier count is the last axis length."""
    return TimeSequence(_fft.ifft(np.asarray(X_freq, dtype=complex), axis=-1))


def ofdm_demodulate(r) -> np.ndarray:
    if isinstance(r, TimeSequence):
        if r.cp_len:
            raise ValueError("remove the cyclic prefix first")
        r = r.samples
    return _fft.fft(np.asarray(r), axis=-1)


def papr(seq) -> float:
    x = seq.samples if isinstance(seq, TimeSequence) else np.asarray(seq)
    p = np.abs(x) ** 2
    mean = p.mean()
    if mean == 0:
        raise ValueError("PAPR of an all-zero sequence is undefined")
    return float(p.max() / mean)
