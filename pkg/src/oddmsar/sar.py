"""Stripmap SAR from periodic ODDM pilot echoes.

Chain: :func:`simulate_echoes` -> :func:`range_reconstruct` -> :func:`rcmc`
-> :func:`azimuth_compress`. :func:`lfm_echoes` and
:func:`lfm_range_compress` provide the chirp matched-filter baseline that
shares the azimuth stages.

The receive window opens at the zero-azimuth-time delay of cell 0 for every
pulse, so targets migrate through range cells as the platform moves.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    LinkBudget,
    Scene,
    _carrier_phase,
    awgn,
    cfo_compensate,
    cfo_estimate_cp,
    fractional_delay_response,
    sar_channel_from_scene,
)
from .errors import ConfigError
from .grid_frame import C, DDGridConfig, FrameConfig, SarGeometry, prf
from .sensing import PilotPattern, extract_pilot_block, sense_channel
from .waveform import TimeSequence, oddm_demodulate, oddm_modulate

__all__ = [
    "RawRadarGrid",
    "RangeCompressedGrid",
    "SarImage",
    "PointSpreadMetrics",
    "azimuth_axis",
    "simulate_echoes",
    "range_reconstruct",
    "rcmc",
    "azimuth_compress",
    "lfm_chirp",
    "lfm_echoes",
    "lfm_range_compress",
    "lfm_baseline",
    "oversample_profile",
    "point_spread",
    "sinr_per_cell",
    "raw_sinr",
]


@dataclass(frozen=True)
class RawRadarGrid:
    """Echo samples, one pulse per row, each with a ``cp_len`` prefix."""

    pulses: np.ndarray
    eta: np.ndarray
    cp_len: int
    M: int
    N: int
    geometry: SarGeometry
    carrier: float
    prf: float
    doppler_tap: int = 0
    frac_doppler: float = 0.0

    @property
    def azimuth_count(self) -> int:
        return self.pulses.shape[0]


@dataclass(frozen=True)
class RangeCompressedGrid:
    """Complex range profiles ``beta_q(eta_a)``, azimuth along rows."""

    profiles: np.ndarray
    eta: np.ndarray
    geometry: SarGeometry
    carrier: float
    prf: float
    range_axis: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.range_axis is None:
            Q = self.profiles.shape[1]
            object.__setattr__(self, "range_axis", self.geometry.cell_ranges[:Q].copy())

    @property
    def cells(self) -> int:
        return self.profiles.shape[1]


@dataclass(frozen=True)
class SarImage:
    """Focused image, ``[range, azimuth]``; ``data`` keeps the complex values."""

    magnitude: np.ndarray
    range_axis: np.ndarray
    azimuth_axis: np.ndarray
    data: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class PointSpreadMetrics:
    pslr_db: float
    islr_db: float
    res_3db: float


def azimuth_axis(geo: SarGeometry, pulse_rate: float) -> np.ndarray:
    """Slow-time samples covering ``[-T_syn/2, T_syn/2)``."""
    A = int(math.floor(geo.synthetic_aperture * pulse_rate + 1e-9))
    if A < 1:
        raise ConfigError("synthetic aperture shorter than one pulse interval")
    return (np.arange(A) - A // 2) / pulse_rate


def _pilot_signal(pilot: PilotPattern) -> np.ndarray:
    X = np.zeros((pilot.M, pilot.N), dtype=complex)
    X[:, 0] = pilot.pilot
    return oddm_modulate(X).samples


def simulate_echoes(
    scene: Scene,
    geo: SarGeometry,
    pilot: PilotPattern,
    grid: DDGridConfig,
    frame: FrameConfig,
    link: LinkBudget,
    *,
    sigma2: float = 0.0,
    rng=None,
    cp_len: int | None = None,
    doppler: bool = True,
    rolloff: float | None = 0.1,
    decimation: int = 1,
    eta=None,
    chunk: int = 64,
) -> RawRadarGrid:
    """Pilot echoes over the synthetic aperture.

    Each pulse goes through every scatterer at its hyperbolic slant range.
    Off-grid delays are applied as band-limited fractional delays seen
    through the raised-cosine subpulse (``rolloff=None`` for an ideal
    band-limited delay). The prefix is the cyclic extension of the echo
    body, which is what a steady pulse train produces.

    ``eta`` overrides the slow-time axis; otherwise it is derived from the
    frame PRF divided by ``decimation``.
    """
    M, N = pilot.M, pilot.N
    if (grid.M, grid.N) != (M, N):
        raise ConfigError("pilot pattern and grid dimensions differ")
    Q = geo.range_cells
    if Q > M:
        raise ConfigError(f"{Q} range cells do not fit in {M} delay bins")
    if scene.cells != Q:
        raise ConfigError(f"scene has {scene.cells} cells, geometry {Q}")
    pulse_rate = prf(frame) / decimation
    if eta is None:
        eta = azimuth_axis(geo, pulse_rate)
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    if cp_len is None:
        cp_len = min(Q + 8, M * N)
    MN = M * N
    S = np.fft.fft(_pilot_signal(pilot))
    t = np.arange(-cp_len, MN)
    active = np.flatnonzero(scene.rcs)

    ref = sar_channel_from_scene(scene, geo, link, grid, 0.0)
    nu = (ref.doppler_tap + ref.frac_doppler) if doppler else 0.0
    out = np.zeros((eta.size, cp_len + MN), dtype=complex)
    max_delay = 0.0
    for start in range(0, eta.size, chunk):
        sl = slice(start, min(start + chunk, eta.size))
        Hf = np.zeros((sl.stop - sl.start, MN), dtype=complex)
        for i, e in enumerate(eta[sl]):
            if active.size == 0:
                break
            real = sar_channel_from_scene(scene, geo, link, grid, float(e))
            d = real.delay_taps()[active]
            max_delay = max(max_delay, float(d.max()))
            coef = real.cell_gains[active] * _carrier_phase(real.carrier, real.cell_delays[active])
            if real.reflectivity_phase is not None:
                coef = coef * real.reflectivity_phase[active]
            coef = coef * np.exp(-2j * np.pi * nu * d / MN)
            Hf[i] = coef @ fractional_delay_response(MN, d, rolloff)
        body = np.fft.ifft(S[None, :] * Hf, axis=1)
        full = np.concatenate([body[:, MN - cp_len:], body], axis=1)
        out[sl] = full * np.exp(2j * np.pi * nu * t / MN)[None, :]
    if max_delay > cp_len:
        raise ConfigError(f"echo delay spread {max_delay:.1f} bins exceeds the {cp_len}-bin prefix")
    if sigma2 > 0:
        out = out + awgn(out.shape, sigma2, rng)
    k, frac = (ref.doppler_tap, ref.frac_doppler) if doppler else (0, 0.0)
    return RawRadarGrid(out, eta, cp_len, M, N, geo, link.carrier, pulse_rate, k, frac)


def range_reconstruct(
    raw: RawRadarGrid,
    pilot: PilotPattern,
    *,
    cfo: str = "genie",
    doppler_tap: int | None = None,
) -> RangeCompressedGrid:
    """IRCI-free range profiles: sense every pulse and read one Doppler column.

    ``cfo`` selects ``"genie"`` (remove the true fractional Doppler),
    ``"estimate"`` (prefix correlation per pulse) or ``"none"``.
    """
    M, N = raw.M, raw.N
    Q = raw.geometry.range_cells
    k = raw.doppler_tap if doppler_tap is None else doppler_tap
    if not 0 <= k <= pilot.guard:
        raise ConfigError(f"Doppler tap {k} outside the pilot guard of {pilot.guard}")
    seq = TimeSequence(raw.pulses, raw.cp_len, 1)
    if cfo == "genie":
        seq = cfo_compensate(seq, raw.frac_doppler)
    elif cfo == "estimate":
        est = np.array([cfo_estimate_cp(TimeSequence(p, raw.cp_len)) for p in raw.pulses])
        seq = TimeSequence(
            np.stack([cfo_compensate(TimeSequence(p, raw.cp_len), e).samples
                      for p, e in zip(raw.pulses, est)]),
            raw.cp_len,
        )
    elif cfo != "none":
        raise ConfigError(f"unknown CFO mode {cfo!r}")
    Y = oddm_demodulate(seq.body, M, N)
    csi = sense_channel(extract_pilot_block(Y, pilot), pilot)
    return RangeCompressedGrid(csi.matrix[:, :Q, k], raw.eta, raw.geometry, raw.carrier, raw.prf)


def _interp_kernel(x: np.ndarray, taps: int = 8, window: str = "none") -> np.ndarray:
    half = taps / 2
    inside = np.abs(x) <= half
    if window == "hamming":
        w = np.where(inside, 0.54 + 0.46 * np.cos(np.pi * x / half), 0.0)
    elif window == "none":
        w = inside.astype(float)
    else:
        raise ConfigError(f"unknown interpolation window {window!r}")
    return np.sinc(x) * w


def range_migration(geo: SarGeometry, carrier: float, f_eta, ranges) -> np.ndarray:
    """Range-Doppler migration ``R (1/sqrt(1 - (lambda f / 2V)^2) - 1)`` in metres."""
    lam = C / carrier
    f = np.asarray(f_eta)[:, None]
    arg = 1.0 - (lam * f / (2.0 * geo.velocity)) ** 2 if geo.velocity > 0 else np.ones_like(f)
    if np.any(arg <= 0):
        raise ConfigError("azimuth frequency beyond the physical Doppler limit")
    return np.asarray(ranges)[None, :] * (1.0 / np.sqrt(arg) - 1.0)


def rcmc(rc: RangeCompressedGrid, taps: int = 8, window: str = "none") -> RangeCompressedGrid:
    """Range cell migration correction in the range-Doppler domain.

    Each azimuth-frequency row is resampled with a ``taps``-point sinc so
    that every target settles at its closest-approach range cell. The
    untapered kernel is the default: IRCI-free profiles fill the whole
    range band, and a Hamming taper's passband droop costs several percent
    of their energy.
    """
    geo = rc.geometry
    if geo.velocity == 0:
        return rc
    A, Q = rc.profiles.shape
    spec = np.fft.fft(rc.profiles, axis=0)
    f_eta = np.fft.fftfreq(A, d=1.0 / rc.prf)
    shift = range_migration(geo, rc.carrier, f_eta, rc.range_axis) / geo.range_res
    if shift.max() > Q / 4:
        warnings.warn(f"migration of {shift.max():.1f} cells exceeds a quarter of the window",
                      RuntimeWarning, stacklevel=2)
    pos = np.arange(Q)[None, :] + shift  # where the output sample is read from
    base = np.floor(pos).astype(int) - taps // 2 + 1
    idx = base[..., None] + np.arange(taps)  # [A, Q, taps]
    w = _interp_kernel(pos[..., None] - idx, taps, window)
    valid = (idx >= 0) & (idx < Q)
    gathered = np.take_along_axis(spec, np.clip(idx, 0, Q - 1).reshape(A, -1), axis=1).reshape(idx.shape)
    out = np.sum(np.where(valid, gathered * w, 0.0), axis=-1)
    return RangeCompressedGrid(np.fft.ifft(out, axis=0), rc.eta, geo, rc.carrier, rc.prf, rc.range_axis)


def azimuth_compress(rc: RangeCompressedGrid) -> SarImage:
    """Matched filtering of each range cell with its hyperbolic phase history.

    The reference for cell ``q`` is ``exp(-j 4 pi f0 R_q(eta) / c)``;
    correlation is linear (zero-padded to twice the aperture) and the
    output spans ``A`` along-track positions centred on zero.
    """
    geo = rc.geometry
    A, Q = rc.profiles.shape
    eta = rc.eta
    R0 = rc.range_axis
    R = np.sqrt(R0[None, :] ** 2 + (geo.velocity * eta[:, None]) ** 2)
    ref = _carrier_phase(2.0 * rc.carrier / C, R)  # exp(-j 2 pi 2 f0 R / c)
    n = 2 * A
    corr = np.fft.ifft(np.fft.fft(rc.profiles, n, axis=0) * np.conj(np.fft.fft(ref, n, axis=0)), axis=0)
    lags = np.arange(A) - A // 2
    img = corr[lags % n]  # [A, Q]
    spacing = geo.velocity / rc.prf if geo.velocity > 0 else 1.0 / rc.prf
    return SarImage(np.abs(img).T, R0.copy(), lags * spacing, img.T)


# --------------------------------------------------------------------------
# LFM baseline
# --------------------------------------------------------------------------


def lfm_chirp(n: int) -> np.ndarray:
    """Unit-energy linear chirp sweeping the full critical band in ``n`` samples."""
    i = np.arange(n) - n / 2
    return np.exp(1j * np.pi * i**2 / n) / math.sqrt(n)


def lfm_echoes(
    scene: Scene,
    geo: SarGeometry,
    grid: DDGridConfig,
    link: LinkBudget,
    *,
    eta=(0.0,),
    doppler_hz: float = 0.0,
    sigma2: float = 0.0,
    rng=None,
    pulse_len: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Chirp echoes in a window of ``pulse_len + Q + 8`` samples per pulse.

    Returns ``(echoes, chirp)``. The chirp has the same bandwidth as the
    ODDM signal and, by default, ``M N`` samples.
    """
    n = grid.M * grid.N if pulse_len is None else pulse_len
    chirp = lfm_chirp(n)
    Q = geo.range_cells
    W = n + Q + 8
    nfft = 1 << int(math.ceil(math.log2(W + 16)))
    Cf = np.fft.fft(chirp, nfft)
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    active = np.flatnonzero(scene.rcs)
    nu = doppler_hz * grid.sample_interval  # cycles per sample
    t = np.arange(W)
    out = np.zeros((eta.size, W), dtype=complex)
    for a, e in enumerate(eta):
        if active.size == 0:
            continue
        real = sar_channel_from_scene(scene, geo, link, grid, float(e))
        d = real.delay_taps()[active]
        coef = real.cell_gains[active] * _carrier_phase(real.carrier, real.cell_delays[active])
        coef = coef * np.exp(-2j * np.pi * nu * d)
        Hf = coef @ fractional_delay_response(nfft, d)
        out[a] = np.fft.ifft(Cf * Hf)[:W] * np.exp(2j * np.pi * nu * t)
    if sigma2 > 0:
        out = out + awgn(out.shape, sigma2, rng)
    return out, chirp


def lfm_range_compress(echoes, chirp, Q: int, oversample: int = 1) -> np.ndarray:
    """Matched-filter output at lags ``0..Q-1``, optionally interpolated.

    The output is scaled so that an isolated on-grid scatterer returns its
    channel coefficient. With ``oversample > 1`` the full compressed
    response is band-limited interpolated and ``Q * oversample`` samples
    are returned.
    """
    echoes = np.atleast_2d(echoes)
    n = chirp.size
    W = echoes.shape[1]
    nfft = 1 << int(math.ceil(math.log2(W + n)))
    mf = np.fft.ifft(np.fft.fft(echoes, nfft, axis=1) * np.conj(np.fft.fft(chirp, nfft)), axis=1)
    mf /= np.vdot(chirp, chirp).real
    if oversample == 1:
        return mf[:, :Q]
    return oversample_profile(mf, oversample)[:, : Q * oversample]


def oversample_profile(x, factor: int) -> np.ndarray:
    """Band-limited interpolation along the last axis by spectral zero padding."""
    x = np.atleast_2d(x)
    n = x.shape[-1]
    X = np.fft.fft(x, axis=-1)
    big = np.zeros(x.shape[:-1] + (n * factor,), dtype=complex)
    h = n // 2
    big[..., :h] = X[..., :h]
    big[..., -(n - h):] = X[..., h:]
    if n % 2 == 0:
        # split the Nyquist bin so real inputs stay real
        big[..., h] = X[..., h] / 2
        big[..., -h] = X[..., h] / 2
    return np.fft.ifft(big, axis=-1) * factor


def lfm_baseline(
    scene: Scene,
    geo: SarGeometry,
    grid: DDGridConfig,
    frame: FrameConfig,
    link: LinkBudget,
    *,
    doppler_hz: float = 0.0,
    sigma2: float = 0.0,
    rng=None,
    decimation: int = 1,
    eta=None,
) -> tuple[RangeCompressedGrid, SarImage]:
    """Chirp transmission with matched-filter range compression and the same azimuth chain."""
    pulse_rate = prf(frame) / decimation
    if eta is None:
        eta = azimuth_axis(geo, pulse_rate)
    echoes, chirp = lfm_echoes(scene, geo, grid, link, eta=eta, doppler_hz=doppler_hz,
                               sigma2=sigma2, rng=rng)
    prof = lfm_range_compress(echoes, chirp, geo.range_cells)
    rc = RangeCompressedGrid(prof, np.asarray(eta, float), geo, link.carrier, pulse_rate)
    return rc, azimuth_compress(rcmc(rc))


# --------------------------------------------------------------------------
# Metrics
# --------------------------------------------------------------------------


def point_spread(profile, peak_index: int | None = None, spacing: float = 1.0,
                 floor_db: float = -300.0) -> PointSpreadMetrics:
    """PSLR, ISLR and 3 dB width of a 1-D point response.

    The main lobe extends from the peak to the first local minimum on each
    side. Ratios below ``floor_db`` are reported as ``floor_db``.
    """
    p = np.abs(np.asarray(profile).ravel()) ** 2
    if p.size == 0 or p.max() == 0:
        raise ValueError("profile has no peak")
    k = int(np.argmax(p)) if peak_index is None else int(peak_index)
    peak = p[k]
    lo = k
    while lo > 0 and p[lo - 1] < p[lo]:
        lo -= 1
    hi = k
    while hi < p.size - 1 and p[hi + 1] < p[hi]:
        hi += 1
    main = p[lo:hi + 1]
    side = np.concatenate([p[:lo], p[hi + 1:]])

    def db(x):
        return max(floor_db, 10.0 * math.log10(x)) if x > 0 else floor_db

    pslr = db(side.max() / peak) if side.size else floor_db
    islr = db(side.sum() / main.sum()) if side.size else floor_db

    half = peak / 2.0

    def crossing(direction):
        i = k
        while 0 <= i + direction < p.size and p[i + direction] > half:
            i += direction
        j = i + direction
        if not 0 <= j < p.size:
            return float(i)
        # linear interpolation of power between samples i and j
        return i + direction * (p[i] - half) / (p[i] - p[j])

    width = (crossing(1) - crossing(-1)) * spacing
    return PointSpreadMetrics(pslr, islr, width)


def sinr_per_cell(beta, sigma_prime2: float) -> np.ndarray:
    if sigma_prime2 <= 0:
        raise ValueError("sensing noise variance must be positive")
    return np.abs(np.asarray(beta)) ** 2 / sigma_prime2


def raw_sinr(beta, pilot_energy: float, M: int, N: int, sigma2: float) -> np.ndarray:
    """Per-sample SINR of the raw echo, ``|beta|^2 E0 / (M N sigma^2)``."""
    if sigma2 <= 0:
        raise ValueError("noise variance must be positive")
    return np.abs(np.asarray(beta)) ** 2 * pilot_energy / (M * N * sigma2)

