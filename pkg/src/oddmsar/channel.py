"""Channel realizations and the two ways of applying them.

:func:`apply_dd_channel` implements the exact delay-Doppler input-output
relation directly on symbol grids. :func:`apply_time_channel` convolves a
time sequence with the same taps and serves as its independent check.

Doppler values handed between functions are in units of Doppler bins
(multiples of ``F``); delays are in delay bins (multiples of ``T0/M``).
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .grid_frame import C, DDGridConfig, LinkBudget, SarGeometry
from .waveform import TimeSequence, _raised_cosine

__all__ = [
    "ChannelKind",
    "DDChannelMatrix",
    "CommPath",
    "CommChannelRealization",
    "SarChannelRealization",
    "Scene",
    "read_scene",
    "write_scene",
    "rain_attenuation",
    "large_scale_gain",
    "sample_comm_channel",
    "sar_channel_from_scene",
    "to_dd_matrix",
    "apply_dd_channel",
    "apply_time_channel",
    "fractional_delay_response",
    "cfo_estimate_cp",
    "cfo_compensate",
    "awgn",
    "dump_realization",
]


class ChannelKind(str, enum.Enum):
    COMM = "comm"
    SAR = "sar"


@dataclass(frozen=True)
class DDChannelMatrix:
    """Taps ``H[l, k]`` on the integer delay-Doppler grid."""

    entries: np.ndarray
    kind: ChannelKind = ChannelKind.COMM

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.ndim != 2 or 0 in e.shape:
            raise ValueError("channel matrix must be a non-empty 2-D array")
        if not np.all(np.isfinite(e)):
            raise ValueError("channel matrix has non-finite entries")
        object.__setattr__(self, "entries", e)

    @property
    def max_delay_tap(self) -> int:
        return self.entries.shape[0] - 1

    @property
    def max_doppler_tap(self) -> int:
        return self.entries.shape[1] - 1

    def padded(self, rows: int) -> np.ndarray:
        """Entries zero-padded (or checked) to ``rows`` delay bins."""
        L1 = self.entries.shape[0]
        if L1 > rows:
            if np.any(self.entries[rows:]):
                raise ValueError(f"channel has taps beyond delay bin {rows - 1}")
            return self.entries[:rows].copy()
        out = np.zeros((rows, self.entries.shape[1]), dtype=complex)
        out[:L1] = self.entries
        return out

    def taps(self):
        """Nonzero entries as ``(delay, doppler, gain)`` triples."""
        ls, ks = np.nonzero(self.entries)
        return [(int(l), float(k), complex(self.entries[l, k])) for l, k in zip(ls, ks)]


# --------------------------------------------------------------------------
# Large-scale fading
# --------------------------------------------------------------------------


def rain_attenuation(link: LinkBudget, rng=None, mode: str = "random") -> float:
    """Linear rain attenuation coefficient ``r``.

    The attenuation in dB is log-normal: ``ln(r_dB) ~ N(mu_r, sigma_r^2)``
    with ``r_dB = 20 log10 r``. ``mode`` is ``"random"`` (draw from
    ``rng``), ``"median"`` (``r_dB = exp(mu_r)``) or ``"none"`` (``r = 1``).
    """
    if mode == "none":
        return 1.0
    if mode == "median":
        r_db = math.exp(link.rain_mu)
    elif mode == "random":
        if rng is None:
            raise ValueError("random rain attenuation needs an rng")
        r_db = math.exp(rng.normal(link.rain_mu, math.sqrt(link.rain_sigma2)))
    else:
        raise ConfigError(f"unknown rain mode {mode!r}")
    return 10.0 ** (r_db / 20.0)


def large_scale_gain(link: LinkBudget, rng=None, rain: str = "random") -> float:
    fspl = (C / (4.0 * math.pi * link.carrier * link.distance)) ** 2
    r = rain_attenuation(link, rng, rain)
    return math.sqrt(fspl * link.user_gain * link.sat_gain / r)


# --------------------------------------------------------------------------
# Communication channel
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CommPath:
    delay_tap: int
    doppler_tap: int
    frac_doppler: float
    gain: complex
    aoa: float = 0.0


@dataclass(frozen=True)
class CommChannelRealization:
    """Sampled multipath channel; ``paths[0]`` is the line-of-sight path.

    ``gain`` on each path is the complex amplitude ``alpha_p``; the carrier
    phase ``exp(-j 2 pi f0 tau_p)`` is applied by :func:`to_dd_matrix`.
    """

    paths: tuple[CommPath, ...]
    large_scale_g: float
    sat_doppler: float
    device_doppler: float
    carrier: float
    sample_interval: float
    doppler_res: float
    base_delay: float = 0.0

    def __post_init__(self):
        delays = [p.delay_tap for p in self.paths]
        if delays and (delays[0] != min(delays) or delays != sorted(delays)):
            raise ValueError("path delays must be nondecreasing with the LOS path first")

    @property
    def common_doppler_tap(self) -> int:
        return self.paths[0].doppler_tap if self.paths else 0

    @property
    def common_frac_doppler(self) -> float:
        return self.paths[0].frac_doppler if self.paths else 0.0

    def path_delays(self) -> np.ndarray:
        return self.base_delay + np.array([p.delay_tap for p in self.paths]) * self.sample_interval


def sample_comm_channel(
    link: LinkBudget,
    P: int,
    max_delay_tap: int,
    grid: DDGridConfig,
    geometry: SarGeometry,
    rng: np.random.Generator,
    *,
    device_doppler: float = 0.0,
    g: float | None = None,
    rain: str = "random",
) -> CommChannelRealization:
    """Draw one LOS + ``P`` NLOS realization.

    NLOS delays are distinct integer taps drawn uniformly from
    ``1..max_delay_tap`` (or ``1..P`` if that is smaller than ``P``), NLOS
    gains are circular Gaussian with unit variance and the LOS gain has
    unit modulus and uniform phase. ``g`` overrides the large-scale gain,
    e.g. ``g=1`` for a normalised channel.
    """
    if P < 0:
        raise ConfigError("number of NLOS paths must be non-negative")
    if max_delay_tap < 0:
        raise ConfigError("maximum delay tap must be non-negative")
    K = link.rician_k
    if not math.isfinite(K) and K > 0:
        los_amp, nlos_amp = 1.0, 0.0
    else:
        los_amp, nlos_amp = math.sqrt(K / (K + 1.0)), math.sqrt(1.0 / (K + 1.0))
    if g is None:
        g = large_scale_gain(link, rng, rain)

    sat = geometry.velocity * math.sin(geometry.squint) * link.carrier / C
    span = max(max_delay_tap, P)
    nlos_delays = np.sort(rng.choice(np.arange(1, span + 1), size=P, replace=False)) if P else []
    aoa = rng.uniform(-math.pi, math.pi, size=P + 1)
    h0 = np.exp(2j * math.pi * rng.uniform())
    hp = (rng.standard_normal(P) + 1j * rng.standard_normal(P)) / math.sqrt(2.0)

    paths = []
    delays = [0, *nlos_delays]
    for p in range(P + 1):
        nu = (sat + device_doppler * math.cos(aoa[p])) / grid.doppler_res
        k = int(round(nu))
        if p == 0:
            alpha = g * los_amp * h0
        else:
            alpha = g * nlos_amp * math.sqrt(1.0 / P) * hp[p - 1]
        paths.append(CommPath(int(delays[p]), k, nu - k, complex(alpha), float(aoa[p])))
    return CommChannelRealization(
        paths=tuple(paths),
        large_scale_g=float(g),
        sat_doppler=sat,
        device_doppler=device_doppler,
        carrier=link.carrier,
        sample_interval=grid.sample_interval,
        doppler_res=grid.doppler_res,
        base_delay=link.distance / C,
    )


# --------------------------------------------------------------------------
# SAR scene and channel
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Scene:
    """Reflectivity per range cell, optionally with along-track positions.

    ``rcs`` may be complex (reflectivity with phase). ``azimuth`` holds the
    along-track coordinate of each cell's scatterer in metres; it only
    matters once the platform moves.
    """

    rcs: np.ndarray
    azimuth: np.ndarray | None = None

    def __post_init__(self):
        rcs = np.asarray(self.rcs)
        if rcs.ndim != 1:
            raise ValueError("scene must be a vector over range cells")
        if not np.iscomplexobj(rcs) and np.any(rcs < 0):
            raise ValueError("real RCS coefficients must be non-negative")
        object.__setattr__(self, "rcs", rcs)
        az = np.zeros(rcs.size) if self.azimuth is None else np.asarray(self.azimuth, float)
        if az.shape != rcs.shape:
            raise ValueError("azimuth positions must match the number of cells")
        object.__setattr__(self, "azimuth", az)

    @property
    def cells(self) -> int:
        return self.rcs.size

    def ranges(self, geo: SarGeometry) -> np.ndarray:
        return geo.first_cell_range + np.arange(self.cells) * geo.range_res

    @classmethod
    def points(cls, Q: int, cells, rcs, azimuth=None) -> "Scene":
        g = np.zeros(Q)
        az = np.zeros(Q)
        cells = np.asarray(cells, dtype=int)
        if np.any((cells < 0) | (cells >= Q)):
            raise ValueError("target cell outside the range window")
        if len(set(cells.tolist())) != cells.size:
            raise ValueError("at most one point target per range cell")
        g[cells] = rcs
        if azimuth is not None:
            az[cells] = azimuth
        return cls(g, az)


def read_scene(path, geo: SarGeometry) -> Scene:
    """Load a scene CSV.

    Accepted headers are ``cell_index`` or ``slant_range_m`` plus
    ``rcs_G_q``; an optional ``azimuth_m`` column places targets along track.
    Slant ranges are snapped to the nearest cell.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        cols = set(reader.fieldnames or ())
        if "rcs_G_q" not in cols or not cols & {"cell_index", "slant_range_m"}:
            raise ConfigError(f"{path}: need rcs_G_q and cell_index or slant_range_m columns")
        rows = list(reader)
    Q = geo.range_cells
    g = np.zeros(Q)
    az = np.zeros(Q)
    for i, row in enumerate(rows, start=2):
        try:
            if row.get("cell_index") not in (None, ""):
                q = int(row["cell_index"])
            else:
                q = int(round((float(row["slant_range_m"]) - geo.first_cell_range) / geo.range_res))
            value = float(row["rcs_G_q"])
            x = float(row.get("azimuth_m") or 0.0)
        except ValueError as exc:
            raise ConfigError(f"{path}:{i}: {exc}") from None
        if not 0 <= q < Q:
            raise ConfigError(f"{path}:{i}: cell {q} outside the {Q}-cell window")
        if value < 0:
            raise ConfigError(f"{path}:{i}: negative RCS")
        g[q] = value
        az[q] = x
    return Scene(g, az)


def write_scene(scene: Scene, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell_index", "rcs_G_q", "azimuth_m"])
        for q in np.flatnonzero(scene.rcs):
            w.writerow([int(q), repr(float(np.real(scene.rcs[q]))), repr(float(scene.azimuth[q]))])


@dataclass(frozen=True)
class SarChannelRealization:
    """Round-trip SAR channel for one pulse.

    ``cell_gains`` are the radar-equation amplitudes ``beta_q``;
    ``cell_delays`` the round-trip delays in seconds. ``doppler_tap`` and
    ``frac_doppler`` split the common intra-pulse Doppler in bins.
    """

    cell_gains: np.ndarray
    doppler_tap: int
    frac_doppler: float
    first_cell_delay: float
    cell_delays: np.ndarray
    carrier: float
    sample_interval: float
    doppler_res: float
    reflectivity_phase: np.ndarray | None = field(default=None, repr=False)

    @property
    def cells(self) -> int:
        return self.cell_gains.size

    def delay_taps(self) -> np.ndarray:
        """Delays relative to the first cell, in (possibly fractional) bins."""
        return (self.cell_delays - self.first_cell_delay) / self.sample_interval


def sar_channel_from_scene(
    scene: Scene,
    geo: SarGeometry,
    link: LinkBudget,
    grid: DDGridConfig,
    eta: float = 0.0,
    *,
    rng=None,
    rain: str = "none",
) -> SarChannelRealization:
    """Radar-equation gains and delays of every cell at azimuth time ``eta``.

    Slant ranges follow ``R_q(eta) = sqrt(R_q^2 + (Vs eta - x_q)^2)``; at
    ``eta = 0`` with on-track targets the delays sit exactly on the grid.
    ``first_cell_delay`` is always the ``eta = 0`` delay of cell 0, which
    is where the receive window opens.
    """
    if scene.cells != geo.range_cells:
        raise ConfigError(f"scene has {scene.cells} cells, geometry {geo.range_cells}")
    r = rain_attenuation(link, rng, rain)
    R0 = scene.ranges(geo)
    R = np.sqrt(R0**2 + (geo.velocity * eta - scene.azimuth) ** 2)
    G = scene.rcs
    amp = np.sqrt(np.abs(G) * C**2 / ((4 * math.pi) ** 3 * link.carrier**2 * R**4) * link.sat_gain**2 / r)
    phase = np.exp(1j * np.angle(G)) if np.iscomplexobj(G) else None
    nu = 2.0 * geo.velocity * math.sin(geo.squint) * link.carrier / C / grid.doppler_res
    k = int(round(nu))
    return SarChannelRealization(
        cell_gains=amp,
        doppler_tap=k,
        frac_doppler=nu - k,
        first_cell_delay=2.0 * geo.first_cell_range / C,
        cell_delays=2.0 * R / C,
        carrier=link.carrier,
        sample_interval=grid.sample_interval,
        doppler_res=grid.doppler_res,
        reflectivity_phase=phase,
    )


# --------------------------------------------------------------------------
# DD matrix
# --------------------------------------------------------------------------


def _carrier_phase(f0: float, tau) -> np.ndarray:
    # reduce f0*tau mod 1 before the exponent; tau ~ 4 ms at 5 GHz otherwise
    # loses most of its significant digits
    cycles = np.asarray(f0 * np.asarray(tau, dtype=float))
    return np.exp(-2j * np.pi * np.mod(cycles, 1.0))


def _path_coefficients(real):
    """(delay_bins, doppler_bins, complex coefficient) per path."""
    if isinstance(real, CommChannelRealization):
        tau = real.path_delays()
        ph = _carrier_phase(real.carrier, tau)
        out = []
        for p, path in enumerate(real.paths):
            out.append((float(path.delay_tap), path.doppler_tap + path.frac_doppler, path.gain * ph[p]))
        return out
    if isinstance(real, SarChannelRealization):
        ph = _carrier_phase(real.carrier, real.cell_delays)
        if real.reflectivity_phase is not None:
            ph = ph * real.reflectivity_phase
        nu = real.doppler_tap + real.frac_doppler
        d = real.delay_taps()
        return [(float(d[q]), nu, complex(real.cell_gains[q] * ph[q]))
                for q in np.flatnonzero(real.cell_gains)]
    if isinstance(real, DDChannelMatrix):
        return real.taps()
    raise TypeError(f"unsupported channel type {type(real).__name__}")


def to_dd_matrix(real, *, cfo_coupling: bool = False, MN: int | None = None) -> DDChannelMatrix:
    """Place each path at ``(delay tap, integer Doppler tap)``.

    Fractional Doppler is assumed compensated. With ``cfo_coupling`` the
    residual phase ``exp(-j 2 pi kappa l / MN)`` left behind by removing a
    common fractional offset ``kappa`` in the time domain is folded into
    each entry; ``MN`` must then be given.
    """
    if isinstance(real, CommChannelRealization):
        kind = ChannelKind.COMM
        ks = [p.doppler_tap for p in real.paths]
        fracs = [p.frac_doppler for p in real.paths]
        ls = [p.delay_tap for p in real.paths]
        coeffs = [c for _, _, c in _path_coefficients(real)]
    elif isinstance(real, SarChannelRealization):
        kind = ChannelKind.SAR
        d = real.delay_taps()
        ls = np.rint(d).astype(int)
        if np.any(np.abs(d - ls) > 1e-6):
            raise ValueError("SAR delays are off the grid at this azimuth time")
        ph = _carrier_phase(real.carrier, real.cell_delays)
        if real.reflectivity_phase is not None:
            ph = ph * real.reflectivity_phase
        coeffs = list(real.cell_gains * ph)
        ks = [real.doppler_tap] * real.cells
        fracs = [real.frac_doppler] * real.cells
        ls = list(ls)
    else:
        raise TypeError(f"unsupported channel type {type(real).__name__}")
    if any(k < 0 for k in ks):
        raise ValueError("negative Doppler taps are not representable")
    H = np.zeros((max(ls) + 1, max(ks) + 1), dtype=complex)
    for l, k, kap, c in zip(ls, ks, fracs, coeffs):
        if cfo_coupling:
            if MN is None:
                raise ValueError("MN is required for the CFO coupling phase")
            c = c * np.exp(-2j * np.pi * kap * l / MN)
        H[l, k] += c
    return DDChannelMatrix(H, kind)


# --------------------------------------------------------------------------
# Applying channels
# --------------------------------------------------------------------------


def apply_dd_channel(X, H: DDChannelMatrix, sigma2: float = 0.0, rng=None) -> np.ndarray:
    """Exact DD-domain input-output relation.

    ``Y[m, n] = sum_{l,k} H[l,k] X[(m-l)_M, (n-k)_N] e^{j2pi k (m-l)/MN} gamma``
    with ``gamma = e^{-j2pi (n-k)_N / N}`` on the wrapped rows ``m < l``.
    """
    X = np.asarray(X, dtype=complex)
    M, N = X.shape
    if H.max_delay_tap >= M or H.max_doppler_tap >= N:
        raise ValueError(f"channel taps exceed the {M}x{N} grid")
    m = np.arange(M)[:, None]
    n = np.arange(N)[None, :]
    Y = np.zeros_like(X)
    for l, k, h in H.taps():
        l, k = int(l), int(k)
        shifted = np.roll(X, (l, k), axis=(0, 1))
        phase = np.exp(2j * np.pi * k * (m - l) / (M * N))
        wrap = np.where(m < l, np.exp(-2j * np.pi * ((n - k) % N) / N), 1.0)
        Y += h * shifted * phase * wrap
    if sigma2 > 0:
        Y = Y + awgn(Y.shape, sigma2, rng)
    return Y


def apply_time_channel(seq: TimeSequence, channel, *, extra_doppler: float = 0.0) -> TimeSequence:
    """Integer-delay multipath with per-path Doppler ramps.

    ``r[i] = sum_p c_p s[i - l_p] exp(j 2 pi nu_p (i - l_p) / (M N))``, with
    ``i`` counted from the start of the body, ``nu_p`` in Doppler bins and
    ``c_p`` including the carrier phase. Samples before the start of the
    prefix are zero. ``extra_doppler`` (bins) is added to every path.
    """
    os_ = seq.oversample
    body_len = len(seq) - seq.cp_samples
    MN = body_len // os_
    s = seq.samples
    r = np.zeros_like(s, dtype=complex)
    t = (np.arange(len(seq)) - seq.cp_samples) / os_
    for delay, nu, c in _path_coefficients(channel):
        ds = delay * os_
        if abs(ds - round(ds)) > 1e-9:
            raise ValueError("apply_time_channel handles integer delays only")
        ds = int(round(ds))
        if ds > seq.cp_samples:
            raise ValueError(f"delay of {delay} bins exceeds the cyclic prefix")
        delayed = np.zeros_like(r)
        delayed[ds:] = s[: len(s) - ds] if ds else s
        r += c * delayed * np.exp(2j * np.pi * (nu + extra_doppler) * (t - delay) / MN)
    return TimeSequence(r, seq.cp_len, os_)


def fractional_delay_response(n: int, delays, rolloff: float | None = None) -> np.ndarray:
    """Per-bin response of delays ``d`` (bins) on an ``n``-point critical-rate DFT grid.

    Without ``rolloff`` this is the ideal band-limited delay
    ``exp(-j 2 pi f d)`` with ``f`` in ``[-1/2, 1/2)``. With ``rolloff`` it
    is the response seen through square-root raised-cosine shaping and
    matched filtering, ``sum_i RC(f + i) exp(-j 2 pi (f + i) d)``; integer
    delays give exact circular shifts either way. Output shape is
    ``(len(delays), n)``.
    """
    d = np.atleast_1d(np.asarray(delays, dtype=float))[:, None]
    f = np.fft.fftfreq(n)[None, :]
    if rolloff is None or rolloff == 0:
        return np.exp(-2j * np.pi * f * d)
    out = np.zeros((d.shape[0], n), dtype=complex)
    for i in (-1, 0, 1):
        fi = f + i
        out += _raised_cosine(fi, rolloff) * np.exp(-2j * np.pi * fi * d)
    return out


# --------------------------------------------------------------------------
# CFO and noise
# --------------------------------------------------------------------------


def cfo_estimate_cp(r: TimeSequence, doppler_res: float = 1.0, skip: int = 0) -> float:
    """Fractional carrier offset from prefix/tail correlation.

    The result lies in ``[-F/2, F/2)`` and is returned in the units of
    ``doppler_res`` (Hz when ``F`` is given in Hz). ``skip`` leading
    prefix samples (critical-rate count) are ignored, e.g. those
    contaminated by the previous signal's delay spread.
    """
    if r.cp_len < 1:
        raise ValueError("CFO estimation needs a cyclic prefix")
    os_ = r.oversample
    start = skip * os_
    n_cp = r.cp_samples
    cp = r.samples[start:n_cp]
    tail = r.samples[len(r) - n_cp + start:]
    corr = np.vdot(cp, tail)
    if abs(corr) == 0:
        raise ValueError("cyclic prefix has no energy")
    frac = np.angle(corr) / (2.0 * np.pi)
    if frac >= 0.5:
        frac -= 1.0
    return float(frac * doppler_res)


def cfo_compensate(r: TimeSequence, offset: float, doppler_res: float = 1.0) -> TimeSequence:
    """Remove ``exp(j 2 pi offset t)`` with ``t = 0`` at the start of the body."""
    os_ = r.oversample
    MN = (len(r) - r.cp_samples) / os_
    t = (np.arange(len(r)) - r.cp_samples) / os_
    ramp = np.exp(-2j * np.pi * (offset / doppler_res) * t / MN)
    return TimeSequence(r.samples * ramp, r.cp_len, os_)


def awgn(shape, sigma2: float, rng) -> np.ndarray:
    """Circular complex Gaussian noise with per-entry variance ``sigma2``."""
    if sigma2 < 0:
        raise ValueError("noise variance must be non-negative")
    if rng is None:
        raise ValueError("noise generation needs an rng")
    s = math.sqrt(sigma2 / 2.0)
    return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"re": obj.real.tolist(), "im": obj.imag.tolist()}
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dump_realization(real, path=None) -> str:
    """Serialise a channel realization to JSON (written to ``path`` if given)."""
    if isinstance(real, DDChannelMatrix):
        payload = {"type": "dd_matrix", "kind": real.kind.value,
                   "taps": [{"l": l, "k": int(k), "re": c.real, "im": c.imag} for l, k, c in real.taps()],
                   "shape": list(real.entries.shape)}
    else:
        payload = {"type": type(real).__name__, **_jsonable(asdict(real))}
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text
