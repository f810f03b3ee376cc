"""Delay-Doppler grid, 5G-NR style frame layout, SAR geometry and link budget.

All angles are radians; :mod:`oddmsar.config` converts degrees at the file
boundary.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.constants import speed_of_light as C

from .errors import ConfigError

__all__ = [
    "C",
    "DDGridConfig",
    "FrameConfig",
    "SarGeometry",
    "LinkBudget",
    "SignalKind",
    "derive_grid",
    "prf",
    "prf_bounds",
    "min_numerology",
    "azimuth_resolution",
    "range_cells_from_swath",
    "slot_schedule",
    "db_to_linear",
    "dbm_to_watt",
]


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def dbm_to_watt(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class DDGridConfig:
    """M delay bins by N Doppler bins.

    ``delay_res`` is the delay resolution T, ``doppler_res`` the Doppler
    resolution F, ``T0 = M T = 1/(N F)`` the subpulse spacing and
    ``sample_interval = T0 / M`` the critical sampling interval.
    """

    M: int
    N: int
    doppler_res: float
    delay_res: float
    T0: float
    sample_interval: float
    bandwidth: float

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ConfigError(f"grid dimensions must be positive, got M={self.M}, N={self.N}")
        if not math.isclose(self.T0, 1.0 / (self.N * self.doppler_res), rel_tol=1e-12):
            raise ConfigError("T0 must equal 1/(N F)")
        if not math.isclose(self.T0, self.M * self.delay_res, rel_tol=1e-12):
            raise ConfigError("T0 must equal M T")

    @property
    def joint_resolution(self) -> float:
        return self.delay_res * self.doppler_res

    @property
    def range_res(self) -> float:
        return C / (2.0 * self.bandwidth)

    @property
    def duration(self) -> float:
        """Length of one ODDM signal body, ``N T0``."""
        return self.N * self.T0

    def doppler_taps(self, doppler_hz: float) -> tuple[int, float]:
        """Split a Doppler shift into (integer tap, fractional remainder)."""
        x = doppler_hz / self.doppler_res
        k = int(round(x))
        return k, x - k


def derive_grid(mu: int, F0: float, M: int, N: int) -> DDGridConfig:
    if mu < 0:
        raise ConfigError(f"numerology must be non-negative, got {mu}")
    if F0 <= 0:
        raise ConfigError(f"reference frequency must be positive, got {F0}")
    if M < 1 or N < 1:
        raise ConfigError(f"grid dimensions must be positive, got M={M}, N={N}")
    F = (2**mu) * F0
    T0 = 1.0 / (N * F)
    return DDGridConfig(
        M=M,
        N=N,
        doppler_res=F,
        delay_res=T0 / M,
        T0=T0,
        sample_interval=T0 / M,
        bandwidth=M * N * F,
    )


@dataclass(frozen=True)
class FrameConfig:
    frame_len: float = 10e-3
    ref_freq: float = 15e3
    numerology: int = 1
    pilot_period: int = 1
    signals_per_slot: int = 14

    def __post_init__(self):
        if self.frame_len <= 0 or self.ref_freq <= 0:
            raise ConfigError("frame length and reference frequency must be positive")
        if self.numerology < 0:
            raise ConfigError("numerology must be non-negative")
        if self.pilot_period < 1 or self.signals_per_slot < 1:
            raise ConfigError("pilot period and signals per slot must be positive")
        if self.signals_per_slot > self.max_signals_per_slot:
            raise ConfigError(
                f"{self.signals_per_slot} signals per slot exceeds the bound "
                f"{self.max_signals_per_slot}"
            )
        if self.slots % self.pilot_period:
            raise ConfigError(
                f"pilot period {self.pilot_period} must divide the {self.slots} slots per frame"
            )

    @property
    def slots(self) -> int:
        return 10 * 2**self.numerology

    @property
    def doppler_res(self) -> float:
        return 2**self.numerology * self.ref_freq

    @property
    def max_signals_per_slot(self) -> int:
        # small epsilon: 0.01/10 * 15e3 evaluates to 14.999999999999998
        return math.floor(self.frame_len / 10.0 * self.ref_freq + 1e-9)

    def with_numerology(self, mu: int) -> "FrameConfig":
        return FrameConfig(
            self.frame_len, self.ref_freq, mu, self.pilot_period, self.signals_per_slot
        )


@dataclass(frozen=True)
class SarGeometry:
    altitude: float
    velocity: float
    squint: float
    grazing: float
    swath: float
    aperture: float
    first_cell_range: float
    center_range: float
    range_cells: int
    range_res: float
    azimuth_res: float
    synthetic_aperture: float

    @classmethod
    def build(
        cls,
        altitude: float,
        velocity: float,
        squint: float,
        grazing: float,
        swath: float,
        aperture: float,
        range_cells: int,
        bandwidth: float,
        carrier: float,
    ) -> "SarGeometry":
        """Derive the dependent quantities from primary parameters.

        The beam-centre slant range is ``H / sin(grazing)`` and the first
        cell is placed so that the cell ranges average to it. ``azimuth_res``
        is evaluated at ``carrier``.
        """
        if range_cells < 1:
            raise ConfigError("range_cells must be positive")
        if bandwidth <= 0 or carrier <= 0:
            raise ConfigError("bandwidth and carrier must be positive")
        rc = altitude / math.sin(grazing)
        rho_r = C / (2.0 * bandwidth)
        r0 = rc - 0.5 * (range_cells - 1) * rho_r
        t_syn = aperture / velocity if velocity > 0 else math.inf
        rho_a = 0.886 * C * rc / (2.0 * carrier * aperture)
        return cls(
            altitude=altitude,
            velocity=velocity,
            squint=squint,
            grazing=grazing,
            swath=swath,
            aperture=aperture,
            first_cell_range=r0,
            center_range=rc,
            range_cells=range_cells,
            range_res=rho_r,
            azimuth_res=rho_a,
            synthetic_aperture=t_syn,
        )

    @property
    def cell_ranges(self) -> np.ndarray:
        return self.first_cell_range + np.arange(self.range_cells) * self.range_res


@dataclass(frozen=True)
class LinkBudget:
    carrier: float
    distance: float
    sat_gain: float
    user_gain: float
    rain_mu: float
    rain_sigma2: float
    rician_k: float
    noise_var: float
    tx_power: float

    def __post_init__(self):
        for name in ("carrier", "distance", "sat_gain", "user_gain", "noise_var", "tx_power"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.rician_k < 0:
            raise ConfigError("Rician factor must be non-negative")
        if self.rain_sigma2 < 0:
            raise ConfigError("rain variance must be non-negative")


def prf(frame: FrameConfig) -> float:
    return 10 * 2**frame.numerology / (frame.pilot_period * frame.frame_len)


def azimuth_resolution(geo: SarGeometry, f0: float) -> float:
    if geo.center_range <= 0 or geo.aperture <= 0:
        raise ConfigError("centre range and aperture must be positive")
    return 0.886 * C * geo.center_range / (2.0 * f0 * geo.aperture)


def prf_bounds(geo: SarGeometry, frame: FrameConfig, strict: bool = False) -> tuple[float, float]:
    """Azimuth-sampling lower bound and swath-echo upper bound on the PRF.

    An infeasible pair raises :class:`ConfigError` when ``strict``;
    otherwise a :class:`RuntimeWarning` is issued and the pair returned.
    """
    if geo.azimuth_res <= 0:
        raise ConfigError("azimuth resolution must be positive")
    lo = geo.velocity * math.cos(geo.squint) / geo.azimuth_res
    hi = 1.0 / (
        2.0 * geo.swath * math.cos(geo.grazing) / C
        + frame.frame_len / (frame.slots * frame.signals_per_slot)
    )
    if lo > hi:
        msg = f"PRF window empty: PRF_min={lo:.1f} Hz > PRF_max={hi:.1f} Hz"
        if strict:
            raise ConfigError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return lo, hi


def min_numerology(geo: SarGeometry, n0: int, L0: float) -> int:
    arg = n0 * L0 * geo.velocity * math.cos(geo.squint) / (10.0 * geo.azimuth_res)
    if arg <= 0:
        return 0
    return max(0, math.ceil(math.log2(arg) - 1e-12))


def range_cells_from_swath(swath: float, range_res: float, grazing: float) -> int:
    """Cell count implied by the swath, ``(Rw / rho_r) cos(grazing)``.

    Kept apart from :class:`SarGeometry`: published scenarios do not always
    honour it, so callers decide whether to use it.
    """
    return int(round(swath / range_res * math.cos(grazing)))


class SignalKind(str, enum.Enum):
    SHARED_PILOT = "pilot"
    DATA = "data"


def slot_schedule(frame: FrameConfig) -> list[list[SignalKind]]:
    """Layout of one frame as ``slots`` rows of ``signals_per_slot`` entries.

    The first signal of every ``pilot_period``-th slot is the shared pilot.
    """
    rows = []
    for slot in range(frame.slots):
        row = [SignalKind.DATA] * frame.signals_per_slot
        if slot % frame.pilot_period == 0:
            row[0] = SignalKind.SHARED_PILOT
        rows.append(row)
    return rows


def pilot_count(schedule: list[list[SignalKind]]) -> int:
    return sum(row.count(SignalKind.SHARED_PILOT) for row in schedule)
