"""Run configuration: one schema shared by TOML and JSON files.

Sections are ``[grid]``, ``[frame]``, ``[geometry]``, ``[link]``, plus
``[comm]``, ``[sweep]``, ``[scheme]`` and ``[sar]`` for the experiments.
Angles are given in degrees (``*_deg`` keys) and gains/powers in dB
(``*_dbi``, ``*_dbm``, ``*_dbw``); everything is converted to radians and
linear units here. See ``presets/table2_sub6.toml`` for a complete file.
"""
from __future__ import annotations

import copy
import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigError
from .grid_frame import (
    DDGridConfig,
    FrameConfig,
    LinkBudget,
    SarGeometry,
    db_to_linear,
    dbm_to_watt,
    derive_grid,
)

__all__ = [
    "PRESETS",
    "CommConfig",
    "SweepConfig",
    "SchemeConfig",
    "SarConfig",
    "RunConfig",
    "load_config",
    "load_preset",
    "parse_config",
    "preset_path",
]

PRESETS = ("table2_sub6", "table3_mmwave")


@dataclass(frozen=True)
class CommConfig:
    nlos_paths: int = 4
    max_delay_tap: int = 16
    device_doppler_hz: float = 0.0
    guard: int = 4
    qam_order: int = 4

    def __post_init__(self):
        if self.nlos_paths < 0 or self.max_delay_tap < 0 or self.guard < 0:
            raise ConfigError("path count, delay span and guard must be non-negative")


@dataclass(frozen=True)
class SweepConfig:
    snr_db: tuple[float, ...] = (0.0, 10.0, 20.0, 30.0)
    trials: int = 100
    max_trials: int = 1000
    target_errors: int = 100

    def __post_init__(self):
        if not self.snr_db:
            raise ConfigError("SNR list must not be empty")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.max_trials < self.trials:
            raise ConfigError("max_trials must be at least trials")


@dataclass(frozen=True)
class SchemeConfig:
    waveforms: tuple[str, ...] = ("oddm", "ofdm")
    coding: tuple[str, ...] = ("uncoded", "coded")
    genie_cfo: bool = True
    interleave: bool = True
    oversample: int = 1

    def __post_init__(self):
        bad = set(self.waveforms) - {"oddm", "ofdm"}
        if bad or not self.waveforms:
            raise ConfigError(f"unknown waveform(s) {sorted(bad)}")
        bad = set(self.coding) - {"uncoded", "coded"}
        if bad or not self.coding:
            raise ConfigError(f"unknown coding option(s) {sorted(bad)}")
        if self.oversample < 1:
            raise ConfigError("oversampling factor must be positive")


@dataclass(frozen=True)
class SarConfig:
    guard: int = 6
    decimation: int = 1
    rolloff: float = 0.1
    snr_db: float = 10.0
    scene: str = "demo_scene.csv"

    def __post_init__(self):
        if self.decimation < 1:
            raise ConfigError("azimuth decimation must be positive")


@dataclass(frozen=True)
class RunConfig:
    name: str
    grid: DDGridConfig
    frame: FrameConfig
    geometry: SarGeometry
    link: LinkBudget
    comm: CommConfig = field(default_factory=CommConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    scheme: SchemeConfig = field(default_factory=SchemeConfig)
    sar: SarConfig = field(default_factory=SarConfig)
    seed: int = 0
    source: dict = field(default_factory=dict, repr=False, compare=False)
    base_dir: Path | None = field(default=None, repr=False, compare=False)

    def with_overrides(self, **kw) -> "RunConfig":
        """Replace top-level fields or ``section__field`` entries."""
        top = {}
        nested: dict[str, dict] = {}
        for key, value in kw.items():
            if value is None:
                continue
            if "__" in key:
                sec, name = key.split("__", 1)
                nested.setdefault(sec, {})[name] = value
            else:
                top[key] = value
        for sec, vals in nested.items():
            try:
                top[sec] = replace(getattr(self, sec), **vals)
            except TypeError as exc:
                raise ConfigError(str(exc)) from None
        return replace(self, **top)

    def scene_path(self) -> Path:
        p = Path(self.sar.scene)
        if p.is_absolute() or p.exists():
            return p
        if self.base_dir is not None and (self.base_dir / p).exists():
            return self.base_dir / p
        return Path(str(resources.files("oddmsar") / "presets" / p))

    def to_dict(self) -> dict:
        """Resolved configuration for echo files (SI units, radians)."""
        out = {"name": self.name, "seed": self.seed}
        for sec in ("grid", "frame", "geometry", "link", "comm", "sweep", "scheme", "sar"):
            out[sec] = asdict(getattr(self, sec))
        return out


def _section(data: dict, name: str, required: bool = True) -> dict:
    sec = data.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"missing [{name}] section")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return dict(sec)


def _pop(sec: dict, name: str, key: str, default=None, cast=float):
    if key not in sec:
        if default is None:
            raise ConfigError(f"[{name}] is missing '{key}'")
        return default
    try:
        return cast(sec.pop(key))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{name}] {key}: {exc}") from None


def _no_leftovers(sec: dict, name: str):
    if sec:
        raise ConfigError(f"[{name}] has unknown key(s): {', '.join(sorted(sec))}")


def parse_config(data: dict, base_dir: Path | None = None) -> RunConfig:
    """Build a :class:`RunConfig` from a parsed TOML/JSON mapping."""
    source = copy.deepcopy(data)
    data = copy.deepcopy(data)
    g = _section(data, "grid")
    mu = _pop(g, "grid", "numerology", cast=int)
    F0 = _pop(g, "grid", "ref_freq_hz")
    M = _pop(g, "grid", "M", cast=int)
    N = _pop(g, "grid", "N", cast=int)
    _no_leftovers(g, "grid")
    grid = derive_grid(mu, F0, M, N)
    if N % 2:
        raise ConfigError("N must be even")

    f = _section(data, "frame")
    frame = FrameConfig(
        frame_len=_pop(f, "frame", "frame_len_s", 10e-3),
        ref_freq=F0,
        numerology=mu,
        pilot_period=_pop(f, "frame", "pilot_period", 1, int),
        signals_per_slot=_pop(f, "frame", "signals_per_slot", 14, int),
    )
    _no_leftovers(f, "frame")

    ln = _section(data, "link")
    carrier = _pop(ln, "link", "carrier_hz")

    ge = _section(data, "geometry")
    geometry = SarGeometry.build(
        altitude=_pop(ge, "geometry", "altitude_m"),
        velocity=_pop(ge, "geometry", "velocity_mps"),
        squint=math.radians(_pop(ge, "geometry", "squint_deg")),
        grazing=math.radians(_pop(ge, "geometry", "grazing_deg")),
        swath=_pop(ge, "geometry", "swath_m"),
        aperture=_pop(ge, "geometry", "aperture_m"),
        range_cells=_pop(ge, "geometry", "range_cells", cast=int),
        bandwidth=grid.bandwidth,
        carrier=carrier,
    )
    _no_leftovers(ge, "geometry")

    link = LinkBudget(
        carrier=carrier,
        distance=_pop(ln, "link", "distance_m", geometry.center_range),
        sat_gain=db_to_linear(_pop(ln, "link", "sat_gain_dbi")),
        user_gain=db_to_linear(_pop(ln, "link", "user_gain_dbi")),
        rain_mu=_pop(ln, "link", "rain_mu_db"),
        rain_sigma2=_pop(ln, "link", "rain_sigma2_db"),
        rician_k=_pop(ln, "link", "rician_k"),
        noise_var=dbm_to_watt(_pop(ln, "link", "noise_dbm")),
        tx_power=db_to_linear(_pop(ln, "link", "tx_power_dbw")),
    )
    _no_leftovers(ln, "link")

    def build(cls, name, conv=None):
        sec = _section(data, name, required=False)
        if conv:
            sec = conv(sec)
        try:
            return cls(**sec)
        except TypeError as exc:
            raise ConfigError(f"[{name}]: {exc}") from None

    comm = build(CommConfig, "comm")
    sweep = build(SweepConfig, "sweep", lambda s: {**s, **({"snr_db": tuple(float(x) for x in s["snr_db"])} if "snr_db" in s else {})})
    scheme = build(SchemeConfig, "scheme", lambda s: {
        **s,
        **({"waveforms": tuple(s["waveforms"])} if "waveforms" in s else {}),
        **({"coding": tuple(s["coding"])} if "coding" in s else {}),
    })
    sar = build(SarConfig, "sar")
    if 2 * comm.guard + 1 > N or 2 * sar.guard + 1 > N:
        raise ConfigError(f"pilot guard does not fit in N={N}")

    name = str(data.pop("name", "custom"))
    seed = int(data.pop("seed", 0))
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    for sec in ("grid", "frame", "geometry", "link", "comm", "sweep", "scheme", "sar"):
        data.pop(sec, None)
    _no_leftovers(data, "top level")
    return RunConfig(name, grid, frame, geometry, link, comm, sweep, scheme, sar, seed, source, base_dir)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            data = tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data, path.parent)


def preset_path(name: str) -> Path:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return Path(str(resources.files("oddmsar") / "presets" / f"{name}.toml"))


def load_preset(name: str) -> RunConfig:
    return load_config(preset_path(name))
