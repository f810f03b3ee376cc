"""Seeded Monte Carlo experiments and their file outputs.

Every trial draws its randomness from ``SeedSequence(seed, spawn_key=(point,
trial))``, so results do not depend on how trials are grouped into chunks
or spread over worker processes. SNR is ``Pr / sigma^2`` with the channel
normalised to unit average power (``g = 1``); raising the transmit power at
fixed noise and lowering the noise at unit power are the same experiment,
and the sweeps do the latter.
"""
from __future__ import annotations

import csv
import functools
import io
import json
import math
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .channel import (
    CommChannelRealization,
    Scene,
    apply_dd_channel,
    apply_time_channel,
    awgn,
    cfo_compensate,
    cfo_estimate_cp,
    read_scene,
    sample_comm_channel,
    sar_channel_from_scene,
    to_dd_matrix,
)
from .coding import CodingConfig, coded_length, conv_encode, deinterleave, interleave, viterbi_decode
from .config import RunConfig
from .equalizer import EqualizerInput, mmse_equalize, ofdm_mmse_equalize
from .errors import ConfigError
from .grid_frame import min_numerology, pilot_count, prf, prf_bounds, slot_schedule
from .io import write_iq, write_matrix_csv, write_pgm
from .sar import (
    azimuth_compress,
    lfm_baseline,
    lfm_echoes,
    lfm_range_compress,
    oversample_profile,
    point_spread,
    range_reconstruct,
    rcmc,
    simulate_echoes,
)
from .sensing import (
    PilotPattern,
    embed_pilot,
    extract_pilot_block,
    pad_truth,
    pn_sensing_baseline,
    pn_sequence,
    sense_channel,
    sensing_mse,
    strongest_doppler,
    zc_sequence,
)
from .waveform import (
    QamConfig,
    TimeSequence,
    add_cp,
    ddop_pulse,
    matched_filter,
    oddm_demodulate,
    oddm_modulate,
    ofdm_demodulate,
    ofdm_modulate,
    pulse_shape,
    qam_demap,
    qam_map,
    remove_cp,
)

__all__ = [
    "MetricRecord",
    "BerPoint",
    "provenance",
    "trial_rng",
    "run_mse_sweep",
    "run_ber_sweep",
    "snr_at_ber",
    "ber_gap",
    "run_sar_demo",
    "frame_plan",
    "records_to_csv",
    "ber_points_to_csv",
]

CHUNK = 25
# LFM range profiles are flagged as distorted when the normalised magnitude
# moves by more than this much anywhere once Doppler is switched on
DISTORTION_THRESHOLD = 0.1


@dataclass(frozen=True)
class MetricRecord:
    scheme: str
    snr_db: float
    metric: str
    value: float
    trials: int
    stderr: float
    seed: int = 0
    provenance: str = "unknown"

    def __post_init__(self):
        if not self.stderr >= 0:
            raise ValueError("standard error must be non-negative")


@dataclass(frozen=True)
class BerPoint:
    scheme: str
    coded: bool
    snr_db: float
    trials: int
    bits: int
    errors: int

    @property
    def ber(self) -> float:
        return self.errors / self.bits if self.bits else float("nan")

    @property
    def stderr(self) -> float:
        p = self.ber
        return math.sqrt(p * (1 - p) / self.bits) if self.bits else float("nan")


@functools.lru_cache(maxsize=1)
def provenance() -> str:
    """``git describe`` of the source tree, or ``unknown`` outside a checkout."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=10,
            check=True,
        )
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def trial_rng(seed: int, point: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(point, trial)))


def _sigma2(snr_db: float) -> float:
    return 10.0 ** (-snr_db / 10.0)


def _draw_channel(cfg: RunConfig, rng) -> CommChannelRealization:
    return sample_comm_channel(
        cfg.link,
        cfg.comm.nlos_paths,
        cfg.comm.max_delay_tap,
        cfg.grid,
        cfg.geometry,
        rng,
        device_doppler=cfg.comm.device_doppler_hz,
        g=1.0,
    )


# --------------------------------------------------------------------------
# Sensing MSE
# --------------------------------------------------------------------------


def run_mse_sweep(cfg: RunConfig, trials: int | None = None) -> list[MetricRecord]:
    """Sensing MSE of the ZC pilot, a PN-pilot correlator and the closed form.

    Each trial draws a channel, applies the genie fractional-CFO removal and
    senses it from a pilot-only grid; the PN pilot is sent through the same
    channel with fresh noise.
    """
    trials = cfg.sweep.trials if trials is None else trials
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    M, N = cfg.grid.M, cfg.grid.N
    K = cfg.comm.guard
    zc = PilotPattern.zadoff_chu(M, N, K)
    prov = provenance()
    out = []
    for p, snr in enumerate(cfg.sweep.snr_db):
        s2 = _sigma2(snr)
        err_zc = np.empty(trials)
        err_pn = np.empty(trials)
        for t in range(trials):
            rng = trial_rng(cfg.seed, p, t)
            real = _draw_channel(cfg, rng)
            H = to_dd_matrix(real, cfo_coupling=True, MN=M * N)
            if H.max_doppler_tap > K:
                raise ConfigError(f"Doppler tap {H.max_doppler_tap} exceeds the pilot guard {K}")
            truth = pad_truth(H, M, K)
            pn = PilotPattern(pn_sequence(M, rng), K, N)
            YP = extract_pilot_block(apply_dd_channel(embed_pilot(np.zeros((M, N)), zc), H, s2, rng), zc)
            err_zc[t] = sensing_mse(sense_channel(YP, zc, s2), truth)
            YP = extract_pilot_block(apply_dd_channel(embed_pilot(np.zeros((M, N)), pn), H, s2, rng), pn)
            err_pn[t] = sensing_mse(pn_sensing_baseline(YP, pn, s2), truth)
        for name, e in (("proposed", err_zc), ("pn", err_pn)):
            se = float(e.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
            out.append(MetricRecord(name, float(snr), "mse", float(e.mean()), trials, se, cfg.seed, prov))
        out.append(MetricRecord("closed_form", float(snr), "mse", s2 * zc.noise_gain(), trials, 0.0,
                                cfg.seed, prov))
    return out


# --------------------------------------------------------------------------
# BER
# --------------------------------------------------------------------------


def _message_bits(capacity: int, cfg: CodingConfig) -> int:
    """Longest message whose terminated codeword fits in ``capacity`` bits."""
    n = int(capacity * cfg.rate) - cfg.memory
    while n > 0 and coded_length(n, cfg) > capacity:
        n -= 1
    if n < 1:
        raise ConfigError("frame too small for a terminated codeword")
    return n


def _transmit(seq: TimeSequence, real, pulse, sigma2: float, rng, *, extra_doppler: float = 0.0):
    cp = seq.cp_len
    tx = pulse_shape(seq, pulse) if pulse is not None else seq
    rx = apply_time_channel(tx, real, extra_doppler=extra_doppler)
    rx = TimeSequence(rx.samples + awgn(rx.samples.shape, sigma2, rng),
                      cp, rx.oversample)
    return matched_filter(rx, pulse) if pulse is not None else rx


def _remove_cfo(rx: TimeSequence, frac: float | None, skip: int) -> TimeSequence:
    off = cfo_estimate_cp(rx, skip=skip) if frac is None else frac
    return cfo_compensate(rx, off)


class _BerTrial:
    """One frame of a waveform/coding combination; returns hard bits."""

    def __init__(self, cfg: RunConfig, waveform: str, coded: bool):
        self.cfg = cfg
        self.waveform = waveform
        self.coded = coded
        g = cfg.grid
        self.M, self.N = g.M, g.N
        self.MN = g.M * g.N
        self.qam = QamConfig(cfg.comm.qam_order)
        self.capacity = self.MN * self.qam.bits_per_symbol
        self.code = CodingConfig()
        self.n_msg = _message_bits(self.capacity, self.code) if coded else self.capacity
        self.L = cfg.comm.max_delay_tap
        self.cp = max(self.L, 1) + 1
        os_ = cfg.scheme.oversample
        self.pulse = ddop_pulse(0.1, 8, os_) if os_ > 1 else None
        self.pattern = PilotPattern.zadoff_chu(self.M, self.N, cfg.comm.guard)
        self.ofdm_pilot = zc_sequence(self.MN, 1)

    def bits_on_air(self, msg):
        if not self.coded:
            return msg
        cw = conv_encode(msg, self.code)
        if self.cfg.scheme.interleave:
            cw = interleave(cw, self.cfg.seed)
        return cw

    def run(self, p: int, t: int, snr: float):
        cfg = self.cfg
        rng = trial_rng(cfg.seed, p, t)
        real = _draw_channel(cfg, rng)
        s2 = _sigma2(snr)
        msg = rng.integers(0, 2, self.n_msg, dtype=np.uint8)
        air = self.bits_on_air(msg)
        pad = rng.integers(0, 2, self.capacity - air.size, dtype=np.uint8)
        syms = qam_map(np.concatenate([air, pad]), self.qam)
        genie = cfg.scheme.genie_cfo
        if self.waveform == "oddm":
            est = self._oddm(syms, real, s2, rng, genie)
        else:
            est = self._ofdm(syms, real, s2, rng, genie)
        hard = qam_demap(est, self.qam)[: air.size]
        return msg, hard

    def _oddm(self, syms, real, s2, rng, genie):
        M, N = self.M, self.N
        frac = real.common_frac_doppler if genie else None
        pilot = add_cp(oddm_modulate(embed_pilot(np.zeros((M, N)), self.pattern)), self.cp)
        rp = _remove_cfo(_transmit(pilot, real, self.pulse, s2, rng), frac, self.L)
        Yp = oddm_demodulate(remove_cp(rp), M, N)
        csi = sense_channel(extract_pilot_block(Yp, self.pattern), self.pattern, s2)
        kc = strongest_doppler(csi)
        h = csi.column(kc).copy()
        h[self.L + 1:] = 0  # delay spread is known to be at most L taps
        data = add_cp(oddm_modulate(syms.reshape(M, N, order="F")), self.cp)
        rd = _remove_cfo(_transmit(data, real, self.pulse, s2, rng), frac, self.L)
        Y = oddm_demodulate(remove_cp(rd), M, N)
        X = mmse_equalize(EqualizerInput(Y, h, kc, s2))
        return X.reshape(-1, order="F")

    def _ofdm(self, syms, real, s2, rng, genie):
        # the integer part of the common Doppler is taken as known from
        # ephemeris; the fraction is either genie or estimated from the CP
        k = real.common_doppler_tap
        frac = real.common_frac_doppler if genie else None
        rp = _transmit(add_cp(ofdm_modulate(self.ofdm_pilot), self.cp), real, self.pulse, s2, rng,
                       extra_doppler=-k)
        rp = _remove_cfo(rp, frac, self.L)
        Hp = ofdm_demodulate(remove_cp(rp)) / self.ofdm_pilot
        ht = np.fft.ifft(Hp)
        ht[self.L + 1:] = 0
        Hf = np.fft.fft(ht)
        rd = _transmit(add_cp(ofdm_modulate(syms), self.cp), real, self.pulse, s2, rng, extra_doppler=-k)
        rd = _remove_cfo(rd, frac, self.L)
        return ofdm_mmse_equalize(ofdm_demodulate(remove_cp(rd)), Hf, s2)

    def decode(self, hard):
        if not self.coded:
            return hard
        if self.cfg.scheme.interleave:
            hard = deinterleave(hard, self.cfg.seed)
        return viterbi_decode(hard, self.code)


def _run_chunk(cfg: RunConfig, waveform: str, coded: bool, p: int, snr: float, start: int, stop: int):
    trial = _BerTrial(cfg, waveform, coded)
    msgs, hards = [], []
    for t in range(start, stop):
        m, h = trial.run(p, t, snr)
        msgs.append(m)
        hards.append(h)
    dec = trial.decode(np.stack(hards))
    return int(np.count_nonzero(dec != np.stack(msgs))), int(dec.size)


def run_ber_sweep(cfg: RunConfig, *, trials: int | None = None, max_trials: int | None = None,
                  target_errors: int | None = None, workers: int = 1,
                  progress=None) -> list[BerPoint]:
    """BER curves for every configured waveform and coding option.

    Trials run in chunks of ``CHUNK``. A point stops at the first chunk
    boundary where at least ``trials`` frames were run and either
    ``target_errors`` bit errors were seen or ``max_trials`` was reached.
    Chunks may be spread over ``workers`` processes without changing the
    result. Curves stop early once a point records no errors at all.
    """
    trials = cfg.sweep.trials if trials is None else trials
    max_trials = max(trials, cfg.sweep.max_trials if max_trials is None else max_trials)
    target = cfg.sweep.target_errors if target_errors is None else target_errors
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    points = []
    try:
        for waveform in cfg.scheme.waveforms:
            for coding in cfg.scheme.coding:
                coded = coding == "coded"
                for p, snr in enumerate(cfg.sweep.snr_db):
                    errors = bits = done = 0
                    while done < max_trials:
                        bounds = []
                        lo = done
                        for _ in range(max(workers, 1)):
                            if lo >= max_trials:
                                break
                            bounds.append((lo, min(lo + CHUNK, max_trials)))
                            lo = bounds[-1][1]
                        args = [(cfg, waveform, coded, p, snr, a, b) for a, b in bounds]
                        if pool is None:
                            results = [_run_chunk(*a) for a in args]
                        else:
                            results = list(pool.map(_run_chunk, *zip(*args)))
                        stop = False
                        for (a, b), (e, n) in zip(bounds, results):
                            errors += e
                            bits += n
                            done = b
                            if done >= trials and errors >= target:
                                stop = True
                                break
                        if stop:
                            break
                    pt = BerPoint(waveform, coded, float(snr), done, bits, errors)
                    points.append(pt)
                    if progress is not None:
                        progress(pt)
                    if errors == 0:
                        break
    finally:
        if pool is not None:
            pool.shutdown()
    return points


def snr_at_ber(points: list[BerPoint], target: float) -> float:
    """SNR where a curve crosses ``target``, linear in ``log10 BER``.

    Returns ``nan`` when the measured points do not bracket the target.
    """
    pts = sorted((p for p in points if p.errors > 0), key=lambda p: p.snr_db)
    for a, b in zip(pts, pts[1:]):
        if a.ber >= target >= b.ber and a.ber > b.ber:
            la, lb, lt = math.log10(a.ber), math.log10(b.ber), math.log10(target)
            return a.snr_db + (la - lt) / (la - lb) * (b.snr_db - a.snr_db)
    return float("nan")


def ber_gap(points: list[BerPoint], target: float, coded: bool) -> float:
    """OFDM minus ODDM SNR at ``target`` BER (positive when ODDM wins)."""
    sel = {w: [p for p in points if p.scheme == w and p.coded == coded] for w in ("oddm", "ofdm")}
    return snr_at_ber(sel["ofdm"], target) - snr_at_ber(sel["oddm"], target)


# --------------------------------------------------------------------------
# CSV output
# --------------------------------------------------------------------------


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def records_to_csv(records: list[MetricRecord], path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    fields = list(MetricRecord.__dataclass_fields__)
    w.writerow(fields)
    for r in records:
        w.writerow([_fmt(v) for v in asdict(r).values()])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def ber_points_to_csv(points: list[BerPoint], seed: int, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scheme", "coded", "snr_db", "trials", "bits", "errors", "ber", "stderr",
                "seed", "provenance"])
    prov = provenance()
    for p in points:
        w.writerow([p.scheme, int(p.coded), _fmt(p.snr_db), p.trials, p.bits, p.errors,
                    _fmt(p.ber), _fmt(p.stderr), seed, prov])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


# --------------------------------------------------------------------------
# SAR demo
# --------------------------------------------------------------------------


def _normalised(x) -> np.ndarray:
    a = np.abs(np.asarray(x))
    m = a.max(initial=0.0)
    return a / m if m > 0 else a


def run_sar_demo(cfg: RunConfig, scene_file=None, out_dir=None, *, full_image: bool = True) -> dict:
    """Range profiles, a focused image and point-spread metrics for a scene.

    Noise in the noisy profile is set so that the strongest scatterer's raw
    per-sample echo SNR equals ``cfg.sar.snr_db``. Returns a dict with
    ``profiles`` (name -> array over cells), ``image`` and ``raw`` echoes
    (both ``None`` without ``full_image``), ``lfm_distorted`` and ``records``.
    """
    geo, grid, link = cfg.geometry, cfg.grid, cfg.link
    M, N = grid.M, grid.N
    scene = read_scene(scene_file if scene_file is not None else cfg.scene_path(), geo)
    pilot = PilotPattern.zadoff_chu(M, N, cfg.sar.guard)
    rng = trial_rng(cfg.seed, 0, 0)
    ro = cfg.sar.rolloff

    def profile(doppler, sigma2=0.0, sc=scene):
        raw = simulate_echoes(sc, geo, pilot, grid, cfg.frame, link, eta=[0.0], doppler=doppler,
                              sigma2=sigma2, rng=rng, rolloff=ro)
        return range_reconstruct(raw, pilot).profiles[0]

    ref = sar_channel_from_scene(scene, geo, link, grid, 0.0)
    beta_max = float(ref.cell_gains.max(initial=0.0))
    if beta_max > 0:
        s2 = beta_max**2 * pilot.energy / (M * N) / 10.0 ** (cfg.sar.snr_db / 10.0)
    else:
        # empty scene: use the noise level a unit-RCS cell at mid-swath would see
        unit = Scene.points(geo.range_cells, [geo.range_cells // 2], [1.0])
        b = float(sar_channel_from_scene(unit, geo, link, grid, 0.0).cell_gains.max())
        s2 = b**2 * pilot.energy / (M * N) / 10.0 ** (cfg.sar.snr_db / 10.0)
    doppler_hz = (ref.doppler_tap + ref.frac_doppler) * grid.doppler_res

    profiles = {
        "rcs_norm": _normalised(scene.rcs),
        "proposed": profile(False),
        "proposed_doppler": profile(True),
        "proposed_noisy": profile(True, s2),
    }
    lfm = {}
    for name, dop in (("lfm", 0.0), ("lfm_doppler", doppler_hz)):
        ech, chirp = lfm_echoes(scene, geo, grid, link, doppler_hz=dop)
        lfm[name] = lfm_range_compress(ech, chirp, geo.range_cells)[0]
    profiles.update(lfm)
    distortion = float(np.max(np.abs(_normalised(lfm["lfm_doppler"]) - _normalised(lfm["lfm"])))) \
        if np.any(scene.rcs) else 0.0
    lfm_distorted = distortion > DISTORTION_THRESHOLD

    prov = provenance()
    records = []

    def rec(scheme, metric, value):
        records.append(MetricRecord(scheme, float(cfg.sar.snr_db), metric, float(value), 1, 0.0,
                                    cfg.seed, prov))

    # point-spread metrics from an isolated mid-swath target
    q = geo.range_cells // 2
    single = Scene.points(geo.range_cells, [q], [1.0])
    ps = point_spread(profile(True, sc=single), peak_index=q, spacing=geo.range_res)
    rec("proposed", "pslr", ps.pslr_db)
    rec("proposed", "islr", ps.islr_db)
    os_ = 16
    ech, chirp = lfm_echoes(single, geo, grid, link, doppler_hz=0.0)
    pl = point_spread(lfm_range_compress(ech, chirp, geo.range_cells, oversample=os_)[0],
                      spacing=geo.range_res / os_)
    rec("lfm", "pslr", pl.pslr_db)
    rec("lfm", "islr", pl.islr_db)
    rec("lfm_doppler", "distortion", distortion)

    truth = np.abs(sar_channel_from_scene(scene, geo, link, grid, 0.0).cell_gains)
    if beta_max > 0:
        err = np.max(np.abs(np.abs(profiles["proposed_doppler"]) - truth)) / beta_max
        rec("proposed", "recon_error", err)
        sig = np.abs(profiles["proposed_noisy"][truth > 0]) ** 2
        noise = np.abs(profiles["proposed_noisy"][truth == 0]) ** 2
        if noise.size and noise.mean() > 0:
            rec("proposed", "sinr", 10 * math.log10(np.max(sig) / noise.mean()))

    image = lfm_image = raw = None
    if full_image:
        raw = simulate_echoes(scene, geo, pilot, grid, cfg.frame, link, sigma2=s2, rng=rng, rolloff=ro,
                              decimation=cfg.sar.decimation)
        image = azimuth_compress(rcmc(range_reconstruct(raw, pilot)))
        _, lfm_image = lfm_baseline(scene, geo, grid, cfg.frame, link, doppler_hz=doppler_hz,
                                    sigma2=s2 / pilot.energy, rng=rng, decimation=cfg.sar.decimation)
        if beta_max > 0:
            row = int(np.argmax(image.magnitude.max(axis=1)))
            cut = image.data[row]
            k = int(np.argmax(np.abs(cut)))
            seg = cut[max(0, k - 32): k + 32]
            ov = oversample_profile(seg, os_)[0]
            dx = image.azimuth_axis[1] - image.azimuth_axis[0] if image.azimuth_axis.size > 1 else 1.0
            rec("proposed", "azimuth_res_m", point_spread(ov, spacing=dx / os_).res_3db)

    result = {
        "profiles": profiles,
        "image": image,
        "lfm_image": lfm_image,
        "lfm_distorted": lfm_distorted,
        "doppler_hz": doppler_hz,
        "noise_var": s2,
        "records": records,
        "raw": raw,
        "sample_rate": grid.bandwidth,
    }
    if out_dir is not None:
        _write_sar_outputs(result, geo, Path(out_dir))
    return result


def _write_sar_outputs(result: dict, geo, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    prof = result["profiles"]
    names = list(prof)
    cols = [np.arange(geo.range_cells), geo.cell_ranges[: geo.range_cells]]
    cols += [_normalised(prof[n]) for n in names]
    with open(out / "sar_profiles.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cell", "range_m", *names])
        for row in zip(*cols):
            w.writerow([int(row[0])] + [_fmt(v) for v in row[1:]])
    records_to_csv(result["records"], out / "sar_metrics.csv")
    raw = result.get("raw")
    if raw is not None:
        write_iq(out / "sar_raw.iq", raw.pulses, sample_rate=result["sample_rate"], cp_len=raw.cp_len,
                 extra={"prf_hz": raw.prf, "M": raw.M, "N": raw.N})
    if result["image"] is not None:
        img = result["image"]
        write_iq(out / "sar_image.iq", img.data, sample_rate=raw.prf if raw is not None else 0.0,
                 extra={"axes": ["range_cell", "azimuth"]})
        write_pgm(out / "sar_image.pgm", img.magnitude)
        write_matrix_csv(out / "sar_image_db.csv",
                         20 * np.log10(np.maximum(_normalised(result["image"].magnitude), 1e-15)),
                         fmt="%.2f")
    if result["lfm_image"] is not None:
        write_pgm(out / "lfm_image.pgm", result["lfm_image"].magnitude)


# --------------------------------------------------------------------------
# Frame planning
# --------------------------------------------------------------------------


def frame_plan(cfg: RunConfig) -> dict:
    """PRF, its bounds, the minimum numerology and a feasibility verdict."""
    frame, geo = cfg.frame, cfg.geometry
    lo, hi = prf_bounds(geo, frame)
    mu_min = min_numerology(geo, frame.pilot_period, frame.frame_len)
    sched = slot_schedule(frame)
    rate = prf(frame)
    return {
        "numerology": frame.numerology,
        "min_numerology": mu_min,
        "prf_hz": rate,
        "prf_min_hz": lo,
        "prf_max_hz": hi,
        "slots_per_frame": frame.slots,
        "signals_per_slot": frame.signals_per_slot,
        "pilots_per_frame": pilot_count(sched),
        "data_signals_per_frame": frame.slots * frame.signals_per_slot - pilot_count(sched),
        "doppler_res_hz": frame.doppler_res,
        "azimuth_res_m": geo.azimuth_res,
        "feasible": bool(lo <= rate <= hi and frame.numerology >= mu_min),
    }


def config_echo(cfg: RunConfig, extra: dict | None = None) -> str:
    payload = {"config": cfg.to_dict(), "provenance": provenance()}
    if extra:
        payload.update(extra)
    return json.dumps(payload, indent=2, sort_keys=True, default=float) + "\n"
