"""Fast end-to-end checks run by ``oddmsar selftest``.

Each check is a reduced-size version of a library property: exact round
trips, agreement of fast and brute-force paths, and the preset formulas.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _fft
from .channel import (
    DDChannelMatrix,
    Scene,
    apply_dd_channel,
    apply_time_channel,
    sar_channel_from_scene,
    to_dd_matrix,
)
from .coding import conv_encode, viterbi_decode
from .config import load_preset
from .equalizer import EqualizerInput, dense_mmse_equalize, mmse_equalize
from .grid_frame import min_numerology, prf
from .sar import range_reconstruct, simulate_echoes
from .sensing import PilotPattern, embed_pilot, extract_pilot_block, pad_truth, sense_channel
from .waveform import add_cp, oddm_demodulate, oddm_modulate, papr, remove_cp

__all__ = ["CheckResult", "run_selftest"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _rel(a, b) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def _random_grid(rng, M, N):
    return rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N))


def _random_channel(rng, M, N, L, K, paths=4):
    H = np.zeros((L + 1, K + 1), dtype=complex)
    for _ in range(paths):
        l, k = rng.integers(0, L + 1), rng.integers(0, K + 1)
        H[l, k] += rng.standard_normal() + 1j * rng.standard_normal()
    return DDChannelMatrix(H)


def _roundtrip(rng):
    err = max(_rel(oddm_demodulate(oddm_modulate(X), *X.shape), X)
              for X in (_random_grid(rng, 16, 8), _random_grid(rng, 128, 32)))
    return err < 1e-12, f"max relative error {err:.2e}"


def _dd_vs_time(rng):
    worst = 0.0
    for _ in range(20):
        M, N = 16, 8
        H = _random_channel(rng, M, N, 5, 3)
        X = _random_grid(rng, M, N)
        r = apply_time_channel(add_cp(oddm_modulate(X), 5), H)
        worst = max(worst, _rel(oddm_demodulate(remove_cp(r), M, N), apply_dd_channel(X, H)))
    return worst < 1e-8, f"max relative error {worst:.2e}"


def _sensing(rng):
    worst = 0.0
    for _ in range(20):
        M, N, K = 32, 8, 3
        pat = PilotPattern.zadoff_chu(M, N, K)
        H = _random_channel(rng, M, N, M - 1, K)
        Y = apply_dd_channel(embed_pilot(np.zeros((M, N)), pat), H)
        est = sense_channel(extract_pilot_block(Y, pat), pat)
        worst = max(worst, float(np.abs(est.matrix - pad_truth(H, M, K)).max()))
    return worst < 1e-9, f"max abs error {worst:.2e}"


def _mmse(rng):
    worst = 0.0
    for _ in range(5):
        M, N = 16, 8
        h = np.zeros(M, dtype=complex)
        h[:4] = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        kc = int(rng.integers(0, N))
        Y = _random_grid(rng, M, N)
        fast = mmse_equalize(EqualizerInput(Y, h, kc, 0.1))
        worst = max(worst, _rel(fast, dense_mmse_equalize(Y, h, kc, 0.1)))
    return worst < 1e-8, f"max relative error {worst:.2e}"


def _presets(rng):
    a = load_preset("table2_sub6")
    b = load_preset("table3_mmwave")
    mu1 = min_numerology(a.geometry, a.frame.pilot_period, a.frame.frame_len)
    rate = prf(a.frame)
    mu2 = b.frame.numerology
    ok = mu1 == 1 and abs(rate - 2000.0) < 1e-9 and mu2 == 4
    return ok, f"table2 mu_min={mu1} PRF={rate:g} Hz; table3 mu={mu2}"


def _transforms(rng):
    M, N, K = 64, 16, 3
    pat = PilotPattern.zadoff_chu(M, N, K)
    YP = _random_grid(rng, M, K + 1)
    with _fft.count_transforms() as c:
        sense_channel(YP, pat)
    return c[M] == 2 * (K + 1) and sum(c.values()) == 2 * (K + 1), f"sensing used {dict(c)}"


def _papr(rng):
    M, N = 32, 8
    pat = PilotPattern.zadoff_chu(M, N, 2)
    zc = papr(oddm_modulate(embed_pilot(np.zeros((M, N)), pat)))
    X = np.zeros((M, N))
    X[0, 0] = 1.0
    spa = papr(oddm_modulate(X))
    return abs(zc - 1) < 1e-9 and abs(spa - M) < 1e-9, f"ZC pilot {zc:.6f}, single pilot {spa:.6f}"


def _coding(rng):
    bits = rng.integers(0, 2, 500).astype(np.uint8)
    ok = np.array_equal(viterbi_decode(conv_encode(bits)), bits)
    return ok, "noiseless decode " + ("exact" if ok else "differs")


def _sar(rng):
    cfg = load_preset("table2_sub6")
    geo, grid, link = cfg.geometry, cfg.grid, cfg.link
    pilot = PilotPattern.zadoff_chu(grid.M, grid.N, cfg.sar.guard)
    Q = geo.range_cells
    scene = Scene.points(Q, [10, 40, 70, 100], [1.0, 0.5, 0.8, 0.3])
    raw = simulate_echoes(scene, geo, pilot, grid, cfg.frame, link, eta=[0.0])
    est = range_reconstruct(raw, pilot).profiles[0]
    H = to_dd_matrix(sar_channel_from_scene(scene, geo, link, grid, 0.0), cfo_coupling=True,
                     MN=grid.M * grid.N)
    truth = H.entries[:, raw.doppler_tap]
    err = float(np.abs(est - truth).max() / np.abs(truth).max())
    return err < 1e-9, f"relative reconstruction error {err:.2e}"


CHECKS = [
    ("modulation round trip", _roundtrip),
    ("DD relation vs time-domain channel", _dd_vs_time),
    ("noiseless sensing", _sensing),
    ("fast vs dense MMSE", _mmse),
    ("preset protocol formulas", _presets),
    ("sensing transform count", _transforms),
    ("pilot PAPR", _papr),
    ("convolutional code", _coding),
    ("SAR range reconstruction", _sar),
]


def run_selftest(seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    for name, fn in CHECKS:
        t = time.perf_counter()
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crash is a failed check, not a crashed run
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t))
    return out


if __name__ == "__main__":  # pragma: no cover
    for r in run_selftest():
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
