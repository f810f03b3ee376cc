"""Command-line entry point.

::

    oddmsar sim mse|ber|sar [--preset NAME | --config FILE] [options]
    oddmsar frame plan [--preset NAME | --config FILE]
    oddmsar selftest

Exit status is 0 on success, 2 for configuration errors and 3 when a
self-test check fails.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness
from .config import PRESETS, RunConfig, load_config, load_preset
from .errors import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SELFTEST = 3

_WAVEFORMS = {"oddm", "ofdm"}
_CODING = {"coded", "uncoded"}


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def _add_run_options(p: argparse.ArgumentParser, sim: bool = True) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=PRESETS, help="built-in parameter set (default table2_sub6)")
    src.add_argument("--config", type=Path, help="TOML or JSON configuration file")
    p.add_argument("--seed", type=int, help="master seed (overrides the file)")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default ./out)")
    if not sim:
        return
    p.add_argument("--snr", type=_float_list, help="SNR points in dB, e.g. '0,10,20'")
    p.add_argument("--trials", type=int, help="trials per SNR point (minimum for BER)")
    p.add_argument("--max-trials", type=int, help="BER trial cap per point")
    p.add_argument("--scheme", help="comma list from oddm, ofdm, coded, uncoded")
    p.add_argument("--genie-cfo", action=argparse.BooleanOptionalAction, default=None,
                   help="remove the true fractional Doppler instead of estimating it")
    p.add_argument("--oversample", type=int, help="pulse-shaping oversampling factor")
    p.add_argument("--workers", type=int, default=1, help="worker processes for BER trials")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oddmsar", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("sim", help="run a simulation")
    sim_sub = sim.add_subparsers(dest="what", required=True)
    for name, text in (("mse", "sensing MSE sweep"), ("ber", "BER sweep"), ("sar", "SAR imaging demo")):
        p = sim_sub.add_parser(name, help=text)
        _add_run_options(p)
        if name == "sar":
            p.add_argument("--scene", type=Path, help="scene CSV (default from the config)")
            p.add_argument("--no-image", action="store_true", help="skip the full-aperture image")

    frame = sub.add_parser("frame", help="frame planning")
    frame_sub = frame.add_subparsers(dest="what", required=True)
    p = frame_sub.add_parser("plan", help="PRF, numerology and feasibility report")
    _add_run_options(p, sim=False)
    p.add_argument("--numerology", type=int, help="evaluate a different numerology")

    p = sub.add_parser("selftest", help="quick consistency checks")
    p.add_argument("--seed", type=int, default=0)
    return ap


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else load_preset(args.preset or "table2_sub6")
    over = {"seed": args.seed}
    if getattr(args, "snr", None):
        over["sweep__snr_db"] = args.snr
    if getattr(args, "trials", None) is not None:
        if args.trials < 1:
            raise ConfigError("--trials must be at least 1")
        over["sweep__trials"] = args.trials
        over["sweep__max_trials"] = max(args.trials, args.max_trials or cfg.sweep.max_trials)
    elif getattr(args, "max_trials", None) is not None:
        over["sweep__max_trials"] = args.max_trials
    if getattr(args, "scheme", None):
        tokens = {t.strip() for t in args.scheme.split(",") if t.strip()}
        bad = tokens - _WAVEFORMS - _CODING
        if bad:
            raise ConfigError(f"unknown scheme token(s): {', '.join(sorted(bad))}")
        if tokens & _WAVEFORMS:
            over["scheme__waveforms"] = tuple(w for w in ("oddm", "ofdm") if w in tokens)
        if tokens & _CODING:
            over["scheme__coding"] = tuple(c for c in ("uncoded", "coded") if c in tokens)
    if getattr(args, "genie_cfo", None) is not None:
        over["scheme__genie_cfo"] = args.genie_cfo
    if getattr(args, "oversample", None) is not None:
        over["scheme__oversample"] = args.oversample
    return cfg.with_overrides(**over)


def _echo(cfg: RunConfig, out: Path, extra: dict | None = None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config_echo.json").write_text(harness.config_echo(cfg, extra))


def _sim(args) -> int:
    cfg = _load(args)
    out = args.out
    _echo(cfg, out, {"command": f"sim {args.what}"})
    if args.what == "mse":
        recs = harness.run_mse_sweep(cfg)
        harness.records_to_csv(recs, out / "mse_metrics.csv")
        for r in recs:
            print(f"{r.scheme:12s} {r.snr_db:6.1f} dB  mse={r.value:.4e} +/- {r.stderr:.1e}")
    elif args.what == "ber":
        def show(p):
            tag = f"{p.scheme}-{'coded' if p.coded else 'uncoded'}"
            print(f"{tag:14s} {p.snr_db:6.1f} dB  ber={p.ber:.3e}  ({p.errors} errors / {p.bits} bits)",
                  flush=True)
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        pts = harness.run_ber_sweep(cfg, workers=args.workers, progress=show)
        harness.ber_points_to_csv(pts, cfg.seed, out / "ber.csv")
        for coded in (False, True):
            gap = harness.ber_gap(pts, 1e-5, coded)
            print(f"{'coded' if coded else 'uncoded'} gap at BER 1e-5: {gap:.2f} dB")
    else:
        res = harness.run_sar_demo(cfg, args.scene, out, full_image=not args.no_image)
        for r in res["records"]:
            print(f"{r.scheme:12s} {r.metric:14s} {r.value:.4g}")
        print(f"LFM distortion flag: {res['lfm_distorted']}")
    print(f"outputs written to {out}")
    return EXIT_OK


def _frame(args) -> int:
    cfg = _load(args)
    if args.numerology is not None:
        cfg = cfg.with_overrides(frame=cfg.frame.with_numerology(args.numerology))
    report = harness.frame_plan(cfg)
    _echo(cfg, args.out, {"command": "frame plan", "report": report})
    for k, v in report.items():
        print(f"{k:24s} {v:.6g}" if isinstance(v, float) else f"{k:24s} {v}")
    return EXIT_OK


def _selftest(args) -> int:
    from .selftest import run_selftest

    results = run_selftest(args.seed)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail} ({r.seconds:.2f} s)")
    return EXIT_OK if all(r.passed for r in results) else EXIT_SELFTEST


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sim":
            return _sim(args)
        if args.command == "frame":
            return _frame(args)
        return _selftest(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
