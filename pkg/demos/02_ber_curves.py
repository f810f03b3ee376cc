"""
Bit error rate: delay-Doppler versus OFDM
=========================================

A short Monte Carlo sweep on the sub-6 GHz preset. The full-length sweep
used by the acceptance suite is ``oddmsar sim ber --preset table2_sub6``;
this one trades depth for a run time of a few seconds.
"""
from oddmsar.config import load_preset
from oddmsar.harness import ber_gap, run_ber_sweep

cfg = load_preset("table2_sub6").with_overrides(
    sweep__snr_db=tuple(float(x) for x in range(0, 22, 2)), sweep__trials=25, sweep__max_trials=100)

points = run_ber_sweep(cfg)

# %% One row per SNR, one column per scheme; a dash means the curve
# already reached zero errors.
curves = {}
for p in points:
    curves.setdefault((p.scheme, p.coded), {})[p.snr_db] = p.ber
names = sorted(curves)
print("SNR dB  " + "  ".join(f"{w}{'-coded' if c else '':6s}".ljust(12) for w, c in names))
for snr in cfg.sweep.snr_db:
    cells = [f"{curves[k][snr]:.2e}" if snr in curves[k] else "-" for k in names]
    print(f"{snr:6.1f}  " + "  ".join(c.ljust(12) for c in cells))

# %% Gaps at a moderate error rate, where this short sweep is reliable.
for coded in (False, True):
    print(f"{'coded' if coded else 'uncoded'} SNR gap at BER 1e-3: {ber_gap(points, 1e-3, coded):.2f} dB")
