"""
One frame through a satellite link
==================================

Build a delay-Doppler frame, push it through a sampled LEO channel,
estimate the channel from the embedded pilot and equalize the data frame.
Run with ``python3 demos/01_one_frame.py``.
"""
import numpy as np

from oddmsar.channel import apply_time_channel, awgn, cfo_compensate, sample_comm_channel, to_dd_matrix
from oddmsar.config import load_preset
from oddmsar.equalizer import EqualizerInput, ber, mmse_equalize
from oddmsar.sensing import PilotPattern, embed_pilot, extract_pilot_block, pad_truth, sense_channel, sensing_mse
from oddmsar.waveform import TimeSequence, add_cp, oddm_demodulate, oddm_modulate, papr, qam_demap, qam_map, remove_cp

cfg = load_preset("table2_sub6")
M, N = cfg.grid.M, cfg.grid.N
L, K = cfg.comm.max_delay_tap, cfg.comm.guard
rng = np.random.default_rng(7)
snr_db = 14.0
s2 = 10 ** (-snr_db / 10)

# %% The channel: one line-of-sight path and a few scattered ones, all
# sharing the satellite's large Doppler shift.
real = sample_comm_channel(cfg.link, cfg.comm.nlos_paths, L, cfg.grid, cfg.geometry, rng, g=1.0)
print(f"common Doppler: {real.common_doppler_tap} bins + {real.common_frac_doppler:.3f}")
for p in real.paths:
    print(f"  delay {p.delay_tap:2d}  Doppler {p.doppler_tap}  |gain| {abs(p.gain):.3f}")


def send(grid):
    """Modulate, add a prefix, pass the channel and noise, then undo the fractional Doppler."""
    tx = add_cp(oddm_modulate(grid), L + 1)
    rx = apply_time_channel(tx, real)
    rx = TimeSequence(rx.samples + awgn(rx.samples.shape, s2, rng), rx.cp_len)
    rx = cfo_compensate(rx, real.common_frac_doppler)
    return oddm_demodulate(remove_cp(rx), M, N)


# %% Sensing: a Zadoff-Chu column with a Doppler guard on both sides.
pattern = PilotPattern.zadoff_chu(M, N, K)
pilot_grid = embed_pilot(np.zeros((M, N)), pattern)
print(f"\npilot frame PAPR: {papr(oddm_modulate(pilot_grid)):.3f}")
csi = sense_channel(extract_pilot_block(send(pilot_grid), pattern), pattern, s2)
truth = pad_truth(to_dd_matrix(real, cfo_coupling=True, MN=M * N), M, K)
print(f"sensing MSE {sensing_mse(csi, truth):.3e}, predicted {csi.noise_var:.3e}")

# %% Equalization: every path sits in one Doppler column, so a single
# column of the estimate describes the whole channel.
kc = int(np.argmax(np.sum(np.abs(csi.matrix) ** 2, axis=0)))
h = csi.column(kc).copy()
h[L + 1:] = 0
bits = rng.integers(0, 2, 2 * M * N, dtype=np.uint8)
X = qam_map(bits).reshape(M, N, order="F")
Xhat = mmse_equalize(EqualizerInput(send(X), h, kc, s2))
print(f"\nuncoded BER at {snr_db:g} dB: {ber(qam_demap(Xhat.reshape(-1, order='F')), bits):.2e}")
