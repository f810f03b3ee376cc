"""Delay-Doppler multicarrier toolbox for joint satellite communication and SAR.

Modules
-------
grid_frame
    Grid, frame, geometry and link-budget parameters with the PRF and
    numerology formulas.
waveform
    QAM, matrix-path DD modulation, cyclic prefix, subpulse shaping, OFDM.
channel
    Satellite and SAR channel models and the exact DD input-output relation.
sensing
    ZC pilots and FFT-based channel sensing.
equalizer
    Per-column MMSE equalization.
coding
    Punctured convolutional code with Viterbi decoding.
sar
    Range reconstruction, RCMC, azimuth compression and the LFM baseline.
config, harness, cli
    Experiment configuration, Monte Carlo sweeps and the command line.
"""
from .errors import ConfigError, PilotError, SingularChannelError

__version__ = "0.1.0"

__all__ = ["ConfigError", "PilotError", "SingularChannelError", "__version__"]
