"""Rate-2/3 punctured K=7 convolutional code with batched hard-decision Viterbi.

Encoder state convention: the shift register is ``reg = (b << 6) | s`` for
input bit ``b`` and 6-bit state ``s``; output ``i`` is the parity of
``reg & g_i`` and the next state is ``reg >> 1``. The two outputs of each
step are serialised as ``c0, c1`` and the puncture pattern is applied
periodically to that serial stream.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "CodingConfig",
    "conv_encode",
    "viterbi_decode",
    "coded_length",
    "message_length",
    "interleave",
    "deinterleave",
]

ERASURE = 2


@dataclass(frozen=True)
class CodingConfig:
    constraint_length: int = 7
    generators: tuple[int, int] = (0o133, 0o171)
    puncture_pattern: tuple[int, ...] = (1, 1, 0, 1)

    def __post_init__(self):
        if len(self.puncture_pattern) != 4:
            raise ConfigError("puncture pattern must have length 4")
        if not any(self.puncture_pattern):
            raise ConfigError("puncture pattern removes every bit")
        if any(g >= 1 << self.constraint_length for g in self.generators):
            raise ConfigError("generator wider than the constraint length")

    @property
    def memory(self) -> int:
        return self.constraint_length - 1

    @property
    def rate(self) -> float:
        return len(self.puncture_pattern) / (2 * sum(self.puncture_pattern))


def _parity(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    out = np.zeros_like(x)
    while np.any(x):
        out ^= x & 1
        x >>= 1
    return out


def _trellis(cfg: CodingConfig):
    nstates = 1 << cfg.memory
    s = np.arange(nstates)
    outs = np.zeros((nstates, 2, 2), dtype=np.uint8)  # [state, input, output index]
    for b in (0, 1):
        reg = (b << cfg.memory) | s
        for i, g in enumerate(cfg.generators):
            outs[:, b, i] = _parity(reg & g)
    return outs


def _keep_mask(n_serial: int, cfg: CodingConfig) -> np.ndarray:
    pat = np.asarray(cfg.puncture_pattern, dtype=bool)
    return np.resize(pat, n_serial)


def coded_length(n_msg: int, cfg: CodingConfig = CodingConfig()) -> int:
    """Transmitted bits for ``n_msg`` message bits including termination."""
    return int(_keep_mask(2 * (n_msg + cfg.memory), cfg).sum())


def message_length(n_coded: int, cfg: CodingConfig = CodingConfig()) -> int:
    """Inverse of :func:`coded_length`; raises if no message length fits."""
    per = sum(cfg.puncture_pattern)
    period = len(cfg.puncture_pattern)
    n_serial_guess = (n_coded * period) // per
    for n_serial in range(max(0, n_serial_guess - period), n_serial_guess + period + 1):
        if n_serial % 2 == 0 and _keep_mask(n_serial, cfg).sum() == n_coded:
            n_msg = n_serial // 2 - cfg.memory
            if n_msg >= 0:
                return n_msg
    raise ValueError(f"{n_coded} bits do not form a punctured codeword")


def conv_encode(bits, cfg: CodingConfig = CodingConfig()) -> np.ndarray:
    """Encode, terminate with ``memory`` zeros and puncture.

    A 2-D input encodes each row independently.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    batch = bits.ndim == 2
    u = np.atleast_2d(bits)
    B, n = u.shape
    m = cfg.memory
    T = n + m
    # register bit (m - j) holds u[t - j], so each output is a mod-2 convolution
    padded = np.concatenate([np.zeros((B, m), dtype=np.uint8), u, np.zeros((B, m), dtype=np.uint8)], axis=1)
    serial = np.empty((B, 2 * T), dtype=np.uint8)
    for i, g in enumerate(cfg.generators):
        acc = np.zeros((B, T), dtype=np.uint8)
        for j in range(m + 1):
            if (g >> (m - j)) & 1:
                acc ^= padded[:, m - j: m - j + T]
        serial[:, i::2] = acc
    coded = serial[:, _keep_mask(serial.shape[1], cfg)]
    return coded if batch else coded[0]


def viterbi_decode(received, cfg: CodingConfig = CodingConfig()) -> np.ndarray:
    """Hard-decision Viterbi decoding of punctured, terminated codewords.

    ``received`` holds hard bits (0/1), one codeword per row for 2-D input.
    Punctured positions are reinserted as erasures and contribute nothing
    to the branch metric. The trellis is forced to end in state 0.
    """
    r = np.asarray(received, dtype=np.uint8)
    batch = r.ndim == 2
    r = np.atleast_2d(r)
    B, n_coded = r.shape
    n_msg = message_length(n_coded, cfg)
    T = n_msg + cfg.memory
    keep = _keep_mask(2 * T, cfg)
    serial = np.full((B, 2 * T), ERASURE, dtype=np.uint8)
    serial[:, keep] = r
    serial = serial.reshape(B, T, 2)

    outs = _trellis(cfg)
    ns = 1 << cfg.memory
    half = ns >> 1
    nxt = np.arange(ns)
    # predecessors of next state x: input bit x >> (memory-1), state ((x mod half) << 1) | j
    b_of = nxt >> (cfg.memory - 1)
    prev = ((nxt % half) << 1)[:, None] | np.arange(2)[None, :]  # [next, j]
    exp_out = outs[prev, b_of[:, None], :]  # [next, j, 2]

    # branch cost for each of the 9 (c0, c1) observations in {0, 1, erased}^2
    obs_vals = np.array([(a, b) for a in range(3) for b in range(3)], dtype=np.uint8)
    valid = obs_vals != ERASURE
    cost_table = ((exp_out[None] != obs_vals[:, None, None, :]) & valid[:, None, None, :]).sum(
        axis=-1, dtype=np.int32
    )  # [obs, next, j]
    obs_code = (serial[..., 0] * 3 + serial[..., 1]).astype(np.int64)  # [B, T]

    big = np.iinfo(np.int32).max // 4
    metric = np.full((B, ns), big, dtype=np.int32)
    metric[:, 0] = 0
    decisions = np.empty((T, B, ns), dtype=np.uint8)
    for t in range(T):
        cand = metric[:, prev] + cost_table[obs_code[:, t]]  # [B, next, j]
        j = cand[..., 1] < cand[..., 0]
        decisions[t] = j
        metric = np.where(j, cand[..., 1], cand[..., 0])
        metric -= metric.min(axis=1, keepdims=True)

    state = np.zeros(B, dtype=np.int64)
    bits = np.empty((B, T), dtype=np.uint8)
    rows = np.arange(B)
    for t in range(T - 1, -1, -1):
        bits[:, t] = state >> (cfg.memory - 1)
        j = decisions[t, rows, state]
        state = ((state % half) << 1) | j
    out = bits[:, :n_msg]
    return out if batch else out[0]


def interleave(bits, seed: int) -> np.ndarray:
    """Seeded random permutation along the last axis."""
    bits = np.asarray(bits)
    perm = np.random.default_rng(seed).permutation(bits.shape[-1])
    return bits[..., perm]


def deinterleave(bits, seed: int) -> np.ndarray:
    bits = np.asarray(bits)
    perm = np.random.default_rng(seed).permutation(bits.shape[-1])
    out = np.empty_like(bits)
    out[..., perm] = bits
    return out
