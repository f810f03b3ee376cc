"""Unitary FFT helpers with optional transform counting.

Every DFT used by the signal-processing chain goes through :func:`fft` /
:func:`ifft` so that complexity claims can be checked by instrumentation.
A batched call over ``b`` vectors of length ``n`` counts as ``b``
transforms of length ``n``.
"""
from __future__ import annotations

import contextlib
import contextvars
from collections import Counter

import numpy as np

_counter: contextvars.ContextVar[Counter | None] = contextvars.ContextVar(
    "oddmsar_fft_counter", default=None
)


def _record(a: np.ndarray, axis: int) -> None:
    counts = _counter.get()
    if counts is None:
        return
    n = a.shape[axis]
    counts[n] += a.size // n if n else 0


def fft(a, axis: int = -1) -> np.ndarray:
    a = np.asarray(a)
    _record(a, axis)
    return np.fft.fft(a, axis=axis, norm="ortho")


def ifft(a, axis: int = -1) -> np.ndarray:
    a = np.asarray(a)
    _record(a, axis)
    return np.fft.ifft(a, axis=axis, norm="ortho")


@contextlib.contextmanager
def count_transforms():
    """Count unitary transforms issued inside the block.

    Yields a :class:`collections.Counter` mapping transform length to the
    number of transforms of that length.

    >>> with count_transforms() as c:
    ...     _ = fft(np.ones((4, 8)), axis=1)
    >>> c[8]
    4
    """
    counts: Counter = Counter()
    token = _counter.set(counts)
    try:
        yield counts
    finally:
        _counter.reset(token)


def flop_weight(counts: Counter) -> float:
    """Radix-2 multiply estimate ``sum (n/2) log2 n`` over counted transforms."""
    return float(sum(k * (n / 2) * np.log2(n) for n, k in counts.items() if n > 1))
