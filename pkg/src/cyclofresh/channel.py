"""ISI channel application and the induced desired-signal autocorrelation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal_core import PeriodicAutocorrelation

__all__ = ["IsiChannel", "apply_isi", "isi_autocorr"]


@dataclass(frozen=True)
class IsiChannel:
    taps: tuple

    def __post_init__(self):
        taps = tuple(float(t) for t in self.taps)
        if len(taps) < 1:
            raise ValueError("channel needs at least one tap")
        if not all(np.isfinite(taps)):
            raise ValueError("channel taps must be finite")
        object.__setattr__(self, "taps", taps)

    @property
    def length(self):
        return len(self.taps)


def apply_isi(channel, d):
    """Linear convolution with zero prehistory, truncated to the input length."""
    d = np.asarray(d)
    g = np.asarray(channel.taps)
    return np.convolve(d, g)[: d.shape[0]]


def isi_autocorr(channel, c_dd):
    """Autocorrelation of the channel-convolved signal:
    c(n, l) = sum_i sum_k g[i] g[k] c_dd(n-k, l+k-i); same period as c_dd."""
    g = np.asarray(channel.taps)
    li = g.shape[0]
    out_lag = c_dd.max_lag - (li - 1)
    if out_lag < 1:
        raise IndexError(
            f"c_dd lag range {c_dd.max_lag} too small for channel length {li}"
        )
    full = c_dd.full_table()
    mid = c_dd.max_lag - 1
    period = c_dd.period
    n = np.arange(period)
    table = np.zeros((period, out_lag), dtype=complex)
    for l in range(out_lag):
        acc = np.zeros(period, dtype=complex)
        for i in range(li):
            for k in range(li):
                acc += g[i] * g[k] * full[(n - k) % period, mid + l + k - i]
        table[:, l] = acc
    return PeriodicAutocorrelation(period, table)
