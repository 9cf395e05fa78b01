"""Passband OFDM modulator/demodulator and its analytic cyclostationary statistics.

Symbol layout follows the cyclic-prefix convention: each length-N_sym symbol
window carries N_cp prefix samples that replicate the last N_cp samples of the
useful part. Carrier indexes are signed baseband bins k in [-N_data/2, N_data/2);
the passband signal is Re{ s[n] * exp(j*2*pi*fc*n) } with fc in cycles/sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .signal_core import PeriodicAutocorrelation

__all__ = [
    "OfdmConfig",
    "QPSK_POINTS",
    "modulate",
    "demodulate",
    "slice_symbols",
    "analytic_autocorr_ofdm",
    "cp_index_sets",
    "random_grid",
    "grid_from_bits",
    "bits_from_grid",
]

# Gray-mapped QPSK, unit mean energy. Bit pair (b0, b1) -> point index b0*2 + b1.
QPSK_POINTS = np.array(
    [1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j], dtype=complex
) / np.sqrt(2.0)


@dataclass(frozen=True)
class OfdmConfig:
    """OFDM geometry. Defaults give the 80-sample symbol with a 16-sample CP
    and 32 active carriers centered mid-Nyquist (fc = 33/128 keeps the image
    band on unused bins and |cos(2*pi*fc*N_data)| = 1)."""

    n_data: int = 64
    n_cp: int = 16
    active_carriers: tuple = tuple(range(-16, 16))  # signed baseband bins
    fc_norm: float = 33.0 / 128.0

    def __post_init__(self):
        if not (0 < self.n_cp < self.n_data):
            raise ValueError(f"need 0 < n_cp < n_data, got {self.n_cp}, {self.n_data}")
        if len(self.active_carriers) == 0:
            raise ValueError("active_carriers is empty")
        ks = tuple(int(k) for k in self.active_carriers)
        if len(set(k % self.n_data for k in ks)) != len(ks):
            raise ValueError("active_carriers contains duplicate bins")
        for k in ks:
            if not (-self.n_data // 2 <= k < self.n_data):
                raise ValueError(f"carrier {k} outside [-(n_data/2), n_data)")
        object.__setattr__(self, "active_carriers", ks)

    @property
    def n_sym(self):
        return self.n_data + self.n_cp

    @property
    def n_active(self):
        return len(self.active_carriers)

    @property
    def gamma(self):
        """Carrier rotation across one useful part: 2*pi*fc*N_data."""
        return 2.0 * np.pi * self.fc_norm * self.n_data

    @classmethod
    def full_band(cls, n_data=64, n_cp=16, fc_norm=0.25):
        """All-carrier config; its autocorrelation is the pure delta form."""
        return cls(n_data=n_data, n_cp=n_cp, active_carriers=tuple(range(n_data)), fc_norm=fc_norm)


def random_grid(n_symbols, cfg, rng):
    """i.i.d. uniform QPSK grid, shape (n_symbols, n_active)."""
    idx = rng.integers(0, 4, size=(n_symbols, cfg.n_active))
    return QPSK_POINTS[idx]


def grid_from_bits(bits, cfg):
    """Pack a bit array (multiple of 2*n_active) into a QPSK symbol grid."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    per_sym = 2 * cfg.n_active
    if bits.size % per_sym:
        raise ValueError(f"bit count {bits.size} not a multiple of {per_sym}")
    pairs = bits.reshape(-1, cfg.n_active, 2)
    return QPSK_POINTS[pairs[..., 0] * 2 + pairs[..., 1]]


def bits_from_grid(grid):
    """Inverse of grid_from_bits for exact constellation points."""
    grid = np.atleast_2d(grid)
    b0 = (np.real(grid) < 0).astype(np.int64)
    b1 = (np.imag(grid) < 0).astype(np.int64)
    return np.stack([b0, b1], axis=-1).reshape(grid.shape[0], -1).ravel()


def _baseband_symbols(grid, cfg):
    """Length-N_sym baseband window per symbol, phase origin at the CP start."""
    grid = np.atleast_2d(np.asarray(grid, dtype=complex))
    n = np.arange(cfg.n_sym)
    carriers = np.asarray(cfg.active_carriers)
    # (n_sym, n_active) carrier matrix; CP replication is implicit because
    # exp(j*2*pi*k*n/N_data) has period N_data in n for integer k.
    basis = np.exp(2j * np.pi * np.outer(n, carriers) / cfg.n_data)
    return (grid @ basis.T) / np.sqrt(cfg.n_data)


def modulate(grid, cfg, start=0):
    """Real passband OFDM signal for a QPSK grid (m symbols x n_active).

    ``start`` is the absolute sample index of the first output sample; the
    carrier phase ramp runs over absolute time, so spans re-modulated inside
    a longer record must pass their offset (a multiple of n_sym).
    """
    base = _baseband_symbols(grid, cfg)
    s = base.ravel()
    n = np.arange(start, start + s.shape[0])
    return np.real(s * np.exp(2j * np.pi * cfg.fc_norm * n))


def slice_symbols(soft, cfg=None):
    """Nearest-constellation-point hard decision (ties: lowest point index)."""
    soft = np.asarray(soft, dtype=complex)
    d2 = np.abs(soft[..., None] - QPSK_POINTS[None, :]) ** 2
    # argmin takes the first minimum, which is the lowest-index point on ties
    return QPSK_POINTS[np.argmin(d2.round(decimals=12), axis=-1)]


def demodulate(x, cfg, equalizer=None, start=0):
    """Per-carrier matched demodulation with CP removal.

    Returns (hard_grid, soft_grid). ``equalizer`` is an optional complex
    vector (one entry per active carrier) the soft values are divided by,
    e.g. the known ISI channel response at each carrier. ``start`` is the
    absolute index of x[0] (multiple of n_sym) for spans inside a record.

    The soft values estimate the transmitted constellation points directly;
    with a noiseless modulate() input the grid round-trips exactly.
    """
    x = np.asarray(x)
    if x.shape[0] % cfg.n_sym:
        raise ValueError(f"record length {x.shape[0]} is not a multiple of n_sym={cfg.n_sym}")
    m = x.shape[0] // cfg.n_sym
    n = np.arange(start, start + x.shape[0])
    v = 2.0 * x * np.exp(-2j * np.pi * cfg.fc_norm * n)
    v = v.reshape(m, cfg.n_sym)[:, cfg.n_cp:]
    u = np.arange(cfg.n_cp, cfg.n_sym)
    carriers = np.asarray(cfg.active_carriers)
    proj = np.exp(-2j * np.pi * np.outer(u, carriers) / cfg.n_data) / np.sqrt(cfg.n_data)
    soft = v @ proj
    if equalizer is not None:
        soft = soft / np.asarray(equalizer)[None, :]
    return slice_symbols(soft, cfg), soft


def cp_index_sets(cfg):
    """(S_CP, S'_CP) within one period: tail indexes that are replicated, and
    the prefix indexes holding the replicas."""
    s_cp = frozenset(range(cfg.n_data, cfg.n_sym))
    s_cp_prime = frozenset(range(cfg.n_cp))
    return s_cp, s_cp_prime


def _carrier_sum(cfg, max_lag):
    """D(l) = sum_k exp(j*2*pi*k*l/N_data) over active carriers, l in [0, max_lag)."""
    l = np.arange(max_lag)
    carriers = np.asarray(cfg.active_carriers)
    d = np.exp(2j * np.pi * np.outer(l, carriers) / cfg.n_data).sum(axis=1)
    # snap phasor-sum rounding residue to the exact zeros of the lattice sum
    d.real[np.abs(d.real) < 1e-9] = 0.0
    d.imag[np.abs(d.imag) < 1e-9] = 0.0
    return d


def analytic_autocorr_ofdm(cfg, max_lag=None):
    """Exact c_dd(n, l) of the passband signal, period N_sym.

    c_ss(n, l) = D(l)/N_data for sample pairs inside one symbol window and 0
    otherwise; c_dd(n, l) = Re{c_ss(n, l) * exp(j*2*pi*fc*l)} / 2. For the
    all-carrier config D(l)/N_data collapses to deltas at l = 0 and l = +/-N_data
    (the latter gated by the CP index sets), i.e. the classical delta form.
    """
    if max_lag is None:
        max_lag = cfg.n_sym
    nsym = cfg.n_sym
    lags = np.arange(max_lag)
    css = np.zeros((nsym, max_lag), dtype=complex)
    d = _carrier_sum(cfg, min(max_lag, nsym)) / cfg.n_data
    n = np.arange(nsym)[:, None]
    inside = n + lags[None, : min(max_lag, nsym)] < nsym
    css[:, : min(max_lag, nsym)] = d[None, :] * inside
    cdd = 0.5 * np.real(css * np.exp(2j * np.pi * cfg.fc_norm * lags)[None, :])
    return PeriodicAutocorrelation(nsym, cdd.astype(complex))


def signal_power(cfg):
    """Time-averaged signal power <c_dd(n,0)> = n_active / (2 * n_data)."""
    return cfg.n_active / (2.0 * cfg.n_data)


def channel_response_at_carriers(cfg, taps):
    """Passband channel frequency response at each active carrier."""
    taps = np.asarray(taps, dtype=float)
    i = np.arange(taps.shape[0])
    out = []
    for k in cfg.active_carriers:
        f = cfg.fc_norm + k / cfg.n_data
        out.append(np.sum(taps * np.exp(-2j * np.pi * f * i)))
    return np.asarray(out)
