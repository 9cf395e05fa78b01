"""Cyclostationary Gaussian noise models: Katayama, LPTV filter-bank, AWGN.

Every model exposes a generator (seeded, reproducible) and the matching
analytic periodic autocorrelation table. Amplitude scaling is the only
mechanism used to hit SNR grid points, so the cyclic *shape* is preserved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .signal_core import PeriodicAutocorrelation

__all__ = [
    "KatayamaParams",
    "LptvParams",
    "AwgnParams",
    "katayama_beta",
    "katayama_autocorr",
    "katayama_generate",
    "lptv_autocorr",
    "lptv_generate",
    "awgn_autocorr",
    "awgn_generate",
    "kata_preset",
    "lptv_standin",
    "save_lptv_params",
    "load_lptv_params",
]

# Default seconds -> cycles/sample conversion for the spectral-decay constant:
# N_noise = 1000 samples spanning half a 50 Hz mains cycle (10 ms) gives
# T_samp = 10 us, i.e. an equivalent sampling rate of 1e5 Hz.
DEFAULT_ALPHA1_SAMPLE_RATE = 1.0e5

SHAPING_FILTER_LEN = 8192


@dataclass(frozen=True)
class KatayamaParams:
    """Powered-sinusoid variance profile with exponential spectral decay.

    components: (amplitude A_i, exponent n_i, phase Theta_i[rad]) triples.
    alpha1 is in seconds; alpha1_sample_rate converts it to normalized
    frequency units (alpha1_norm = alpha1 * alpha1_sample_rate).
    """

    components: tuple
    alpha1: float
    n_noise: int = 1000
    alpha1_sample_rate: float = DEFAULT_ALPHA1_SAMPLE_RATE

    def __post_init__(self):
        if self.n_noise < 2:
            raise ValueError("n_noise must be >= 2")
        if self.alpha1 <= 0:
            raise ValueError("alpha1 must be positive")
        comp = tuple((float(a), float(e), float(th)) for a, e, th in self.components)
        for a, _, _ in comp:
            if a < 0:
                raise ValueError("component amplitudes must be >= 0")
        object.__setattr__(self, "components", comp)

    @property
    def alpha1_norm(self):
        return self.alpha1 * self.alpha1_sample_rate


@dataclass(frozen=True)
class LptvParams:
    """Periodically switched LTI filter bank driven by unit white Gaussian noise.

    intervals: M (start, stop) half-open ranges partitioning [0, n_noise).
    filters: M FIR tap lists, filters[i] active while (n mod n_noise) in
    intervals[i].
    """

    filters: tuple
    intervals: tuple
    n_noise: int = 1000

    def __post_init__(self):
        filters = tuple(tuple(float(t) for t in f) for f in self.filters)
        intervals = tuple((int(a), int(b)) for a, b in self.intervals)
        if len(filters) != len(intervals):
            raise ValueError("filters and intervals must have equal length")
        if any(len(f) == 0 for f in filters):
            raise ValueError("each filter needs at least one tap")
        covered = np.zeros(self.n_noise, dtype=bool)
        for a, b in intervals:
            if not (0 <= a < b <= self.n_noise):
                raise ValueError(f"bad interval ({a}, {b})")
            if covered[a:b].any():
                raise ValueError("intervals overlap")
            covered[a:b] = True
        if not covered.all():
            raise ValueError("intervals do not cover [0, n_noise)")
        object.__setattr__(self, "filters", filters)
        object.__setattr__(self, "intervals", intervals)

    @property
    def m(self):
        return len(self.filters)

    def selector(self):
        """Array mapping phase n -> active filter index."""
        sel = np.zeros(self.n_noise, dtype=int)
        for i, (a, b) in enumerate(self.intervals):
            sel[a:b] = i
        return sel


@dataclass(frozen=True)
class AwgnParams:
    variance: float = 1.0
    n_noise: int = 1  # stationary: period 1

    def __post_init__(self):
        if self.variance <= 0:
            raise ValueError("variance must be positive")


def katayama_beta(params, n):
    """Instantaneous variance beta[n] = sum_i A_i |sin(pi n/N + Theta_i)|^{n_i}.

    0**0 is taken as 1 so an exponent-zero component contributes a constant
    floor A_i.
    """
    n = np.asarray(n, dtype=float)
    total = np.zeros_like(n, dtype=float)
    for a, expo, theta in params.components:
        s = np.abs(np.sin(np.pi * n / params.n_noise + theta))
        if expo == 0:
            total += a
        else:
            with np.errstate(divide="ignore"):
                total += a * np.exp(expo * np.log(np.maximum(s, 1e-300)))
    return total


def spectral_lag_profile(params, lags):
    """Lambda(l) = a1^2 / (a1^2 + (2 pi l)^2): inverse transform of the
    normalized exponential PSD profile, in normalized units. Lambda(0) = 1."""
    a1 = params.alpha1_norm
    l = np.asarray(lags, dtype=float)
    return a1**2 / (a1**2 + (2.0 * np.pi * l) ** 2)


def katayama_autocorr(params, max_lag):
    """c_ww(n, l) = sqrt(beta[n] beta[n+l]) * Lambda(l), period N_noise."""
    beta = katayama_beta(params, np.arange(params.n_noise))
    lam = spectral_lag_profile(params, np.arange(max_lag))
    root = np.sqrt(beta)
    table = np.empty((params.n_noise, max_lag), dtype=complex)
    for l in range(max_lag):
        table[:, l] = root * np.roll(root, -l) * lam[l]
    return PeriodicAutocorrelation(params.n_noise, table)


def _shaping_filter(params):
    """Zero-phase FIR whose output autocorrelation matches Lambda(l).

    Built from the DFT of the two-sided Lambda sequence (the folded PSD of
    the unit-rate-sampled process), square-rooted. Normalized to unit output
    variance.
    """
    m = SHAPING_FILTER_LEN
    lags = np.minimum(np.arange(m), m - np.arange(m))  # circular |l|
    target = spectral_lag_profile(params, lags)
    psd = np.real(np.fft.fft(target))
    psd = np.maximum(psd, 0.0)
    h = np.real(np.fft.ifft(np.sqrt(psd)))
    h = np.fft.fftshift(h)
    h = h / np.sqrt(np.sum(h**2))
    return h


def katayama_generate(params, length, rng):
    """w[n] = sqrt(beta[n]) * g[n] with g stationary unit-variance colored
    Gaussian shaped to the exponential spectral profile."""
    if length < 1:
        raise ValueError("length must be >= 1")
    h = _shaping_filter(params)
    white = rng.standard_normal(length + h.shape[0] - 1)
    g = fftconvolve(white, h, mode="valid")
    beta = katayama_beta(params, np.arange(params.n_noise))
    profile = np.sqrt(beta)[np.arange(length) % params.n_noise]
    return g * profile


def lptv_autocorr(params, max_lag):
    """c_ww(n, l) from the filter-bank model: the cross-correlation, at lag l,
    of the filter active at n+l with the filter active at n."""
    sel = params.selector()
    nf = params.m
    maxtap = max(len(f) for f in params.filters)
    bank = np.zeros((nf, maxtap))
    for i, f in enumerate(params.filters):
        bank[i, : len(f)] = f
    # xc[i, j, l] = sum_u bank[i, u + l] * bank[j, u], l in [0, max_lag)
    xc = np.zeros((nf, nf, max_lag))
    span = min(max_lag, maxtap)
    for i in range(nf):
        for j in range(nf):
            full = np.correlate(bank[i], bank[j], mode="full")  # lags -(T-1)..(T-1)
            xc[i, j, :span] = full[maxtap - 1 : maxtap - 1 + span]
    table = np.empty((params.n_noise, max_lag), dtype=complex)
    n = np.arange(params.n_noise)
    for l in range(max_lag):
        table[:, l] = xc[sel[(n + l) % params.n_noise], sel[n], l]
    return PeriodicAutocorrelation(params.n_noise, table)


def lptv_generate(params, length, rng):
    """Run all filters over one shared white process, select by interval."""
    if length < 1:
        raise ValueError("length must be >= 1")
    maxtap = max(len(f) for f in params.filters)
    white = rng.standard_normal(length + maxtap - 1)
    sel = params.selector()[np.arange(length) % params.n_noise]
    out = np.zeros(length)
    for i, taps in enumerate(params.filters):
        mask = sel == i
        if not mask.any():
            continue
        y = fftconvolve(white, np.asarray(taps), mode="full")[maxtap - 1 : maxtap - 1 + length]
        out[mask] = y[mask]
    return out


def awgn_autocorr(params, max_lag):
    table = np.zeros((1, max_lag), dtype=complex)
    table[0, 0] = params.variance
    return PeriodicAutocorrelation(1, table)


def awgn_generate(params, length, rng):
    if length < 1:
        raise ValueError("length must be >= 1")
    return np.sqrt(params.variance) * rng.standard_normal(length)


def _deg(x):
    return float(np.deg2rad(x))


def kata_preset(name, n_noise=1000, alpha1_sample_rate=DEFAULT_ALPHA1_SAMPLE_RATE):
    """Published measurement-fit parameter sets, selectable by name."""
    key = name.upper()
    if key == "KATA1":
        return KatayamaParams(
            components=((0.23, 0.0, 0.0), (1.38, 1.91, _deg(-6)), (7.17, 1.57e5, _deg(-35))),
            alpha1=1.2e-5,
            n_noise=n_noise,
            alpha1_sample_rate=alpha1_sample_rate,
        )
    if key == "KATA2":
        return KatayamaParams(
            components=((0.13, 0.0, 0.0), (2.8, 9.3, _deg(128)), (16.0, 5.3e3, _deg(161))),
            alpha1=8.9e-6,
            n_noise=n_noise,
            alpha1_sample_rate=alpha1_sample_rate,
        )
    raise KeyError(f"unknown Katayama preset {name!r} (have KATA1, KATA2)")


def lptv_standin(n_noise=1000):
    """Non-normative three-interval LPTV set: quiet / medium / impulsive.

    The impulsive interval spans 35 samples (350 us at the default 10 us
    sample period). The published site-measurement tap tables are not
    redistributable, so this stand-in only reproduces the qualitative
    structure; real tables load via load_lptv_params().
    """
    width = max(2, round(0.035 * n_noise))
    quiet_end = round(0.55 * n_noise)
    return LptvParams(
        filters=(
            (0.35, 0.18, 0.08),             # quiet background, mildly lowpass
            (1.0, 0.55, 0.25, 0.1),         # medium colored section
            (4.2, 2.4, 1.1, 0.45, 0.18),    # impulsive burst section
        ),
        intervals=((0, quiet_end), (quiet_end, n_noise - width), (n_noise - width, n_noise)),
        n_noise=n_noise,
    )


def save_lptv_params(params, path):
    """Plain-text LPTV schema::

        n_noise <int>
        m <int>
        interval <start> <stop>     (m lines)
        filter <tap> <tap> ...      (m lines)
    """
    lines = [f"n_noise {params.n_noise}", f"m {params.m}"]
    for a, b in params.intervals:
        lines.append(f"interval {a} {b}")
    for f in params.filters:
        lines.append("filter " + " ".join(repr(t) for t in f))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_lptv_params(path):
    intervals, filters = [], []
    n_noise = None
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            key, rest = parts[0], parts[1:]
            if key == "n_noise":
                n_noise = int(rest[0])
            elif key == "m":
                pass  # redundant with the line counts, kept for readability
            elif key == "interval":
                intervals.append((int(rest[0]), int(rest[1])))
            elif key == "filter":
                filters.append(tuple(float(t) for t in rest))
            else:
                raise ValueError(f"unknown LPTV file key {key!r}")
    if n_noise is None:
        raise ValueError("LPTV file missing n_noise")
    return LptvParams(filters=tuple(filters), intervals=tuple(intervals), n_noise=n_noise)


def noise_model(kind, **kwargs):
    """Uniform constructor used by scenario configs.

    kind: 'kata1' | 'kata2' | 'lptv' (stand-in or file=...) | 'awgn'.
    Returns (params, generate_fn, autocorr_fn).
    """
    k = kind.lower()
    if k in ("kata1", "kata2"):
        params = kata_preset(k, **kwargs)
        return params, katayama_generate, katayama_autocorr
    if k == "lptv":
        path = kwargs.pop("file", None)
        params = load_lptv_params(path) if path else lptv_standin(**kwargs)
        return params, lptv_generate, lptv_autocorr
    if k == "awgn":
        params = AwgnParams(**kwargs) if kwargs else AwgnParams()
        return params, awgn_generate, awgn_autocorr
    raise KeyError(f"unknown noise model kind {kind!r}")
