"""Shared signal primitives.

Real/complex sample streams are plain 1-D numpy arrays (float64 / complex128).
All time is unit-sample normalized; frequencies are in cycles per sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = [
    "SeededRng",
    "PeriodicAutocorrelation",
    "frequency_shift",
    "time_average_periodic",
    "hermitian_solve",
    "estimate_autocorr",
    "SolverError",
]


class SolverError(ValueError):
    """Raised for shape/Hermiticity violations and singular systems."""


def make_rng(seed, stream=0):
    """Deterministic generator: identical (seed, stream) -> identical draws."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(stream)])))


@dataclass
class SeededRng:
    """Reproducible RNG handle. Each instance owns private state."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        self._gen = make_rng(self.seed, self.stream)

    @property
    def generator(self):
        return self._gen

    def normal(self, size):
        return self._gen.standard_normal(size)

    def spawn(self, stream):
        """Independent handle with the same seed and a new stream id."""
        return SeededRng(self.seed, stream)


def frequency_shift(x, alpha):
    """Multiply x[n] by exp(-j*2*pi*alpha*n).

    Produces one frequency-shifted branch input; |output| == |x| sample-wise.
    """
    x = np.asarray(x)
    n = np.arange(x.shape[0])
    return x * np.exp(-2j * np.pi * alpha * n)


def time_average_periodic(f, period):
    """Average f(n) over one period: (1/P) * sum_{n=0}^{P-1} f(n).

    ``f`` may be a callable on sample indexes or an indexable sequence.
    """
    if period < 1:
        raise ValueError(f"invalid period {period}: must be >= 1")
    getter = f if callable(f) else (lambda n: f[n])
    return sum(getter(n) for n in range(int(period))) / int(period)


def hermitian_solve(a, b, loading=None, herm_tol=1e-8, cond_limit=1e12):
    """Solve (A + loading*I) x = b for Hermitian A.

    loading=None applies the default policy: no loading unless the
    reciprocal condition estimate falls below 1/cond_limit, then
    1e-10 * trace(A)/dim. Pass an explicit nonnegative value to override
    (0 disables loading entirely and raises on singular input).
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise SolverError(f"matrix must be square, got shape {a.shape}")
    if b.shape[0] != a.shape[0]:
        raise SolverError(f"dimension mismatch: A is {a.shape}, b has length {b.shape[0]}")
    scale = np.linalg.norm(a, "fro")
    if scale > 0:
        asym = np.linalg.norm(a - a.conj().T, "fro") / scale
        if asym > herm_tol:
            raise SolverError(f"matrix is not Hermitian (relative asymmetry {asym:.3e})")
    a = 0.5 * (a + a.conj().T)
    dim = a.shape[0]
    default_load = 1e-10 * np.real(np.trace(a)) / dim if dim else 0.0

    def attempt(load):
        m = a if load == 0 else a + load * np.eye(dim)
        try:
            c, low = scipy.linalg.cho_factor(m, check_finite=False)
        except np.linalg.LinAlgError:
            return None, 0.0
        anorm = np.linalg.norm(m, 1)
        rcond, info = scipy.linalg.lapack.zpocon(c, anorm, uplo=b"L" if low else b"U")
        if info != 0:
            rcond = 0.0
        return scipy.linalg.cho_solve((c, low), b, check_finite=False), rcond

    if loading is not None:
        x, rcond = attempt(float(loading))
        if x is None or (loading == 0 and rcond < 1.0 / cond_limit):
            if loading == 0:
                raise SolverError(
                    f"matrix is singular to working precision (condition estimate "
                    f"{np.inf if rcond == 0 else 1.0 / rcond:.3e}) and loading=0"
                )
            # explicit loading given but factorization failed: matrix is indefinite
            raise SolverError("Cholesky factorization failed; matrix is not PSD")
        return x

    x, rcond = attempt(0.0)
    if x is not None and rcond >= 1.0 / cond_limit:
        return x
    x, rcond = attempt(default_load)
    if x is None:
        raise SolverError("Cholesky factorization failed even with diagonal loading")
    return x


@dataclass
class PeriodicAutocorrelation:
    """c(n, l) table, periodic in n with period `period`.

    Only lags l in [0, max_lag) are stored; negative lags resolve through
    the Hermitian symmetry c(n, -l) = conj(c(n - l, l)).
    """

    period: int
    data: np.ndarray = field(repr=False)  # shape (period, max_lag), c(n, l) for l >= 0

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 2 or self.data.shape[0] != self.period:
            raise ValueError(f"table shape {self.data.shape} does not match period {self.period}")

    @property
    def max_lag(self):
        return self.data.shape[1]

    def value(self, n, l):
        """c(n, l) for any integer n and |l| < max_lag."""
        n = int(n) % self.period
        if l >= 0:
            if l >= self.max_lag:
                raise IndexError(f"lag {l} outside table range {self.max_lag}")
            return self.data[n, l]
        if -l >= self.max_lag:
            raise IndexError(f"lag {l} outside table range {self.max_lag}")
        return np.conj(self.data[(n + l) % self.period, -l])

    def full_table(self, max_lag=None):
        """Dense (period, 2*max_lag-1) array over lags -(max_lag-1)..(max_lag-1)."""
        lmax = self.max_lag if max_lag is None else int(max_lag)
        if lmax > self.max_lag:
            raise IndexError(f"requested lag range {lmax} exceeds table range {self.max_lag}")
        out = np.empty((self.period, 2 * lmax - 1), dtype=complex)
        out[:, lmax - 1:] = self.data[:, :lmax]
        for l in range(1, lmax):
            out[:, lmax - 1 - l] = np.conj(np.roll(self.data[:, l], l))
        return out

    def scaled(self, power_factor):
        """Table for the amplitude-scaled process sqrt(power_factor)*x."""
        return PeriodicAutocorrelation(self.period, self.data * power_factor)

    def mean_power(self):
        """Time-averaged lag-0 value <c(n,0)>."""
        return float(np.real(np.mean(self.data[:, 0])))

    def check_symmetry(self, tol=1e-10):
        """Max violation of c(n,l) = conj(c(n+l,-l)); 0 by storage construction."""
        full = self.full_table()
        lmax = self.max_lag
        worst = 0.0
        for l in range(1, lmax):
            lhs = full[:, lmax - 1 + l]
            rhs = np.conj(np.roll(full[:, lmax - 1 - l], -l))
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        return worst <= tol


def estimate_autocorr(x, period, max_lag):
    """Sample estimate of c(n, l) = E{x[n+l] x*[n]} at phases n in [0, period).

    Averages over all full periods in the record for each (phase, lag >= 0)
    pair. Used for empirical design statistics and Monte-Carlo validation.
    """
    x = np.asarray(x)
    nrec = x.shape[0]
    if nrec < period + max_lag:
        raise ValueError("record too short for requested period and lag range")
    table = np.zeros((period, max_lag), dtype=complex)
    for l in range(max_lag):
        prod = x[l:] * np.conj(x[: nrec - l])
        usable = (prod.shape[0] // period) * period
        table[:, l] = prod[:usable].reshape(-1, period).mean(axis=0)
    return PeriodicAutocorrelation(period, table)


def lcm(a, b):
    return math.lcm(int(a), int(b))
