import numpy as np
import pytest

from cyclofresh.ofdm import OfdmConfig
from cyclofresh.signal_core import PeriodicAutocorrelation, make_rng


def db(x):
    return 10.0 * np.log10(x)


@pytest.fixture
def rng():
    return make_rng(20240817, 0)


@pytest.fixture
def mini_ofdm():
    """Full-band 16-carrier geometry: delta-form statistics, 20-sample symbol."""
    return OfdmConfig(n_data=16, n_cp=4, active_carriers=tuple(range(16)), fc_norm=0.25)


@pytest.fixture
def mini_ofdm_partial():
    """Half-loaded 8-of-16 geometry with clean passband demodulation
    (image band falls on the unused bins; |cos(gamma)| = 1)."""
    return OfdmConfig(n_data=16, n_cp=4, active_carriers=tuple(range(-4, 4)), fc_norm=9 / 32)


def synthetic_table(period, max_lag, scale=1.0, seed=0, taps=5):
    """A valid random periodic autocorrelation: amplitude-modulated FIR-colored
    process c(n,l) = a[n] a[n+l] rho(l)."""
    r = np.random.default_rng(seed)
    f = r.standard_normal(taps)
    a = 0.5 + r.random(period)
    corr = np.correlate(f, f, mode="full")
    mid = taps - 1
    tab = np.zeros((period, max_lag), complex)
    n = np.arange(period)
    for l in range(max_lag):
        cl = corr[mid + l] if l < taps else 0.0
        tab[:, l] = scale * a[n] * a[(n + l) % period] * cl
    return PeriodicAutocorrelation(period, tab)
