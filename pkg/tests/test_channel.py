import numpy as np
import pytest

from cyclofresh.channel import IsiChannel, apply_isi, isi_autocorr
from cyclofresh.ofdm import OfdmConfig, analytic_autocorr_ofdm, modulate, random_grid
from cyclofresh.signal_core import PeriodicAutocorrelation, estimate_autocorr


class TestApplyIsi:
    def test_identity(self, rng):
        d = rng.standard_normal(100)
        assert np.allclose(apply_isi(IsiChannel((1.0,)), d), d)

    def test_impulse_gives_taps(self):
        taps = (1.0, 0.1, 0.01, 0.001)
        x = np.zeros(10)
        x[0] = 1.0
        out = apply_isi(IsiChannel(taps), x)
        assert np.allclose(out[:4], taps)
        assert np.allclose(out[4:], 0.0)

    def test_scaling(self, rng):
        d = rng.standard_normal(64)
        assert np.allclose(apply_isi(IsiChannel((0.5,)), d), 0.5 * d)

    def test_truncates_to_input_length(self, rng):
        d = rng.standard_normal(32)
        assert apply_isi(IsiChannel((1.0, 0.5, 0.2)), d).shape == (32,)

    def test_validation(self):
        with pytest.raises(ValueError):
            IsiChannel(())
        with pytest.raises(ValueError):
            IsiChannel((1.0, np.inf))


class TestIsiAutocorr:
    def test_identity_channel(self):
        c = analytic_autocorr_ofdm(OfdmConfig(n_data=16, n_cp=4, active_carriers=tuple(range(16)), fc_norm=0.25), 20)
        out = isi_autocorr(IsiChannel((1.0,)), c)
        assert np.allclose(out.data, c.data[:, : out.max_lag])

    def test_scalar_channel(self):
        c = analytic_autocorr_ofdm(OfdmConfig(n_data=16, n_cp=4, active_carriers=tuple(range(16)), fc_norm=0.25), 20)
        out = isi_autocorr(IsiChannel((0.7,)), c)
        assert np.allclose(out.data, 0.49 * c.data[:, : out.max_lag])

    def test_white_input_two_taps(self):
        # c_dd = delta[l]: g = [1, 1] doubles the power and adds lag-1 terms
        white = PeriodicAutocorrelation(4, np.concatenate([np.ones((4, 1)), np.zeros((4, 5))], axis=1).astype(complex))
        out = isi_autocorr(IsiChannel((1.0, 1.0)), white)
        assert np.allclose(np.real(out.data[:, 0]), 2.0)
        assert np.allclose(np.real(out.data[:, 1]), 1.0)
        assert np.allclose(out.data[:, 2:], 0.0)

    def test_periodicity_preserved(self):
        cfg = OfdmConfig(n_data=16, n_cp=4, active_carriers=tuple(range(-4, 4)), fc_norm=9 / 32)
        c = analytic_autocorr_ofdm(cfg, 24)
        out = isi_autocorr(IsiChannel((1.0, 0.1, 0.01, 0.001)), c)
        assert out.period == cfg.n_sym
        for l in range(out.max_lag):
            assert out.value(5 + cfg.n_sym, l) == out.value(5, l)
        assert out.check_symmetry(tol=1e-12)

    def test_insufficient_lag_range(self):
        short = PeriodicAutocorrelation(4, np.ones((4, 2), complex))
        with pytest.raises(IndexError, match="lag range"):
            isi_autocorr(IsiChannel((1.0, 0.5, 0.3)), short)

    def test_empirical_match(self, mini_ofdm, rng):
        ch = IsiChannel((1.0, 0.1, 0.01, 0.001))
        d = apply_isi(ch, modulate(random_grid(30_000, mini_ofdm, rng), mini_ofdm))
        est = estimate_autocorr(d, mini_ofdm.n_sym, mini_ofdm.n_sym)
        ana = isi_autocorr(ch, analytic_autocorr_ofdm(mini_ofdm, mini_ofdm.n_sym + 4))
        assert np.max(np.abs(est.data - ana.data[:, : est.max_lag])) < 0.02
