import numpy as np
import pytest

from cyclofresh.fresh_design import (
    DesignInputs,
    FreshFilterSpec,
    TwoStageReceiver,
    comb,
    design_noise_canceller,
)
from cyclofresh.fresh_runtime import apply_fresh, apply_two_stage, warmup_length
from cyclofresh.noise import kata_preset, katayama_autocorr, katayama_generate
from cyclofresh.ofdm import analytic_autocorr_ofdm, modulate, random_grid
from cyclofresh.signal_core import make_rng


def direct_convolution_oracle(taps, x):
    """Plain double-sum FIR with zero prehistory (independent of scipy)."""
    y = np.zeros(x.shape[0], dtype=complex)
    for n in range(x.shape[0]):
        for i, h in enumerate(taps):
            if n - i >= 0:
                y[n] += h * x[n - i]
    return y


class TestApplyFresh:
    def test_identity(self, rng):
        x = rng.standard_normal(50)
        spec = FreshFilterSpec((0.0,), 1, np.array([1.0 + 0j]))
        assert np.allclose(apply_fresh(spec, x), x, atol=1e-14)

    def test_matches_convolution_oracle(self, rng):
        x = rng.standard_normal(200)
        coeffs = rng.standard_normal(7) + 1j * rng.standard_normal(7)
        spec = FreshFilterSpec((0.0,), 7, coeffs)
        y = apply_fresh(spec, x)
        ref = direct_convolution_oracle(np.conj(coeffs), x)
        assert np.max(np.abs(y - ref)) < 1e-12

    def test_offset_shifts_alignment(self, rng):
        x = rng.standard_normal(100)
        coeffs = rng.standard_normal(5) + 0j
        causal = FreshFilterSpec((0.0,), 5, coeffs, 0)
        offset = FreshFilterSpec((0.0,), 5, coeffs, 2)
        y0 = apply_fresh(causal, x)
        y2 = apply_fresh(offset, x)
        assert np.allclose(y2[:-2], y0[2:], atol=1e-12)

    def test_conjugate_symmetric_branches_real_output(self, rng):
        x = rng.standard_normal(300)
        alpha = 1 / 25
        c = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        coeffs = np.concatenate([np.conj(c), c])
        spec = FreshFilterSpec((-alpha, alpha), 6, coeffs)
        y = apply_fresh(spec, x)
        assert np.max(np.abs(np.imag(y))) < 1e-10 * max(1.0, np.max(np.abs(y)))

    def test_linearity(self, rng):
        x1 = rng.standard_normal(128)
        x2 = rng.standard_normal(128)
        coeffs = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        spec = FreshFilterSpec((0.2,), 8, coeffs, 3)
        lhs = apply_fresh(spec, 2.0 * x1 - 0.7 * x2)
        rhs = 2.0 * apply_fresh(spec, x1) - 0.7 * apply_fresh(spec, x2)
        assert np.max(np.abs(lhs - rhs)) < 1e-10

    def test_period_shift_covariance(self, rng):
        # shifting the input by the filter's cyclic period shifts the output
        period = 12
        x = rng.standard_normal(40 * period)
        coeffs = rng.standard_normal(3 * 5) + 1j * rng.standard_normal(3 * 5)
        spec = FreshFilterSpec(comb(period, 1), 5, coeffs, 2)
        y = apply_fresh(spec, x)
        xs = np.concatenate([np.zeros(period), x])[: x.shape[0]]
        ys = apply_fresh(spec, xs)
        # steady-state region: skip the filter span at both record edges
        assert np.max(np.abs(ys[2 * period : -period] - y[period : -2 * period])) < 1e-10


class TestApplyTwoStage:
    def test_zero_h1_reduces_to_single_stage(self, rng):
        r = rng.standard_normal(200)
        h1 = FreshFilterSpec.zero(comb(10, 1), 4, 2)
        coeffs = rng.standard_normal(2 * 6) + 1j * rng.standard_normal(2 * 6)
        h2 = FreshFilterSpec((0.0, 0.1), 6, coeffs, 1)
        rx = TwoStageReceiver(h1, h2, 20, 10)
        out = apply_two_stage(rx, r)
        assert np.allclose(out.t, r)
        assert np.allclose(out.w_hat, 0.0)
        assert np.allclose(out.y_complex, apply_fresh(h2, r), atol=1e-12)

    def test_zero_input(self):
        h1 = FreshFilterSpec.zero(comb(10, 1), 4)
        h2 = FreshFilterSpec.zero((0.0,), 3)
        rx = TwoStageReceiver(h1, h2, 20, 10)
        out = apply_two_stage(rx, np.zeros(60))
        assert np.allclose(out.y, 0.0)

    def test_empirical_matches_theory_kata1(self, mini_ofdm):
        # the no-free-lunch check: measured TA-MSE within Monte-Carlo error
        # of the closed form, and never meaningfully below it
        rng = make_rng(77, 0)
        nn = 50
        par = kata_preset("KATA1", n_noise=nn)
        maxlag = nn // 2 + mini_ofdm.n_sym + 2
        cdd = analytic_autocorr_ofdm(mini_ofdm, maxlag)
        cww = katayama_autocorr(par, maxlag)
        cww = cww.scaled(cdd.mean_power() / cww.mean_power())  # 0 dB
        res = design_noise_canceller(
            DesignInputs(cdd, cww),
            comb(nn, 2), nn // 2, comb(mini_ofdm.n_sym, 2), mini_ofdm.n_sym,
            lag_offset1=nn // 4, lag_offset2=mini_ofdm.n_data,
        )
        d = modulate(random_grid(400_000 // mini_ofdm.n_sym, mini_ofdm, rng), mini_ofdm)
        r = d + katayama_generate(par, d.shape[0], rng) * np.sqrt(
            cdd.mean_power() / katayama_autocorr(par, 2).mean_power()
        )
        out = apply_two_stage(res.receiver, r)
        period = np.lcm(mini_ofdm.n_sym, nn)
        warm = warmup_length(res.receiver, mini_ofdm.n_data)
        start = ((warm + period - 1) // period) * period
        stop = (d.shape[0] - warm) // period * period
        sl = slice(start, stop)
        emp = np.mean((out.y[sl] - d[sl]) ** 2)
        assert abs(10 * np.log10(emp / res.ta_mse)) < 0.15
        assert emp > res.ta_mse * 10 ** (-0.1)  # no free lunch
        assert out.imag_residue < 1e-10

    def test_warmup_length(self):
        h1 = FreshFilterSpec.zero(comb(10, 1), 12, 3)
        h2 = FreshFilterSpec.zero((0.0,), 5)
        rx = TwoStageReceiver(h1, h2, 20, 10)
        assert warmup_length(rx, 64) == 64
        assert warmup_length(rx, 4) == 17
        assert warmup_length(h1, 4) == 12
