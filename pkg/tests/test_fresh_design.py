import numpy as np
import pytest

from cyclofresh.fresh_design import (
    DesignInputs,
    FreshFilterSpec,
    build_correlation_matrix,
    build_cross_vector,
    centered_offset,
    comb,
    cyclic_coefficient,
    design_direct,
    design_noise_canceller,
    design_stationary_wiener,
    load_filter_spec,
    save_filter_spec,
    scaling_profile,
    theoretical_ta_mse,
    with_cyclic_freq_error,
    _canceller_vector,
)
from cyclofresh.ofdm import OfdmConfig, analytic_autocorr_ofdm
from cyclofresh.signal_core import PeriodicAutocorrelation

from conftest import synthetic_table


def white_table(period, max_lag, var=1.0):
    data = np.zeros((period, max_lag), complex)
    data[:, 0] = var
    return PeriodicAutocorrelation(period, data)


def zero_table(period, max_lag):
    return PeriodicAutocorrelation(period, np.zeros((period, max_lag), complex))


def brute_matrix(tabs, freqs, fir_len, horizon, lag_offset=0):
    """Direct evaluation of the time-averaged entry formula."""
    k = len(freqs)
    lags = np.arange(fir_len) - lag_offset
    m = k * fir_len
    out = np.zeros((m, m), complex)
    for u in range(m):
        pu, qu = divmod(u, fir_len)
        lu = lags[qu]
        for v in range(m):
            pv, qv = divmod(v, fir_len)
            lv = lags[qv]
            s = 0j
            for n in range(horizon):
                c = sum(tb.value(n - lv, lv - lu) for tb in tabs)
                s += c * np.exp(-2j * np.pi * freqs[pu] * (n - lu)) * np.exp(
                    2j * np.pi * freqs[pv] * (n - lv)
                )
            out[u, v] = s / horizon
    return out


def brute_cross(tab, freqs, fir_len, horizon, lag_offset=0):
    lags = np.arange(fir_len) - lag_offset
    out = np.zeros(len(freqs) * fir_len, complex)
    for i in range(out.shape[0]):
        p, q = divmod(i, fir_len)
        lq = lags[q]
        s = 0j
        for n in range(horizon):
            s += tab.value(n, -lq) * np.exp(-2j * np.pi * freqs[p] * (n - lq))
        out[i] = s / horizon
    return out


class TestBuilders:
    def test_white_noise_identity(self):
        m = build_correlation_matrix([white_table(4, 3)], (0.0,), 3, 4)
        assert np.allclose(m, np.eye(3))

    def test_stationary_toeplitz(self):
        tab = synthetic_table(6, 5, seed=11)
        m = build_correlation_matrix([tab], (0.0,), 4, 6)
        first = m[0]
        for i in range(1, 4):
            assert np.allclose(m[i, i:], first[: 4 - i])

    def test_two_by_two_hand_case(self):
        data = np.zeros((3, 2), complex)
        data[:, 0] = 1.0
        data[:, 1] = 0.5
        tab = PeriodicAutocorrelation(3, data)
        m = build_correlation_matrix([tab], (0.0,), 2, 3)
        assert np.allclose(m, [[1.0, 0.5], [0.5, 1.0]])

    def test_cross_vector_white(self):
        v = build_cross_vector(white_table(4, 3), (0.0,), 2, 4)
        assert np.allclose(v, [1.0, 0.0])

    def test_cross_vector_zero_target(self):
        v = build_cross_vector(zero_table(4, 5), comb(4, 1), 3, 4)
        assert np.allclose(v, 0.0)

    def test_matches_brute_force(self):
        cdd = synthetic_table(6, 12, seed=1)
        cww = synthetic_table(9, 12, scale=2.0, seed=2)
        horizon = 18
        freqs = comb(6, 1)
        fast = build_correlation_matrix([cdd, cww], freqs, 3, horizon)
        slow = brute_matrix([cdd, cww], freqs, 3, horizon)
        assert np.max(np.abs(fast - slow)) < 1e-12
        fastc = build_cross_vector(cdd, freqs, 3, horizon)
        slowc = brute_cross(cdd, freqs, 3, horizon)
        assert np.max(np.abs(fastc - slowc)) < 1e-12

    def test_matches_brute_force_with_offset(self):
        cdd = synthetic_table(6, 12, seed=3)
        freqs = comb(6, 1)
        fast = build_cross_vector(cdd, freqs, 4, 6, lag_offset=2)
        slow = brute_cross(cdd, freqs, 4, 6, lag_offset=2)
        assert np.max(np.abs(fast - slow)) < 1e-12
        # the matrix is offset-invariant
        m0 = build_correlation_matrix([cdd], freqs, 4, 6)
        m2 = brute_matrix([cdd], freqs, 4, 6, lag_offset=2)
        assert np.max(np.abs(m0 - m2)) < 1e-12

    def test_hermitian_within_tolerance(self):
        cdd = synthetic_table(6, 8, seed=4)
        cww = synthetic_table(9, 8, seed=5)
        m = build_correlation_matrix([cdd, cww], comb(9, 2), 5, 18)
        assert np.max(np.abs(m - m.conj().T)) < 1e-10

    def test_psd(self):
        cdd = synthetic_table(6, 8, seed=6)
        cww = synthetic_table(9, 8, seed=7)
        m = build_correlation_matrix([cdd, cww], comb(9, 1), 6, 18)
        eig = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        assert eig.min() >= -1e-10 * np.real(np.trace(m)) / m.shape[0]

    def test_lag_range_error(self):
        with pytest.raises(IndexError, match="lag range"):
            build_correlation_matrix([white_table(4, 2)], (0.0,), 5, 4)

    def test_lag_sign_convention(self):
        tab = synthetic_table(5, 6, seed=8)
        freqs = (1.0 / 5.0,)
        neg = build_cross_vector(tab, freqs, 3, 5, lag_sign="negative")
        pos = build_cross_vector(tab, freqs, 3, 5, lag_sign="positive")
        # entry q of "negative" averages c(n, -q); "positive" averages c(n, q):
        # they differ once the branch shift weights the phases
        assert neg[0] == pos[0]
        assert not np.allclose(neg[1:], pos[1:])


class TestCyclicCoefficient:
    def test_on_grid_matches_direct_sum(self):
        tab = synthetic_table(6, 5, seed=9)
        for k in range(-2, 3):
            fast = cyclic_coefficient(tab, k / 6, 4, 12)
            full = tab.full_table(4)
            n = np.arange(12)
            w = np.exp(-2j * np.pi * (k / 6) * n)
            slow = np.array([np.mean(w * full[n % 6, j]) for j in range(7)])
            assert np.max(np.abs(fast - slow)) < 1e-13

    def test_off_grid_dirichlet(self):
        tab = synthetic_table(6, 4, seed=10)
        da = 0.0137
        fast = cyclic_coefficient(tab, da, 3, 24)
        full = tab.full_table(3)
        n = np.arange(24)
        w = np.exp(-2j * np.pi * da * n)
        slow = np.array([np.mean(w * full[n % 6, j]) for j in range(5)])
        assert np.max(np.abs(fast - slow)) < 1e-13

    def test_horizon_validation(self):
        with pytest.raises(ValueError, match="multiple"):
            cyclic_coefficient(synthetic_table(6, 4), 0.0, 3, 11)


class TestDesignDirect:
    def test_requires_zero_frequency(self):
        inputs = DesignInputs(synthetic_table(4, 6, seed=1), white_table(4, 6))
        with pytest.raises(ValueError, match="frequency 0"):
            design_direct(inputs, (0.25,), 3)

    def test_awgn_k1_equals_stationary_wiener(self):
        cdd = synthetic_table(6, 8, seed=12)
        inputs = DesignInputs(cdd, white_table(1, 8, 0.5), period=6)
        a = design_direct(inputs, (0.0,), 5)
        b = design_stationary_wiener(inputs, 5)
        assert np.max(np.abs(a.filter.coeffs - b.filter.coeffs)) < 1e-9

    def test_scalar_wiener_algebra(self):
        # P_d = 1, noise sigma^2: h = 1/(1+sigma^2), TA-MSE = sigma^2/(1+sigma^2)
        sigma2 = 0.7
        inputs = DesignInputs(white_table(1, 2, 1.0), white_table(1, 2, sigma2))
        res = design_direct(inputs, (0.0,), 1)
        assert res.filter.coeffs[0] == pytest.approx(1.0 / (1.0 + sigma2))
        assert res.ta_mse == pytest.approx(sigma2 / (1.0 + sigma2))
        assert theoretical_ta_mse(1.0, [1.0], res.filter.coeffs) == pytest.approx(res.ta_mse)

    def test_perfect_recovery_zero_noise(self, mini_ofdm):
        cdd = analytic_autocorr_ofdm(mini_ofdm, 40)
        inputs = DesignInputs(cdd, zero_table(1, 40), period=mini_ofdm.n_sym)
        res = design_direct(inputs, comb(mini_ofdm.n_sym, 2), mini_ofdm.n_data + 2)
        assert res.ta_mse < 1e-6 * res.p_d

    def test_mse_bounds(self):
        cdd = synthetic_table(6, 8, seed=13)
        cww = synthetic_table(9, 8, seed=14)
        res = design_direct(DesignInputs(cdd, cww), comb(6, 1), 4)
        assert 0.0 <= res.ta_mse <= res.p_d

    def test_branch_monotonicity(self):
        # adding cyclic branches never increases the predicted TA-MSE
        cdd = synthetic_table(6, 10, seed=15)
        cww = synthetic_table(9, 10, seed=16)
        inputs = DesignInputs(cdd, cww)
        prev = np.inf
        for half in (0, 1, 2):
            res = design_direct(inputs, comb(6, half), 4)
            assert res.ta_mse <= prev + 1e-12
            prev = res.ta_mse

    def test_fir_length_sufficiency_cp(self, mini_ofdm):
        # causal taps: L = N_data + 1 reaches the CP lag, L = N_data misses it
        cdd = analytic_autocorr_ofdm(mini_ofdm, 40)
        cww = white_table(1, 40, 0.05)
        inputs = DesignInputs(cdd, cww, period=mini_ofdm.n_sym)
        full = design_direct(inputs, comb(mini_ofdm.n_sym, 2), mini_ofdm.n_data + 1)
        short = design_direct(inputs, comb(mini_ofdm.n_sym, 2), mini_ofdm.n_data)
        assert full.ta_mse < short.ta_mse - 1e-6

    def test_orthogonality_residual(self):
        cdd = synthetic_table(6, 10, seed=17)
        cww = synthetic_table(9, 10, seed=18)
        res = design_direct(DesignInputs(cdd, cww), comb(6, 2), 6)
        assert res.residual < 1e-8


class TestNoiseCanceller:
    def test_matches_brute_force_formulas(self):
        """Every stage of the cascade against the verbatim entry formulas."""
        cdd = synthetic_table(6, 16, seed=1)
        cww = synthetic_table(9, 16, scale=2.0, seed=2)
        fn, fs = comb(9, 1), comb(6, 1)
        l1, l2, off1, off2 = 4, 3, 2, 1
        horizon = 18
        res = design_noise_canceller(
            DesignInputs(cdd, cww), fn, l1, fs, l2, lag_offset1=off1, lag_offset2=off2
        )
        ich = _canceller_vector(res.receiver.h1, fn)
        lag1 = np.arange(l1) - off1
        lag2 = np.arange(l2) - off2
        k1 = len(fn)
        m1 = k1 * l1

        c_rr = brute_matrix([cdd, cww], fn, l1, horizon, off1)
        c_rw = brute_cross(cww, fn, l1, horizon, off1)
        h1_slow = np.linalg.solve(c_rr, c_rw)
        assert np.max(np.abs(res.receiver.h1.coeffs - h1_slow)) < 1e-10

        def cmat(n, l, tab):
            out = np.zeros((m1, m1), complex)
            for u in range(m1):
                pu, qu = divmod(u, l1)
                lu = lag1[qu]
                for v in range(m1):
                    pv, qv = divmod(v, l1)
                    lv = lag1[qv]
                    out[u, v] = tab.value(n - lv, lv + l - lu) * np.exp(
                        2j * np.pi * (fn[pv] * (n - lv) - fn[pu] * (n + l - lu))
                    )
            return out

        def ctt(n, l):
            return ich.conj() @ (cmat(n, l, cdd) + cmat(n, l, cww)) @ ich

        def cd2d(n, l):
            vec = np.array(
                [
                    cdd.value(n, l - lag1[q]) * np.exp(-2j * np.pi * fn[p] * (n + l - lag1[q]))
                    for p in range(k1)
                    for q in range(l1)
                ]
            )
            return ich.conj() @ vec

        m2 = len(fs) * l2
        c_tt = np.zeros((m2, m2), complex)
        c_td = np.zeros(m2, complex)
        for u in range(m2):
            pu, qu = divmod(u, l2)
            lu = lag2[qu]
            for v in range(m2):
                pv, qv = divmod(v, l2)
                lv = lag2[qv]
                s = 0j
                for n in range(horizon):
                    s += ctt(n - lv, lv - lu) * np.exp(
                        2j * np.pi * (fs[pv] * (n - lv) - fs[pu] * (n - lu))
                    )
                c_tt[u, v] = s / horizon
            s = 0j
            for n in range(horizon):
                s += cd2d(n, -lu) * np.exp(-2j * np.pi * fs[pu] * (n - lu))
            c_td[u] = s / horizon
        h2_slow = np.linalg.solve(c_tt, c_td)
        assert np.max(np.abs(res.receiver.h2.coeffs - h2_slow)) < 1e-9
        pd = cdd.mean_power()
        assert res.ta_mse == pytest.approx(pd - np.real(c_td.conj() @ h2_slow), abs=1e-12)

    def test_requires_zero_frequencies(self):
        inputs = DesignInputs(synthetic_table(4, 8, seed=3), synthetic_table(6, 8, seed=4))
        with pytest.raises(ValueError, match="noise comb"):
            design_noise_canceller(inputs, (0.25,), 3, comb(4, 1), 3)
        with pytest.raises(ValueError, match="signal comb"):
            design_noise_canceller(inputs, comb(6, 1), 3, (0.25,), 3)

    def test_zero_noise_reduces_to_direct(self, mini_ofdm):
        cdd = analytic_autocorr_ofdm(mini_ofdm, 40)
        cww = zero_table(10, 40)
        inputs = DesignInputs(cdd, cww)
        two = design_noise_canceller(inputs, comb(10, 2), 8, comb(mini_ofdm.n_sym, 2), 18)
        assert np.max(np.abs(two.receiver.h1.coeffs)) < 1e-6
        direct = design_direct(inputs, comb(mini_ofdm.n_sym, 2), 18)
        assert two.ta_mse == pytest.approx(direct.ta_mse, abs=1e-8)

    def test_awgn_equivalence_mini(self, mini_ofdm):
        # noise cancellation cannot help on white noise: with the stage-2
        # window reaching the CP lag, the cascade matches the direct design
        cdd = analytic_autocorr_ofdm(mini_ofdm, 48)
        cww = white_table(1, 48, 0.5)
        nn = 24
        inputs = DesignInputs(cdd, cww, period=np.lcm(mini_ofdm.n_sym, nn))
        l_direct = mini_ofdm.n_sym + nn // 2
        direct = design_direct(inputs, comb(mini_ofdm.n_sym, 2), l_direct,
                               lag_offset=centered_offset(l_direct))
        two = design_noise_canceller(
            inputs, comb(nn, 2), nn // 2, comb(mini_ofdm.n_sym, 2), mini_ofdm.n_sym,
            lag_offset1=centered_offset(nn // 2), lag_offset2=mini_ofdm.n_data,
        )
        assert abs(10 * np.log10(two.ta_mse / direct.ta_mse)) < 0.02


class TestFrequencyError:
    def test_zero_delta_unchanged(self):
        freqs = comb(1000, 2)
        assert with_cyclic_freq_error(freqs, 0.0) == freqs

    def test_multiplicative_convention(self):
        freqs = comb(1000, 2)
        out = with_cyclic_freq_error(freqs, 0.5)
        for f, g in zip(freqs, out):
            assert g == pytest.approx(f / 1.5)
        assert out[2] == 0.0  # zero branch untouched

    def test_degradation_toward_direct(self, mini_ofdm):
        """Large delta disables the noise branches; TA-MSE approaches the
        direct design; small delta stays near the nominal canceller."""
        from cyclofresh.noise import kata_preset, katayama_autocorr

        nn = 50
        par = kata_preset("KATA2", n_noise=nn)
        cdd = analytic_autocorr_ofdm(mini_ofdm, 48)
        cww = katayama_autocorr(par, 48)
        cww = cww.scaled(cdd.mean_power() / cww.mean_power())
        inputs = DesignInputs(cdd, cww, reps=50)
        fn, fs = comb(nn, 2), comb(mini_ofdm.n_sym, 2)
        l1, l2 = nn // 2, mini_ofdm.n_sym
        kw = dict(lag_offset1=centered_offset(l1), lag_offset2=mini_ofdm.n_data)
        nominal = design_noise_canceller(inputs, fn, l1, fs, l2, **kw)
        direct = design_direct(inputs, fs, mini_ofdm.n_sym + nn // 2,
                               lag_offset=centered_offset(mini_ofdm.n_sym + nn // 2))
        small = design_noise_canceller(inputs, with_cyclic_freq_error(fn, 1e-6), l1, fs, l2, **kw)
        big = design_noise_canceller(inputs, with_cyclic_freq_error(fn, 0.45), l1, fs, l2, **kw)
        assert 10 * np.log10(nominal.ta_mse / direct.ta_mse) < -0.8  # cancellation pays
        assert abs(10 * np.log10(small.ta_mse / nominal.ta_mse)) < 0.05
        assert abs(10 * np.log10(big.ta_mse / direct.ta_mse)) < 0.35


class TestScalingProfile:
    def test_identity_receiver(self, mini_ofdm):
        from cyclofresh.fresh_design import TwoStageReceiver

        cdd = analytic_autocorr_ofdm(mini_ofdm, 40)
        h1 = FreshFilterSpec.zero(comb(10, 1), 8, 3)
        coeffs = np.zeros(mini_ofdm.n_sym, complex)
        coeffs[0] = 1.0
        h2 = FreshFilterSpec((0.0,), mini_ofdm.n_sym, coeffs, 0)
        rx = TwoStageReceiver(h1, h2, mini_ofdm.n_sym, 10)
        psi = scaling_profile(rx, cdd)
        assert np.allclose(psi, 1.0, atol=1e-12)

    def test_single_tap_conjugate(self, mini_ofdm):
        from cyclofresh.fresh_design import TwoStageReceiver

        cdd = analytic_autocorr_ofdm(mini_ofdm, 40)
        h1 = FreshFilterSpec.zero((0.0,), 4, 0)
        c = 0.8 - 0.3j
        coeffs = np.zeros(6, complex)
        coeffs[0] = c
        h2 = FreshFilterSpec((0.0,), 6, coeffs, 0)
        rx = TwoStageReceiver(h1, h2, mini_ofdm.n_sym, 5)
        psi = scaling_profile(rx, cdd)
        assert np.allclose(psi, np.conj(c), atol=1e-12)


class TestFilterFile:
    def test_roundtrip(self, tmp_path, rng):
        coeffs = rng.standard_normal(12) + 1j * rng.standard_normal(12)
        spec = FreshFilterSpec(comb(10, 1), 4, coeffs, 2)
        path = tmp_path / "f.filt"
        save_filter_spec(spec, path)
        back = load_filter_spec(path)
        assert back.cyclic_freqs == spec.cyclic_freqs
        assert back.fir_len == spec.fir_len
        assert back.lag_offset == spec.lag_offset
        assert np.array_equal(back.coeffs, spec.coeffs)

    def test_bad_header(self, tmp_path):
        p = tmp_path / "bad.filt"
        p.write_text("nonsense\n")
        with pytest.raises(ValueError, match="header"):
            load_filter_spec(p)
