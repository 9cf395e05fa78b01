"""Closed-form FRESH receiver synthesis.

Implements the stationary Wiener filter, the direct signal-recovery FRESH
filter, and the two-stage noise-cancelling receiver (noise estimator h1,
signal extractor h2), together with the predicted time-averaged MSE and the
output scaling profile.

All statistics enter as PeriodicAutocorrelation tables. Time averages run
over a horizon T = reps * lcm(period_signal, period_noise); for branch
frequencies on the cyclic grid the horizon drops out and the expressions are
exact, while off-grid (frequency-error) branches pick up a closed-form
Dirichlet attenuation modelling decoherence over a finite record.

Tap slot q of a filter with lag_offset D acts on input lag q - D. A
nonzero offset realizes the non-causal (delay-aligned) filters: the
receivers operate offline, so a centered window [-L/2, L/2) simply means
the output is aligned with the window middle. A filter bank's correlation
matrix does not depend on the common offset; only cross vectors and the
cascade statistics do.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .signal_core import PeriodicAutocorrelation, hermitian_solve

__all__ = [
    "FreshFilterSpec",
    "TwoStageReceiver",
    "DesignInputs",
    "DesignResult",
    "TwoStageResult",
    "comb",
    "centered_offset",
    "cyclic_coefficient",
    "build_correlation_matrix",
    "build_cross_vector",
    "design_direct",
    "design_stationary_wiener",
    "design_noise_canceller",
    "theoretical_ta_mse",
    "scaling_profile",
    "with_cyclic_freq_error",
    "save_filter_spec",
    "load_filter_spec",
]

_INT_TOL = 1e-9


@dataclass(frozen=True)
class FreshFilterSpec:
    """A bank of K per-branch FIR filters on frequency-shifted inputs.

    coeffs holds the concatenated h vector of the normal equations; the
    branch impulse responses applied to the shifted signal are conj(coeffs)
    (the filter output is h^H z[n]). Tap slot q covers input lag
    q - lag_offset.
    """

    cyclic_freqs: tuple
    fir_len: int
    coeffs: np.ndarray = field(repr=False)
    lag_offset: int = 0

    def __post_init__(self):
        freqs = tuple(float(f) for f in self.cyclic_freqs)
        if len(freqs) < 1 or self.fir_len < 1:
            raise ValueError("need at least one branch and one tap")
        if not (0 <= self.lag_offset < self.fir_len):
            raise ValueError(f"lag_offset {self.lag_offset} outside [0, {self.fir_len})")
        c = np.asarray(self.coeffs, dtype=complex).ravel()
        if c.shape[0] != len(freqs) * self.fir_len:
            raise ValueError(
                f"coeffs length {c.shape[0]} != K*L = {len(freqs) * self.fir_len}"
            )
        object.__setattr__(self, "cyclic_freqs", freqs)
        object.__setattr__(self, "coeffs", c)

    @property
    def n_branches(self):
        return len(self.cyclic_freqs)

    @property
    def lags(self):
        """Input lags covered by tap slots 0..L-1."""
        return np.arange(self.fir_len) - self.lag_offset

    def branch(self, k):
        """Coefficient slice of branch k."""
        return self.coeffs[k * self.fir_len : (k + 1) * self.fir_len]

    @classmethod
    def zero(cls, cyclic_freqs, fir_len, lag_offset=0):
        freqs = tuple(cyclic_freqs)
        return cls(freqs, fir_len, np.zeros(len(freqs) * fir_len, complex), lag_offset)


@dataclass(frozen=True)
class TwoStageReceiver:
    """Noise estimator h1 (period n_noise comb) feeding a canceller, then
    signal extractor h2 (period n_sym comb). Frequency-error studies may
    carry off-grid h1 frequencies."""

    h1: FreshFilterSpec
    h2: FreshFilterSpec
    n_sym: int
    n_noise: int


@dataclass(frozen=True)
class DesignInputs:
    """Analytic or sample-estimated statistics feeding a design.

    c_dd: desired-signal table (period n_sym, possibly channel-convolved);
    c_ww: noise table (period n_noise); reps scales the averaging horizon
    T = reps * period. The period defaults to lcm of the table periods but
    can be forced larger, e.g. to the receiver's nominal noise period when
    the actual noise is stationary (AWGN robustness studies).
    """

    c_dd: PeriodicAutocorrelation
    c_ww: PeriodicAutocorrelation
    reps: int = 1
    period: int = 0  # 0: lcm of the table periods

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        base = math.lcm(self.c_dd.period, self.c_ww.period)
        period = self.period or base
        if period % base:
            raise ValueError(f"period {period} is not a multiple of the table lcm {base}")
        object.__setattr__(self, "period", period)

    @property
    def horizon(self):
        return self.reps * self.period

    @property
    def p_d(self):
        return self.c_dd.mean_power()


def comb(period, half_width=2):
    """Symmetric cyclic-frequency comb k/period, k = -half_width..half_width."""
    return tuple(k / period for k in range(-half_width, half_width + 1))


def centered_offset(fir_len):
    return fir_len // 2


def with_cyclic_freq_error(freqs, delta):
    """Receiver-side period error: alpha_k -> alpha_k / (1 + delta).

    Equivalent to k / (N * (1 + delta)); the zero branch is unchanged.
    """
    return tuple(f / (1.0 + delta) for f in freqs)


def cyclic_coefficient(table, dalpha, max_lag, horizon):
    """<c(n, l) e^{-j2 pi dalpha n}> over n in [0, horizon), for
    l = -(max_lag-1) .. (max_lag-1).

    The n-sum factors into one period of the table times a geometric sum
    over the horizon's B = horizon/period blocks; exact for any dalpha.
    """
    n0 = table.period
    if horizon % n0:
        raise ValueError(f"horizon {horizon} is not a multiple of table period {n0}")
    b = horizon // n0
    full = table.full_table(max_lag)  # (n0, 2*max_lag-1)
    w = np.exp(-2j * np.pi * dalpha * np.arange(n0))
    per_period = w @ full  # sum over one period, all lags
    x = dalpha * n0
    if abs(x - round(x)) < _INT_TOL:
        geo = float(b)
    else:
        q = np.exp(-2j * np.pi * x)
        geo = (1.0 - q**b) / (1.0 - q)
    return per_period * (geo / (n0 * b))


def _lag_index(arr_len):
    """Center offset of a symmetric lag array of length 2*max_lag-1."""
    return (arr_len - 1) // 2


def build_correlation_matrix(tables, freqs, fir_len, horizon):
    """Time-averaged correlation matrix of the frequency-shifted input vector.

    tables: iterable of PeriodicAutocorrelation contributions that sum to the
    input autocorrelation (e.g. signal + noise). Entry (u, v) with
    u = p_u*L + q_u, v = p_v*L + q_v is
    exp(-j2 pi a_{p_u}(q_v - q_u)) * C^(a_{p_u} - a_{p_v})(q_v - q_u),
    which makes each branch-pair block Toeplitz. A common tap lag offset
    leaves the matrix unchanged, so none is taken here.
    """
    freqs = tuple(freqs)
    k = len(freqs)
    if k < 1 or fir_len < 1:
        raise ValueError("need at least one branch and one tap")
    tables = list(tables)
    for t in tables:
        if t.max_lag < fir_len:
            raise IndexError(
                f"table lag range {t.max_lag} is insufficient for fir_len {fir_len}"
            )
    out = np.empty((k * fir_len, k * fir_len), dtype=complex)
    lags = np.arange(-(fir_len - 1), fir_len)
    for pu in range(k):
        for pv in range(k):
            dalpha = freqs[pu] - freqs[pv]
            carr = np.zeros(2 * fir_len - 1, dtype=complex)
            for t in tables:
                carr = carr + cyclic_coefficient(t, dalpha, fir_len, horizon)
            f = np.exp(-2j * np.pi * freqs[pu] * lags) * carr
            mid = _lag_index(f.shape[0])
            block = toeplitz(f[mid::-1], f[mid:])
            out[pu * fir_len : (pu + 1) * fir_len, pv * fir_len : (pv + 1) * fir_len] = block
    return out


def build_cross_vector(table, freqs, fir_len, horizon, lag_offset=0, lag_sign="negative"):
    """Time-averaged cross-correlation vector between the shifted input and
    the target process whose (cross-)autocorrelation is `table`.

    Entry i = p*L + q is exp(j2 pi a_p (q - D)) * C^(a_p)(-(q - D)) for the
    standard convention (lag_sign="negative", the estimation target leads);
    lag_sign="positive" flips the lag sense for tables indexed the other way.
    """
    freqs = tuple(freqs)
    need = max(lag_offset, fir_len - 1 - lag_offset) + 1
    if table.max_lag < need:
        raise IndexError(f"table lag range {table.max_lag} is insufficient ({need} needed)")
    sign = -1 if lag_sign == "negative" else 1
    out = np.empty(len(freqs) * fir_len, dtype=complex)
    lags = np.arange(fir_len) - lag_offset
    for p, alpha in enumerate(freqs):
        carr = cyclic_coefficient(table, alpha, need, horizon)
        mid = _lag_index(carr.shape[0])
        out[p * fir_len : (p + 1) * fir_len] = np.exp(2j * np.pi * alpha * lags) * carr[
            mid + sign * lags
        ]
    return out


@dataclass(frozen=True)
class DesignResult:
    filter: FreshFilterSpec
    ta_mse: float
    p_d: float
    residual: float  # relative normal-equation residual (orthogonality check)

    @property
    def ta_mse_db(self):
        return 10.0 * np.log10(max(self.ta_mse, 1e-300))


@dataclass(frozen=True)
class TwoStageResult:
    receiver: TwoStageReceiver
    ta_mse: float
    p_d: float
    residual: float
    h1_result: DesignResult

    @property
    def ta_mse_db(self):
        return 10.0 * np.log10(max(self.ta_mse, 1e-300))


def _solve_design(matrix, cross, p_d, loading):
    # off-grid (frequency-error) branches leave an O(delta) asymmetry from
    # the finite-window reduction; fold it before the strict solve
    matrix = 0.5 * (matrix + matrix.conj().T)
    h = hermitian_solve(matrix, cross, loading=loading)
    res = np.linalg.norm(matrix @ h - cross)
    scale = np.linalg.norm(matrix, "fro") * np.linalg.norm(h) + np.linalg.norm(cross)
    ta_mse = float(p_d - np.real(np.vdot(cross, h)))
    return h, ta_mse, float(res / scale) if scale > 0 else 0.0


def design_direct(inputs, freqs_signal, fir_len, lag_offset=0, loading=None):
    """One-shot FRESH filter estimating the desired signal from r = d + w."""
    freqs_signal = tuple(freqs_signal)
    if not any(abs(f) < _INT_TOL for f in freqs_signal):
        raise ValueError("signal comb must include cyclic frequency 0")
    t = inputs.horizon
    cmat = build_correlation_matrix([inputs.c_dd, inputs.c_ww], freqs_signal, fir_len, t)
    cvec = build_cross_vector(inputs.c_dd, freqs_signal, fir_len, t, lag_offset)
    h, ta_mse, res = _solve_design(cmat, cvec, inputs.p_d, loading)
    spec = FreshFilterSpec(freqs_signal, fir_len, h, lag_offset)
    return DesignResult(spec, ta_mse, inputs.p_d, res)


def design_stationary_wiener(inputs, fir_len, lag_offset=0, loading=None):
    """design_direct restricted to the single zero-frequency branch."""
    return design_direct(inputs, (0.0,), fir_len, lag_offset=lag_offset, loading=loading)


def _canceller_vector(h1_spec, freqs_noise):
    """i-check: zero-branch lag-0 selector minus h1."""
    k0 = next(i for i, f in enumerate(freqs_noise) if abs(f) < _INT_TOL)
    v = -h1_spec.coeffs.copy()
    v[k0 * h1_spec.fir_len + h1_spec.lag_offset] += 1.0
    return v


def _lag_window_product(rho, warr, out_halfwidth):
    """out[l] = sum_s rho[s] * warr[s + l] for l = -out_halfwidth..out_halfwidth.

    rho spans s = -(S-1)..(S-1) (odd length), warr spans a symmetric lag
    range wide enough that s + l stays inside.
    """
    smax = _lag_index(rho.shape[0])
    wmid = _lag_index(warr.shape[0])
    out = np.empty(2 * out_halfwidth + 1, dtype=complex)
    for i, l in enumerate(range(-out_halfwidth, out_halfwidth + 1)):
        seg = warr[wmid + l - smax : wmid + l + smax + 1]
        out[i] = np.dot(rho, seg)
    return out


def _cascade_cyclic_tables(inputs, icheck, h1_spec, freqs_signal, l2):
    """Cyclic coefficients of c_tt and c_{d2 d} after stage-1 cancellation.

    Returns (ctt_hat, cd2d_hat):
      ctt_hat[dbeta] -> array over lags -(l2-1)..(l2-1)
      cd2d_hat[beta] -> array over lags -(l2-1)..(l2-1)
    keyed by the exact float frequency differences used by stage 2.
    """
    t = inputs.horizon
    freqs_noise = h1_spec.cyclic_freqs
    l1 = h1_spec.fir_len
    off1 = h1_spec.lag_offset
    k1 = len(freqs_noise)
    need = l1 + l2  # lag reach of the cascade sums
    for tab, name in ((inputs.c_dd, "c_dd"), (inputs.c_ww, "c_ww")):
        if tab.max_lag < need:
            raise IndexError(f"{name} lag range {tab.max_lag} < required {need}")

    branches = [icheck[a * l1 : (a + 1) * l1] for a in range(k1)]
    lam1 = np.arange(l1) - off1  # tap lags of stage 1
    phi = [branches[a] * np.exp(-2j * np.pi * freqs_noise[a] * lam1) for a in range(k1)]

    dbetas = sorted({round(fu - fv, 15) for fu in freqs_signal for fv in freqs_signal})
    ctt_hat = {}
    for dbeta in dbetas:
        acc = np.zeros(2 * l2 - 1, dtype=complex)
        for a in range(k1):
            # rho_ab[s] = sum_i conj(phi_a[i]) i_b[i+s] e^{-j2pi(dbeta+alpha_a)(lag_{i+s})}
            u = np.conj(phi[a])
            lam_phase = np.exp(-2j * np.pi * freqs_noise[a] * np.arange(-(l2 - 1), l2))
            for b in range(k1):
                v = branches[b] * np.exp(-2j * np.pi * (dbeta + freqs_noise[a]) * lam1)
                rho = np.convolve(v, u[::-1])
                dgamma = dbeta + freqs_noise[a] - freqs_noise[b]
                w = cyclic_coefficient(inputs.c_dd, dgamma, need, t) + cyclic_coefficient(
                    inputs.c_ww, dgamma, need, t
                )
                acc += lam_phase * _lag_window_product(rho, w, l2 - 1)
        ctt_hat[dbeta] = acc

    cd2d_hat = {}
    for beta in freqs_signal:
        acc = np.zeros(2 * l2 - 1, dtype=complex)
        lam = np.arange(-(l2 - 1), l2)
        for a in range(k1):
            w = cyclic_coefficient(inputs.c_dd, beta + freqs_noise[a], need, t)
            wmid = _lag_index(w.shape[0])
            ui = np.conj(branches[a]) * np.exp(2j * np.pi * freqs_noise[a] * lam1)
            # acc[l] += e^{-j2pi a_a l} sum_i ui[i] w(l - lag_i); slot convolution
            # shifts the lag origin by off1.
            conv = np.convolve(ui, w)  # conv[m] <-> lag m - wmid - off1
            seg = conv[wmid + off1 - (l2 - 1) : wmid + off1 + l2]
            acc += np.exp(-2j * np.pi * freqs_noise[a] * lam) * seg
        cd2d_hat[round(beta, 15)] = acc
    return ctt_hat, cd2d_hat


def _matrix_from_cyclic(ctt_hat, freqs, fir_len):
    """Toeplitz-block matrix assembly from precomputed cyclic coefficients."""
    k = len(freqs)
    lags = np.arange(-(fir_len - 1), fir_len)
    out = np.empty((k * fir_len, k * fir_len), dtype=complex)
    for pu in range(k):
        for pv in range(k):
            carr = ctt_hat[round(freqs[pu] - freqs[pv], 15)]
            f = np.exp(-2j * np.pi * freqs[pu] * lags) * carr
            mid = _lag_index(f.shape[0])
            out[pu * fir_len : (pu + 1) * fir_len, pv * fir_len : (pv + 1) * fir_len] = toeplitz(
                f[mid::-1], f[mid:]
            )
    return out


def _vector_from_cyclic(cd2d_hat, freqs, fir_len, lag_offset):
    lags = np.arange(fir_len) - lag_offset
    out = np.empty(len(freqs) * fir_len, dtype=complex)
    for p, beta in enumerate(freqs):
        carr = cd2d_hat[round(beta, 15)]
        mid = _lag_index(carr.shape[0])
        out[p * fir_len : (p + 1) * fir_len] = np.exp(2j * np.pi * beta * lags) * carr[mid - lags]
    return out


def design_noise_canceller(
    inputs,
    freqs_noise,
    l1,
    freqs_signal,
    l2,
    lag_offset1=0,
    lag_offset2=0,
    loading=None,
):
    """Two-stage synthesis: h1 estimates the noise from r, the estimate is
    subtracted, and h2 extracts the signal from the cleaned stream.

    Stage-2 statistics are derived in closed form from the stage-1 solution:
    the post-cancellation autocorrelation is the i-check quadratic form over
    the signal and noise tables, reduced here to branch-pair lag
    correlations of the canceller taps against the tables' cyclic
    coefficients.
    """
    freqs_noise = tuple(freqs_noise)
    freqs_signal = tuple(freqs_signal)
    if not any(abs(f) < _INT_TOL for f in freqs_noise):
        raise ValueError("noise comb must include cyclic frequency 0")
    if not any(abs(f) < _INT_TOL for f in freqs_signal):
        raise ValueError("signal comb must include cyclic frequency 0")
    t = inputs.horizon

    cmat1 = build_correlation_matrix([inputs.c_dd, inputs.c_ww], freqs_noise, l1, t)
    cvec1 = build_cross_vector(inputs.c_ww, freqs_noise, l1, t, lag_offset1)
    noise_power = inputs.c_ww.mean_power()
    h1, mse1, res1 = _solve_design(cmat1, cvec1, noise_power, loading)
    del cmat1
    h1_spec = FreshFilterSpec(freqs_noise, l1, h1, lag_offset1)
    h1_result = DesignResult(h1_spec, mse1, noise_power, res1)

    icheck = _canceller_vector(h1_spec, freqs_noise)
    ctt_hat, cd2d_hat = _cascade_cyclic_tables(inputs, icheck, h1_spec, freqs_signal, l2)
    cmat2 = _matrix_from_cyclic(ctt_hat, freqs_signal, l2)
    cvec2 = _vector_from_cyclic(cd2d_hat, freqs_signal, l2, lag_offset2)
    h2, ta_mse, res2 = _solve_design(cmat2, cvec2, inputs.p_d, loading)
    h2_spec = FreshFilterSpec(freqs_signal, l2, h2, lag_offset2)

    rx = TwoStageReceiver(h1_spec, h2_spec, inputs.c_dd.period, inputs.c_ww.period)
    return TwoStageResult(rx, ta_mse, inputs.p_d, res2, h1_result)


def theoretical_ta_mse(p_d, cross, coeffs):
    """TA-MSE = P_d - Re{c^H h} of an optimally solved design."""
    return float(p_d - np.real(np.vdot(np.asarray(cross), np.asarray(coeffs))))


def scaling_profile(rx, c_dd):
    """Conditional-mean output gain psi[n] over one lcm period.

    kappa[n, i] = c_dd(n-i, i)/c_dd(n, 0) generalizes the CP-replica
    conditional mean (it reduces to 1_{S_CP}[n] delta[i-N_data] cos(gamma) +
    delta[i] on a pure-delta table, with the future-replica term appearing at
    negative lag for CP positions). psi sums the cascade's effective taps
    h2_k[i] (delta[alpha_m] delta[l] - h1_m[l]) against kappa at lag i+l.
    """
    h1, h2 = rx.h1, rx.h2
    l1, l2 = h1.fir_len, h2.fir_len
    off1, off2 = h1.lag_offset, h2.lag_offset
    period = math.lcm(rx.n_sym, rx.n_noise)
    halfw = l1 + l2  # two-sided kappa lag reach
    if c_dd.max_lag < halfw + 1:
        raise IndexError(f"c_dd lag range {c_dd.max_lag} < required {halfw + 1}")

    n = np.arange(period)
    var0 = np.real(c_dd.data[:, 0])
    if np.any(var0 <= 0):
        raise ValueError("c_dd(n,0) must be positive to define the scaling profile")
    full = c_dd.full_table(halfw + 1)
    fmid = halfw
    kappa = np.empty((period, 2 * halfw + 1), dtype=float)
    for lag in range(-halfw, halfw + 1):
        kappa[:, fmid + lag] = np.real(
            full[(n - lag) % c_dd.period, fmid + lag]
        ) / var0[n % c_dd.period]

    psi = np.zeros(period, dtype=complex)
    lam2 = np.arange(l2) - off2
    for m, alpha in enumerate(h1.cyclic_freqs):
        h1m = np.conj(h1.branch(m))
        # kt[n, i] = delta[alpha] kappa[n, lag2_i]
        #            - sum_l conj(h1_m[l]) kappa[n, lag2_i + lag1_l]
        kt = np.zeros((period, l2), dtype=complex)
        for i in range(l2):
            base = fmid + lam2[i] - off1
            kt[:, i] = -(kappa[:, base : base + l1] @ h1m)
        if abs(alpha) < _INT_TOL:
            kt += kappa[:, fmid + lam2[0] : fmid + lam2[0] + l2]
        for k, beta in enumerate(h2.cyclic_freqs):
            weights = np.conj(h2.branch(k)) * np.exp(2j * np.pi * alpha * lam2)
            psi += np.exp(-2j * np.pi * (alpha + beta) * n) * (kt @ weights)
    return psi


def save_filter_spec(spec, path):
    """Structured-text filter format::

        fresh-filter v1
        branches <K> fir_len <L> lag_offset <D>
        freq <alpha>            (K lines)
        coeff <re> <im>         (K*L lines, branch-major)
    """
    lines = [
        "fresh-filter v1",
        f"branches {spec.n_branches} fir_len {spec.fir_len} lag_offset {spec.lag_offset}",
    ]
    for f in spec.cyclic_freqs:
        lines.append(f"freq {float(f)!r}")
    for c in spec.coeffs:
        lines.append(f"coeff {float(c.real)!r} {float(c.imag)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_filter_spec(path):
    freqs, coeffs = [], []
    k = l = None
    off = 0
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "fresh-filter v1":
            raise ValueError(f"bad filter file header {header!r}")
        for raw in fh:
            parts = raw.split()
            if not parts:
                continue
            if parts[0] == "branches":
                k, l = int(parts[1]), int(parts[3])
                if len(parts) > 5:
                    off = int(parts[5])
            elif parts[0] == "freq":
                freqs.append(float(parts[1]))
            elif parts[0] == "coeff":
                coeffs.append(float(parts[1]) + 1j * float(parts[2]))
            else:
                raise ValueError(f"unknown filter file key {parts[0]!r}")
    if k is None or len(freqs) != k or len(coeffs) != k * l:
        raise ValueError("filter file is inconsistent")
    return FreshFilterSpec(tuple(freqs), l, np.asarray(coeffs), off)
