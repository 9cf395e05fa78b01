"""Exponential RLS adaptation of FRESH coefficients.

Covers training-based acquisition (ideal reference) and the
decision-directed tracking loop for the two-stage receiver, where both
stages update once per detected codeword using the re-encoded decisions
as reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fec import decode_frame, encode_frame, info_estimate_from_conv
from .fresh_design import FreshFilterSpec, TwoStageReceiver
from .ofdm import bits_from_grid, demodulate, grid_from_bits, modulate

__all__ = [
    "RlsState",
    "AdaptiveTwoStage",
    "rls_init",
    "rls_step",
    "shifted_input_vector",
    "run_training",
    "run_training_single",
    "run_decision_directed",
    "DecisionDirectedReport",
]


@dataclass
class RlsState:
    """Coefficients, inverse-correlation estimate and step counter of one
    exponential-RLS loop."""

    h: np.ndarray
    p: np.ndarray = field(repr=False)
    lam: float
    n: int = 0

    @property
    def dim(self):
        return self.h.shape[0]


@dataclass
class AdaptiveTwoStage:
    """Two coupled RLS loops (noise estimator, signal extractor) plus the
    receiver geometry they adapt."""

    state1: RlsState
    state2: RlsState
    geometry: TwoStageReceiver  # frequencies / lengths / offsets container
    update_cadence: int = 1  # samples per coefficient refresh (codeword length)

    def __post_init__(self):
        if self.update_cadence < 1:
            raise ValueError("update cadence must be positive")

    def receiver(self):
        """Frozen TwoStageReceiver snapshot with the current coefficients."""
        g = self.geometry
        h1 = FreshFilterSpec(g.h1.cyclic_freqs, g.h1.fir_len, self.state1.h.copy(), g.h1.lag_offset)
        h2 = FreshFilterSpec(g.h2.cyclic_freqs, g.h2.fir_len, self.state2.h.copy(), g.h2.lag_offset)
        return TwoStageReceiver(h1, h2, g.n_sym, g.n_noise)


def rls_init(freqs, fir_len, lam, p0_scale=1e2, lag_offset=0):
    """h starts as the zero-branch lag-0 selector; P[0] = p0_scale * I."""
    if not 0 < lam <= 1:
        raise ValueError(f"forgetting factor {lam} outside (0, 1]")
    if p0_scale <= 0:
        raise ValueError("p0_scale must be positive")
    freqs = tuple(freqs)
    k0 = next((i for i, f in enumerate(freqs) if abs(f) < 1e-9), None)
    if k0 is None:
        raise ValueError("comb must include cyclic frequency 0")
    dim = len(freqs) * fir_len
    h = np.zeros(dim, dtype=complex)
    h[k0 * fir_len + lag_offset] = 1.0
    return RlsState(h=h, p=p0_scale * np.eye(dim, dtype=complex), lam=float(lam))


def rls_step(state, z, d_ref):
    """One exponential-RLS update.

    Computes the a-priori error, the gain vector, the inverse-correlation
    update and the coefficient update, in that order. Returns the a-priori
    output h^H[n-1] z[n] together with the updated state (mutated in place).
    """
    z = np.asarray(z)
    if z.shape[0] != state.dim:
        raise ValueError(f"input dimension {z.shape[0]} != state dimension {state.dim}")
    if not (np.all(np.isfinite(z.view(float))) and np.isfinite(complex(d_ref))):
        raise FloatingPointError(f"non-finite input at RLS step {state.n}")
    y = complex(np.vdot(state.h, z))
    xi = complex(d_ref) - y
    lam_inv = 1.0 / state.lam
    pz = lam_inv * (state.p @ z)
    gain = pz / (1.0 + np.real(np.vdot(z, pz)))
    state.p = lam_inv * state.p - np.outer(gain, np.conj(pz))
    state.p = 0.5 * (state.p + state.p.conj().T)
    state.h = state.h + gain * np.conj(xi)
    state.n += 1
    return y


def shifted_input_vector(x, n, freqs, fir_len, lag_offset=0):
    """z[n]: stacked branch vectors of x at lags (q - lag_offset)."""
    lags = np.arange(fir_len) - lag_offset
    idx = n - lags
    if idx[-1] < 0 or idx[0] >= x.shape[0]:
        raise IndexError(f"window at {n} leaves the record")
    win = x[idx]
    out = np.empty(len(freqs) * fir_len, dtype=complex)
    for k, alpha in enumerate(freqs):
        out[k * fir_len : (k + 1) * fir_len] = win * np.exp(-2j * np.pi * alpha * idx)
    return out


def _valid_range(n_total, *specs):
    lo = max(s.fir_len - 1 - s.lag_offset for s in specs)
    hi = n_total - 1 - max(s.lag_offset for s in specs)
    return lo, hi


def run_training_single(freqs, fir_len, r, d_ref, lam=0.999, p0_scale=1e2, lag_offset=0,
                        period=None):
    """Supervised RLS acquisition of a one-stage FRESH filter.

    Returns (FreshFilterSpec, per-period mean |y - d|^2 trajectory).
    """
    r = np.asarray(r)
    d_ref = np.asarray(d_ref)
    if r.shape[0] != d_ref.shape[0]:
        raise ValueError("record and reference lengths differ")
    st = rls_init(freqs, fir_len, lam, p0_scale, lag_offset)
    spec0 = FreshFilterSpec.zero(freqs, fir_len, lag_offset)
    lo, hi = _valid_range(r.shape[0], spec0)
    period = period or fir_len
    traj, acc, cnt = [], 0.0, 0
    for n in range(lo, hi + 1):
        z = shifted_input_vector(r, n, freqs, fir_len, lag_offset)
        y = rls_step(st, z, d_ref[n])
        acc += abs(y - d_ref[n]) ** 2
        cnt += 1
        if cnt == period:
            traj.append(acc / cnt)
            acc, cnt = 0.0, 0
    return FreshFilterSpec(tuple(freqs), fir_len, st.h.copy(), lag_offset), np.asarray(traj)


def run_training(geometry, r, d_ref, lam=0.999, p0_scale=1e2, period=None):
    """Supervised two-stage acquisition with an ideal reference.

    The noise loop trains on w_ref = r - d_ref; the signal loop trails it by
    the stage-2 lag offset (so its input window only reads already-computed
    stage-1 outputs t = r - w_hat) and trains against d_ref. Returns
    (TwoStageReceiver, per-period trajectory of mean |y - d|^2).
    """
    r = np.asarray(r)
    d_ref = np.asarray(d_ref)
    if r.shape[0] != d_ref.shape[0]:
        raise ValueError("record and reference lengths differ")
    g = geometry
    st1 = rls_init(g.h1.cyclic_freqs, g.h1.fir_len, lam, p0_scale, g.h1.lag_offset)
    st2 = rls_init(g.h2.cyclic_freqs, g.h2.fir_len, lam, p0_scale, g.h2.lag_offset)
    adaptive = AdaptiveTwoStage(st1, st2, g)
    w_ref = r - d_ref
    period = period or np.lcm(g.n_sym, g.n_noise)
    t_rec = np.array(r, dtype=complex)  # pre-window samples default to raw input
    lo1 = g.h1.fir_len - 1 - g.h1.lag_offset
    hi1 = r.shape[0] - 1 - g.h1.lag_offset
    off2 = g.h2.lag_offset
    lo2 = max(lo1, g.h2.fir_len - 1 - g.h2.lag_offset)
    traj, acc, cnt = [], 0.0, 0
    for n in range(lo1, hi1 + 1):
        z1 = shifted_input_vector(r, n, g.h1.cyclic_freqs, g.h1.fir_len, g.h1.lag_offset)
        w_hat = rls_step(st1, z1, w_ref[n])
        t_rec[n] = r[n] - w_hat
        m = n - off2
        if m < lo2:
            continue
        z2 = shifted_input_vector(t_rec, m, g.h2.cyclic_freqs, g.h2.fir_len, g.h2.lag_offset)
        y = rls_step(st2, z2, d_ref[m])
        acc += abs(y - d_ref[m]) ** 2
        cnt += 1
        if cnt == period:
            traj.append(acc / cnt)
            acc, cnt = 0.0, 0
    return adaptive.receiver(), np.asarray(traj)


@dataclass
class DecisionDirectedReport:
    receiver: TwoStageReceiver
    trajectory: np.ndarray       # per-codeword mean |y - d_true|^2
    ber_so_far: np.ndarray       # cumulative info-bit error rate per codeword
    decode_failures: int
    skipped_updates: int


def trajectory_to_csv(trajectory, ber_so_far=None):
    """Convergence curve as CSV text: period index, TA-MSE, BER so far."""
    lines = ["period,ta_mse,ber_so_far"]
    ber_so_far = list(ber_so_far) if ber_so_far is not None else []
    for i, v in enumerate(np.asarray(trajectory)):
        ber = f"{ber_so_far[i]:.10g}" if i < len(ber_so_far) else ""
        val = f"{v:.10g}" if np.isfinite(v) else ""
        lines.append(f"{i},{val},{ber}")
    return "\n".join(lines) + "\n"


def run_decision_directed(
    geometry,
    r,
    cfg,
    codec,
    info_bits,
    n_preamble,
    d_true=None,
    lam=0.999,
    p0_scale=1e2,
    oracle_decisions=False,
):
    """Decision-directed two-stage tracking with per-codeword updates.

    The record r carries a sequence of coded frames (one RS codeword each,
    bit-padded to whole OFDM symbols). The first n_preamble codewords adapt
    on the known transmitted signal; afterwards each codeword is filtered
    with frozen coefficients, demodulated and decoded, and on decode success
    the re-encoded, re-modulated decisions become the update reference for
    both loops (reference for the noise loop: r minus the signal reference).
    Decode failures skip the codeword's update.

    info_bits: transmitted info bits (for BER accounting and the preamble
    reference). d_true: transmitted signal (trajectory telemetry; preamble
    reference). oracle_decisions forces error-free decisions, making the
    update stream identical to supervised training.
    """
    r = np.asarray(r)
    g = geometry
    bits_per_sym = 2 * cfg.n_active
    cw_info = codec.info_bits_per_frame
    cw_coded = codec.coded_bits_per_frame
    syms_per_cw = -(-cw_coded // bits_per_sym)  # pad to whole OFDM symbols
    span = syms_per_cw * cfg.n_sym
    n_cw = r.shape[0] // span
    info_bits = np.asarray(info_bits, dtype=np.int64)
    if info_bits.shape[0] < n_cw * cw_info:
        raise ValueError("info bit stream shorter than the record's codewords")

    st1 = rls_init(g.h1.cyclic_freqs, g.h1.fir_len, lam, p0_scale, g.h1.lag_offset)
    st2 = rls_init(g.h2.cyclic_freqs, g.h2.fir_len, lam, p0_scale, g.h2.lag_offset)
    adaptive = AdaptiveTwoStage(st1, st2, g, update_cadence=span)
    t_rec = np.array(r, dtype=complex)
    # reference stream accumulated across codewords so the trailing stage-2
    # window can finish the previous span's updates
    ref_rec = np.zeros(r.shape[0], dtype=complex)
    ref_ok = np.zeros(r.shape[0], dtype=bool)

    pad = syms_per_cw * bits_per_sym - cw_coded
    traj, bers = [], []
    bit_errors, bits_seen = 0, 0
    failures, skipped = 0, 0

    def reference_for(bits_cw, start):
        frame = encode_frame(bits_cw, codec)
        coded = np.concatenate([frame.coded_bits, np.zeros(pad, np.int64)])
        return modulate(grid_from_bits(coded, cfg), cfg, start=start)

    for cw in range(n_cw):
        start = cw * span
        sl = slice(start, start + span)
        tx_bits = info_bits[cw * cw_info : (cw + 1) * cw_info]
        if cw < n_preamble:
            d_ref = d_true[sl] if d_true is not None else reference_for(tx_bits, start)
            update = True
        elif oracle_decisions:
            # forced error-free decisions: the update stream is definitionally
            # the supervised one, no filtering/decoding round trip needed
            d_ref = d_true[sl] if d_true is not None else reference_for(tx_bits, start)
            update = True
            bits_seen += cw_info
            bers.append(bit_errors / max(bits_seen, 1))
        else:
            # freeze coefficients, filter the span, decode
            rx = adaptive.receiver()
            y_span = _filter_span(rx, r, t_rec, start, span)
            _, soft = demodulate(np.real(y_span), cfg, start=start)
            soft_bits = np.stack(
                [np.real(soft).ravel(), np.imag(soft).ravel()], axis=-1
            ).reshape(-1)
            scale = np.mean(np.abs(soft_bits)) or 1.0
            decoded, ok, conv_bits = decode_frame(soft_bits[:cw_coded] / scale, codec)
            if ok:
                d_ref = reference_for(decoded, start)
                update = True
                bit_errors += int(np.sum(decoded != tx_bits))
            else:
                failures += 1
                skipped += 1
                update = False
                est = info_estimate_from_conv(conv_bits, codec)
                bit_errors += int(np.sum(est != tx_bits))
            bits_seen += cw_info
            bers.append(bit_errors / max(bits_seen, 1))
        err_acc, err_cnt = 0.0, 0
        if update:
            ref_rec[sl] = d_ref
            ref_ok[sl] = True
            w_ref = r[sl] - d_ref
            lo1 = g.h1.fir_len - 1 - g.h1.lag_offset
            hi1 = r.shape[0] - 1 - g.h1.lag_offset
            off2 = g.h2.lag_offset
            lo2 = max(lo1, g.h2.fir_len - 1 - g.h2.lag_offset)
            for n in range(max(start, lo1), min(start + span, hi1 + 1)):
                z1 = shifted_input_vector(r, n, g.h1.cyclic_freqs, g.h1.fir_len, g.h1.lag_offset)
                w_hat = rls_step(st1, z1, w_ref[n - start])
                t_rec[n] = r[n] - w_hat
                m = n - off2
                if m < lo2 or not ref_ok[m]:
                    continue
                z2 = shifted_input_vector(t_rec, m, g.h2.cyclic_freqs, g.h2.fir_len, g.h2.lag_offset)
                y = rls_step(st2, z2, ref_rec[m])
                if d_true is not None:
                    err_acc += abs(y - d_true[m]) ** 2
                    err_cnt += 1
        traj.append(err_acc / err_cnt if err_cnt else np.nan)

    return DecisionDirectedReport(
        receiver=adaptive.receiver(),
        trajectory=np.asarray(traj),
        ber_so_far=np.asarray(bers),
        decode_failures=failures,
        skipped_updates=skipped,
    )


def _filter_span(rx, r, t_rec, start, span):
    """Apply the frozen two-stage receiver around one codeword span,
    updating t_rec inside the span and returning y over it."""
    g1, g2 = rx.h1, rx.h2
    margin = g1.fir_len + g2.fir_len
    lo = max(0, start - margin)
    hi = min(r.shape[0], start + span + margin)
    seg = r[lo:hi]
    n0 = np.arange(lo, hi)
    w_hat = np.zeros(hi - lo, dtype=complex)
    for k, alpha in enumerate(g1.cyclic_freqs):
        shifted = seg * np.exp(-2j * np.pi * alpha * n0)
        taps = np.conj(g1.branch(k))
        w_hat += np.convolve(shifted, taps)[g1.lag_offset : g1.lag_offset + hi - lo]
    t_seg = seg - w_hat
    t_rec[max(start, lo) : min(start + span, hi)] = t_seg[
        max(start, lo) - lo : min(start + span, hi) - lo
    ]
    y = np.zeros(hi - lo, dtype=complex)
    for k, alpha in enumerate(g2.cyclic_freqs):
        shifted = t_seg * np.exp(-2j * np.pi * alpha * n0)
        taps = np.conj(g2.branch(k))
        y += np.convolve(shifted, taps)[g2.lag_offset : g2.lag_offset + hi - lo]
    return y[start - lo : start - lo + span]
