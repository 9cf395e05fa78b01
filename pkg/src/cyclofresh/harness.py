"""Scenario orchestration: receivers Rx1-Rx4 across noise models, channels
and SNR grids; TA-MSE / BER / scaling metrics; deterministic CSV emission.

Cells (snr x receiver) run in a thread pool sized by the CYCLOFRESH_THREADS
environment variable; results merge by cell key so the CSV bytes only depend
on the configuration and seed.
"""

from __future__ import annotations

import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import noise as noise_mod
from .channel import IsiChannel, apply_isi, isi_autocorr
from .fec import CodecConfig, decode_frame, encode_frame, info_estimate_from_conv
from .fresh_design import (
    DesignInputs,
    centered_offset,
    comb,
    design_direct,
    design_noise_canceller,
    design_stationary_wiener,
    scaling_profile,
    with_cyclic_freq_error,
)
from .fresh_runtime import apply_fresh, apply_two_stage
from .ofdm import (
    OfdmConfig,
    channel_response_at_carriers,
    demodulate,
    grid_from_bits,
    modulate,
    random_grid,
)
from .signal_core import make_rng

__all__ = [
    "ScenarioConfig",
    "MetricRecord",
    "RECEIVERS",
    "CSV_COLUMNS",
    "snr_in",
    "empirical_ta_mse",
    "measured_scaling",
    "run_scenario",
    "records_to_csv",
    "load_scenario",
    "scenario_from_dict",
]

RECEIVERS = ("Rx1", "Rx2", "Rx3", "Rx4")

CSV_COLUMNS = (
    "scenario_id",
    "receiver",
    "snr_in_db",
    "ta_mse_db",
    "ta_mse_theory_db",
    "ber_uncoded",
    "ber_coded",
    "scaling_measured",
    "scaling_theory",
    "trials",
    "seed",
)


@dataclass(frozen=True)
class ScenarioConfig:
    """One sweep definition.

    noise_kind: kata1 | kata2 | lptv | awgn (lptv_file loads measured tap
    tables). full_band picks the all-carrier geometry used for TA-MSE
    studies; BER cells need the partial-band default geometry (clean
    passband demodulation).
    """

    scenario_id: str = "scenario"
    ofdm: OfdmConfig = field(default_factory=OfdmConfig)
    noise_kind: str = "kata1"
    n_noise: int = 1000
    lptv_file: str | None = None
    alpha1_sample_rate: float = noise_mod.DEFAULT_ALPHA1_SAMPLE_RATE
    channel_taps: tuple | None = None
    receivers: tuple = RECEIVERS
    snr_grid_db: tuple = (-4.0, -2.0, 0.0, 2.0, 4.0, 6.0)
    trials: int = 1
    seed: int = 12345
    mode: str = "optimal"  # optimal | adaptive
    delta: float = 0.0  # cyclic-frequency error of the Rx4 noise comb
    ta_mse_samples: int = 200_000
    with_ber: bool = False
    ber_target_errors: int = 100
    ber_max_info_bits: int = 2_000_000
    codec_interleaver: str = "post_conv"  # channel interleaver for BER runs
    reps: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if len(self.snr_grid_db) == 0:
            raise ValueError("snr grid is empty")
        for r in self.receivers:
            if r not in RECEIVERS:
                raise ValueError(f"unknown receiver {r!r}")
        if self.mode not in ("optimal", "adaptive"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class MetricRecord:
    scenario_id: str
    receiver: str
    snr_in_db: float
    ta_mse_db: float
    ta_mse_theory_db: float | None
    ber_uncoded: float | None
    ber_coded: float | None
    scaling_measured: float | None
    scaling_theory: float | None
    trials: int
    seed: int

    def row(self):
        def fmt(x):
            if x is None:
                return ""
            if isinstance(x, float):
                return f"{x:.10g}"
            return str(x)

        return [fmt(getattr(self, c)) for c in CSV_COLUMNS]


def snr_in(p_d, noise_power):
    """Input SNR in dB: desired-signal average power over time-averaged
    noise power."""
    if noise_power <= 0:
        raise ValueError("noise power must be positive")
    return 10.0 * math.log10(p_d / noise_power)


def empirical_ta_mse(y, d, warmup, period):
    """Mean |y - d|^2 over whole averaging periods, start and end trimmed by
    the warm-up span."""
    y = np.asarray(y)
    d = np.asarray(d)
    if y.shape[0] != d.shape[0]:
        raise ValueError("length mismatch")
    start = ((warmup + period - 1) // period) * period
    stop = y.shape[0] - warmup
    usable = ((stop - start) // period) * period
    if usable < period:
        raise ValueError("record shorter than warm-up plus one period")
    sl = slice(start, start + usable)
    return float(np.mean(np.abs(y[sl] - d[sl]) ** 2))


def measured_scaling(y, d, threshold=None, warmup=0):
    """<y[n]/d[n]> over samples with |d[n]| above the guard threshold
    (default: 0.3 times the rms of d)."""
    y = np.asarray(y)
    d = np.asarray(d)
    if warmup:
        y = y[warmup:-warmup]
        d = d[warmup:-warmup]
    if threshold is None:
        threshold = 0.3 * float(np.sqrt(np.mean(np.abs(d) ** 2)))
    mask = np.abs(d) > threshold
    if not mask.any():
        raise ValueError("no samples above the scaling threshold")
    return complex(np.mean(y[mask] / d[mask]))


def _noise_stack(cfg):
    kwargs = {}
    if cfg.noise_kind.lower() in ("kata1", "kata2"):
        kwargs = dict(n_noise=cfg.n_noise, alpha1_sample_rate=cfg.alpha1_sample_rate)
    elif cfg.noise_kind.lower() == "lptv":
        kwargs = dict(file=cfg.lptv_file) if cfg.lptv_file else dict(n_noise=cfg.n_noise)
    return noise_mod.noise_model(cfg.noise_kind, **kwargs)


@dataclass
class _Prepared:
    """Per-scenario invariants shared by all cells."""

    cfg: ScenarioConfig
    c_dd: object
    c_ww_unit: object  # noise table scaled to unit mean power
    noise_params: object
    noise_generate: object
    noise_scale_unit: float  # amplitude factor giving unit mean power
    p_d: float
    period: int
    freqs_noise: tuple
    freqs_signal: tuple
    l_wiener: int
    l1: int
    l2: int
    channel: IsiChannel | None
    codec: CodecConfig

    @property
    def off1(self):
        """Stage-1 lag offset: centered window for noise estimation."""
        return self.l1 // 2

    @property
    def off2(self):
        """Stage-2 lag offset: reach the cyclic-prefix lag one-sided."""
        return min(self.cfg.ofdm.n_data, self.l2 - 1)


def _prepare(cfg):
    ofdm = cfg.ofdm
    nsym = ofdm.n_sym
    l_wiener = nsym + cfg.n_noise // 2
    l1, l2 = cfg.n_noise // 2, nsym
    need = l1 + l2 + 1
    maxlag = max(l_wiener + 1, need)
    channel = IsiChannel(cfg.channel_taps) if cfg.channel_taps else None
    from .ofdm import analytic_autocorr_ofdm

    c_dd = analytic_autocorr_ofdm(ofdm, maxlag + (channel.length if channel else 0))
    if channel is not None:
        c_dd = isi_autocorr(channel, c_dd)
    params, gen, acorr = _noise_stack(cfg)
    c_ww = acorr(params, maxlag)
    pw = c_ww.mean_power()
    c_ww_unit = c_ww.scaled(1.0 / pw)
    # the averaging period uses the receiver's nominal noise period even for
    # stationary noise (the AWGN-robustness receivers keep their noise comb)
    period = math.lcm(nsym, cfg.n_noise)
    return _Prepared(
        cfg=cfg,
        c_dd=c_dd,
        c_ww_unit=c_ww_unit,
        noise_params=params,
        noise_generate=gen,
        noise_scale_unit=1.0 / math.sqrt(pw),
        p_d=c_dd.mean_power(),
        period=period,
        freqs_noise=comb(cfg.n_noise, 2),
        freqs_signal=comb(nsym, 2),
        l_wiener=l_wiener,
        l1=l1,
        l2=l2,
        channel=channel,
        codec=(
            CodecConfig.with_channel_interleaver()
            if cfg.codec_interleaver == "post_conv"
            else CodecConfig()
        ),
    )


def _design_receiver(prep, receiver, noise_power, delta=0.0, reps=1):
    """Returns (apply_fn, theory_mse, designed_object)."""
    cww = prep.c_ww_unit.scaled(noise_power)
    inputs = DesignInputs(prep.c_dd, cww, reps=reps, period=prep.period)
    if receiver == "Rx1":
        return (lambda r: np.asarray(r, dtype=complex)), noise_power, None
    if receiver == "Rx2":
        res = design_stationary_wiener(inputs, prep.l_wiener, lag_offset=centered_offset(prep.l_wiener))
        return (lambda r: apply_fresh(res.filter, r)), res.ta_mse, res
    if receiver == "Rx3":
        res = design_direct(
            inputs, prep.freqs_signal, prep.l_wiener, lag_offset=centered_offset(prep.l_wiener)
        )
        return (lambda r: apply_fresh(res.filter, r)), res.ta_mse, res
    if receiver == "Rx4":
        freqs_noise = prep.freqs_noise
        if delta:
            freqs_noise = with_cyclic_freq_error(freqs_noise, delta)
        res = design_noise_canceller(
            inputs,
            freqs_noise,
            prep.l1,
            prep.freqs_signal,
            prep.l2,
            lag_offset1=prep.off1,
            lag_offset2=prep.off2,
        )
        return (lambda r: apply_two_stage(res.receiver, r).y_complex), res.ta_mse, res
    raise ValueError(f"unknown receiver {receiver!r}")


def _synth_record(prep, n_samples, amp, rng, start_sym=0):
    """Desired signal, noise (scaled), and their sum over n_samples."""
    cfg = prep.cfg
    nsyms = -(-n_samples // cfg.ofdm.n_sym)
    grid = random_grid(nsyms, cfg.ofdm, rng)
    d = modulate(grid, cfg.ofdm)
    if prep.channel is not None:
        d = apply_isi(prep.channel, d)
    w = amp * prep.noise_generate(prep.noise_params, d.shape[0], rng)
    return d, d + w, grid


def _ta_mse_cell(prep, receiver, snr_db, trial_rng):
    cfg = prep.cfg
    noise_power = prep.p_d / (10.0 ** (snr_db / 10.0))
    amp = prep.noise_scale_unit * math.sqrt(noise_power)
    apply_fn, theory, designed = _design_receiver(
        prep, receiver, noise_power, delta=cfg.delta, reps=cfg.reps
    )
    warm = prep.l_wiener if receiver != "Rx1" else prep.period
    n = cfg.ta_mse_samples + 2 * warm + 2 * prep.period
    d, r, _ = _synth_record(prep, n, amp, trial_rng)
    y = apply_fn(r)
    mse = empirical_ta_mse(np.real(y), d, warm, prep.period)
    scale_meas = None
    scale_theory = None
    if receiver == "Rx4" and designed is not None:
        psi = scaling_profile(designed.receiver, prep.c_dd)
        scale_theory = float(np.real(np.mean(psi)))
        scale_meas = float(np.real(measured_scaling(y, d, warmup=warm)))
    return mse, theory, scale_meas, scale_theory


def _ber_cell(prep, receiver, snr_db, trial_rng):
    """Coded/uncoded BER with adaptive stopping. Requires a demod-safe OFDM
    geometry (partial band)."""
    cfg = prep.cfg
    codec = prep.codec
    ofdm = cfg.ofdm
    noise_power = prep.p_d / (10.0 ** (snr_db / 10.0))
    amp = prep.noise_scale_unit * math.sqrt(noise_power)
    apply_fn, theory, _ = _design_receiver(prep, receiver, noise_power, delta=cfg.delta, reps=cfg.reps)
    eq = channel_response_at_carriers(ofdm, prep.channel.taps) if prep.channel else None

    bits_per_sym = 2 * ofdm.n_active
    cw_coded = codec.coded_bits_per_frame
    syms_per_cw = -(-cw_coded // bits_per_sym)
    pad = syms_per_cw * bits_per_sym - cw_coded
    span = syms_per_cw * ofdm.n_sym
    guard_sym = -(-prep.l_wiener // ofdm.n_sym) + 1
    cw_per_block = max(1, 6)

    info_err = coded_bits_err = 0
    info_seen = coded_bits_seen = 0
    while info_err < cfg.ber_target_errors and info_seen < cfg.ber_max_info_bits:
        # one block: guard symbols + several codewords + guard symbols
        frames = []
        coded_blocks = []
        for _ in range(cw_per_block):
            bits = trial_rng.integers(0, 2, codec.info_bits_per_frame)
            fr = encode_frame(bits, codec)
            frames.append(fr)
            coded_blocks.append(
                np.concatenate([fr.coded_bits, trial_rng.integers(0, 2, pad)])
            )
        guard_bits = trial_rng.integers(0, 2, guard_sym * bits_per_sym)
        tail_bits = trial_rng.integers(0, 2, guard_sym * bits_per_sym)
        all_bits = np.concatenate([guard_bits, *coded_blocks, tail_bits])
        grid = grid_from_bits(all_bits, ofdm)
        d = modulate(grid, ofdm)
        if prep.channel is not None:
            d = apply_isi(prep.channel, d)
        w = amp * prep.noise_generate(prep.noise_params, d.shape[0], trial_rng)
        y = np.real(apply_fn(d + w))
        _, soft = demodulate(y, ofdm, equalizer=eq)
        soft_bits = np.stack([np.real(soft).ravel(), np.imag(soft).ravel()], axis=-1).reshape(-1)
        norm = np.mean(np.abs(soft_bits)) or 1.0
        soft_bits = soft_bits / norm
        hard_bits = (soft_bits < 0).astype(np.int64)

        offset = guard_sym * bits_per_sym
        for i, fr in enumerate(frames):
            lo = offset + i * syms_per_cw * bits_per_sym
            coded_true = fr.coded_bits
            coded_bits_err += int(np.sum(hard_bits[lo : lo + cw_coded] != coded_true))
            coded_bits_seen += cw_coded
            decoded, ok, conv_bits = decode_frame(
                soft_bits[lo : lo + cw_coded]
                if codec.soft_decision
                else 1.0 - 2.0 * hard_bits[lo : lo + cw_coded],
                codec,
            )
            if decoded is None:
                # RS failure: best-effort estimate is the uncorrected
                # systematic part of the post-Viterbi stream
                decoded = info_estimate_from_conv(conv_bits, codec)
            info_err += int(np.sum(decoded[: codec.info_bits_per_frame] != fr.info_bits))
            info_seen += codec.info_bits_per_frame
    return (
        coded_bits_err / max(coded_bits_seen, 1),
        info_err / max(info_seen, 1),
        theory,
    )


def _cell_stream(receiver, snr_db, trial):
    """Stable RNG stream id per cell (no dependence on hash randomization)."""
    snr_key = int(round((float(snr_db) + 1024.0) * 256.0))
    return (RECEIVERS.index(receiver) << 28) | ((trial & 0xFFF) << 16) | (snr_key & 0xFFFF)


def run_cell(prep, receiver, snr_db, trial):
    cfg = prep.cfg
    rng = make_rng(cfg.seed, _cell_stream(receiver, snr_db, trial))
    if cfg.mode == "adaptive":
        return _adaptive_cell(prep, receiver, snr_db, rng)
    if cfg.with_ber:
        ber_u, ber_c, theory = _ber_cell(prep, receiver, snr_db, rng)
        return MetricRecord(
            scenario_id=cfg.scenario_id,
            receiver=receiver,
            snr_in_db=float(snr_db),
            ta_mse_db=float("nan"),
            ta_mse_theory_db=10 * math.log10(theory) if theory else None,
            ber_uncoded=ber_u,
            ber_coded=ber_c,
            scaling_measured=None,
            scaling_theory=None,
            trials=cfg.trials,
            seed=cfg.seed,
        )
    mse, theory, sc_m, sc_t = _ta_mse_cell(prep, receiver, snr_db, rng)
    return MetricRecord(
        scenario_id=cfg.scenario_id,
        receiver=receiver,
        snr_in_db=float(snr_db),
        ta_mse_db=10 * math.log10(mse),
        ta_mse_theory_db=10 * math.log10(theory) if theory is not None else None,
        ber_uncoded=None,
        ber_coded=None,
        scaling_measured=sc_m,
        scaling_theory=sc_t,
        trials=cfg.trials,
        seed=cfg.seed,
    )


def _adaptive_cell(prep, receiver, snr_db, rng, n_preamble=2, n_codewords=12,
                   want_report=False):
    """Decision-directed adaptive run for one cell (Rx4 two-stage; Rx1 is a
    passthrough reference). Reports steady-state TA-MSE of the tracked
    receiver, coded BER over the tracking phase, and the optimal closed-form
    TA-MSE as the theory column."""
    from .adaptive import run_decision_directed
    from .fresh_design import FreshFilterSpec, TwoStageReceiver

    cfg = prep.cfg
    if receiver != "Rx4":
        raise ValueError("adaptive mode is implemented for the two-stage receiver (Rx4)")
    codec = prep.codec
    ofdm = cfg.ofdm
    noise_power = prep.p_d / (10.0 ** (snr_db / 10.0))
    amp = prep.noise_scale_unit * math.sqrt(noise_power)
    _, theory, _ = _design_receiver(prep, receiver, noise_power, reps=cfg.reps)

    bits_per_sym = 2 * ofdm.n_active
    cw_coded = codec.coded_bits_per_frame
    syms_per_cw = -(-cw_coded // bits_per_sym)
    pad = syms_per_cw * bits_per_sym - cw_coded
    info_bits = rng.integers(0, 2, n_codewords * codec.info_bits_per_frame)
    blocks = []
    for i in range(n_codewords):
        fr = encode_frame(info_bits[i * codec.info_bits_per_frame : (i + 1) * codec.info_bits_per_frame], codec)
        blocks.append(np.concatenate([fr.coded_bits, np.zeros(pad, np.int64)]))
    grid = grid_from_bits(np.concatenate(blocks), ofdm)
    d = modulate(grid, ofdm)
    w = amp * prep.noise_generate(prep.noise_params, d.shape[0], rng)
    geometry = TwoStageReceiver(
        FreshFilterSpec.zero(prep.freqs_noise, prep.l1, prep.off1),
        FreshFilterSpec.zero(prep.freqs_signal, prep.l2, prep.off2),
        ofdm.n_sym,
        cfg.n_noise,
    )
    report = run_decision_directed(
        geometry, d + w, ofdm, codec, info_bits, n_preamble, d_true=d
    )
    tail = report.trajectory[-max(2, n_codewords // 4) :]
    tail = tail[np.isfinite(tail)]
    mse = float(np.mean(tail)) if tail.size else float("nan")
    ber = float(report.ber_so_far[-1]) if report.ber_so_far.size else None
    record = MetricRecord(
        scenario_id=cfg.scenario_id,
        receiver=receiver,
        snr_in_db=float(snr_db),
        ta_mse_db=10 * math.log10(mse) if np.isfinite(mse) and mse > 0 else float("nan"),
        ta_mse_theory_db=10 * math.log10(theory) if theory else None,
        ber_uncoded=None,
        ber_coded=ber,
        scaling_measured=None,
        scaling_theory=None,
        trials=cfg.trials,
        seed=cfg.seed,
    )
    return (record, report) if want_report else record


def run_adaptive_trajectory(cfg, snr_db=None, n_preamble=2, n_codewords=12):
    """One decision-directed run returning (MetricRecord, report with the
    per-codeword trajectory) for convergence-curve emission."""
    prep = _prepare(cfg)
    snr = cfg.snr_grid_db[0] if snr_db is None else snr_db
    rng = make_rng(cfg.seed, _cell_stream("Rx4", snr, 0))
    return _adaptive_cell(prep, "Rx4", snr, rng, n_preamble, n_codewords, want_report=True)


def _pool_size():
    env = os.environ.get("CYCLOFRESH_THREADS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def run_scenario(cfg, progress=None):
    """Execute every (snr, receiver, trial) cell; deterministic record order."""
    prep = _prepare(cfg)
    cells = [
        (snr, rx, trial)
        for snr in cfg.snr_grid_db
        for rx in cfg.receivers
        for trial in range(cfg.trials)
    ]
    records = {}

    def work(cell):
        snr, rx, trial = cell
        try:
            return cell, run_cell(prep, rx, snr, trial)
        except Exception as exc:  # noqa: BLE001 - cell isolation is the contract
            return cell, exc

    with ThreadPoolExecutor(max_workers=_pool_size()) as pool:
        for cell, result in pool.map(work, cells):
            if isinstance(result, Exception):
                if progress:
                    progress(f"cell {cell} failed: {result}")
                continue
            records[cell] = result
            if progress:
                progress(f"cell {cell} done")
    return [records[c] for c in sorted(records, key=lambda c: (c[0], c[1], c[2]))]


def records_to_csv(records):
    """Fixed column order, one header row, LF endings."""
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for rec in records:
        buf.write(",".join(rec.row()) + "\n")
    return buf.getvalue()


def scenario_from_dict(doc):
    doc = dict(doc)
    ofdm_doc = doc.pop("ofdm", {})
    if "active_carriers" in ofdm_doc and isinstance(ofdm_doc["active_carriers"], str):
        if ofdm_doc["active_carriers"] == "full":
            ofdm_doc["active_carriers"] = tuple(range(ofdm_doc.get("n_data", 64)))
        else:
            raise ValueError("active_carriers must be a list or 'full'")
    ofdm = OfdmConfig(**{k: tuple(v) if k == "active_carriers" else v for k, v in ofdm_doc.items()})
    for key in ("snr_grid_db", "receivers", "channel_taps"):
        if key in doc and doc[key] is not None:
            doc[key] = tuple(doc[key])
    return ScenarioConfig(ofdm=ofdm, **doc)


def load_scenario(path, overrides=None):
    """YAML scenario file, flat keys matching ScenarioConfig fields."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh) or {}
    if overrides:
        doc.update(overrides)
    return scenario_from_dict(doc)
