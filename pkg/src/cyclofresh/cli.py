"""Command-line front end.

Subcommands: design (emit a filter file), simulate (one scenario),
sweep (grid of scenarios from a YAML file), adapt (adaptive runs),
noise-gen (emit a noise record). Flags override scenario-file fields.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import noise as noise_mod
from .fresh_design import (
    DesignInputs,
    centered_offset,
    comb,
    design_direct,
    design_noise_canceller,
    design_stationary_wiener,
    save_filter_spec,
    with_cyclic_freq_error,
)
from .harness import (
    ScenarioConfig,
    load_scenario,
    records_to_csv,
    run_scenario,
    scenario_from_dict,
)
from .ofdm import OfdmConfig, analytic_autocorr_ofdm
from .signal_core import make_rng


def _add_common_overrides(p):
    p.add_argument("--seed", type=int, help="base seed override")
    p.add_argument("--noise", dest="noise_kind", help="kata1|kata2|lptv|awgn")
    p.add_argument("--snr", dest="snr_grid_db", help="comma list of SNR_in dB points")
    p.add_argument("--receivers", help="comma subset of Rx1,Rx2,Rx3,Rx4")
    p.add_argument("--trials", type=int)
    p.add_argument("--delta", type=float, help="cyclic-frequency error for Rx4")
    p.add_argument("--samples", dest="ta_mse_samples", type=int)
    p.add_argument("--full-band", action="store_true", help="all-carrier geometry (TA-MSE studies)")
    p.add_argument("--ber", action="store_true", help="measure coded/uncoded BER instead of TA-MSE")
    p.add_argument("--out", default="-", help="output CSV path (default stdout)")


def _overrides_from_args(args):
    over = {}
    for key in ("seed", "noise_kind", "trials", "delta", "ta_mse_samples"):
        v = getattr(args, key, None)
        if v is not None:
            over[key] = v
    if getattr(args, "snr_grid_db", None):
        over["snr_grid_db"] = tuple(float(s) for s in args.snr_grid_db.split(","))
    if getattr(args, "receivers", None):
        over["receivers"] = tuple(args.receivers.split(","))
    if getattr(args, "ber", False):
        over["with_ber"] = True
    return over


def _scenario_from_args(args):
    over = _overrides_from_args(args)
    if getattr(args, "scenario", None):
        return load_scenario(args.scenario, over)
    doc = dict(over)
    if getattr(args, "full_band", False):
        doc["ofdm"] = {"active_carriers": "full", "fc_norm": 0.25}
    return scenario_from_dict(doc)


def _emit(text, path):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def cmd_design(args):
    ofdm = OfdmConfig.full_band(fc_norm=0.25) if args.full_band else OfdmConfig()
    n_noise = args.n_noise
    l_wiener = ofdm.n_sym + n_noise // 2
    l1, l2 = n_noise // 2, ofdm.n_sym
    maxlag = l1 + l2 + 1
    c_dd = analytic_autocorr_ofdm(ofdm, max(maxlag, l_wiener + 1))
    params, _, acorr = noise_mod.noise_model(
        args.noise_kind,
        **({} if args.noise_kind == "awgn" else {"n_noise": n_noise}),
    )
    c_ww = acorr(params, maxlag)
    noise_power = c_dd.mean_power() / 10 ** (args.snr_db / 10)
    c_ww = c_ww.scaled(noise_power / c_ww.mean_power())
    inputs = DesignInputs(c_dd, c_ww, period=math.lcm(ofdm.n_sym, n_noise))
    rx = args.receiver.lower()
    if rx == "rx2":
        res = design_stationary_wiener(inputs, l_wiener, lag_offset=centered_offset(l_wiener))
        specs = {"": res.filter}
    elif rx == "rx3":
        res = design_direct(inputs, comb(ofdm.n_sym, 2), l_wiener, lag_offset=centered_offset(l_wiener))
        specs = {"": res.filter}
    elif rx == "rx4":
        freqs_noise = comb(n_noise, 2)
        if args.delta:
            freqs_noise = with_cyclic_freq_error(freqs_noise, args.delta)
        res = design_noise_canceller(
            inputs, freqs_noise, l1, comb(ofdm.n_sym, 2), l2,
            lag_offset1=centered_offset(l1), lag_offset2=centered_offset(l2),
        )
        specs = {".h1": res.receiver.h1, ".h2": res.receiver.h2}
    else:
        raise SystemExit(f"design supports Rx2/Rx3/Rx4, got {args.receiver}")
    base = args.out
    for suffix, spec in specs.items():
        path = base + suffix if base != "-" else "-"
        if path == "-":
            raise SystemExit("design requires --out FILE")
        save_filter_spec(spec, path)
    print(json.dumps({"ta_mse_db": 10 * math.log10(res.ta_mse), "out": base}))
    return 0


def cmd_simulate(args):
    cfg = _scenario_from_args(args)
    records = run_scenario(cfg, progress=(print if args.verbose else None))
    _emit(records_to_csv(records), args.out)
    return 0


def cmd_sweep(args):
    cfg = _scenario_from_args(args)
    records = run_scenario(cfg, progress=(print if args.verbose else None))
    _emit(records_to_csv(records), args.out)
    return 0


def cmd_adapt(args):
    over = _overrides_from_args(args)
    over["mode"] = "adaptive"
    over.setdefault("receivers", ("Rx4",))
    if getattr(args, "scenario", None):
        cfg = load_scenario(args.scenario, over)
    else:
        cfg = scenario_from_dict(over)
    if args.trajectory_out:
        from .adaptive import trajectory_to_csv
        from .harness import run_adaptive_trajectory

        record, report = run_adaptive_trajectory(cfg)
        _emit(trajectory_to_csv(report.trajectory, report.ber_so_far), args.trajectory_out)
        _emit(records_to_csv([record]), args.out)
        return 0
    records = run_scenario(cfg, progress=(print if args.verbose else None))
    _emit(records_to_csv(records), args.out)
    return 0


def cmd_noise_gen(args):
    kwargs = {} if args.noise_kind == "awgn" else {"n_noise": args.n_noise}
    if args.noise_kind == "lptv" and args.lptv_file:
        kwargs = {"file": args.lptv_file}
    params, gen, _ = noise_mod.noise_model(args.noise_kind, **kwargs)
    rng = make_rng(args.seed, 0)
    w = gen(params, args.length, rng)
    if args.out == "-":
        np.savetxt(sys.stdout, w)
    else:
        np.savetxt(args.out, w)
    return 0


def main(argv=None):
    ap = argparse.ArgumentParser(prog="cyclofresh", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="solve one receiver design and write filter file(s)")
    p.add_argument("--receiver", default="Rx4")
    p.add_argument("--noise", dest="noise_kind", default="kata1")
    p.add_argument("--snr-db", type=float, default=0.0)
    p.add_argument("--n-noise", type=int, default=1000)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--full-band", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_design)

    for name, fn in (("simulate", cmd_simulate), ("sweep", cmd_sweep)):
        p = sub.add_parser(name, help=f"{name} a scenario and emit CSV")
        p.add_argument("--scenario", help="YAML scenario file")
        p.add_argument("--verbose", action="store_true")
        _add_common_overrides(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("adapt", help="adaptive (decision-directed) runs")
    p.add_argument("--scenario", help="YAML scenario file")
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--trajectory-out", help="also write the convergence trajectory CSV here")
    _add_common_overrides(p)
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("noise-gen", help="emit one noise record as text")
    p.add_argument("--noise", dest="noise_kind", default="kata1")
    p.add_argument("--n-noise", type=int, default=1000)
    p.add_argument("--lptv-file")
    p.add_argument("--length", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_noise_gen)

    args = ap.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
