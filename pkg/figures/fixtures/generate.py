"""Regenerate the committed figure fixtures from the simulation package.

Run from the repository root with cyclofresh installed:
    python figures/fixtures/generate.py
The figure tests never import this module; they consume the committed CSVs.
"""

import pathlib

import numpy as np

from cyclofresh.adaptive import run_training, trajectory_to_csv
from cyclofresh.fresh_design import FreshFilterSpec, TwoStageReceiver, comb
from cyclofresh.harness import records_to_csv, run_scenario, scenario_from_dict
from cyclofresh.noise import kata_preset, katayama_autocorr, katayama_generate
from cyclofresh.ofdm import OfdmConfig, demodulate, modulate, random_grid
from cyclofresh.signal_core import make_rng

HERE = pathlib.Path(__file__).parent

MINI = {
    "ofdm": {"n_data": 16, "n_cp": 4, "active_carriers": "full", "fc_norm": 0.25},
    "noise_kind": "kata1",
    "n_noise": 50,
    "seed": 7,
}


def write(name, text):
    (HERE / name).write_text(text, encoding="utf-8", newline="\n")
    print(f"wrote {name}")


def tamse_sweep():
    cfg = scenario_from_dict(
        {
            **MINI,
            "scenario_id": "tamse-kata1",
            "snr_grid_db": [-4.0, -2.0, 0.0, 2.0, 4.0, 6.0],
            "receivers": ["Rx1", "Rx2", "Rx3", "Rx4"],
            "ta_mse_samples": 30000,
        }
    )
    write("tamse_sweep.csv", records_to_csv(run_scenario(cfg)))


def ber_sweep():
    cfg = scenario_from_dict(
        {
            "scenario_id": "ber-kata2",
            "ofdm": {"n_data": 16, "n_cp": 4,
                     "active_carriers": list(range(-4, 4)), "fc_norm": 9 / 32},
            "noise_kind": "kata2",
            "n_noise": 50,
            "snr_grid_db": [2.0, 4.0, 6.0, 8.0],
            "receivers": ["Rx1", "Rx4"],
            "with_ber": True,
            "ber_target_errors": 40,
            "ber_max_info_bits": 40000,
            "seed": 7,
        }
    )
    write("ber_sweep.csv", records_to_csv(run_scenario(cfg)))


def delta_sweep():
    rows = []
    for delta in (0.0, 1e-4, 1e-3, 3e-3, 1e-2, 1e-1):
        cfg = scenario_from_dict(
            {
                **MINI,
                "noise_kind": "kata2",
                "scenario_id": f"delta@{delta:g}",
                "snr_grid_db": [0.0],
                "receivers": ["Rx3", "Rx4"],
                "ta_mse_samples": 20000,
                "delta": delta,
            }
        )
        rows.extend(run_scenario(cfg))
    write("delta_sweep.csv", records_to_csv(rows))


def convergence():
    cfg = OfdmConfig(n_data=12, n_cp=4, active_carriers=tuple(range(12)), fc_norm=0.25)
    nn = 50
    par = kata_preset("KATA1", n_noise=nn)
    geometry = TwoStageReceiver(
        FreshFilterSpec.zero(comb(nn, 2), nn // 2, nn // 4),
        FreshFilterSpec.zero(comb(cfg.n_sym, 2), cfg.n_sym, cfg.n_data),
        cfg.n_sym,
        nn,
    )
    rng = make_rng(13, 0)
    period = np.lcm(cfg.n_sym, nn)
    d = modulate(random_grid(40 * period // cfg.n_sym, cfg, rng), cfg)
    cww = katayama_autocorr(par, 2)
    scale = np.mean(d**2) / cww.mean_power()
    w = np.sqrt(scale) * katayama_generate(par, d.shape[0], rng)
    _, traj = run_training(geometry, d + w, d, lam=1.0)
    write("convergence.csv", trajectory_to_csv(traj))


def scatter():
    cfg = OfdmConfig(n_data=16, n_cp=4, active_carriers=tuple(range(-4, 4)), fc_norm=9 / 32)
    rng = make_rng(21, 0)
    par = kata_preset("KATA2", n_noise=50)
    grid = random_grid(120, cfg, rng)
    d = modulate(grid, cfg)
    cww = katayama_autocorr(par, 2)
    snr = 4.0
    scale = (cfg.n_active / (2 * cfg.n_data)) / (cww.mean_power() * 10 ** (snr / 10))
    r = d + np.sqrt(scale) * katayama_generate(par, d.shape[0], rng)
    lines = ["receiver,point,re,im"]
    # one reference constellation point, before filtering (Rx1 view)
    _, soft = demodulate(r, cfg)
    target = grid[:, 0]
    mask = np.abs(target - target[0]) < 1e-9
    for v in soft[mask, 0]:
        lines.append(f"Rx1,0,{v.real:.6f},{v.imag:.6f}")
    write("scatter.csv", "\n".join(lines) + "\n")


if __name__ == "__main__":
    tamse_sweep()
    ber_sweep()
    delta_sweep()
    convergence()
    scatter()
