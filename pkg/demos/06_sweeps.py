"""Small seeded sweeps over step size and turbulence strength.

Runs two reduced experiment grids (3 points x 4 trials each, 120
iterations), prints the per-point medians, and writes the same CSV pair
the command-line `sweep` subcommand produces, plus a montage of target,
distorted, and corrected images from the last trial.  Every trial
channel is keyed by (base seed, point, trial), so rerunning this script
reproduces the CSVs byte for byte.
"""

from pathlib import Path

import numpy as np

from oamturb import (
    GdoConfig,
    LinkSetup,
    OpticalConfig,
    SweepSpec,
    default_config,
    gdo_run,
    make_channel,
    make_grid,
    montage,
    save_image,
    strength_test_points,
    sweep_eta,
    sweep_strength,
    write_sweep_csvs,
)

OUT = Path(__file__).resolve().parent / "out" / "sweeps"


def show(res):
    print(f"  {'point':>10} {'uncorrected':>12} {'best':>10}")
    for pi in res.point_indices():
        point = res.rows[[r.point_index for r in res.rows].index(pi)].point
        med_u = np.median(res.values("uncorrected", pi))
        med_b = np.median(res.values("best", pi))
        print(f"  {point:>10.3g} {med_u:>12.4f} {med_b:>10.4f}")


def main() -> None:
    cfg = default_config("desk")
    grid = make_grid(cfg.grid_n, cfg.grid_dx)
    optics = OpticalConfig(
        wavelength=cfg.wavelength, waist=cfg.waist,
        z_slm_tx=cfg.z_slm_tx, z_tx_rx=cfg.z_tx_rx,
    )
    setup = LinkSetup(grid, optics, cfg.l_min, cfg.l_max)
    OUT.mkdir(parents=True, exist_ok=True)

    eta_spec = SweepSpec(
        kind="eta", points=(1.0, 5.0, 10.0), trials=4, ell=cfg.ell,
        base_seed=21, cn2=cfg.sweep_cn2, max_iter=120, record_stride=10,
    )
    eta_res = sweep_eta(eta_spec, setup, None, threads=2)
    print("step-size sweep (uniform strength guess):")
    show(eta_res)
    write_sweep_csvs(eta_res, OUT / "eta_raw.csv", OUT / "eta_stats.csv")

    str_spec = SweepSpec(
        kind="strength", points=strength_test_points(3), trials=4,
        ell=cfg.ell, base_seed=22, eta=cfg.eta, max_iter=120,
        record_stride=10,
    )
    str_res = sweep_strength(str_spec, setup, None, threads=2)
    print("strength sweep:")
    show(str_res)
    write_sweep_csvs(str_res, OUT / "strength_raw.csv",
                     OUT / "strength_stats.csv")

    ch = make_channel(setup, cfg.sweep_cn2, rng_seed=9)
    r = gdo_run(
        setup, ch, None,
        GdoConfig(eta=cfg.eta, max_iter=120, record_stride=10, rng_seed=9),
        cfg.ell, cn2_range=(cfg.cn2_min, cfg.cn2_max),
    )
    tiles = [r.target_image, r.distorted_image, r.corrected_image]
    save_image(OUT / "montage.pgm", montage(tiles, cols=3, pad=2))
    print(f"CSVs and montage written to {OUT}")


if __name__ == "__main__":
    main()
