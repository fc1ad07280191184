"""One full pre-compensation run on a single turbulent channel.

Draws a hidden channel screen, shows the distorted receiver pattern,
then runs the seed-space gradient descent that reshapes the transmitted
phase mask until the receiver pattern matches the calm-channel target.
Uses the classifier from 04_train_classifier.py when its model file
exists, otherwise falls back to a uniform strength guess, which the
corrector tolerates well.

Writes target / distorted / corrected images to demos/out/correction/.
"""

from pathlib import Path

from oamturb import (
    GdoConfig,
    LinkSetup,
    OpticalConfig,
    default_config,
    gdo_run,
    load_model,
    make_channel,
    make_grid,
    save_image,
)

OUT = Path(__file__).resolve().parent / "out" / "correction"
MODEL_FILE = Path(__file__).resolve().parent / "out" / "demo_model.bin"
CN2 = 3e-11


def main() -> None:
    cfg = default_config("desk")
    grid = make_grid(cfg.grid_n, cfg.grid_dx)
    optics = OpticalConfig(
        wavelength=cfg.wavelength, waist=cfg.waist,
        z_slm_tx=cfg.z_slm_tx, z_tx_rx=cfg.z_tx_rx,
    )
    setup = LinkSetup(grid, optics, cfg.l_min, cfg.l_max)

    model = None
    if MODEL_FILE.exists():
        model = load_model(MODEL_FILE)
        print(f"using classifier {MODEL_FILE.name}")
    else:
        print("no saved classifier, using a uniform strength guess")

    ch = make_channel(setup, CN2, rng_seed=5)
    run_cfg = GdoConfig(
        eta=cfg.eta, max_iter=cfg.max_iter,
        record_stride=cfg.record_stride, rng_seed=5,
    )
    result = gdo_run(
        setup, ch, model, run_cfg, cfg.ell,
        cn2_range=(cfg.cn2_min, cfg.cn2_max),
    )

    print(f"hidden cn2 {result.cn2_true:.2e}, "
          f"assumed {result.cn2_predicted:.2e}")
    print(f"error index: uncorrected {result.uncorrected_mse:.4f}, "
          f"best {result.best_mse:.4f} at iteration {result.best_iteration}, "
          f"final {result.final_mse:.4f}")
    print("trace (iteration, error):")
    for it, mse in result.mse_trace[:: max(1, len(result.mse_trace) // 10)]:
        print(f"  {it:>5d} {mse:.4f}")

    OUT.mkdir(parents=True, exist_ok=True)
    save_image(OUT / "target.pgm", result.target_image)
    save_image(OUT / "distorted.pgm", result.distorted_image)
    save_image(OUT / "corrected.pgm", result.corrected_image)
    print(f"images written to {OUT}")


if __name__ == "__main__":
    main()
