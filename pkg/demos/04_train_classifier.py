"""Train the strength classifier on a reduced desk problem.

The shipped desk profile trains on 10 strength classes with 100 images
each for 120 epochs (a few minutes).  This demo shrinks that to a
30-image-per-class, 40-epoch run so it finishes in about a minute, then
prints the held-out confusion structure.  Expect most mass on and next
to the diagonal rather than a sharp diagonal: at desk scale neighboring
strength classes produce heavily overlapping receiver patterns, which
is the documented limit of this classifier.

The trained model is saved for 05_correction_run.py to pick up.
"""

import time
from pathlib import Path

import numpy as np

from oamturb import (
    LinkSetup,
    OpticalConfig,
    TrainConfig,
    default_config,
    evaluate,
    generate_dataset,
    label_grid,
    make_grid,
    save_model,
    train,
)
from oamturb.rng import derive_seed

OUT = Path(__file__).resolve().parent / "out"
PER_TRAIN, PER_TEST, EPOCHS = 30, 10, 40


def main() -> None:
    cfg = default_config("desk")
    grid = make_grid(cfg.grid_n, cfg.grid_dx)
    optics = OpticalConfig(
        wavelength=cfg.wavelength, waist=cfg.waist,
        z_slm_tx=cfg.z_slm_tx, z_tx_rx=cfg.z_tx_rx,
    )
    setup = LinkSetup(grid, optics, cfg.l_min, cfg.l_max)
    labels = label_grid().values[:: cfg.label_stride]
    print(f"{len(labels)} strength classes, {PER_TRAIN} train / "
          f"{PER_TEST} test images each, mode order {cfg.ell}")

    t0 = time.perf_counter()
    train_data = generate_dataset(
        setup, labels, cfg.ell, PER_TRAIN, derive_seed(11, "train"))
    test_data = generate_dataset(
        setup, labels, cfg.ell, PER_TEST, derive_seed(11, "test"))
    print(f"dataset synthesis {time.perf_counter() - t0:.1f} s")

    tcfg = TrainConfig(
        epochs=EPOCHS, batch=cfg.train_batch, step=cfg.train_step,
        step_final=cfg.train_step_final, nf=cfg.train_nf, rng_seed=3,
    )
    t0 = time.perf_counter()
    model, trace = train(tcfg, train_data)
    print(f"training {time.perf_counter() - t0:.1f} s, "
          f"loss {trace[0]:.3f} -> {trace[-1]:.3f}")

    report = evaluate(model, test_data)
    print(f"held-out top-1 {report.top1:.1%}, within one class "
          f"{report.within_one:.1%} ({report.count} images)")
    print("confusion (rows true, cols predicted):")
    for row in report.confusion:
        print("  " + " ".join(f"{c:>3d}" for c in row))

    OUT.mkdir(parents=True, exist_ok=True)
    save_model(OUT / "demo_model.bin", model)
    print(f"model saved to {OUT / 'demo_model.bin'}")


if __name__ == "__main__":
    main()
