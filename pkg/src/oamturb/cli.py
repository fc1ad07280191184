"""Command-line front end: generation, training, correction, sweeps.

Every command echoes the effective configuration into its output
directory and derives all randomness from the configured base seed, so
a command line plus a config file fully determines every output byte.
Exit codes: 0 success, 2 configuration problem, 3 validation or runtime
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from .channel import LinkSetup
from .cnn import (
    TrainConfig,
    evaluate,
    generate_dataset,
    label_grid,
    train,
)
from .config import Config, default_config, dump_config, parse_config, validate_config
from .errors import ConfigError, OamTurbError
from .experiments import (
    SWEEP_ETA,
    SWEEP_ITERATIONS,
    SWEEP_OAM,
    SWEEP_STRENGTH,
    SWEEP_TRAIN_SIZE,
    SweepSpec,
    plateau_detected,
    render_montage,
    spearman,
    strength_test_points,
    sweep_eta,
    sweep_iterations,
    sweep_oam,
    sweep_strength,
    sweep_train_size,
    write_sweep_csvs,
)
from .feedback import GdoConfig, gdo_run, make_channel
from .io import (
    load_dataset,
    load_model,
    save_dataset,
    save_model,
    save_pgm,
    save_screen,
    write_csv,
)
from .optics import OpticalConfig, make_grid
from .rng import derive_seed
from .turbulence import draw_seed, screen_ensemble


def build_setup(cfg: Config) -> LinkSetup:
    grid = make_grid(cfg.grid_n, cfg.grid_dx)
    optics = OpticalConfig(
        wavelength=cfg.wavelength,
        waist=cfg.waist,
        z_slm_tx=cfg.z_slm_tx,
        z_tx_rx=cfg.z_tx_rx,
    )
    return LinkSetup(grid, optics, l_min=cfg.l_min, l_max=cfg.l_max)


def config_labels(cfg: Config) -> np.ndarray:
    """The cn2 class values this config trains on (possibly strided)."""
    return label_grid().values[:: cfg.label_stride]


def train_settings(cfg: Config, ell: int) -> TrainConfig:
    return TrainConfig(
        epochs=cfg.train_epochs,
        batch=cfg.train_batch,
        step=cfg.train_step,
        step_final=cfg.train_step_final or None,
        nf=cfg.train_nf,
        rng_seed=derive_seed(cfg.base_seed, "train", ell),
    )


def dataset_seed(cfg: Config, split: str, ell: int) -> int:
    return derive_seed(cfg.base_seed, "dataset", split, ell)


def _trained_model(cfg: Config, setup: LinkSetup, ell: int):
    """Generate the training pool for one OAM index and fit a classifier."""
    labels = config_labels(cfg)
    pool = generate_dataset(
        setup, labels, ell, cfg.per_label_train, dataset_seed(cfg, "train", ell)
    )
    model, trace = train(train_settings(cfg, ell), pool)
    return model, trace


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _echo_config(cfg: Config, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(dump_config(cfg))


def cmd_gen_screens(cfg: Config, args, out: Path) -> int:
    setup = build_setup(cfg)
    cn2 = args.cn2 if args.cn2 is not None else cfg.sweep_cn2
    params = setup.turbulence_params(cn2)
    base = derive_seed(cfg.base_seed, "screens")
    screens = screen_ensemble(base, args.count, setup.spectrum(cn2))
    rows = []
    for i, screen in enumerate(screens):
        name = f"screen_{i:04d}.f64"
        save_screen(out / name, screen)
        rows.append((name, base ^ i, cn2, params.r0))
    write_csv(out / "manifest.csv", ["file", "rng_seed", "cn2", "r0"], rows)
    print(f"wrote {args.count} screens at cn2={cn2:g} (r0={params.r0:.4e} m) to {out}")
    return 0


def cmd_gen_dataset(cfg: Config, args, out: Path) -> int:
    setup = build_setup(cfg)
    ell = args.ell if args.ell is not None else cfg.ell
    labels = config_labels(cfg)
    splits = ("train", "test") if args.split == "both" else (args.split,)
    counts = {"train": cfg.per_label_train, "test": cfg.per_label_test}
    for split in splits:
        data = generate_dataset(
            setup, labels, ell, counts[split], dataset_seed(cfg, split, ell)
        )
        save_dataset(out / split, data)
        print(f"{split}: {len(data)} images ({counts[split]}/label, ell={ell}) -> {out / split}")
    return 0


def cmd_train_cnn(cfg: Config, args, out: Path) -> int:
    setup = build_setup(cfg)
    ell = args.ell if args.ell is not None else cfg.ell
    t0 = time.time()
    if args.data:
        pool = load_dataset(Path(args.data) / "train")
        model, trace = train(train_settings(cfg, ell), pool)
        test = None
        test_dir = Path(args.data) / "test"
        if (test_dir / "manifest.csv").exists():
            test = load_dataset(test_dir)
    else:
        model, trace = _trained_model(cfg, setup, ell)
        test = generate_dataset(
            setup, config_labels(cfg), ell, cfg.per_label_test,
            dataset_seed(cfg, "test", ell),
        )
    save_model(out / "model.bin", model)
    write_csv(out / "trace.csv", ["epoch", "loss"], list(enumerate(trace)))
    summary = {"ell": ell, "epochs": len(trace), "final_loss": trace[-1],
               "train_seconds": round(time.time() - t0, 3)}
    if test is not None:
        report = evaluate(model, test)
        summary["top1"] = report.top1
        summary["within_one"] = report.within_one
        write_csv(
            out / "confusion.csv",
            [str(i) for i in range(model.n_classes)],
            [tuple(row) for row in report.confusion],
        )
        print(f"test top-1 {report.top1:.3f}, within-one {report.within_one:.3f}")
    _write_json(out / "summary.json", summary)
    print(f"model -> {out / 'model.bin'} ({summary['train_seconds']}s)")
    return 0


def cmd_correct(cfg: Config, args, out: Path) -> int:
    setup = build_setup(cfg)
    ell = args.ell if args.ell is not None else cfg.ell
    cn2 = args.cn2 if args.cn2 is not None else cfg.sweep_cn2
    eta = args.eta if args.eta is not None else cfg.eta
    iters = args.iters if args.iters is not None else cfg.max_iter
    model = None
    if args.model:
        model = load_model(args.model)
    elif not args.no_cnn:
        print("training classifier (pass --model or --no-cnn to skip)")
        model, _ = _trained_model(cfg, setup, ell)
    channel_seed = derive_seed(cfg.base_seed, "channel")
    gdo_seed = derive_seed(channel_seed, "gdo")
    ch = make_channel(setup, cn2, channel_seed)
    gdo = GdoConfig(
        eta=eta, max_iter=iters, record_stride=cfg.record_stride,
        eps_angle=cfg.eps_angle, rng_seed=gdo_seed,
    )
    labels = config_labels(cfg)
    res = gdo_run(setup, ch, model, gdo, ell,
                  cn2_range=(float(labels[0]), float(labels[-1])))
    best_so_far = np.minimum.accumulate([m for _, m in res.mse_trace])
    write_csv(
        out / "trace.csv",
        ["iter", "mse_index", "best_so_far"],
        [(it, m, b) for (it, m), b in zip(res.mse_trace, best_so_far)],
    )
    save_pgm(out / "target.pgm", res.target_image)
    save_pgm(out / "distorted.pgm", res.distorted_image)
    save_pgm(out / "corrected_best.pgm", res.corrected_image)
    _write_json(out / "summary.json", {
        "eta": eta,
        "iterations": iters,
        "cn2_true": res.cn2_true,
        "cn2_predicted": res.cn2_predicted,
        "uncorrected_mse": res.uncorrected_mse,
        "best_mse": res.best_mse,
        "best_iter": res.best_iteration,
        "seeds": {"channel": channel_seed, "gdo": gdo_seed},
    })
    print(
        f"uncorrected {res.uncorrected_mse:.4f} -> best {res.best_mse:.4f} "
        f"at iteration {res.best_iteration} (predicted cn2 {res.cn2_predicted:.3e})"
    )
    return 0


def _default_points(cfg: Config, kind: str) -> tuple[float, ...]:
    if kind == SWEEP_ETA:
        return tuple(cfg.eta_grid)
    if kind == SWEEP_ITERATIONS:
        return tuple(
            float(p) for p in range(0, cfg.max_iter + 1, 5 * cfg.record_stride)
        )
    if kind == SWEEP_TRAIN_SIZE:
        if cfg.profile == "desk":
            return (0.0, 25.0, 50.0, 100.0)
        return tuple(float(s) for s in range(0, 551, 50))
    if kind == SWEEP_OAM:
        if cfg.profile == "desk":
            return (0.0, 2.0, 4.0, 6.0, 8.0, 10.0)
        return tuple(float(e) for e in range(11))
    if kind == SWEEP_STRENGTH:
        return strength_test_points(cfg.strength_sets)
    raise ConfigError(f"unknown sweep kind {kind!r}")


def cmd_sweep(cfg: Config, args, out: Path) -> int:
    setup = build_setup(cfg)
    kind = args.kind
    points = _default_points(cfg, kind)
    if args.points:
        points = tuple(float(p) for p in args.points.split(","))
    per_point = cfg.trials if kind in (SWEEP_ETA, SWEEP_ITERATIONS, SWEEP_TRAIN_SIZE) \
        else cfg.sweep_channels
    ell = cfg.ell if kind != SWEEP_STRENGTH else 8
    spec = SweepSpec(
        kind=kind, points=points, trials=per_point, ell=ell,
        base_seed=derive_seed(cfg.base_seed, "sweep", kind),
        cn2=cfg.sweep_cn2, eta=cfg.eta,
        max_iter=cfg.max_iter, record_stride=cfg.record_stride,
    )
    threads = cfg.threads
    summary: dict = {"kind": kind, "points": list(points), "trials": per_point}
    t0 = time.time()
    if kind == SWEEP_TRAIN_SIZE:
        pool_size = max(int(p) for p in points)
        if pool_size < 1:
            raise ConfigError("train-size sweep needs a positive largest size")
        pool = generate_dataset(
            setup, config_labels(cfg), ell, pool_size,
            dataset_seed(cfg, "train", ell),
        )
        result = sweep_train_size(
            spec, setup, pool, train_settings(cfg, ell), threads=threads
        )
    elif kind == SWEEP_OAM:
        models = {}
        for e in (int(p) for p in points):
            if args.no_cnn:
                models[e] = None
            else:
                print(f"training classifier for ell={e}")
                models[e], _ = _trained_model(cfg, setup, e)
        result = sweep_oam(spec, setup, models, threads=threads)
    else:
        model = None
        if args.model:
            model = load_model(args.model)
        elif not args.no_cnn:
            print(f"training classifier for ell={ell}")
            model, _ = _trained_model(cfg, setup, ell)
        runner = {
            SWEEP_ETA: sweep_eta,
            SWEEP_ITERATIONS: sweep_iterations,
            SWEEP_STRENGTH: sweep_strength,
        }[kind]
        result = runner(spec, setup, model, threads=threads)
    write_sweep_csvs(result, out / "raw.csv", out / "stats.csv")
    best_means = result.mean_curve("best")
    if kind in (SWEEP_OAM, SWEEP_STRENGTH):
        summary["spearman_best_vs_point"] = spearman(list(points), best_means)
    if kind == SWEEP_ITERATIONS:
        summary["plateau"] = plateau_detected(result.mean_curve("final"))
    summary["seconds"] = round(time.time() - t0, 3)
    _write_json(out / "summary.json", summary)
    print(f"{kind} sweep: {len(result.rows)} rows in {summary['seconds']}s -> {out}")
    return 0


def cmd_render(cfg: Config, args, out: Path) -> int:
    if args.run_dir:
        run = Path(args.run_dir)
        files = [run / "target.pgm", run / "distorted.pgm", run / "corrected_best.pgm"]
        cols = 3
    else:
        if not args.files:
            raise ConfigError("render needs --files or --run-dir")
        files = [Path(p) for p in args.files.split(",")]
        cols = args.cols
    name = args.name or "montage.pgm"
    render_montage(files, out / name, cols)
    print(f"montage ({len(files)} panels, {cols} cols) -> {out / name}")
    return 0


def cmd_validate(cfg: Config, args, out: Path) -> int:
    from .validate import run_validation

    report = run_validation(cfg)
    for line in report.lines:
        print(line)
    _write_json(out / "validation.json", {
        "passed": report.passed,
        "failed": report.failed,
        "checks": report.checks,
    })
    if report.failed:
        print(f"{report.failed} of {report.passed + report.failed} checks failed")
        return 3
    print(f"all {report.passed} checks passed")
    return 0


def effective_config(args) -> Config:
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        text = path.read_text()
        if args.profile:
            # the flag outranks any profile line inside the file
            kept = [
                ln for ln in text.splitlines()
                if ln.split("#", 1)[0].split("=", 1)[0].strip() != "profile"
            ]
            cfg = parse_config("\n".join(kept), base=default_config(args.profile))
        else:
            cfg = parse_config(text)
    else:
        cfg = default_config(args.profile or "paper")
    overrides = {}
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    validate_config(cfg)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oamturb",
        description="Turbulence-compensated OAM link simulator",
    )
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--seed", type=int, help="override base_seed")
    parser.add_argument("--out", help="output directory (default oamturb-out/<command>)")
    parser.add_argument("--threads", type=int, help="worker threads for sweeps")
    parser.add_argument("--profile", choices=("paper", "desk"),
                        help="baseline defaults to start from")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-screens", help="draw an ensemble of phase screens")
    p.add_argument("--cn2", type=float)
    p.add_argument("--count", type=int, default=10)
    p.set_defaults(func=cmd_gen_screens)

    p = sub.add_parser("gen-dataset", help="render labeled training/test images")
    p.add_argument("--ell", type=int)
    p.add_argument("--split", choices=("train", "test", "both"), default="both")
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("train-cnn", help="train the strength classifier")
    p.add_argument("--ell", type=int)
    p.add_argument("--data", help="dataset directory from gen-dataset")
    p.set_defaults(func=cmd_train_cnn)

    p = sub.add_parser("correct", help="run one feedback correction")
    p.add_argument("--cn2", type=float)
    p.add_argument("--ell", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--model", help="trained model file")
    p.add_argument("--no-cnn", action="store_true",
                   help="uniform-random strength guess instead of a classifier")
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("sweep", help="run a seeded parameter sweep")
    p.add_argument("--kind", required=True, choices=(
        SWEEP_ETA, SWEEP_ITERATIONS, SWEEP_TRAIN_SIZE, SWEEP_OAM, SWEEP_STRENGTH
    ))
    p.add_argument("--points", help="comma-separated override of the point grid")
    p.add_argument("--model", help="trained model file (single-model kinds)")
    p.add_argument("--no-cnn", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("render", help="tile PGM panels into a montage")
    p.add_argument("--files", help="comma-separated panel paths")
    p.add_argument("--run-dir", help="a correct output directory (3-panel strip)")
    p.add_argument("--cols", type=int, default=3)
    p.add_argument("--name", help="output file name (suffix .pgm or .png)")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("validate", help="run the built-in oracle checks")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = effective_config(args)
        out = Path(args.out) if args.out else Path("oamturb-out") / args.command
        _echo_config(cfg, out)
        return args.func(cfg, args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OamTurbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
