"""Acceptance gates for the full pipeline, one test per criterion.

Every test prints a single CRITERION line; the project pytest options
(-rA) surface those lines in the terminal summary for passes and
failures alike.  Heavy fixtures (trained classifiers) are module-scoped
so the unit files stay fast when run on their own.
"""

import time

import numpy as np
import pytest

from oamturb import fresnel
from oamturb.channel import LinkSetup
from oamturb.cli import dataset_seed, train_settings
from oamturb.cnn import (
    evaluate,
    generate_dataset,
    init_model,
    label_grid,
    predict,
    train,
)
from oamturb.experiments import (
    SweepSpec,
    spearman,
    strength_test_points,
    sweep_eta,
    sweep_oam,
    sweep_strength,
    write_sweep_csvs,
)
from oamturb.feedback import (
    ChannelInstance,
    make_channel,
    objective_grad,
    objective_value,
    observe,
    target_pattern,
    update_mask,
)
from oamturb.optics import (
    ComplexField,
    Image8,
    OpticalConfig,
    gaussian_beam,
    make_grid,
    petal_count,
)
from oamturb.rng import complex_standard_normal, derive_seed
from oamturb.turbulence import (
    PhaseScreen,
    ScreenSeed,
    draw_seed,
    fried_parameter,
    oracle_structure_function,
    screen_ensemble,
    structure_function_est,
)

OAM_POINTS = (0, 2, 4, 6, 8, 10)


# -- heavy shared fixtures ---------------------------------------------


def _desk_model_for(cfg, setup, ell):
    data = generate_dataset(
        setup,
        label_grid().values[:: cfg.label_stride],
        ell,
        cfg.per_label_train,
        dataset_seed(cfg, "train", ell),
    )
    t0 = time.perf_counter()
    model, _ = train(train_settings(cfg, ell), data)
    return model, time.perf_counter() - t0


@pytest.fixture(scope="module")
def desk_model(desk_cfg, desk_setup):
    """Classifier at the default mode order, with its training wall time."""
    return _desk_model_for(desk_cfg, desk_setup, desk_cfg.ell)


@pytest.fixture(scope="module")
def oam_models(desk_cfg, desk_setup):
    """One classifier per swept mode order, plus total build time."""
    t0 = time.perf_counter()
    models = {
        ell: _desk_model_for(desk_cfg, desk_setup, ell)[0] for ell in OAM_POINTS
    }
    return models, time.perf_counter() - t0


def _report(num, ok, detail):
    line = f"CRITERION {num} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    return line


# -- criteria ----------------------------------------------------------


def test_criterion_01_power_and_inverse(paper_setup):
    grid = paper_setup.grid
    wl = paper_setup.optics.wavelength
    worst_power = 0.0
    worst_identity = 0.0
    for z in (1.0, 25.0):
        kern = fresnel.tf_kernel(grid, wl, z)
        for i in range(100):
            u = ComplexField(grid, complex_standard_normal(
                derive_seed(901, "field", z, i), (grid.n, grid.n)
            ))
            v = fresnel.propagate(u, kern)
            worst_power = max(worst_power, abs(v.power() - u.power()) / u.power())
            back = fresnel.inverse_propagate(v, kern)
            worst_identity = max(
                worst_identity,
                float(np.linalg.norm(back.values - u.values)
                      / np.linalg.norm(u.values)),
            )
    ok = worst_power < 1e-12 and worst_identity < 1e-12
    line = _report(1, ok, (
        f"100 fields at 1 m and 25 m: power error {worst_power:.2e} "
        f"(gate 1e-12), inverse-of-forward error {worst_identity:.2e} (gate 1e-12)"
    ))
    assert ok, line


def test_criterion_02_beam_radius(paper_setup):
    opt = paper_setup.optics
    w0, wl, z = opt.waist, opt.wavelength, opt.z_tx_rx
    u = gaussian_beam(paper_setup.grid, opt)
    far = fresnel.propagate(u, paper_setup.kern_rx)
    X, Y = paper_setup.grid.coords()
    i = np.abs(far.values) ** 2
    radius = float(np.sqrt(2.0 * np.sum((X**2 + Y**2) * i) / np.sum(i)))
    analytic = w0 * np.sqrt(1.0 + (wl * z / (np.pi * w0**2)) ** 2)
    rel = abs(radius - analytic) / analytic
    ok = rel < 0.02
    line = _report(2, ok, (
        f"second-moment radius {radius * 1e3:.3f} mm vs analytic "
        f"{analytic * 1e3:.3f} mm (7.218 mm), deviation {rel:.2e} (gate 2%)"
    ))
    assert ok, line


def test_criterion_03_screen_statistics(paper_setup):
    S = paper_setup.spectrum(1e-11)
    dx = paper_setup.grid.dx
    screens = screen_ensemble(derive_seed(903, "screens"), 200, S)
    rs = [4 * dx, 8 * dx, 12 * dx, 16 * dx]
    est = [structure_function_est(screens, r) for r in rs]
    oracle = [oracle_structure_function(S, r) for r in rs]
    worst = max(abs(e - o) / o for e, o in zip(est, oracle))
    slope = float(np.polyfit(np.log(rs), np.log(est), 1)[0])
    r0 = paper_setup.turbulence_params(1e-11).r0
    k = paper_setup.optics.wavenumber
    r0_hand = (0.423 * k**2 * 1e-11 * 25.0) ** (-3.0 / 5.0)
    r0_rel = abs(r0 - r0_hand) / r0_hand
    ok = worst < 0.10 and abs(slope - 5.0 / 3.0) <= 0.3 and r0_rel < 1e-3
    line = _report(3, ok, (
        f"200 screens: est vs oracle within {worst:.1%} (gate 10%), "
        f"slope {slope:.3f} (gate 5/3 +- 0.3), r0 {r0:.4e} m vs closed form "
        f"{r0_hand:.4e} (1.14e-2), deviation {r0_rel:.2e} (gate 0.1%)"
    ))
    assert fried_parameter(k, 1e-11, 25.0) == r0
    assert ok, line


def test_criterion_04_petal_counts(paper_setup):
    counts = {}
    for ell in range(1, 11):
        _, cont = target_pattern(paper_setup, ell)
        counts[ell] = petal_count(cont)
    ok = all(counts[ell] == 2 * ell for ell in counts)
    line = _report(4, ok, (
        "petal count equals twice the mode order for orders 1..10: "
        + ", ".join(f"{ell}->{counts[ell]}" for ell in sorted(counts))
    ))
    assert ok, line


def test_criterion_05_mask_identity(desk_setup):
    ell = 5
    n = desk_setup.grid.n
    ideal = desk_setup.ideal_mask(ell).theta
    amp = np.abs(desk_setup.source.values)
    state = update_mask(desk_setup, np.zeros((n, n)), ell, 0)
    diff = np.abs(np.angle(np.exp(1j * (state.theta - ideal))))
    worst_dim = float(np.max(diff[amp >= 1e-6 * amp.max()]))
    worst_mid = float(np.max(diff[amp >= 1e-5 * amp.max()]))
    zero_screen = ChannelInstance(
        PhaseScreen(desk_setup.grid, np.zeros((n, n)), "real"), 1e-11, 0
    )
    _, err = observe(desk_setup, state, zero_screen)
    # the mask phase returns through an FFT round trip, so its error at
    # relative amplitude a floors at roundoff / a: the bound tightens one
    # decade per decade of amplitude cutoff
    ok = worst_dim < 1e-9 and worst_mid < 1e-10 and err < 1e-6
    line = _report(5, ok, (
        f"zero-estimate mask error {worst_dim:.2e} rad above the 1e-6 "
        f"amplitude cutoff (gate 1e-9), {worst_mid:.2e} above 1e-5 "
        f"(gate 1e-10); error index through a calm channel {err:.2e} (gate 1e-6)"
    ))
    assert ok, line


def _fd_setup(n, desk_cfg):
    grid = make_grid(n, desk_cfg.grid_dx)
    optics = OpticalConfig(
        wavelength=desk_cfg.wavelength,
        waist=desk_cfg.waist,
        z_slm_tx=desk_cfg.z_slm_tx,
        z_tx_rx=desk_cfg.z_tx_rx,
    )
    return LinkSetup(grid, optics, desk_cfg.l_min, desk_cfg.l_max)


def _fd_case_error(setup, case_seed):
    """Relative L2 distance between adjoint and full central differences."""
    cn2_true, cn2_est, ell = 3e-11, 2e-11, 2
    ch = make_channel(setup, cn2_true, derive_seed(case_seed, "ch"))
    seed = draw_seed(derive_seed(case_seed, "seed"), setup.grid)
    grad, _, _, degenerate = objective_grad(setup, seed, cn2_est, ell, ch)
    assert not degenerate
    n = setup.grid.n
    h = 1e-4
    fd = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            parts = []
            for delta in (h, 1j * h):
                vp = seed.values.copy()
                vp[i, j] += delta
                up = objective_value(
                    setup, ScreenSeed(setup.grid, vp, 0), cn2_est, ell, ch
                )
                vm = seed.values.copy()
                vm[i, j] -= delta
                down = objective_value(
                    setup, ScreenSeed(setup.grid, vm, 0), cn2_est, ell, ch
                )
                parts.append((up - down) / (2.0 * h))
            fd[i, j] = parts[0] + 1j * parts[1]
    stack = lambda a: np.concatenate([a.real.ravel(), a.imag.ravel()])
    return float(
        np.linalg.norm(stack(grad) - stack(fd)) / np.linalg.norm(stack(fd))
    )


def test_criterion_06_adjoint_gradient(desk_cfg):
    cases = []
    setup16 = _fd_setup(16, desk_cfg)
    setup32 = _fd_setup(32, desk_cfg)
    for c in range(12):
        cases.append(_fd_case_error(setup16, derive_seed(906, 16, c)))
    for c in range(9):
        cases.append(_fd_case_error(setup32, derive_seed(906, 32, c)))
    worst = max(cases)
    ok = worst < 1e-6
    line = _report(6, ok, (
        f"adjoint vs central differences, {len(cases)} cases on 16 and 32 "
        f"point grids: worst relative L2 {worst:.2e} (gate 1e-6)"
    ))
    assert len(cases) >= 20
    assert ok, line


def test_criterion_07_classifier_desk(desk_cfg, desk_setup, desk_model):
    model, train_seconds = desk_model
    test_data = generate_dataset(
        desk_setup,
        label_grid().values[:: desk_cfg.label_stride],
        desk_cfg.ell,
        desk_cfg.per_label_test,
        dataset_seed(desk_cfg, "test", desk_cfg.ell),
    )
    report = evaluate(model, test_data)

    # timing leg on the full-scale input side; weights do not affect cost
    big = init_model(128, desk_cfg.train_nf, label_grid().values, rng_seed=0)
    probe = Image8(
        np.random.default_rng(0).integers(0, 256, (128, 128), dtype=np.uint8)
    )
    predict(big, probe)
    times = []
    for _ in range(10):
        t0 = time.perf_counter()
        predict(big, probe)
        times.append(time.perf_counter() - t0)
    infer_ms = float(np.median(times) * 1e3)

    ok = (
        report.top1 >= 0.60
        and report.within_one >= 0.90
        and infer_ms < 30.0
        and train_seconds < 1200.0
    )
    line = _report(7, ok, (
        f"held-out top-1 {report.top1:.1%} (gate 60%), within-one "
        f"{report.within_one:.1%} (gate 90%), 128-px inference "
        f"{infer_ms:.1f} ms (gate 30 ms), training {train_seconds / 60:.1f} min "
        f"(gate 20 min)"
    ))
    assert infer_ms < 30.0, line
    assert train_seconds < 1200.0, line
    assert report.top1 >= 0.60 and report.within_one >= 0.90, line


def test_criterion_08_correction_gate(desk_cfg, desk_setup, desk_model):
    model, _ = desk_model
    base = derive_seed(desk_cfg.base_seed, "accept", "correction")
    coarse = SweepSpec(
        kind="eta", points=tuple(desk_cfg.eta_grid), trials=4,
        ell=desk_cfg.ell, base_seed=derive_seed(base, "coarse"),
        cn2=3e-11, max_iter=desk_cfg.max_iter,
        record_stride=desk_cfg.record_stride,
    )
    coarse_res = sweep_eta(coarse, desk_setup, model, threads=2)
    curve = coarse_res.mean_curve("best")
    eta_star = float(desk_cfg.eta_grid[int(np.argmin(curve))])

    gate = SweepSpec(
        kind="eta", points=(eta_star,), trials=20,
        ell=desk_cfg.ell, base_seed=derive_seed(base, "gate"),
        cn2=3e-11, max_iter=desk_cfg.max_iter,
        record_stride=desk_cfg.record_stride,
    )
    res = sweep_eta(gate, desk_setup, model, threads=2)
    med_best = float(np.median(res.values("best", 0)))
    med_unc = float(np.median(res.values("uncorrected", 0)))
    ratio = med_best / med_unc

    stretch = SweepSpec(
        kind="eta", points=(eta_star,), trials=20,
        ell=desk_cfg.ell, base_seed=derive_seed(base, "gate"),
        cn2=3e-11, max_iter=700, record_stride=desk_cfg.record_stride,
    )
    res700 = sweep_eta(stretch, desk_setup, model, threads=2)
    ratio700 = float(
        np.median(res700.values("best", 0))
        / np.median(res700.values("uncorrected", 0))
    )

    ok = ratio <= 0.5
    line = _report(8, ok, (
        f"tuned step {eta_star:g}: 20 channels, 300 iterations, median best "
        f"{med_best:.4f} / median uncorrected {med_unc:.4f} = {ratio:.3f} "
        f"(gate 0.5); stretch ratio at 700 iterations {ratio700:.3f} "
        f"(0.1 target, reported only)"
    ))
    assert ok, line


def test_criterion_09_mode_and_strength_trends(desk_cfg, desk_setup, oam_models):
    models, build_seconds = oam_models
    t0 = time.perf_counter()
    base = derive_seed(desk_cfg.base_seed, "accept", "trends")

    oam_spec = SweepSpec(
        kind="oam", points=tuple(float(e) for e in OAM_POINTS),
        trials=desk_cfg.sweep_channels, base_seed=derive_seed(base, "oam"),
        cn2=desk_cfg.sweep_cn2, eta=desk_cfg.eta,
        max_iter=desk_cfg.max_iter, record_stride=desk_cfg.record_stride,
    )
    oam_res = sweep_oam(oam_spec, desk_setup, models, threads=2)
    rho_ell = spearman(
        [float(e) for e in OAM_POINTS], oam_res.mean_curve("best")
    )
    oam_gaps = []
    for pi in oam_res.point_indices():
        med_b = float(np.median(oam_res.values("best", pi)))
        med_u = float(np.median(oam_res.values("uncorrected", pi)))
        oam_gaps.append(med_b < med_u)

    strengths = strength_test_points(desk_cfg.strength_sets)
    str_spec = SweepSpec(
        kind="strength", points=strengths,
        trials=desk_cfg.sweep_channels, base_seed=derive_seed(base, "strength"),
        ell=8, eta=desk_cfg.eta,
        max_iter=desk_cfg.max_iter, record_stride=desk_cfg.record_stride,
    )
    str_res = sweep_strength(str_spec, desk_setup, models[8], threads=2)
    rho_cn2 = spearman(list(strengths), str_res.mean_curve("best"))
    str_gaps = []
    for pi in str_res.point_indices():
        med_b = float(np.median(str_res.values("best", pi)))
        med_u = float(np.median(str_res.values("uncorrected", pi)))
        str_gaps.append(med_b < med_u)

    seconds = build_seconds + (time.perf_counter() - t0)
    ok = (
        rho_ell > 0.8
        and rho_cn2 > 0.8
        and all(oam_gaps)
        and all(str_gaps)
        and seconds < 3600.0
    )
    line = _report(9, ok, (
        f"corrected-mean rank correlation vs mode order {rho_ell:.3f} and vs "
        f"strength {rho_cn2:.3f} (gates 0.8); corrected median below "
        f"uncorrected at {sum(oam_gaps)}/{len(oam_gaps)} mode points and "
        f"{sum(str_gaps)}/{len(str_gaps)} strength points; wall time "
        f"{seconds / 60:.1f} min (gate 60)"
    ))
    assert ok, line


def test_criterion_10_deterministic_csv(desk_cfg, desk_setup, tmp_path):
    spec = SweepSpec(
        kind="eta", points=(2.0, 5.0), trials=3, ell=desk_cfg.ell,
        base_seed=derive_seed(desk_cfg.base_seed, "accept", "determinism"),
        cn2=3e-11, max_iter=50, record_stride=10,
    )
    blobs = {}
    for tag, threads in (("a", 1), ("b", 2), ("c", 2)):
        res = sweep_eta(spec, desk_setup, None, threads=threads)
        raw = tmp_path / f"raw_{tag}.csv"
        stats = tmp_path / f"stats_{tag}.csv"
        write_sweep_csvs(res, raw, stats)
        blobs[tag] = (raw.read_bytes(), stats.read_bytes())
    ok = blobs["a"] == blobs["b"] == blobs["c"]
    line = _report(10, ok, (
        "sweep rerun and thread-count change leave the raw and stats CSV "
        f"bytes identical: {'yes' if ok else 'NO'}"
    ))
    assert ok, line
