"""Link assembly: caching, the two-leg pipeline, and its invariants."""

import numpy as np
import pytest

from oamturb import fresnel
from oamturb.channel import LinkSetup, propagated_source, undistorted_image
from oamturb.errors import ShapeMismatch
from oamturb.optics import OpticalConfig, make_grid
from oamturb.turbulence import draw_seed, synthesize_screen, von_karman_spectrum


def test_cached_pieces_are_reused(desk_setup):
    assert desk_setup.ideal_mask(3) is desk_setup.ideal_mask(3)
    assert desk_setup.tx_field(3) is desk_setup.tx_field(3)
    assert desk_setup.target_intensity(3) is desk_setup.target_intensity(3)
    assert desk_setup.spectrum(2e-11) is desk_setup.spectrum(2e-11)


def test_ideal_mask_zero_order(desk_setup):
    assert np.all(desk_setup.ideal_mask(0).theta == 0.0)


def test_no_screen_reproduces_target(desk_setup):
    theta = desk_setup.ideal_mask(4).theta
    i = desk_setup.received_intensity(theta, None)
    t = desk_setup.target_intensity(4)
    assert np.allclose(i.values, t.values, atol=1e-12)


def test_received_image_is_uint8(desk_setup):
    theta = desk_setup.ideal_mask(2).theta
    img = desk_setup.received_image(theta, None)
    assert img.pixels.dtype == np.uint8
    assert img.shape == (desk_setup.grid.n, desk_setup.grid.n)
    assert img.pixels.max() == 255


def test_power_conserved_through_both_legs(desk_setup):
    # phase-only elements and TF legs: receiver power equals source power
    source_power = desk_setup.source.power()
    screen = synthesize_screen(draw_seed(17, desk_setup.grid), desk_setup.spectrum(5e-11))
    for ell in (0, 3, 7):
        theta = desk_setup.ideal_mask(ell).theta
        u = desk_setup.received_values(theta, screen)
        power = float(np.sum(np.abs(u) ** 2) * desk_setup.grid.dx**2)
        assert power == pytest.approx(source_power, rel=1e-12)


def test_screen_grid_must_match(desk_setup):
    other = make_grid(32, 8e-4)
    params = desk_setup.turbulence_params(1e-11)
    screen = synthesize_screen(draw_seed(1, other), von_karman_spectrum(other, params))
    with pytest.raises(ShapeMismatch):
        desk_setup.received_values(desk_setup.ideal_mask(1).theta, screen)


def test_rx_method_ir_accepted(desk_cfg):
    grid = make_grid(desk_cfg.grid_n, desk_cfg.grid_dx)
    optics = OpticalConfig(
        wavelength=desk_cfg.wavelength,
        waist=desk_cfg.waist,
        z_slm_tx=desk_cfg.z_slm_tx,
        z_tx_rx=desk_cfg.z_tx_rx,
    )
    setup = LinkSetup(grid, optics, desk_cfg.l_min, desk_cfg.l_max, rx_method=fresnel.IR)
    assert setup.kern_rx.method == fresnel.IR
    img = setup.received_image(setup.ideal_mask(2).theta, None)
    assert img.pixels.max() == 255
    with pytest.raises(ValueError):
        LinkSetup(grid, optics, desk_cfg.l_min, desk_cfg.l_max, rx_method="nope")


def test_convenience_wrappers(desk_setup):
    u = propagated_source(desk_setup, 5)
    assert np.array_equal(u.values, desk_setup.tx_field(5))
    img = undistorted_image(desk_setup, 5)
    assert np.array_equal(
        img.pixels,
        desk_setup.received_image(desk_setup.ideal_mask(5).theta, None).pixels,
    )


def test_spectrum_cache_bounded(desk_cfg):
    grid = make_grid(desk_cfg.grid_n, desk_cfg.grid_dx)
    optics = OpticalConfig(
        wavelength=desk_cfg.wavelength,
        waist=desk_cfg.waist,
        z_slm_tx=desk_cfg.z_slm_tx,
        z_tx_rx=desk_cfg.z_tx_rx,
    )
    setup = LinkSetup(grid, optics, desk_cfg.l_min, desk_cfg.l_max)
    for i in range(140):
        setup.spectrum(1e-12 * (i + 1))
    assert len(setup._spectra) <= 128
