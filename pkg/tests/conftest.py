"""Shared fixtures: link setups for the two built-in geometries.

Setups are cheap (a few FFT kernel builds); anything expensive such as
trained classifiers lives module-scoped inside test_acceptance.py so the
fast unit files stay fast when run alone.
"""

import pytest

from oamturb.channel import LinkSetup
from oamturb.config import default_config
from oamturb.optics import OpticalConfig, make_grid


def build_setup(cfg) -> LinkSetup:
    grid = make_grid(cfg.grid_n, cfg.grid_dx)
    optics = OpticalConfig(
        wavelength=cfg.wavelength,
        waist=cfg.waist,
        z_slm_tx=cfg.z_slm_tx,
        z_tx_rx=cfg.z_tx_rx,
    )
    return LinkSetup(grid, optics, cfg.l_min, cfg.l_max)


@pytest.fixture(scope="session")
def desk_cfg():
    return default_config("desk")


@pytest.fixture(scope="session")
def paper_cfg():
    return default_config("paper")


@pytest.fixture(scope="session")
def desk_setup(desk_cfg):
    return build_setup(desk_cfg)


@pytest.fixture(scope="session")
def paper_setup(paper_cfg):
    return build_setup(paper_cfg)
