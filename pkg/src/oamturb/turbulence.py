"""Von Karman phase screens and their statistics.

The refractive phase disturbance accumulated along a path of length z_path
with structure constant cn2 is summarized by the Fried parameter

    r0 = (0.423 * k^2 * cn2 * z_path)^(-3/5)

and the modified Von Karman phase spectrum

    S(kappa) = 0.023 * r0^(-5/3) * (kappa^2 + kappa0^2)^(-11/6)
               * exp(-kappa^2 / kappa_m^2)

with kappa0 = 2 pi / l_max (outer scale) and kappa_m = 5.92 / l_min
(inner scale), kappa in rad/m.  A screen is synthesized by coloring unit
complex Gaussian noise with the square-root spectrum and inverse
transforming (cf. Schmidt, Numerical Simulation of Optical Wave
Propagation, ch. 9):

    phi = Re( IDFT_unnormalized( C * sqrt(2 * S(kappa)) * dkappa ) )

The sqrt(2*S)*dkappa weight is fixed by requiring the discrete structure
function of the ensemble,

    D(r) = 2 * sum_kappa S(kappa) * (1 - cos(kappa . r)) * dkappa^2,

to be reproduced exactly in expectation; structure_function_est measures
it from screens and oracle_structure_function evaluates the sum directly,
so the calibration is checked rather than assumed.  The kappa = 0
coefficient (a global piston, optically inert) is dropped from the
synthesis to keep realizations numerically tame; no statistic above
depends on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import pi

import numpy as np

from .errors import InsufficientEnsemble, InvalidTurbulence, ShapeMismatch
from .optics import GridSpec, RealField
from .rng import complex_standard_normal

SCREEN_REAL = "real"
SCREEN_ESTIMATED = "estimated"


@dataclass(frozen=True)
class TurbulenceParams:
    """Path parameters and the scalars derived from them."""

    cn2: float
    l_min: float
    l_max: float
    z_path: float
    wavenumber: float
    kappa0: float
    kappa_m: float
    r0: float


def fried_parameter(wavenumber: float, cn2: float, z_path: float) -> float:
    """r0 = (0.423 k^2 cn2 z)^(-3/5), meters."""
    if cn2 <= 0.0 or z_path <= 0.0 or wavenumber <= 0.0:
        raise InvalidTurbulence(
            f"fried_parameter needs positive inputs, got k={wavenumber}, "
            f"cn2={cn2}, z={z_path}"
        )
    return float((0.423 * wavenumber**2 * cn2 * z_path) ** (-3.0 / 5.0))


def make_turbulence_params(
    cn2: float,
    l_min: float,
    l_max: float,
    z_path: float,
    wavenumber: float,
) -> TurbulenceParams:
    """Validated constructor; derives kappa0, kappa_m, r0."""
    if not (0.0 < l_min < l_max):
        raise InvalidTurbulence(
            f"scales must satisfy 0 < l_min < l_max, got {l_min}, {l_max}"
        )
    r0 = fried_parameter(wavenumber, cn2, z_path)
    return TurbulenceParams(
        cn2=float(cn2),
        l_min=float(l_min),
        l_max=float(l_max),
        z_path=float(z_path),
        wavenumber=float(wavenumber),
        kappa0=2.0 * pi / l_max,
        kappa_m=5.92 / l_min,
        r0=r0,
    )


def kappa_grid(grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Angular spatial-frequency meshes (KX, KY), rad/m, DC at index 0.

    Spacing is 2 pi / side; the largest magnitude on the grid is
    sqrt(2) * pi / dx at the Nyquist corner.
    """
    fx, fy = grid.freqs()
    return 2.0 * pi * fx, 2.0 * pi * fy


@dataclass(frozen=True)
class SpectrumField:
    """Phase spectrum sampled on the kappa grid of one GridSpec."""

    grid: GridSpec
    values: np.ndarray
    params: TurbulenceParams


def von_karman_spectrum(grid: GridSpec, params: TurbulenceParams) -> SpectrumField:
    """Modified Von Karman phase spectrum on the grid's kappa support.

    Strictly positive everywhere and finite at kappa = 0 thanks to the
    outer-scale term.
    """
    kx, ky = kappa_grid(grid)
    k_sq = kx**2 + ky**2
    values = (
        0.023
        * params.r0 ** (-5.0 / 3.0)
        * (k_sq + params.kappa0**2) ** (-11.0 / 6.0)
        * np.exp(-k_sq / params.kappa_m**2)
    )
    return SpectrumField(grid, values, params)


@dataclass(frozen=True)
class ScreenSeed:
    """Unit complex Gaussian noise plus the key that produced it."""

    grid: GridSpec
    values: np.ndarray
    rng_seed: int


@dataclass(frozen=True)
class PhaseScreen:
    """One turbulence realization in radians, tagged by its role in an
    experiment: the hidden channel truth or the corrector's estimate."""

    grid: GridSpec
    values: np.ndarray
    role: str = SCREEN_REAL


def draw_seed(rng_seed: int, grid: GridSpec) -> ScreenSeed:
    """Fresh CN(0,1) noise array from the counter-based generator."""
    return ScreenSeed(grid, complex_standard_normal(rng_seed, (grid.n, grid.n)), int(rng_seed))


def synthesis_weights(spectrum: SpectrumField) -> np.ndarray:
    """Fourier amplitudes sqrt(2 * S) * dkappa with the piston zeroed."""
    dk = 2.0 * pi / spectrum.grid.side
    w = np.sqrt(2.0 * spectrum.values) * dk
    w[0, 0] = 0.0
    return w


def synthesize_screen(
    seed: ScreenSeed,
    spectrum: SpectrumField,
    *,
    role: str = SCREEN_REAL,
) -> PhaseScreen:
    """Color the seed with the spectrum and inverse transform.

    Deterministic: the same (seed, spectrum) always yields the same
    screen bit for bit.
    """
    if seed.grid != spectrum.grid:
        raise ShapeMismatch(f"seed grid {seed.grid} != spectrum grid {spectrum.grid}")
    n = seed.grid.n
    coeffs = seed.values * synthesis_weights(spectrum)
    screen = np.real(np.fft.ifft2(coeffs)) * n * n
    return PhaseScreen(seed.grid, screen, role)


def screen_ensemble(
    base_seed: int,
    count: int,
    spectrum: SpectrumField,
) -> list[PhaseScreen]:
    """count independent screens, member i keyed by base_seed XOR i."""
    if count < 1:
        raise InsufficientEnsemble(f"ensemble needs count >= 1, got {count}")
    return [
        synthesize_screen(draw_seed(base_seed ^ i, spectrum.grid), spectrum)
        for i in range(count)
    ]


def _shift_multiple(grid: GridSpec, r: float) -> int:
    m = r / grid.dx
    mi = int(round(m))
    if mi < 1 or abs(m - mi) > 1e-9:
        raise ValueError(f"separation {r} is not a positive multiple of dx={grid.dx}")
    if r >= grid.side / 2.0:
        raise ValueError(f"separation {r} must stay below half the window")
    return mi


def structure_function_est(screens: list[PhaseScreen], r: float) -> float:
    """Ensemble-and-space average of (phi(x + r) - phi(x))^2.

    Differences are taken along both axes with periodic wrap, which is
    the natural pairing for FFT-synthesized screens, and averaged over
    every pixel of every screen.
    """
    if len(screens) < 2:
        raise InsufficientEnsemble(
            f"structure function estimate needs >= 2 screens, got {len(screens)}"
        )
    grid = screens[0].grid
    m = _shift_multiple(grid, r)
    total = 0.0
    for s in screens:
        if s.grid != grid:
            raise ShapeMismatch("ensemble mixes grids")
        v = s.values
        dx_dir = np.roll(v, -m, axis=1) - v
        dy_dir = np.roll(v, -m, axis=0) - v
        total += 0.5 * (np.mean(dx_dir**2) + np.mean(dy_dir**2))
    return float(total / len(screens))


def oracle_structure_function(spectrum: SpectrumField, r: float) -> float:
    """Direct evaluation of D(r) = 2 sum S(kappa)(1 - cos(kappa.r)) dk^2.

    Brute-force sum over the sampled spectrum for a separation r along
    the x axis (the grid spectrum is symmetric under axis swap, so the
    y direction gives the same value).  This is the independent check the
    synthesis calibration must reproduce.
    """
    grid = spectrum.grid
    _shift_multiple(grid, r)
    kx, _ = kappa_grid(grid)
    dk = 2.0 * pi / grid.side
    return float(2.0 * np.sum(spectrum.values * (1.0 - np.cos(kx * r))) * dk**2)
