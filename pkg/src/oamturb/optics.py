"""Grids, optical fields, petal-mode phase masks, and image metrics.

Conventions fixed here and relied on everywhere else:

* A simulation window is an n x n square of pitch dx, n even, with spatial
  coordinates x_i = (i - n/2) * dx.  The geometric center (0, 0) falls on
  the sample at index n/2, so a beam built on the grid has its peak on an
  actual pixel.
* Arrays are indexed [row, col] = [y, x]; meshes returned by
  GridSpec.coords follow that layout.
* Spatial frequencies live in DFT order (DC at index 0, fftfreq layout).
  No fftshift appears in any propagation or synthesis path.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import pi

import numpy as np

from .errors import DegenerateField, InvalidGrid, ShapeMismatch


@dataclass(frozen=True)
class GridSpec:
    """Square sampling grid: n samples per side at pitch dx (meters)."""

    n: int
    dx: float

    @property
    def side(self) -> float:
        """Physical side length n * dx in meters."""
        return self.n * self.dx

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Centered coordinate meshes (X, Y); X varies along columns."""
        x = (np.arange(self.n) - self.n // 2) * self.dx
        return np.meshgrid(x, x)

    def freqs(self) -> tuple[np.ndarray, np.ndarray]:
        """Spatial-frequency meshes (FX, FY) in cycles/m, DC at index 0."""
        f = np.fft.fftfreq(self.n, self.dx)
        return np.meshgrid(f, f)

    def azimuth(self) -> np.ndarray:
        X, Y = self.coords()
        return np.arctan2(Y, X)


def make_grid(n: int, dx: float) -> GridSpec:
    """Validated grid constructor.

    n must be even (the center sample and the split-spectrum layouts both
    assume it) and at least 8; dx must be positive.
    """
    if n < 8 or n % 2 != 0:
        raise InvalidGrid(f"grid side must be even and >= 8, got n={n}")
    if not (dx > 0.0) or not np.isfinite(dx):
        raise InvalidGrid(f"grid pitch must be positive and finite, got dx={dx}")
    return GridSpec(int(n), float(dx))


@dataclass(frozen=True)
class OpticalConfig:
    """Link constants: wavelength and beam waist in meters, leg lengths
    source->transmitter (z_slm_tx) and transmitter->receiver (z_tx_rx)."""

    wavelength: float
    waist: float
    z_slm_tx: float
    z_tx_rx: float

    @property
    def wavenumber(self) -> float:
        return 2.0 * pi / self.wavelength

    def __post_init__(self) -> None:
        for name in ("wavelength", "waist", "z_slm_tx", "z_tx_rx"):
            v = getattr(self, name)
            if not (v > 0.0) or not np.isfinite(v):
                raise ValueError(f"{name} must be positive and finite, got {v}")


def _check_same_grid(a: GridSpec, b: GridSpec) -> None:
    if a != b:
        raise ShapeMismatch(f"grids differ: {a} vs {b}")


def _check_values(grid: GridSpec, values: np.ndarray) -> None:
    if values.shape != (grid.n, grid.n):
        raise ShapeMismatch(
            f"values shape {values.shape} does not match grid n={grid.n}"
        )
    if not np.all(np.isfinite(values)):
        raise DegenerateField("field contains non-finite values")


@dataclass(frozen=True)
class ComplexField:
    """Sampled complex optical field on a grid."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "values", np.asarray(self.values, dtype=np.complex128)
        )
        _check_values(self.grid, self.values)

    def power(self) -> float:
        """Total power sum(|u|^2) * dx^2."""
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.dx**2)


@dataclass(frozen=True)
class RealField:
    """Sampled real-valued field (intensity, phase, spectrum slice)."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        _check_values(self.grid, self.values)


@dataclass(frozen=True)
class ModeMask:
    """Phase-only mask with values in (-pi, pi], plus the mode order it
    encodes (0 for a flat mask)."""

    grid: GridSpec
    theta: np.ndarray
    ell: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=np.float64))
        _check_values(self.grid, self.theta)
        if np.any(self.theta > pi) or np.any(self.theta <= -pi):
            raise ValueError("mask phase must lie in (-pi, pi]")


@dataclass(frozen=True)
class Image8:
    """8-bit grayscale image, the unit of comparison at the receiver."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels)
        if px.dtype != np.uint8 or px.ndim != 2:
            raise ValueError("Image8 requires a 2-d uint8 array")
        object.__setattr__(self, "pixels", px)

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape  # type: ignore[return-value]


def gaussian_beam(grid: GridSpec, optics: OpticalConfig) -> ComplexField:
    """Collimated Gaussian source G = exp(-(x^2 + y^2) / w0^2).

    Peak amplitude 1 on the center sample; w0 is the 1/e^2 intensity
    radius.  Total power integrates to pi * w0^2 / 2 when the window is
    large enough to contain the tails.
    """
    X, Y = grid.coords()
    g = np.exp(-(X**2 + Y**2) / optics.waist**2)
    return ComplexField(grid, g.astype(np.complex128))


def _mask_from_azimuth(phi: np.ndarray, ell: int) -> np.ndarray:
    # arg(e^{i l phi} + e^{-i l phi}) = arg(2 cos(l phi)): 0 on the
    # non-negative half, pi on the negative half
    return np.where(np.cos(ell * phi) >= 0.0, 0.0, pi)


def superposition_phase_mask(grid: GridSpec, ell: int) -> ModeMask:
    """Binary phase mask of the +ell/-ell orbital mode superposition.

    The coherent sum e^{i l phi} + e^{-i l phi} = 2 cos(l phi) is real, so
    its argument alternates between 0 and pi over 2*ell azimuthal sectors.
    A beam carrying this mask forms the familiar petal pattern with 2*ell
    intensity lobes.  ell = 0 gives a flat (all-zero) mask.
    """
    if ell < 0:
        raise ValueError(f"mode order must be >= 0, got {ell}")
    theta = _mask_from_azimuth(grid.azimuth(), ell)
    return ModeMask(grid, theta, int(ell))


def intensity(u: ComplexField) -> RealField:
    """|u|^2 sample by sample."""
    return RealField(u.grid, np.abs(u.values) ** 2)


def to_image8(i: RealField) -> Image8:
    """Normalize an intensity to its own peak and quantize to 8 bits.

    pixels = round(255 * i / max(i)) with halves rounding up, so the peak
    always maps to 255.  All-zero or negative-peak fields are rejected.
    """
    peak = float(np.max(i.values))
    if not (peak > 0.0):
        raise DegenerateField("cannot quantize a field with no positive values")
    scaled = 255.0 * i.values / peak
    # np.round would round half to even; the contract is half away from zero
    return Image8(np.floor(scaled + 0.5).astype(np.uint8))


def mse_index(a: Image8, b: Image8) -> float:
    """Mean squared pixel difference scaled by 1/1000.

    (1/(1000 * npix)) * sum((a - b)^2) over 8-bit pixel values, which puts
    typical received-pattern errors in the O(0.01..2) range.
    """
    if a.shape != b.shape:
        raise ShapeMismatch(f"image shapes differ: {a.shape} vs {b.shape}")
    d = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    return float(np.sum(d * d) / (1000.0 * d.size))


def _ring_samples(i: RealField, radius: float, count: int) -> np.ndarray:
    """Bilinear samples of a field on a centered circle."""
    n, dx = i.grid.n, i.grid.dx
    ang = 2.0 * pi * np.arange(count) / count
    col = radius * np.cos(ang) / dx + n // 2
    row = radius * np.sin(ang) / dx + n // 2
    r0 = np.clip(np.floor(row).astype(int), 0, n - 2)
    c0 = np.clip(np.floor(col).astype(int), 0, n - 2)
    fr = np.clip(row - r0, 0.0, 1.0)
    fc = np.clip(col - c0, 0.0, 1.0)
    v = i.values
    return (
        v[r0, c0] * (1 - fr) * (1 - fc)
        + v[r0 + 1, c0] * fr * (1 - fc)
        + v[r0, c0 + 1] * (1 - fr) * fc
        + v[r0 + 1, c0 + 1] * fr * fc
    )


def petal_count(i: RealField, *, threshold: float = 0.2, samples: int = 720) -> int:
    """Count intensity lobes around the brightest ring of a pattern.

    The ring is the radius maximizing the azimuthally averaged intensity
    (radial bins of width dx).  The intensity is sampled around that ring
    and the dominant angular harmonic is located by FFT; its index is the
    petal count.  Patterns with no harmonic rising above ``threshold``
    times the ring mean (a plain Gaussian, a fully scrambled pattern)
    count as 0.
    """
    if float(np.max(i.values)) <= 0.0:
        raise DegenerateField("petal count of a non-positive pattern")
    X, Y = i.grid.coords()
    r = np.hypot(X, Y)
    bins = np.round(r / i.grid.dx).astype(int).ravel()
    sums = np.bincount(bins, weights=i.values.ravel())
    counts = np.bincount(bins)
    # restrict to radii fully inside the window
    keep = min(len(sums), i.grid.n // 2)
    profile = sums[:keep] / counts[:keep]
    ring_radius = int(np.argmax(profile)) * i.grid.dx

    s = _ring_samples(i, ring_radius, samples)
    mean = float(np.mean(s))
    if mean <= 0.0:
        return 0
    spectrum = np.fft.rfft(s)
    amps = 2.0 * np.abs(spectrum[1:]) / samples
    m = int(np.argmax(amps)) + 1
    return m if amps[m - 1] > threshold * mean else 0
