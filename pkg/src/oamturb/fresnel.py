"""Fresnel propagation by transfer-function and impulse-response kernels.

Both propagators are single-FFT-pair convolutions

    u_out = IDFT( DFT(u_in) * H )

with H built directly in DFT order (DC at index 0), so no fftshift appears
between source and observation planes.  The transfer-function (TF) kernel
samples the analytic Fresnel transfer function

    H(fx, fy) = exp(i k z) * exp(-i pi lambda z (fx^2 + fy^2))

and is unit modulus, hence exactly unitary and exactly invertible by
conjugation.  The impulse-response (IR) kernel is the DFT of the sampled
Fresnel kernel

    h(x, y) = exp(i k z) / (i lambda z) * exp(i k (x^2 + y^2) / (2 z))

scaled by dx^2; its modulus is generally not 1 and it has no exact
inverse.  Which of the two is better sampled depends on the geometry: the
TF route when dx >= lambda z / L, the IR route otherwise (Voelz,
Computational Fourier Optics, ch. 5).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import pi

import numpy as np

from .errors import NonInvertibleKernel, ShapeMismatch, ZeroDistance
from .optics import ComplexField, GridSpec

TF = "tf"
IR = "ir"


@dataclass(frozen=True)
class PropagatorKernel:
    """Frequency-domain kernel for one propagation leg."""

    grid: GridSpec
    method: str
    z: float
    wavelength: float
    h_spec: np.ndarray


def tf_kernel(grid: GridSpec, wavelength: float, z: float) -> PropagatorKernel:
    """Transfer-function kernel for distance z >= 0 (z = 0 is identity)."""
    if z < 0.0:
        raise ZeroDistance(f"propagation distance must be >= 0, got {z}")
    k = 2.0 * pi / wavelength
    fx, fy = grid.freqs()
    h = np.exp(1j * (k * z - pi * wavelength * z * (fx**2 + fy**2)))
    return PropagatorKernel(grid, TF, float(z), float(wavelength), h)


def ir_impulse_response(
    grid: GridSpec, wavelength: float, z: float
) -> np.ndarray:
    """Centered samples of the Fresnel impulse response h(x, y).

    Center-symmetric (h(x, y) = h(-x, -y)) and |h(0, 0)| = 1/(lambda z).
    """
    if z <= 0.0:
        raise ZeroDistance(f"impulse response needs z > 0, got {z}")
    k = 2.0 * pi / wavelength
    X, Y = grid.coords()
    return (
        np.exp(1j * k * z)
        / (1j * wavelength * z)
        * np.exp(1j * k * (X**2 + Y**2) / (2.0 * z))
    )


def ir_kernel(grid: GridSpec, wavelength: float, z: float) -> PropagatorKernel:
    """Impulse-response kernel: DFT of the sampled h times dx^2.

    The centered h is rolled to DC-at-0 layout before the DFT so the
    kernel composes with the shift-free propagate below.
    """
    h = ir_impulse_response(grid, wavelength, z)
    h_spec = np.fft.fft2(np.fft.ifftshift(h)) * grid.dx**2
    return PropagatorKernel(grid, IR, float(z), float(wavelength), h_spec)


def propagate(u: ComplexField, kern: PropagatorKernel) -> ComplexField:
    """Apply one propagation leg."""
    if u.grid != kern.grid:
        raise ShapeMismatch(f"field grid {u.grid} != kernel grid {kern.grid}")
    return ComplexField(u.grid, propagate_values(u.values, kern.h_spec))


def inverse_propagate(u: ComplexField, kern: PropagatorKernel) -> ComplexField:
    """Undo a TF leg exactly by applying the conjugate kernel."""
    if kern.method != TF:
        raise NonInvertibleKernel("only transfer-function kernels invert exactly")
    if u.grid != kern.grid:
        raise ShapeMismatch(f"field grid {u.grid} != kernel grid {kern.grid}")
    return ComplexField(u.grid, propagate_values(u.values, np.conj(kern.h_spec)))


def propagate_values(values: np.ndarray, h_spec: np.ndarray) -> np.ndarray:
    """Raw-array propagation core shared by the hot loops."""
    return np.fft.ifft2(np.fft.fft2(values) * h_spec)


def preferred_method(grid: GridSpec, wavelength: float, z: float) -> str:
    """Sampling-based choice between the two kernels.

    Returns "tf" when dx >= lambda z / L (transfer function well sampled)
    and "ir" otherwise; the tie goes to "tf".
    """
    if z <= 0.0:
        raise ZeroDistance(f"method selection needs z > 0, got {z}")
    return TF if grid.dx >= wavelength * z / grid.side else IR
