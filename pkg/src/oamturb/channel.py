"""The simulated link: source, two Fresnel legs, and a thin screen.

One LinkSetup owns everything that is constant across runs on a given
geometry: the grid, the Gaussian source, the two propagation kernels, and
caches of per-mode masks and target patterns.  The optical train is

    source plane   u0 = G * exp(i theta)          (phase-only modulator)
    transmitter    u1 = P1 u0                     (z_slm_tx leg)
    after screen   u2 = u1 * exp(i phi)           (thin turbulence screen)
    receiver       u3 = P2 u2                     (z_tx_rx leg)

with P1, P2 transfer-function propagators by default.  The second leg can
be switched to the impulse-response kernel; the first leg stays TF because
the mask-update rule needs its exact inverse.
"""

from __future__ import annotations

import numpy as np

from . import fresnel
from .errors import ShapeMismatch
from .optics import (
    ComplexField,
    GridSpec,
    Image8,
    ModeMask,
    OpticalConfig,
    RealField,
    gaussian_beam,
    superposition_phase_mask,
    to_image8,
)
from .turbulence import (
    PhaseScreen,
    SpectrumField,
    TurbulenceParams,
    make_turbulence_params,
    von_karman_spectrum,
)

_SPECTRUM_CACHE_MAX = 128


class LinkSetup:
    """Geometry, kernels, and caches for one simulated link."""

    def __init__(
        self,
        grid: GridSpec,
        optics: OpticalConfig,
        l_min: float,
        l_max: float,
        *,
        rx_method: str = fresnel.TF,
    ):
        self.grid = grid
        self.optics = optics
        self.l_min = float(l_min)
        self.l_max = float(l_max)
        self.kern_tx = fresnel.tf_kernel(grid, optics.wavelength, optics.z_slm_tx)
        if rx_method == fresnel.TF:
            self.kern_rx = fresnel.tf_kernel(grid, optics.wavelength, optics.z_tx_rx)
        elif rx_method == fresnel.IR:
            self.kern_rx = fresnel.ir_kernel(grid, optics.wavelength, optics.z_tx_rx)
        else:
            raise ValueError(f"unknown receiver method {rx_method!r}")
        self.source = gaussian_beam(grid, optics)
        self._masks: dict[int, ModeMask] = {}
        self._tx_fields: dict[int, np.ndarray] = {}
        self._targets: dict[int, RealField] = {}
        self._spectra: dict[float, SpectrumField] = {}

    # cached pieces ----------------------------------------------------

    def ideal_mask(self, ell: int) -> ModeMask:
        if ell not in self._masks:
            self._masks[ell] = superposition_phase_mask(self.grid, ell)
        return self._masks[ell]

    def modulated_source(self, ell: int) -> np.ndarray:
        """G * exp(i theta_ell) at the modulator plane."""
        return self.source.values * np.exp(1j * self.ideal_mask(ell).theta)

    def tx_field(self, ell: int) -> np.ndarray:
        """The undistorted mode arriving at the transmitter plane."""
        if ell not in self._tx_fields:
            self._tx_fields[ell] = fresnel.propagate_values(
                self.modulated_source(ell), self.kern_tx.h_spec
            )
        return self._tx_fields[ell]

    def target_intensity(self, ell: int) -> RealField:
        """Receiver intensity of the undistorted mode."""
        if ell not in self._targets:
            u3 = fresnel.propagate_values(self.tx_field(ell), self.kern_rx.h_spec)
            self._targets[ell] = RealField(self.grid, np.abs(u3) ** 2)
        return self._targets[ell]

    def turbulence_params(self, cn2: float) -> TurbulenceParams:
        return make_turbulence_params(
            cn2,
            self.l_min,
            self.l_max,
            self.optics.z_tx_rx,
            self.optics.wavenumber,
        )

    def spectrum(self, cn2: float) -> SpectrumField:
        cached = self._spectra.get(cn2)
        if cached is None:
            cached = von_karman_spectrum(self.grid, self.turbulence_params(cn2))
            if len(self._spectra) >= _SPECTRUM_CACHE_MAX:
                self._spectra.pop(next(iter(self._spectra)))
            self._spectra[cn2] = cached
        return cached

    # forward pipelines ------------------------------------------------

    def received_values(
        self, mask_theta: np.ndarray, screen: PhaseScreen | None
    ) -> np.ndarray:
        """Complex receiver field for an arbitrary modulator phase."""
        if screen is not None and screen.grid != self.grid:
            raise ShapeMismatch("screen grid does not match link grid")
        u1 = fresnel.propagate_values(
            self.source.values * np.exp(1j * mask_theta), self.kern_tx.h_spec
        )
        if screen is not None:
            u1 = u1 * np.exp(1j * screen.values)
        return fresnel.propagate_values(u1, self.kern_rx.h_spec)

    def received_intensity(
        self, mask_theta: np.ndarray, screen: PhaseScreen | None
    ) -> RealField:
        return RealField(self.grid, np.abs(self.received_values(mask_theta, screen)) ** 2)

    def received_image(
        self, mask_theta: np.ndarray, screen: PhaseScreen | None
    ) -> Image8:
        return to_image8(self.received_intensity(mask_theta, screen))


def propagated_source(setup: LinkSetup, ell: int) -> ComplexField:
    """Convenience wrapper: the undistorted transmitter-plane field."""
    return ComplexField(setup.grid, setup.tx_field(ell))


def undistorted_image(setup: LinkSetup, ell: int) -> Image8:
    return to_image8(setup.target_intensity(ell))


__all__ = [
    "LinkSetup",
    "propagated_source",
    "undistorted_image",
]
