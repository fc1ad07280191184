"""Phase pre-compensation by gradient descent on the screen seed.

The corrector never sees the channel's screen.  It owns an estimate built
from a CNN-predicted cn2 and a noise seed, refreshes the modulator phase
from that estimate with the update rule

    theta = angle( P1^{-1}( P1(G e^{i theta_ideal}) * e^{-i phi_est} ) )

(back-propagating the screen-conjugated transmitter field to the
modulator plane), and descends the received-pattern error by adjusting
the 2 n^2 real components of the seed.  The smooth objective is

    J = (1/(1000 n^2)) * sum( (255 I / peak_t - 255 T / peak_t)^2 )

with I the received intensity, T the undistorted target intensity, and
peak_t the target's peak, i.e. the reported image error with the 8-bit
quantization removed; quantized mse_index values are what the traces and
summaries report.

The gradient is computed by the adjoint method.  Every stage is either
complex-linear (DFTs, kernel products: adjoint = conjugate kernel, so
back-propagation reuses the forward propagator), a pointwise smooth map,
or the angle extraction, whose derivative (-Im z, Re z)/|z|^2 is clamped
at |z|^2 = eps_angle^2.  A finite-difference oracle in the test suite
checks the whole chain end to end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fresnel
from .channel import LinkSetup
from .cnn import CnnModel, predict
from .errors import ShapeMismatch
from .optics import Image8, RealField, mse_index, to_image8
from .rng import derive_seed, uniform
from .turbulence import (
    SCREEN_ESTIMATED,
    PhaseScreen,
    ScreenSeed,
    SpectrumField,
    draw_seed,
    synthesis_weights,
    synthesize_screen,
)


@dataclass(frozen=True)
class ChannelInstance:
    """One realization of the link's turbulence.

    hidden_cn2 is the generating strength; the name is a reminder that the
    corrector must never read it, only the receiver images.
    """

    phi_real: PhaseScreen
    hidden_cn2: float
    rng_seed: int


def make_channel(setup: LinkSetup, cn2: float, rng_seed: int) -> ChannelInstance:
    screen = synthesize_screen(draw_seed(rng_seed, setup.grid), setup.spectrum(cn2))
    return ChannelInstance(screen, float(cn2), int(rng_seed))


@dataclass(frozen=True)
class SlmState:
    """Modulator phase currently displayed, with its provenance."""

    theta: np.ndarray
    ell: int
    iteration: int


@dataclass(frozen=True)
class GdoConfig:
    eta: float = 275.0
    max_iter: int = 700
    record_stride: int = 10
    eps_angle: float = 1e-12
    rng_seed: int = 0


def target_pattern(setup: LinkSetup, ell: int) -> tuple[Image8, RealField]:
    """Undistorted receiver image and its continuous intensity."""
    t = setup.target_intensity(ell)
    return to_image8(t), t


def distorted_pattern(
    setup: LinkSetup, ell: int, ch: ChannelInstance
) -> tuple[Image8, float]:
    """Receiver image through the raw channel and its error index."""
    img = setup.received_image(setup.ideal_mask(ell).theta, ch.phi_real)
    target_img, _ = target_pattern(setup, ell)
    return img, mse_index(target_img, img)


def estimate_screen(
    setup: LinkSetup,
    model: CnnModel,
    distorted: Image8,
    rng_seed: int,
) -> tuple[PhaseScreen, float, ScreenSeed]:
    """CNN-guided screen estimate: predicted cn2 plus fresh seed noise."""
    _, cn2 = predict(model, distorted)
    seed = draw_seed(rng_seed, setup.grid)
    screen = synthesize_screen(seed, setup.spectrum(cn2), role=SCREEN_ESTIMATED)
    return screen, cn2, seed


def update_mask(
    setup: LinkSetup, phi_est: np.ndarray | None, ell: int, iteration: int
) -> SlmState:
    """One mask refresh from the current screen estimate.

    With phi_est = 0 (or None) the rule collapses to the ideal mask, up to
    roundoff confined to pixels where the source amplitude underflows.
    """
    b = setup.tx_field(ell)
    if phi_est is None:
        back = fresnel.propagate_values(b, np.conj(setup.kern_tx.h_spec))
    else:
        if phi_est.shape != b.shape:
            raise ShapeMismatch("screen estimate shape does not match grid")
        back = fresnel.propagate_values(
            b * np.exp(-1j * phi_est), np.conj(setup.kern_tx.h_spec)
        )
    return SlmState(np.angle(back), int(ell), int(iteration))


def observe(
    setup: LinkSetup, slm: SlmState, ch: ChannelInstance
) -> tuple[Image8, float]:
    """Receiver image with the corrected mask through the real channel."""
    img = setup.received_image(slm.theta, ch.phi_real)
    target_img, _ = target_pattern(setup, slm.ell)
    return img, mse_index(target_img, img)


# adjoint gradient ------------------------------------------------------


@dataclass(frozen=True)
class _Forward:
    """Intermediates of one objective evaluation, kept for the backward pass."""

    value: float
    received: np.ndarray  # continuous receiver intensity
    phi: np.ndarray
    bd: np.ndarray
    e: np.ndarray
    u0: np.ndarray
    u2: np.ndarray
    u3: np.ndarray
    y_minus_t: np.ndarray
    degenerate: bool


def _forward_objective(
    setup: LinkSetup,
    seed_values: np.ndarray,
    weights: np.ndarray,
    ell: int,
    phi_real: np.ndarray,
    target: np.ndarray,
    peak_t: float,
    eps_angle: float,
) -> _Forward:
    n = setup.grid.n
    g = setup.source.values
    h1 = setup.kern_tx.h_spec
    h2 = setup.kern_rx.h_spec
    phi = np.real(np.fft.ifft2(seed_values * weights)) * n * n
    bd = setup.tx_field(ell) * np.exp(-1j * phi)
    e = fresnel.propagate_values(bd, np.conj(h1))
    mag = np.abs(e)
    degenerate = bool(np.any(mag < eps_angle))
    u0 = g * np.exp(1j * np.angle(e))
    u1 = fresnel.propagate_values(u0, h1)
    u2 = u1 * np.exp(1j * phi_real)
    u3 = fresnel.propagate_values(u2, h2)
    received = np.abs(u3) ** 2
    scale = 255.0 / peak_t
    y_minus_t = scale * (received - target)
    value = float(np.sum(y_minus_t**2) / (1000.0 * n * n))
    return _Forward(value, received, phi, bd, e, u0, u2, u3, y_minus_t, degenerate)


def objective_value(
    setup: LinkSetup,
    seed: ScreenSeed,
    cn2_est: float,
    ell: int,
    ch: ChannelInstance,
    *,
    eps_angle: float = 1e-12,
) -> float:
    """Smooth received-pattern error for a seed (no gradient)."""
    spectrum = setup.spectrum(cn2_est)
    target = setup.target_intensity(ell).values
    return _forward_objective(
        setup,
        seed.values,
        synthesis_weights(spectrum),
        ell,
        ch.phi_real.values,
        target,
        float(np.max(target)),
        eps_angle,
    ).value


def objective_grad(
    setup: LinkSetup,
    seed: ScreenSeed,
    cn2_est: float,
    ell: int,
    ch: ChannelInstance,
    *,
    eps_angle: float = 1e-12,
) -> tuple[np.ndarray, float, RealField, bool]:
    """Adjoint gradient of the smooth objective with respect to the seed.

    Returns (gradient, objective value, continuous receiver intensity,
    degenerate-angle flag).  The gradient is packed as a complex array;
    its real and imaginary parts are the derivatives with respect to the
    seed's real and imaginary components.
    """
    spectrum = setup.spectrum(cn2_est)
    weights = synthesis_weights(spectrum)
    target = setup.target_intensity(ell).values
    peak_t = float(np.max(target))
    f = _forward_objective(
        setup, seed.values, weights, ell, ch.phi_real.values,
        target, peak_t, eps_angle,
    )
    n = setup.grid.n
    h1 = setup.kern_tx.h_spec
    h2 = setup.kern_rx.h_spec

    g_i = (2.0 * 255.0 / (1000.0 * n * n * peak_t)) * f.y_minus_t
    g_u3 = 2.0 * g_i * f.u3
    g_u2 = fresnel.propagate_values(g_u3, np.conj(h2))
    g_u1 = g_u2 * np.exp(-1j * ch.phi_real.values)
    g_u0 = fresnel.propagate_values(g_u1, np.conj(h1))
    g_theta = -np.imag(np.conj(g_u0) * f.u0)
    denom = np.maximum(np.abs(f.e) ** 2, eps_angle**2)
    g_e = g_theta * (1j * f.e) / denom
    g_bd = fresnel.propagate_values(g_e, h1)
    g_phi = np.imag(np.conj(g_bd) * f.bd)
    # phi = Re(n^2 ifft2(V)) is the plain unnormalized mode sum, whose
    # adjoint is the unnormalized forward DFT with no extra scale
    grad = np.fft.fft2(g_phi) * weights
    return grad, f.value, RealField(setup.grid, f.received), f.degenerate


# the optimization loop -------------------------------------------------


@dataclass(frozen=True)
class CorrectionResult:
    uncorrected_mse: float
    best_mse: float
    best_iteration: int
    final_mse: float
    mse_trace: list[tuple[int, float]]
    cn2_predicted: float
    cn2_true: float
    best_theta: np.ndarray
    target_image: Image8
    distorted_image: Image8
    corrected_image: Image8
    degenerate_count: int


def gdo_run(
    setup: LinkSetup,
    ch: ChannelInstance,
    model: CnnModel | None,
    cfg: GdoConfig,
    ell: int,
    *,
    cn2_range: tuple[float, float] | None = None,
) -> CorrectionResult:
    """Full correction run on one channel.

    The CNN is consulted once on the distorted image to pick the spectrum
    strength; with model=None the strength is drawn uniformly from
    cn2_range instead (the no-classifier baseline).  Then max_iter seed
    updates run from the zero seed, the receiver image error is recorded
    every record_stride iterations (iteration 0, the uncompensated mask,
    included), and the best recorded mask wins.
    """
    target_img, _ = target_pattern(setup, ell)
    distorted_img, uncorrected = distorted_pattern(setup, ell, ch)

    if model is not None:
        _, cn2_est = predict(model, distorted_img)
    else:
        if cn2_range is None:
            raise ValueError("model-free correction needs an explicit cn2_range")
        cn2_est = uniform(derive_seed(cfg.rng_seed, "cn2guess"), *cn2_range)

    weights = synthesis_weights(setup.spectrum(cn2_est))
    n = setup.grid.n
    # warm start at the zero seed: its mask is the uncompensated ideal
    # pattern, so the first recorded error equals the raw channel's and
    # the best recorded mask can only improve on no correction.  A random
    # start is a full-strength perturbation that a weak channel may never
    # recover from within the iteration budget.
    seed_values = np.zeros((n, n), dtype=np.complex128)

    trace: list[tuple[int, float]] = []
    best_mse = np.inf
    best_iteration = 0
    best_theta = setup.ideal_mask(ell).theta
    degenerate_count = 0

    for j in range(cfg.max_iter + 1):
        grad, _, received, deg = objective_grad(
            setup,
            ScreenSeed(setup.grid, seed_values, cfg.rng_seed),
            cn2_est, ell, ch, eps_angle=cfg.eps_angle,
        )
        if deg:
            degenerate_count += 1
        if j % cfg.record_stride == 0:
            m = mse_index(target_img, to_image8(received))
            trace.append((j, m))
            if m < best_mse:
                best_mse = m
                best_iteration = j
                phi = np.real(np.fft.ifft2(seed_values * weights)) * n * n
                best_theta = update_mask(setup, phi, ell, j).theta
        if j == cfg.max_iter:
            break
        seed_values -= cfg.eta * grad

    corrected_img, best_check = observe(
        setup, SlmState(best_theta, ell, best_iteration), ch
    )
    return CorrectionResult(
        uncorrected_mse=uncorrected,
        best_mse=best_mse,
        best_iteration=best_iteration,
        final_mse=trace[-1][1],
        mse_trace=trace,
        cn2_predicted=float(cn2_est),
        cn2_true=ch.hidden_cn2,
        best_theta=best_theta,
        target_image=target_img,
        distorted_image=distorted_img,
        corrected_image=corrected_img,
        degenerate_count=degenerate_count,
    )
