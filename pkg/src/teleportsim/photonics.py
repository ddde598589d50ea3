"""Truncated-Fock photonic toolbox.

Two Fock modes carry the two orthogonal polarizations of one spatial pulse.
This module provides weak coherent pulses, beam splitters and phase shifts,
loss channels, the linear-polarization <-> circular-polarization basis change,
and click-detector POVMs with efficiency and dark counts.

Beam-splitter phase convention (fixed package-wide): real transmittance,
imaginary reflection, i.e. a -> sqrt(T) a + i sqrt(1-T) b.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import tolerances as tol
from .core import (
    DensityState,
    HilbertLayout,
    LinearOperator,
    QuantumStateError,
    apply_kraus,
    apply_unitary,
    embed_operator,
)

DEFAULT_FOCK_CUTOFF = 3


def poisson_weights(mean: float, cutoff: int) -> np.ndarray:
    """Photon-number distribution exp(-n) n^k / k! for k = 0..cutoff."""
    k = np.arange(cutoff + 1)
    log_w = -mean + k * np.log(mean) - np.array([math.lgamma(i + 1) for i in k]) \
        if mean > 0 else np.where(k == 0, 0.0, -np.inf)
    return np.exp(log_w)


def required_cutoff(mean_photon_number: float, minimum: int = 2) -> int:
    """Smallest cutoff keeping the Poisson tail below the truncation tolerance."""
    if mean_photon_number < 0:
        raise QuantumStateError("mean photon number must be >= 0")
    cutoff = minimum
    while 1.0 - poisson_weights(mean_photon_number, cutoff).sum() >= tol.TRUNCATION_TOL:
        cutoff += 1
        if cutoff > 64:
            raise QuantumStateError(
                f"no practical cutoff for mean photon number {mean_photon_number}")
    return cutoff


@dataclass(frozen=True)
class PulseConfig:
    """One weak pulse: mean photon number, polarization, truncation, envelope.

    ``single_photon`` switches the source to a one-photon Fock state, the
    idealized limit used for rate accounting and the exactness checks.
    """

    mean_photon_number: float = 0.07
    polarization: str = "A"
    fock_cutoff: int = DEFAULT_FOCK_CUTOFF
    envelope_fwhm_us: float = 1.0   # metadata; the gate is pulse-shape robust
    single_photon: bool = False

    def __post_init__(self):
        if self.mean_photon_number < 0:
            raise QuantumStateError("mean photon number must be >= 0")
        if self.polarization not in ("A", "D", "R", "L"):
            raise QuantumStateError(f"unknown polarization {self.polarization!r}")
        if self.fock_cutoff < 2:
            raise QuantumStateError("fock cutoff must be at least 2")
        if not self.single_photon:
            needed = required_cutoff(self.mean_photon_number)
            if self.fock_cutoff < needed:
                raise QuantumStateError(
                    f"fock cutoff {self.fock_cutoff} too small for mean photon "
                    f"number {self.mean_photon_number}; need >= {needed}")


@dataclass(frozen=True)
class PolarizationModePair:
    """Two same-cutoff Fock rails carrying one pulse's two polarizations.

    In the 'AD' basis the first rail holds antidiagonal (A) and the second
    diagonal (D) light; after a basis change the same rails hold the circular
    components (first = coupled circular, second = orthogonal).
    """

    first: str = "ph1"
    second: str = "ph2"
    cutoff: int = DEFAULT_FOCK_CUTOFF
    basis: str = "AD"

    def __post_init__(self):
        if self.basis not in ("AD", "RL"):
            raise QuantumStateError(f"unknown basis tag {self.basis!r}")
        if self.cutoff < 2:
            raise QuantumStateError("fock cutoff must be at least 2")

    @property
    def labels(self) -> tuple[str, str]:
        return (self.first, self.second)

    @property
    def dim(self) -> int:
        return self.cutoff + 1

    def layout(self) -> HilbertLayout:
        return HilbertLayout(((self.first, self.dim), (self.second, self.dim)))

    def retagged(self, basis: str) -> "PolarizationModePair":
        return PolarizationModePair(self.first, self.second, self.cutoff, basis)


@dataclass(frozen=True)
class DetectorParams:
    """Click detector: quantum efficiency, dark-count rate, gate window."""

    efficiency: float = 0.9
    dark_count_rate_hz: float = 9.0
    gate_window_us: float = 3.0

    def __post_init__(self):
        if not (0.0 <= self.efficiency <= 1.0):
            raise QuantumStateError("detector efficiency outside [0, 1]")
        if self.dark_count_rate_hz < 0 or self.gate_window_us < 0:
            raise QuantumStateError("dark count rate and gate window must be >= 0")

    @property
    def dark_click_probability(self) -> float:
        return 1.0 - math.exp(-self.dark_count_rate_hz * self.gate_window_us * 1e-6)


@dataclass(frozen=True)
class ClickOutcome:
    clicked_a: bool
    clicked_d: bool


def annihilation(dim: int) -> np.ndarray:
    a = np.zeros((dim, dim), dtype=complex)
    for n in range(1, dim):
        a[n - 1, n] = math.sqrt(n)
    return a


def coherent_vector(alpha: complex, cutoff: int) -> np.ndarray:
    """Truncated coherent-state amplitudes, renormalized after truncation."""
    k = np.arange(cutoff + 1)
    amps = np.array([alpha ** n / math.sqrt(math.factorial(n)) for n in k],
                    dtype=complex) * math.exp(-abs(alpha) ** 2 / 2.0)
    return amps / np.linalg.norm(amps)


def coherent_pulse_state(config: PulseConfig,
                         pair: PolarizationModePair | None = None) -> DensityState:
    """Pure pulse state on a two-rail pair: the configured polarization carries
    a coherent state of amplitude sqrt(<n>) (or one photon in single-photon
    mode), the orthogonal rail is vacuum."""
    if pair is None:
        basis = "AD" if config.polarization in ("A", "D") else "RL"
        pair = PolarizationModePair(cutoff=config.fock_cutoff, basis=basis)
    if config.fock_cutoff != pair.cutoff:
        raise QuantumStateError("pulse and mode-pair cutoffs differ")
    expected_basis = "AD" if config.polarization in ("A", "D") else "RL"
    if pair.basis != expected_basis:
        raise QuantumStateError(
            f"polarization {config.polarization} needs a pair in the "
            f"{expected_basis} basis")
    dim = pair.dim
    if config.single_photon:
        occupied = np.zeros(dim, dtype=complex)
        occupied[1] = 1.0
    else:
        occupied = coherent_vector(math.sqrt(config.mean_photon_number), pair.cutoff)
    vacuum = np.zeros(dim, dtype=complex)
    vacuum[0] = 1.0
    if config.polarization in ("A", "R"):
        vec = np.kron(occupied, vacuum)
    else:
        vec = np.kron(vacuum, occupied)
    return DensityState.from_vector(pair.layout(), vec)


def beam_splitter_unitary(dim: int, transmittance: float) -> np.ndarray:
    """Two-mode beam splitter exp(i theta (a^dag b + a b^dag)), theta from
    cos(theta) = sqrt(T).  Exactly unitary on the truncated space and exact on
    every total-photon-number block that fits below the cutoff."""
    if not (0.0 <= transmittance <= 1.0):
        raise QuantumStateError("transmittance outside [0, 1]")
    theta = math.acos(math.sqrt(transmittance))
    a = annihilation(dim)
    ident = np.eye(dim)
    ad_b = np.kron(a.conj().T, ident) @ np.kron(ident, a)
    gen = 1j * theta * (ad_b + ad_b.conj().T)
    return expm(gen)


def beam_splitter(state: DensityState, mode_a: str, mode_b: str,
                  transmittance: float) -> DensityState:
    da, db = state.layout.dim_of(mode_a), state.layout.dim_of(mode_b)
    if da != db:
        raise QuantumStateError("beam splitter modes must share one cutoff")
    u = beam_splitter_unitary(da, transmittance)
    pair_layout = HilbertLayout(((mode_a, da), (mode_b, db)))
    op = LinearOperator(pair_layout, u, unitary=True)
    return apply_unitary(state, embed_operator(op, [mode_a, mode_b], state.layout))


def phase_shift(state: DensityState, mode: str, phi: float) -> DensityState:
    """exp(i phi n_hat) on one mode."""
    dim = state.layout.dim_of(mode)
    u = np.diag(np.exp(1j * phi * np.arange(dim)))
    op = LinearOperator(HilbertLayout(((mode, dim),)), u, unitary=True)
    return apply_unitary(state, embed_operator(op, [mode], state.layout))


def attenuation_kraus(amplitude: complex, dim: int) -> list[np.ndarray]:
    """Kraus family of a beam splitter against a vacuum ancilla, traced out.

    K_k |n> = sqrt(C(n,k)) amplitude^(n-k) (1-|amplitude|^2)^(k/2) |n-k>,
    so a coherent state |alpha> maps to |amplitude * alpha>.  A complex
    amplitude folds the reflection phase into the same channel.
    """
    t2 = abs(amplitude) ** 2
    if t2 > 1.0 + 1e-12:
        raise QuantumStateError("attenuation amplitude exceeds unit modulus")
    loss = max(1.0 - t2, 0.0)
    ops = []
    for k in range(dim):
        m = np.zeros((dim, dim), dtype=complex)
        for n in range(k, dim):
            m[n - k, n] = (math.sqrt(math.comb(n, k)) * amplitude ** (n - k)
                           * loss ** (k / 2.0))
        ops.append(m)
    return ops


def attenuate_mode(state: DensityState, mode: str, amplitude: complex) -> DensityState:
    dim = state.layout.dim_of(mode)
    mode_layout = HilbertLayout(((mode, dim),))
    kraus = [
        embed_operator(LinearOperator(mode_layout, k), [mode], state.layout).matrix
        for k in attenuation_kraus(amplitude, dim)
    ]
    return apply_kraus(state, kraus)


def loss_channel(state: DensityState, mode: str, transmission: float) -> DensityState:
    """Photon loss: beam-split the mode against vacuum with transmittance
    ``transmission`` and trace the ancilla (applied here in closed Kraus form)."""
    if not (0.0 <= transmission <= 1.0):
        raise QuantumStateError("transmission outside [0, 1]")
    return attenuate_mode(state, mode, math.sqrt(transmission))


# Linear <-> circular rail relations used package-wide (see cavity module):
#   a_A = (a_r + a_l)/sqrt(2),  a_D = (a_l - a_r)/sqrt(2)
# so the rail rotation AD -> RL sends a1 -> (a1 - a2)/sqrt(2),
# a2 -> (a1 + a2)/sqrt(2); it is real orthogonal and its own round trip
# inverse.

def _rail_rotation(dim: int, theta: float) -> np.ndarray:
    a = annihilation(dim)
    ident = np.eye(dim)
    ad_b = np.kron(a.conj().T, ident) @ np.kron(ident, a)
    return expm(theta * (ad_b - ad_b.conj().T))


def polarization_change_basis(state: DensityState, pair: PolarizationModePair,
                              to: str) -> tuple[DensityState, PolarizationModePair]:
    """Rotate the two rails between the AD and RL polarization bases.

    Returns the rotated state together with the retagged pair.  A same-basis
    request warns and returns the inputs unchanged.
    """
    if to not in ("AD", "RL"):
        raise QuantumStateError(f"unknown basis tag {to!r}")
    if pair.basis == to:
        warnings.warn(f"polarization pair already in basis {to}; no-op",
                      stacklevel=2)
        return state, pair
    theta = -math.pi / 4.0 if to == "RL" else math.pi / 4.0
    u = _rail_rotation(pair.dim, theta)
    op = LinearOperator(pair.layout(), u, unitary=True)
    rotated = apply_unitary(
        state, embed_operator(op, list(pair.labels), state.layout))
    return rotated, pair.retagged(to)


def click_povm(params: DetectorParams, pair: PolarizationModePair
               ) -> dict[ClickOutcome, np.ndarray]:
    """Four POVM elements on the pair space, indexed by which detectors click.

    Per detector the no-click element weights n photons by (1 - eta)^n and the
    whole window by the no-dark-click probability; clicks are the complement.
    Dark clicks are independent Bernoulli events per detector per gate window.
    """
    if pair.basis != "AD":
        raise QuantumStateError("click detection happens in the AD basis")
    dim = pair.dim
    eta = params.efficiency
    p_dark = params.dark_click_probability
    no_click = (1.0 - p_dark) * np.diag((1.0 - eta) ** np.arange(dim))
    click = np.eye(dim) - no_click
    elements = {}
    for a_clicked, ea in ((False, no_click), (True, click)):
        for d_clicked, ed in ((False, no_click), (True, click)):
            elements[ClickOutcome(a_clicked, d_clicked)] = np.kron(ea, ed)
    return elements
