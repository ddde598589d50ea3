"""One network node: the atomic qubit and its conditional cavity reflection.

The reflection acts on the circular polarization rails.  Only the first
circular rail couples to the atom, and only when the atom is in the upper
qubit state (the cavity is tuned to that transition); every other combination
sees the bare cavity.  On resonance, input-output theory for a one-sided
cavity gives the reflection amplitudes

    r_uncoupled = 1 - 2 (kappa_in / kappa)
    r_coupled   = 1 - 2 (kappa_in / kappa) / (1 + 2 C),    C = g^2 / (2 kappa gamma)

so an overcoupled lossless cavity (kappa_in = kappa, C -> inf) reflects the
coupled rail with +1 and the uncoupled rail with -1: the conditional pi phase
behind the atom-photon controlled-NOT.

Conventions fixed once, here:
  * coupled circular rail = first rail of the pair in the RL basis;
  * linear rails relate to circular ones by a_A = (a_r + a_l)/sqrt(2),
    a_D = (a_l - a_r)/sqrt(2);
  * a fixed pi phase-reference offset per reflection (amplitudes enter the
    channel negated) so the ideal gate is exactly
    |down>|A> -> |down>|A>,  |up>|A> -> |up>|D>.
    The offset is atom-independent and linear in photon number, hence
    unobservable in this protocol.

Residual flux 1 - |r|^2 per branch, plus any mode-mismatched flux, is routed
to a merged loss environment and traced out (only the totals are observable).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tolerances as tol
from .core import (
    DensityState,
    HilbertLayout,
    LinearOperator,
    NoiseChannelSpec,
    QuantumStateError,
    apply_kraus,
    apply_noise,
    apply_unitary,
    embed_operator,
)
from .photonics import PolarizationModePair, attenuation_kraus, attenuate_mode, \
    polarization_change_basis

KET_UP = np.array([1.0, 0.0], dtype=complex)
KET_DOWN = np.array([0.0, 1.0], dtype=complex)
_PROJ_UP = np.outer(KET_UP, KET_UP.conj())
_PROJ_DOWN = np.outer(KET_DOWN, KET_DOWN.conj())


@dataclass(frozen=True)
class NodeParams:
    """Cavity-QED numbers and atomic control-error parameters for one node."""

    kappa_mhz: float
    gamma_mhz: float
    g_mhz: float
    kappa_in_fraction: float = 1.0
    mode_matching: float = 1.0
    pump_fidelity: float = 1.0
    pi_pulse_residual: float = 0.0
    coherence_time_us: float = math.inf
    pi_half_duration_us: float = 4.0
    pi_duration_us: float = 8.0
    multi_photon_gate_error: float = 0.0

    def __post_init__(self):
        if self.kappa_mhz <= 0 or self.gamma_mhz <= 0 or self.g_mhz <= 0:
            raise QuantumStateError("kappa, gamma, g must be positive")
        if not (0.0 < self.kappa_in_fraction <= 1.0):
            raise QuantumStateError("kappa_in/kappa must be in (0, 1]")
        if not (0.0 < self.mode_matching <= 1.0):
            raise QuantumStateError("mode matching must be in (0, 1]")
        if not (0.0 <= self.pump_fidelity <= 1.0):
            raise QuantumStateError("pump fidelity outside [0, 1]")
        if not (0.0 <= self.pi_pulse_residual <= 1.0):
            raise QuantumStateError("pi pulse residual outside [0, 1]")
        if self.coherence_time_us <= 0:
            raise QuantumStateError("coherence time must be positive")
        if not (0.0 <= self.multi_photon_gate_error <= 1.0):
            raise QuantumStateError("multi-photon gate error outside [0, 1]")

    @property
    def cooperativity(self) -> float:
        return self.g_mhz ** 2 / (2.0 * self.kappa_mhz * self.gamma_mhz)


@dataclass(frozen=True)
class InputQubit:
    """Normalized qubit amplitudes alpha |up> + beta |down>."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > tol.NORMALIZATION_TOL * 10:
            raise QuantumStateError(f"input qubit norm {norm} != 1")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)


@dataclass(frozen=True)
class ReflectionAmplitudes:
    """On-resonance reflection amplitudes plus the per-branch loss budget.

    Losses are resolved per physical output port as (transmission+mirror,
    unused, atom scattering) flux fractions.  The port split matters: the
    uncoupled branch sheds flux through the cavity's linear ports while the
    coupled branch sheds it mostly via the atom, so for multi-photon pulses
    the lost fields end up in orthogonal environments and carry which-path
    information between the atomic branches.  (Transmission and mirror
    scattering share one effective port -- their split ratio is common to
    both branches -- so the middle bin stays zero.)
    """

    r_coupled: complex
    r_uncoupled: complex
    coupled_losses: tuple[float, float, float]
    uncoupled_losses: tuple[float, float, float]
    mode_mismatch_loss: float = 0.0

    def __post_init__(self):
        for r, losses in ((self.r_coupled, self.coupled_losses),
                          (self.r_uncoupled, self.uncoupled_losses)):
            if abs(r) > 1.0 + 1e-12:
                raise QuantumStateError("reflection amplitude above unit modulus")
            if any(l < -1e-12 for l in losses):
                raise QuantumStateError("negative loss flux")
            flux = abs(r) ** 2 + sum(losses) + self.mode_mismatch_loss
            if abs(flux - 1.0) > tol.HERMITICITY_TOL:
                raise QuantumStateError(f"flux not conserved: {flux}")

    def port_amplitudes(self, coupled: bool) -> tuple[complex, ...]:
        """(reflection, linear-loss, atom-loss, mismatch-loss) field amplitudes."""
        losses = self.coupled_losses if coupled else self.uncoupled_losses
        r = self.r_coupled if coupled else self.r_uncoupled
        return (r, math.sqrt(losses[0] + losses[1]), math.sqrt(losses[2]),
                math.sqrt(self.mode_mismatch_loss))


def reflection_amplitudes(params: NodeParams) -> ReflectionAmplitudes:
    x = params.kappa_in_fraction
    c = params.cooperativity
    d = 1.0 + 2.0 * c
    mm = params.mode_matching
    r_uncoupled = 1.0 - 2.0 * x
    r_coupled = 1.0 - 2.0 * x / d
    # one-sided cavity port amplitudes: r^2 + t^2 (+ s^2) = 1 per branch
    t_uncoupled = 2.0 * math.sqrt(x * (1.0 - x))
    t_coupled = t_uncoupled / d
    s_coupled = math.sqrt(8.0 * x * c) / d
    mm2 = mm * mm
    return ReflectionAmplitudes(
        r_coupled=complex(mm * r_coupled),
        r_uncoupled=complex(mm * r_uncoupled),
        coupled_losses=(mm2 * t_coupled ** 2, 0.0, mm2 * s_coupled ** 2),
        uncoupled_losses=(mm2 * t_uncoupled ** 2, 0.0, 0.0),
        mode_mismatch_loss=1.0 - mm2,
    )


def multiport_kraus(amplitudes: tuple[complex, ...], dim: int
                    ) -> dict[tuple[int, ...], np.ndarray]:
    """Kraus family of a mode split into (kept, env_1, .., env_p) ports.

    Indexed by the env-port photon counts (k_1..k_p); entry [n-k, n] carries
    sqrt(n! / (k_1! .. k_p! (n-k)!)) kept^(n-k) prod_i env_i^(k_i).  Ports
    with zero amplitude are skipped (only their k=0 index survives).
    """
    kept, *env = amplitudes
    total = sum(abs(a) ** 2 for a in amplitudes)
    if total > 1.0 + 1e-9:
        raise QuantumStateError("port amplitudes exceed unit total flux")
    active = [(i, a) for i, a in enumerate(env) if abs(a) > 0.0]
    ops: dict[tuple[int, ...], np.ndarray] = {}

    def build(counts: tuple[int, ...]) -> np.ndarray:
        k_total = sum(counts)
        m = np.zeros((dim, dim), dtype=complex)
        for n in range(k_total, dim):
            coeff = math.sqrt(
                math.factorial(n)
                / math.prod(math.factorial(k) for k in counts)
                / math.factorial(n - k_total))
            amp = kept ** (n - k_total)
            for (_, a), k in zip(active, counts):
                amp = amp * a ** k
            m[n - k_total, n] = coeff * amp
        return m

    def recurse(prefix: tuple[int, ...], remaining: int, budget: int):
        if remaining == 0:
            full = [0] * len(env)
            for (i, _), k in zip(active, prefix):
                full[i] = k
            ops[tuple(full)] = build(prefix)
            return
        for k in range(budget + 1):
            recurse(prefix + (k,), remaining - 1, budget - k)

    recurse((), len(active), dim - 1)
    return ops


def _conditional_reflection_channel(state: DensityState, atom: str, mode: str,
                                    amps: ReflectionAmplitudes,
                                    negate: bool) -> DensityState:
    """Apply the port-resolved reflection to ``mode``, conditioned on the atom.

    The Kraus family P_up (x) K^(coupled)_k + P_down (x) K^(uncoupled)_k over
    the shared environment indices k implements the beam-splitter network of
    the scattering model with all loss ports traced out; because the two
    branches feed different ports, the lost flux correctly dephases the atom.
    """
    dim = state.layout.dim_of(mode)
    sign = -1.0 if negate else 1.0
    up_ports = amps.port_amplitudes(coupled=True)
    down_ports = amps.port_amplitudes(coupled=False)
    k_up = multiport_kraus((sign * up_ports[0],) + up_ports[1:], dim)
    k_down = multiport_kraus((sign * down_ports[0],) + down_ports[1:], dim)
    joint = HilbertLayout(((atom, 2), (mode, dim)))
    kraus = []
    for idx in sorted(set(k_up) | set(k_down)):
        zeros = np.zeros((dim, dim), dtype=complex)
        m = (np.kron(_PROJ_UP, k_up.get(idx, zeros))
             + np.kron(_PROJ_DOWN, k_down.get(idx, zeros)))
        kraus.append(embed_operator(LinearOperator(joint, m), [atom, mode],
                                    state.layout).matrix)
    return apply_kraus(state, kraus)


def _multi_photon_dephasing(state: DensityState, atom: str,
                            pair: PolarizationModePair, error: float
                            ) -> DensityState:
    """Randomize the conditional phase of multi-photon components.

    A single incident photon picks up the conditional reflection phase
    cleanly; when several photons overlap inside the cavity response the
    phase imprinted on the coupled branch is unreliable.  With probability
    ``error`` the photon-number sectors carrying >= 2 photons see a fully
    randomized conditional phase: a block dephasing between the uncoupled
    branch (atom down) and each coupled-rail photon-number block of the
    atom-up branch.  This scrambles both the atomic branch coherence and the
    multi-photon polarization flip.  The coefficient is an independently
    fitted gate parameter; vacuum and one-photon sectors (and hence a
    single-photon source) are untouched.
    """
    if error == 0.0:
        return state
    dim = pair.dim
    n_r = np.repeat(np.arange(dim), dim)
    total = np.add.outer(np.arange(dim), np.arange(dim)).reshape(-1)
    multi = (total >= 2).astype(float)
    joint = HilbertLayout(((atom, 2), (pair.first, dim), (pair.second, dim)))
    ident2 = np.eye(2, dtype=complex)
    below = np.diag((1.0 - multi) + 0j)
    multi_diag = np.diag(multi + 0j)
    ops = [np.kron(ident2, below) + math.sqrt(1.0 - error)
           * np.kron(ident2, multi_diag)]
    root = math.sqrt(error)
    for k in range(dim):
        block = np.diag((multi * (n_r == k)).astype(complex))
        if k == 0:
            block_full = (np.kron(_PROJ_DOWN, multi_diag)
                          + np.kron(_PROJ_UP, block))
        else:
            block_full = np.kron(_PROJ_UP, block)
        if np.any(block_full):
            ops.append(root * block_full)
    kraus = [
        embed_operator(LinearOperator(joint, k),
                       [atom, pair.first, pair.second], state.layout).matrix
        for k in ops
    ]
    return apply_kraus(state, kraus)


def cavity_reflection(state: DensityState, node: NodeParams,
                      pair: PolarizationModePair, atom: str) -> DensityState:
    """Reflect the pulse off one node's cavity, conditioned on its atom.

    Works in the RL basis (converting there and back if the pair arrives
    tagged AD).  If the atom is up, the coupled rail sees r_coupled and the
    other rail r_uncoupled; if it is down, both see r_uncoupled.  Amplitudes
    are negated for the fixed phase-reference convention (module docstring),
    which makes the ideal limit exactly the A<->D conditional flip.
    Multi-photon sectors additionally dephase the atom per the node's fitted
    gate-error coefficient.
    """
    if atom not in state.layout.labels or state.layout.dim_of(atom) != 2:
        raise QuantumStateError(f"atom {atom!r} is not a qubit in the state")
    for lab in pair.labels:
        if lab not in state.layout.labels:
            raise QuantumStateError(f"missing photonic mode {lab!r}")
    amps = reflection_amplitudes(node)
    restore_ad = pair.basis == "AD"
    if restore_ad:
        state, pair = polarization_change_basis(state, pair, "RL")
    state = _multi_photon_dephasing(state, atom, pair,
                                    node.multi_photon_gate_error)
    coupled_rail, other_rail = pair.labels
    state = _conditional_reflection_channel(state, atom, coupled_rail, amps,
                                            negate=True)
    state = attenuate_mode(state, other_rail, -amps.r_uncoupled)
    if restore_ad:
        state, pair = polarization_change_basis(state, pair, "AD")
    return state


def rotation_matrix(axis: str, theta: float) -> np.ndarray:
    """exp(-i theta sigma_axis / 2) in the printed matrix conventions."""
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    if axis == "x":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if axis == "y":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if axis == "z":
        return np.array([[np.exp(-1j * theta / 2.0), 0.0],
                         [0.0, np.exp(1j * theta / 2.0)]], dtype=complex)
    raise QuantumStateError(f"unknown rotation axis {axis!r}")


def raman_rotation(state: DensityState, atom: str, axis: str,
                   theta: float) -> DensityState:
    qubit = HilbertLayout(((atom, 2),))
    op = LinearOperator(qubit, rotation_matrix(axis, theta), unitary=True)
    return apply_unitary(state, embed_operator(op, [atom], state.layout))


def prepare_state(target: InputQubit, node: NodeParams,
                  label: str = "atom") -> DensityState:
    """Optically pump, then rotate to the target qubit, with both error knobs.

    Pumping leaves (1 - pump_fidelity) in the wrong pole before the rotation.
    pi_pulse_residual is the observed leftover population after a pi pulse
    (area-scaled for shorter pulses); the underlying pulse-failure probability
    is solved from it so that the modeled residual matches the measured one on
    top of the pump error.  With perfect parameters the output is the pure
    target.
    """
    layout = HilbertLayout(((label, 2),))
    f = node.pump_fidelity
    pumped = f * _PROJ_UP + (1.0 - f) * _PROJ_DOWN
    theta = 2.0 * math.acos(min(abs(target.alpha), 1.0))
    phase = np.angle(target.beta) - np.angle(target.alpha) if abs(target.beta) > 0 \
        else 0.0
    u = rotation_matrix("z", phase) @ rotation_matrix("y", theta) \
        if theta > 0 else np.eye(2, dtype=complex)
    observed = node.pi_pulse_residual * (theta / math.pi)
    if f > 0.5:
        eps = (observed - (1.0 - f)) / (2.0 * f - 1.0)
    else:
        eps = observed
    eps = min(max(eps, 0.0), 1.0)
    rho = (1.0 - eps) * (u @ pumped @ u.conj().T) + eps * pumped
    return DensityState(layout, rho)


def idle_decoherence(state: DensityState, atom: str, duration_us: float,
                     node: NodeParams, law: str = "exponential") -> DensityState:
    """Dephase one atom for an idle interval.

    The off-diagonal factor is exp(-t/T2) (exponential) or exp(-(t/T2)^2)
    (gaussian); the published value only pins T2, not the law, so both ship.
    """
    if duration_us < 0:
        raise QuantumStateError("negative idle duration")
    if duration_us == 0 or math.isinf(node.coherence_time_us):
        return state
    ratio = duration_us / node.coherence_time_us
    if law == "exponential":
        factor = math.exp(-ratio)
    elif law == "gaussian":
        factor = math.exp(-(ratio ** 2))
    else:
        raise QuantumStateError(f"unknown decoherence law {law!r}")
    return apply_noise(state, atom, NoiseChannelSpec("dephasing", 1.0 - factor))


def atomic_readout(state: DensityState, atom: str, readout_fidelity: float = 1.0
                   ) -> list[tuple[str, float, DensityState | None]]:
    """Projective z measurement with classical misassignment.

    Returns ("up"/"down", reported probability, conditional state); each
    reported branch is the fidelity-weighted mixture of the true projections.
    """
    if not (0.0 <= readout_fidelity <= 1.0):
        raise QuantumStateError("readout fidelity outside [0, 1]")
    layout = state.layout
    qubit = HilbertLayout(((atom, 2),))
    proj_up = embed_operator(LinearOperator(qubit, _PROJ_UP), [atom], layout).matrix
    proj_down = embed_operator(LinearOperator(qubit, _PROJ_DOWN), [atom],
                               layout).matrix
    rho = state.matrix
    p_up = max(float(np.real(np.trace(proj_up @ rho))), 0.0)
    p_down = max(float(np.real(np.trace(proj_down @ rho))), 0.0)
    cond_up = proj_up @ rho @ proj_up
    cond_down = proj_down @ rho @ proj_down
    f = readout_fidelity
    results: list[tuple[str, float, DensityState | None]] = []
    for name, prob, mat in (
        ("up", f * p_up + (1.0 - f) * p_down, f * cond_up + (1.0 - f) * cond_down),
        ("down", f * p_down + (1.0 - f) * p_up, f * cond_down + (1.0 - f) * cond_up),
    ):
        if prob < tol.ZERO_PROB:
            results.append((name, 0.0, None))
            continue
        m = mat / prob
        m = 0.5 * (m + m.conj().T)
        results.append((name, prob, DensityState(layout, m, state.weight * prob)))
    return results
