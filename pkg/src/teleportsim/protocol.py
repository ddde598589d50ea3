"""The full teleportation protocol as a deterministic pipeline.

Sequence (times in us; tau is inserted at three points):

    pump both atoms in parallel -> prepare Bob (pi/2, right after his own
    pump) -> [tau] -> prepare Alice (after her longer pump) -> reflection at
    Bob -> fiber leg [tau] -> reflection at Alice -> detection leg -> herald
    (exactly one polarization detector clicks) -> pi/2 on Alice -> Alice
    readout -> [tau] -> conditional feedback on Bob.

Each atom accrues dephasing only over the windows where it can hold a
coherence: Bob from his preparation until the feedback slot completes, Alice
from her preparation until her readout completes.  Dephasing for a window is
applied before the pulse that closes the window.  Bob's preparation happens
while Alice's atom is still being pumped, so he idles in superposition for
the pump-duration difference; the quoted total protocol duration is measured
from the end of the last pump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import tolerances as tol
from .cavity import (
    InputQubit,
    NodeParams,
    atomic_readout,
    cavity_reflection,
    idle_decoherence,
    prepare_state,
    raman_rotation,
)
from .core import (
    DensityState,
    HilbertLayout,
    QuantumStateError,
    partial_trace,
    tensor_product,
)
from .photonics import (
    ClickOutcome,
    DetectorParams,
    PolarizationModePair,
    PulseConfig,
    click_povm,
    coherent_pulse_state,
    loss_channel,
    phase_shift,
    polarization_change_basis,
)

LIGHT_SPEED_IN_FIBER_M_PER_US = 2.0e8 * 1e-6  # c / 1.5, meters per microsecond


@dataclass(frozen=True)
class TimingConstants:
    """Pulse and transit durations (us).  The post-pump pieces sum to the
    published 25.5 us total: 8 (Alice prep slot) + 1.0 + 0.5 (transits)
    + 4 (Alice pi/2) + 4 (readout) + 8 (feedback Rx) + 0 (virtual Z)."""

    pi_half_us: float = 4.0
    pi_us: float = 8.0
    pump_bob_us: float = 200.0
    pump_alice_us: float = 240.0
    transit_fiber_us: float = 1.0
    transit_detect_us: float = 0.5
    readout_us: float = 4.0
    z_gate_us: float = 0.0

    @property
    def post_pump_total_us(self) -> float:
        return (self.pi_us + self.transit_fiber_us + self.transit_detect_us
                + self.pi_half_us + self.readout_us + self.pi_us + self.z_gate_us)


@dataclass(frozen=True)
class ProtocolConfig:
    """Everything defining one protocol run."""

    input: InputQubit
    node_bob: NodeParams
    node_alice: NodeParams
    pulse: PulseConfig
    fiber_transmission: float = 0.51
    fiber_depolarization: float = 0.0
    detection_path_efficiency: float = 0.5 / 0.9
    detector: DetectorParams = field(default_factory=DetectorParams)
    delay_tau_us: float = 0.0
    timing: TimingConstants = field(default_factory=TimingConstants)
    repetition_rate_hz: float = 1000.0
    decoherence_law: str = "exponential"
    readout_fidelity: float = 1.0
    herald_gated_measurement: bool = True  # dashed-box ordering; timing-neutral here

    def __post_init__(self):
        for name in ("fiber_transmission", "fiber_depolarization",
                     "detection_path_efficiency", "readout_fidelity"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise QuantumStateError(f"{name} = {v} outside [0, 1]")
        if self.delay_tau_us < 0:
            raise QuantumStateError("delays must be >= 0")
        if self.repetition_rate_hz <= 0:
            raise QuantumStateError("repetition rate must be positive")
        if self.decoherence_law not in ("exponential", "gaussian"):
            raise QuantumStateError(f"unknown decoherence law {self.decoherence_law!r}")


@dataclass(frozen=True)
class TimelineEvent:
    tag: str
    acting: tuple[str, ...]
    start_us: float
    duration_us: float

    @property
    def end_us(self) -> float:
        return self.start_us + self.duration_us


@dataclass(frozen=True)
class Timeline:
    """Nominal event list plus the derived dephasing exposure windows."""

    events: tuple[TimelineEvent, ...]
    bob_pre_reflection_us: float
    bob_mid_us: float
    bob_post_readout_us: float
    alice_pre_reflection_us: float
    alice_mid_us: float
    post_pump_duration_us: float

    def __post_init__(self):
        if any(e.duration_us < 0 for e in self.events):
            raise QuantumStateError("negative event duration")
        subsystems = {s for e in self.events for s in e.acting}
        for sub in subsystems:
            mine = sorted((e for e in self.events if sub in e.acting),
                          key=lambda e: (e.start_us, e.end_us))
            for prev, nxt in zip(mine, mine[1:]):
                if nxt.start_us < prev.end_us - 1e-9:
                    raise QuantumStateError(
                        f"overlapping events on {sub!r}: {prev.tag} and {nxt.tag}")

    def event(self, tag: str) -> TimelineEvent:
        for e in self.events:
            if e.tag == tag:
                return e
        raise KeyError(tag)

    @property
    def delay_length_equivalent_m(self) -> float:
        return self.event("delay_preparation").duration_us * LIGHT_SPEED_IN_FIBER_M_PER_US


def build_timeline(config: ProtocolConfig) -> Timeline:
    t = config.timing
    tau = config.delay_tau_us
    prep_bob_start = t.pump_bob_us
    prep_bob_end = prep_bob_start + t.pi_half_us
    delay1_start = max(prep_bob_end, t.pump_alice_us)
    prep_alice_start = delay1_start + tau
    prep_alice_end = prep_alice_start + t.pi_us
    reflect_bob_at = prep_alice_end
    fiber_end = reflect_bob_at + t.transit_fiber_us
    reflect_alice_at = fiber_end + tau
    herald_at = reflect_alice_at + t.transit_detect_us
    rotate_alice_end = herald_at + t.pi_half_us
    readout_start = rotate_alice_end
    readout_end = readout_start + t.readout_us
    feedback_x_start = readout_end + tau
    feedback_x_end = feedback_x_start + t.pi_us
    end = feedback_x_end + t.z_gate_us

    events = (
        TimelineEvent("pump_bob", ("bob",), 0.0, t.pump_bob_us),
        TimelineEvent("pump_alice", ("alice",), 0.0, t.pump_alice_us),
        TimelineEvent("prepare_bob", ("bob",), prep_bob_start, t.pi_half_us),
        TimelineEvent("delay_preparation", ("link",), delay1_start, tau),
        TimelineEvent("prepare_alice", ("alice",), prep_alice_start, t.pi_us),
        TimelineEvent("reflect_bob", ("bob", "ph1", "ph2"), reflect_bob_at, 0.0),
        TimelineEvent("fiber_transit", ("ph1", "ph2"), reflect_bob_at,
                      t.transit_fiber_us),
        TimelineEvent("delay_transit", ("link",), fiber_end, tau),
        TimelineEvent("reflect_alice", ("alice", "ph1", "ph2"), reflect_alice_at, 0.0),
        TimelineEvent("detection_transit", ("ph1", "ph2"), reflect_alice_at,
                      t.transit_detect_us),
        TimelineEvent("herald", ("ph1", "ph2"), herald_at, 0.0),
        TimelineEvent("rotate_alice", ("alice",), herald_at, t.pi_half_us),
        TimelineEvent("readout_alice", ("alice",), readout_start, t.readout_us),
        TimelineEvent("delay_feedback", ("link",), readout_end, tau),
        TimelineEvent("feedback_x", ("bob",), feedback_x_start, t.pi_us),
        TimelineEvent("feedback_z", ("bob",), feedback_x_end, t.z_gate_us),
    )
    return Timeline(
        events=events,
        bob_pre_reflection_us=reflect_bob_at - prep_bob_end,
        bob_mid_us=readout_start - reflect_bob_at,
        bob_post_readout_us=end - readout_start,
        alice_pre_reflection_us=reflect_alice_at - prep_alice_end,
        alice_mid_us=readout_end - reflect_alice_at,
        post_pump_duration_us=end - max(t.pump_bob_us, t.pump_alice_us),
    )


def feedback_for(photon: str, alice: str) -> tuple[tuple[str, float], ...]:
    """Conditional feedback on Bob: a D click adds R_x(pi), an up readout adds
    the Z phase gate; A and down contribute nothing.  Polarization feedback
    is applied first."""
    if photon not in ("A", "D") or alice not in ("up", "down"):
        raise QuantumStateError(f"unknown herald branch ({photon}, {alice})")
    ops: list[tuple[str, float]] = []
    if photon == "D":
        ops.append(("x", math.pi))
    if alice == "up":
        ops.append(("z", math.pi))
    return tuple(ops)


@dataclass(frozen=True)
class BranchResult:
    photon: str
    alice: str
    probability: float
    feedback: tuple[tuple[str, float], ...]
    bob_state: DensityState | None


@dataclass(frozen=True)
class TeleportResult:
    branches: tuple[BranchResult, ...]
    herald_probability: float
    double_click_probability: float
    no_click_probability: float

    def __post_init__(self):
        total = sum(b.probability for b in self.branches)
        if abs(total - self.herald_probability) > tol.PROB_SUM_TOL:
            raise QuantumStateError("branch probabilities do not sum to the herald")
        everything = (self.herald_probability + self.double_click_probability
                      + self.no_click_probability)
        if abs(everything - 1.0) > tol.PROB_SUM_TOL:
            raise QuantumStateError(f"outcome probabilities sum to {everything}")

    def branch(self, photon: str, alice: str) -> BranchResult:
        for b in self.branches:
            if b.photon == photon and b.alice == alice:
                return b
        raise KeyError((photon, alice))


def polarization_scramble(state: DensityState, pair: PolarizationModePair,
                          probability: float) -> DensityState:
    """Residual fiber depolarization: with the given probability one of the
    three polarization Pauli unitaries (realized as rail optics) is applied."""
    if not (0.0 <= probability <= 1.0):
        raise QuantumStateError("depolarization probability outside [0, 1]")
    if probability == 0.0:
        return state
    from scipy.linalg import expm

    from .core import LinearOperator, apply_unitary, embed_operator
    from .photonics import annihilation

    dim = pair.dim
    a = annihilation(dim)
    ident = np.eye(dim)
    ad_b = np.kron(a.conj().T, ident) @ np.kron(ident, a)
    swap = expm((math.pi / 2.0) * (ad_b - ad_b.conj().T))   # A -> D, D -> -A
    z = np.kron(ident, np.diag((-1.0 + 0j) ** np.arange(dim)))  # pi phase on D rail
    paulis = [swap, z @ swap, z]
    layout = state.layout
    rho = (1.0 - probability) * state.matrix
    for u in paulis:
        full = embed_operator(
            LinearOperator(pair.layout(), u, unitary=True), list(pair.labels),
            layout).matrix
        rho = rho + (probability / 3.0) * (full @ state.matrix @ full.conj().T)
    return DensityState(layout, rho, state.weight)


@dataclass(frozen=True)
class HeraldedBranches:
    """Pre-herald pipeline output: conditional atom states per click pattern."""

    single: dict  # "A" / "D" -> (probability, DensityState on (bob, alice) or None)
    double_click_probability: float
    no_click_probability: float
    after_bob_reflection: DensityState
    after_alice_reflection: DensityState
    timeline: Timeline


def _conditional_atoms(state: DensityState, element: np.ndarray,
                       pair: PolarizationModePair) -> tuple[float, DensityState | None]:
    """Probability of a (diagonal) POVM element and the post-click atom state."""
    layout = state.layout
    from .core import LinearOperator, embed_operator

    full = embed_operator(LinearOperator(pair.layout(), element),
                          list(pair.labels), layout).matrix
    weighted = full @ state.matrix
    prob = max(float(np.real(np.trace(weighted))), 0.0)
    if prob < tol.ZERO_PROB:
        return 0.0, None
    dims = layout.dims
    n = len(dims)
    keep_axes = [i for i, lab in enumerate(layout.labels)
                 if lab not in pair.labels]
    shaped = weighted.reshape(dims * 2)
    bra = list(range(n))
    ket = [i + n if i in keep_axes else i for i in range(n)]
    out_idx = keep_axes + [i + n for i in keep_axes]
    reduced = np.einsum(shaped, bra + ket, out_idx)
    sub = layout.restricted([layout.labels[i] for i in keep_axes])
    m = reduced.reshape(sub.dim, sub.dim) / prob
    m = 0.5 * (m + m.conj().T)
    return prob, DensityState(sub, m, state.weight * prob)


def evolve_to_herald(config: ProtocolConfig) -> HeraldedBranches:
    """Run the optical half of the protocol and apply the herald POVM."""
    timeline = build_timeline(config)
    pair = PolarizationModePair(cutoff=config.pulse.fock_cutoff, basis="AD")
    law = config.decoherence_law

    bob = prepare_state(InputQubit(1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0)),
                        config.node_bob, "bob")
    alice = prepare_state(config.input, config.node_alice, "alice")
    pulse = coherent_pulse_state(config.pulse, pair)
    state = tensor_product([bob, alice, pulse])

    state = idle_decoherence(state, "bob", timeline.bob_pre_reflection_us,
                             config.node_bob, law)
    state = cavity_reflection(state, config.node_bob, pair, "bob")
    after_bob = state
    state = idle_decoherence(state, "bob", timeline.bob_mid_us,
                             config.node_bob, law)
    state = idle_decoherence(state, "alice", timeline.alice_pre_reflection_us,
                             config.node_alice, law)
    for rail in pair.labels:
        state = loss_channel(state, rail, config.fiber_transmission)
    state = polarization_scramble(state, pair, config.fiber_depolarization)
    state = cavity_reflection(state, config.node_alice, pair, "alice")
    after_alice = state
    state = idle_decoherence(state, "alice", timeline.alice_mid_us,
                             config.node_alice, law)
    for rail in pair.labels:
        state = loss_channel(state, rail, config.detection_path_efficiency)

    elements = click_povm(config.detector, pair)
    single: dict[str, tuple[float, DensityState | None]] = {}
    p_a, atoms_a = _conditional_atoms(state, elements[ClickOutcome(True, False)], pair)
    p_d, atoms_d = _conditional_atoms(state, elements[ClickOutcome(False, True)], pair)
    single["A"] = (p_a, atoms_a)
    single["D"] = (p_d, atoms_d)
    p_double, _ = _conditional_atoms(state, elements[ClickOutcome(True, True)], pair)
    p_none = max(1.0 - p_a - p_d - p_double, 0.0)
    return HeraldedBranches(single, p_double, p_none, after_bob, after_alice,
                            timeline)


def run_protocol(config: ProtocolConfig) -> TeleportResult:
    """Full protocol: herald, Alice's pi/2 and readout, feedback on Bob.

    Returns one conditional Bob state per (photon, Alice) herald branch, with
    absolute branch probabilities.  All branches are evaluated at the common
    nominal end of the feedback slot so they share Bob's exposure.
    """
    heralded = evolve_to_herald(config)
    timeline = heralded.timeline
    law = config.decoherence_law
    branches: list[BranchResult] = []
    for photon in ("A", "D"):
        p_photon, atoms = heralded.single[photon]
        if atoms is None:
            for alice_out in ("up", "down"):
                branches.append(BranchResult(photon, alice_out, 0.0,
                                             feedback_for(photon, alice_out), None))
            continue
        atoms = raman_rotation(atoms, "alice", "y", math.pi / 2.0)
        for alice_out, p_read, cond in atomic_readout(atoms, "alice",
                                                      config.readout_fidelity):
            fb = feedback_for(photon, alice_out)
            if cond is None:
                branches.append(BranchResult(photon, alice_out, 0.0, fb, None))
                continue
            cond = idle_decoherence(cond, "bob", timeline.bob_post_readout_us,
                                    config.node_bob, law)
            for axis, angle in fb:
                cond = raman_rotation(cond, "bob", axis, angle)
            bob_state = partial_trace(cond, ["bob"])
            prob = p_photon * p_read
            branches.append(BranchResult(photon, alice_out, prob, fb,
                                         bob_state.with_weight(prob)))
    herald_p = sum(b.probability for b in branches)
    return TeleportResult(tuple(branches), herald_p,
                          heralded.double_click_probability,
                          heralded.no_click_probability)


def herald_probability(config: ProtocolConfig) -> float:
    """Probability per attempt that exactly one polarization detector clicks."""
    heralded = evolve_to_herald(config)
    return heralded.single["A"][0] + heralded.single["D"][0]


def three_party_state(config: ProtocolConfig) -> DensityState:
    """Atom-atom-photon state right after the second cavity reflection."""
    return evolve_to_herald(config).after_alice_reflection


def teleport_fidelity(result: TeleportResult, target: InputQubit
                      ) -> tuple[float, dict[tuple[str, str], float]]:
    """Herald-weighted average (and per-branch) fidelity against the target."""
    from .core import fidelity_pure

    per_branch: dict[tuple[str, str], float] = {}
    total = 0.0
    for b in result.branches:
        if b.bob_state is None:
            continue
        f = fidelity_pure(b.bob_state, target.vector)
        per_branch[(b.photon, b.alice)] = f
        total += b.probability * f
    if result.herald_probability <= 0.0:
        raise QuantumStateError("no herald: fidelity undefined")
    return total / result.herald_probability, per_branch
