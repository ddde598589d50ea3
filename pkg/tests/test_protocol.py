import math
from dataclasses import replace

import numpy as np
import pytest

from teleportsim.cavity import InputQubit, NodeParams, atomic_readout, \
    raman_rotation
from teleportsim.config import default_config
from teleportsim.core import QuantumStateError, fidelity_pure, partial_trace
from teleportsim.photonics import DetectorParams, PulseConfig
from teleportsim.protocol import (
    ProtocolConfig,
    TimingConstants,
    build_timeline,
    evolve_to_herald,
    feedback_for,
    herald_probability,
    run_protocol,
    teleport_fidelity,
    three_party_state,
)

from reference_states import bell_with_spectator, projected_two_atoms, \
    three_party_fock

SQ2 = 1.0 / math.sqrt(2.0)

SIX = {
    "up_z": (1.0, 0.0), "down_z": (0.0, 1.0),
    "up_x": (SQ2, SQ2), "down_x": (SQ2, -SQ2),
    "up_y": (SQ2, 1j * SQ2), "down_y": (SQ2, -1j * SQ2),
}


def ideal_node():
    return NodeParams(kappa_mhz=2.5, gamma_mhz=3.0, g_mhz=1e12,
                      kappa_in_fraction=1.0)


def ideal_config(alpha=SQ2, beta=SQ2):
    return ProtocolConfig(
        input=InputQubit(alpha, beta),
        node_bob=ideal_node(),
        node_alice=ideal_node(),
        pulse=PulseConfig(0.0, "A", 3, single_photon=True),
        fiber_transmission=1.0,
        fiber_depolarization=0.0,
        detection_path_efficiency=1.0,
        detector=DetectorParams(1.0, 0.0, 3.0),
    )


class TestFeedbackTable:
    def test_photon_a_alice_down_is_nothing(self):
        assert feedback_for("A", "down") == ()

    def test_photon_d_adds_x_pi(self):
        assert feedback_for("D", "down") == (("x", math.pi),)

    def test_alice_up_adds_z(self):
        assert feedback_for("A", "up") == (("z", math.pi),)

    def test_both_ordered_polarization_first(self):
        assert feedback_for("D", "up") == (("x", math.pi), ("z", math.pi))

    def test_unknown_branch_rejected(self):
        with pytest.raises(QuantumStateError):
            feedback_for("B", "up")


class TestTimeline:
    def test_post_pump_duration_without_delays(self):
        tl = build_timeline(ideal_config())
        assert tl.post_pump_duration_us == pytest.approx(25.5)

    def test_pulse_durations(self):
        tl = build_timeline(ideal_config())
        assert tl.event("prepare_bob").duration_us == 4.0
        assert tl.event("rotate_alice").duration_us == 4.0
        assert tl.event("feedback_x").duration_us == 8.0
        assert tl.event("prepare_alice").duration_us == 8.0

    def test_delay_insertion_and_length_equivalent(self):
        cfg = replace(ideal_config(), delay_tau_us=40.0)
        tl = build_timeline(cfg)
        delays = [e for e in tl.events if e.tag.startswith("delay_")]
        assert len(delays) == 3
        assert all(e.duration_us == 40.0 for e in delays)
        assert tl.delay_length_equivalent_m == pytest.approx(8000.0)
        assert tl.post_pump_duration_us == pytest.approx(25.5 + 3 * 40.0)

    def test_exposure_windows(self):
        tl = build_timeline(ideal_config())
        bob_total = (tl.bob_pre_reflection_us + tl.bob_mid_us
                     + tl.bob_post_readout_us)
        assert bob_total == pytest.approx(61.5)  # includes the pump gap
        assert tl.alice_pre_reflection_us + tl.alice_mid_us == pytest.approx(9.5)

    def test_delays_extend_the_right_exposures(self):
        tl0 = build_timeline(ideal_config())
        tl = build_timeline(replace(ideal_config(), delay_tau_us=10.0))
        assert tl.bob_pre_reflection_us - tl0.bob_pre_reflection_us == 10.0
        assert tl.bob_mid_us - tl0.bob_mid_us == 10.0
        assert tl.bob_post_readout_us - tl0.bob_post_readout_us == 10.0
        assert tl.alice_pre_reflection_us - tl0.alice_pre_reflection_us == 10.0
        assert tl.alice_mid_us == tl0.alice_mid_us

    def test_events_do_not_overlap(self):
        build_timeline(replace(ideal_config(), delay_tau_us=7.3))  # validates


class TestIdealProtocol:
    @pytest.mark.parametrize("label", list(SIX))
    def test_every_branch_teleports_exactly(self, label):
        cfg = ideal_config(*SIX[label])
        result = run_protocol(cfg)
        assert result.herald_probability == pytest.approx(1.0, abs=1e-9)
        _, per_branch = teleport_fidelity(result, cfg.input)
        assert len(per_branch) == 4
        for fid in per_branch.values():
            assert fid == pytest.approx(1.0, abs=1e-9)

    def test_branch_probabilities_equal(self):
        rng = np.random.default_rng(19)
        for _ in range(5):
            v = rng.normal(size=2) + 1j * rng.normal(size=2)
            v /= np.linalg.norm(v)
            result = run_protocol(ideal_config(*v))
            for b in result.branches:
                assert b.probability == pytest.approx(0.25, abs=1e-9)

    def test_skipping_feedback_leaves_raw_branch_state(self):
        # without the corrections the (D, down) branch of an up_z input holds
        # the uncorrected flip, exactly as in the hand expansion
        cfg = ideal_config(1.0, 0.0)
        heralded = evolve_to_herald(cfg)
        _, atoms = heralded.single["D"]
        atoms = raman_rotation(atoms, "alice", "y", math.pi / 2.0)
        (_, _, cond) = atomic_readout(atoms, "alice", 1.0)[1]  # down branch
        bob = partial_trace(cond, ["bob"])
        assert bob.matrix[1, 1].real == pytest.approx(1.0, abs=1e-9)  # |down>

    def test_raw_branches_match_hand_expansion(self):
        rng = np.random.default_rng(23)
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        alpha, beta = v
        heralded = evolve_to_herald(ideal_config(alpha, beta))
        for photon in ("A", "D"):
            _, atoms = heralded.single[photon]
            atoms = raman_rotation(atoms, "alice", "y", math.pi / 2.0)
            want = projected_two_atoms(alpha, beta, photon)
            assert np.max(np.abs(atoms.matrix
                                 - np.outer(want, want.conj()))) < 1e-9


class TestIntermediateStates:
    def test_bell_state_after_first_reflection(self):
        rng = np.random.default_rng(29)
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        heralded = evolve_to_herald(ideal_config(*v))
        want = bell_with_spectator(v[0], v[1], cutoff=3)
        got = heralded.after_bob_reflection.matrix
        assert np.max(np.abs(got - np.outer(want, want.conj()))) < 1e-10

    def test_three_party_state_matches_hand_expansion(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            v = rng.normal(size=2) + 1j * rng.normal(size=2)
            v /= np.linalg.norm(v)
            got = three_party_state(ideal_config(*v)).matrix
            want = three_party_fock(v[0], v[1], cutoff=3)
            assert np.max(np.abs(got - np.outer(want, want.conj()))) < 1e-10


class TestHeraldAccounting:
    def test_outcome_probabilities_complete(self):
        cfg = default_config()
        result = run_protocol(cfg)
        total = (result.herald_probability + result.double_click_probability
                 + result.no_click_probability)
        assert total == pytest.approx(1.0, abs=1e-9)
        assert sum(b.probability for b in result.branches) == pytest.approx(
            result.herald_probability, abs=1e-9)

    def test_herald_probability_shortcut_matches(self):
        cfg = default_config()
        assert herald_probability(cfg) == pytest.approx(
            run_protocol(cfg).herald_probability, abs=1e-12)

    def test_branch_states_are_qubits(self):
        result = run_protocol(default_config())
        for b in result.branches:
            assert b.bob_state is not None
            assert b.bob_state.layout.dims == (2,)
            assert b.bob_state.weight == pytest.approx(b.probability)


class TestChannelStructure:
    def test_teleportation_linearity(self):
        # per-branch unnormalized outputs must combine linearly in the input
        # density matrix; reconstruct the off-diagonal response from four
        # reference inputs and predict a random qubit
        def branch_outputs(alpha, beta):
            result = run_protocol(ideal_config(alpha, beta))
            return {(b.photon, b.alice): b.probability * b.bob_state.matrix
                    for b in result.branches}

        t00 = branch_outputs(1.0, 0.0)
        t11 = branch_outputs(0.0, 1.0)
        tp = branch_outputs(SQ2, SQ2)
        tpi = branch_outputs(SQ2, 1j * SQ2)

        rng = np.random.default_rng(37)
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        alpha, beta = v
        got = branch_outputs(alpha, beta)
        for key in t00:
            t01 = (tp[key] + 1j * tpi[key]
                   - 0.5 * (1 + 1j) * (t00[key] + t11[key]))
            t10 = t01.conj().T
            want = (abs(alpha) ** 2 * t00[key] + abs(beta) ** 2 * t11[key]
                    + alpha * np.conj(beta) * t01
                    + np.conj(alpha) * beta * t10)
            assert np.max(np.abs(got[key] - want)) < 1e-9

    def test_global_phase_invariance(self):
        cfg = default_config()
        for phase in (0.7, 2.1):
            rotated = replace(cfg, input=InputQubit(
                cfg.input.alpha * np.exp(1j * phase),
                cfg.input.beta * np.exp(1j * phase)))
            a = run_protocol(cfg)
            b = run_protocol(rotated)
            for ba, bb in zip(a.branches, b.branches):
                assert np.max(np.abs(ba.bob_state.matrix
                                     - bb.bob_state.matrix)) < 1e-12

    def test_fidelity_requires_herald(self):
        cfg = replace(default_config(),
                      detector=DetectorParams(0.0, 0.0, 3.0))
        result = run_protocol(cfg)
        assert result.herald_probability == pytest.approx(0.0, abs=1e-12)
        with pytest.raises(QuantumStateError):
            teleport_fidelity(result, cfg.input)


class TestTimingConstants:
    def test_quoted_total(self):
        assert TimingConstants().post_pump_total_us == pytest.approx(25.5)

    def test_config_validation(self):
        with pytest.raises(QuantumStateError):
            replace(ideal_config(), fiber_transmission=1.3)
        with pytest.raises(QuantumStateError):
            replace(ideal_config(), delay_tau_us=-1.0)
        with pytest.raises(QuantumStateError):
            replace(ideal_config(), decoherence_law="cubic")
