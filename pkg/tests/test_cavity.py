import math

import numpy as np
import pytest

from teleportsim.cavity import (
    InputQubit,
    NodeParams,
    atomic_readout,
    cavity_reflection,
    idle_decoherence,
    multiport_kraus,
    prepare_state,
    raman_rotation,
    reflection_amplitudes,
    rotation_matrix,
)
from teleportsim.core import (
    DensityState,
    HilbertLayout,
    LinearOperator,
    QuantumStateError,
    apply_unitary,
    embed_operator,
    fidelity_pure,
    partial_trace,
    tensor_product,
)
from teleportsim.photonics import PolarizationModePair, PulseConfig, \
    coherent_pulse_state, polarization_change_basis

from reference_states import random_density

SQ2 = 1.0 / math.sqrt(2.0)
UP = np.array([1, 0], dtype=complex)
DOWN = np.array([0, 1], dtype=complex)


def bob_node(**overrides):
    base = dict(kappa_mhz=2.5, gamma_mhz=3.0, g_mhz=7.6)
    base.update(overrides)
    return NodeParams(**base)


def alice_node(**overrides):
    base = dict(kappa_mhz=2.8, gamma_mhz=3.0, g_mhz=7.6)
    base.update(overrides)
    return NodeParams(**base)


def ideal_node():
    # overcoupled lossless limit: unit-modulus conditional amplitudes
    return NodeParams(kappa_mhz=2.5, gamma_mhz=3.0, g_mhz=1e12,
                      kappa_in_fraction=1.0)


def atom_photon_state(atom_vec, pulse=None):
    pair = PolarizationModePair(cutoff=3, basis="AD")
    atom = DensityState.from_vector(HilbertLayout((("atom", 2),)), atom_vec)
    photon = coherent_pulse_state(pulse or PulseConfig(0.0, single_photon=True),
                                  pair)
    return tensor_product([atom, photon]), pair


def one_photon_vec(pol, atom_vec, dim=4):
    vec = np.zeros((2, dim, dim), dtype=complex)
    idx = (1, 0) if pol == "A" else (0, 1)
    vec[0, idx[0], idx[1]] = atom_vec[0]
    vec[1, idx[0], idx[1]] = atom_vec[1]
    return vec.reshape(-1)


class TestNodeParams:
    def test_table_cooperativities(self):
        assert round(bob_node().cooperativity, 1) == 3.9
        assert round(alice_node().cooperativity, 1) == 3.4

    def test_parameter_validation(self):
        with pytest.raises(QuantumStateError):
            bob_node(kappa_in_fraction=0.0)
        with pytest.raises(QuantumStateError):
            bob_node(mode_matching=1.5)


class TestReflectionAmplitudes:
    def test_ideal_overcoupled_limit(self):
        amps = reflection_amplitudes(ideal_node())
        assert amps.r_coupled == pytest.approx(1.0, abs=1e-9)
        assert amps.r_uncoupled == pytest.approx(-1.0, abs=1e-12)

    def test_coupled_amplitude_formula(self):
        # r_coupled = (2C-1)/(2C+1) at full input coupling; C pinned to 3.9
        g = math.sqrt(2.0 * 2.5 * 3.0 * 3.9)
        node = NodeParams(kappa_mhz=2.5, gamma_mhz=3.0, g_mhz=g,
                          kappa_in_fraction=1.0)
        amps = reflection_amplitudes(node)
        assert amps.r_coupled.real == pytest.approx(0.7727, abs=1e-4)

    def test_flux_conservation(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            node = bob_node(kappa_in_fraction=rng.uniform(0.05, 1.0),
                            mode_matching=rng.uniform(0.3, 1.0))
            amps = reflection_amplitudes(node)
            for coupled in (True, False):
                ports = amps.port_amplitudes(coupled)
                assert sum(abs(a) ** 2 for a in ports) == pytest.approx(
                    1.0, abs=1e-10)

    def test_monotone_in_cooperativity(self):
        previous = -1.0
        for g in (2.0, 4.0, 7.6, 12.0, 30.0):
            amps = reflection_amplitudes(bob_node(g_mhz=g))
            assert amps.r_coupled.real > previous
            previous = amps.r_coupled.real

    def test_multiport_kraus_complete(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            raw = rng.uniform(0.1, 1.0, size=3)
            raw /= math.sqrt(float(raw @ raw))
            ops = multiport_kraus((raw[0], raw[1], raw[2]), 5)
            total = sum(k.conj().T @ k for k in ops.values())
            assert np.max(np.abs(total - np.eye(5))) < 1e-10


class TestCavityReflection:
    @pytest.mark.parametrize("atom_vec,pol_in,pol_out", [
        (DOWN, "A", "A"), (UP, "A", "D"), (DOWN, "D", "D"), (UP, "D", "A"),
    ])
    def test_ideal_truth_table(self, atom_vec, pol_in, pol_out):
        pair = PolarizationModePair(cutoff=3, basis="AD")
        lay = HilbertLayout((("atom", 2),)).concat(pair.layout())
        state = DensityState.from_vector(lay, one_photon_vec(pol_in, atom_vec))
        out = cavity_reflection(state, ideal_node(), pair, "atom")
        want = one_photon_vec(pol_out, atom_vec)
        assert np.max(np.abs(out.matrix - np.outer(want, want.conj()))) < 1e-10

    def test_superposed_atom_creates_bell_state(self):
        pair = PolarizationModePair(cutoff=3, basis="AD")
        lay = HilbertLayout((("atom", 2),)).concat(pair.layout())
        plus = np.array([SQ2, SQ2])
        state = DensityState.from_vector(lay, one_photon_vec("A", plus))
        out = cavity_reflection(state, ideal_node(), pair, "atom")
        want = (one_photon_vec("D", UP) + one_photon_vec("A", DOWN)) * SQ2
        assert np.max(np.abs(out.matrix - np.outer(want, want.conj()))) < 1e-10

    def test_ideal_reflection_equals_conditional_phase_unitary(self):
        # direct construction: pi phase on the coupled circular rail iff the
        # atom is up, with the fixed per-photon phase-reference offset
        rng = np.random.default_rng(7)
        pair = PolarizationModePair(cutoff=3, basis="RL")
        lay = HilbertLayout((("atom", 2),)).concat(pair.layout())
        dim = 4
        phases_up = np.kron(np.diag((-1.0 + 0j) ** np.arange(dim)), np.eye(dim))
        u = np.kron(np.outer(UP, UP), phases_up) + np.kron(np.outer(DOWN, DOWN),
                                                           np.eye(dim * dim))
        direct = LinearOperator(lay, u, unitary=True)
        for _ in range(5):
            state = DensityState(lay, random_density(rng, lay.dim))
            via_channel = cavity_reflection(state, ideal_node(), pair, "atom")
            via_unitary = apply_unitary(state, direct)
            assert np.max(np.abs(via_channel.matrix - via_unitary.matrix)) < 1e-10

    def test_survival_matches_quoted_reflectivity(self):
        # fitted coupling, atom in the protocol superposition, one photon in:
        # total surviving photon expectation ~ 0.60
        node = bob_node(kappa_in_fraction=0.8835)
        pair = PolarizationModePair(cutoff=3, basis="AD")
        plus = np.array([SQ2, SQ2])
        lay = HilbertLayout((("atom", 2),)).concat(pair.layout())
        state = DensityState.from_vector(lay, one_photon_vec("A", plus))
        out = cavity_reflection(state, node, pair, "atom")
        dims = lay.dims
        shaped = out.matrix.reshape(dims * 2)
        survival = 0.0
        for axis in (1, 2):
            probs = np.einsum(shaped, [0, 1, 2, 0 + 3 if axis == 0 else 0,
                                       1 + 3 if axis == 1 else 1,
                                       2 + 3 if axis == 2 else 2],
                              [axis, axis + 3])
            survival += float(np.real(np.diagonal(probs) @ np.arange(4)))
        assert survival == pytest.approx(0.60, abs=0.02)

    def test_trace_preserved(self):
        rng = np.random.default_rng(11)
        pair = PolarizationModePair(cutoff=2, basis="AD")
        lay = HilbertLayout((("atom", 2),)).concat(pair.layout())
        for _ in range(10):
            node = bob_node(kappa_in_fraction=rng.uniform(0.3, 1.0),
                            mode_matching=rng.uniform(0.5, 1.0),
                            multi_photon_gate_error=rng.uniform())
            state = DensityState(lay, random_density(rng, lay.dim))
            out = cavity_reflection(state, node, pair, "atom")
            assert np.trace(out.matrix).real == pytest.approx(1.0, abs=1e-9)

    def test_single_photon_immune_to_gate_error(self):
        pair = PolarizationModePair(cutoff=3, basis="AD")
        lay = HilbertLayout((("atom", 2),)).concat(pair.layout())
        plus = np.array([SQ2, SQ2])
        state = DensityState.from_vector(lay, one_photon_vec("A", plus))
        clean = cavity_reflection(state, ideal_node(), pair, "atom")
        noisy = cavity_reflection(
            state, NodeParams(kappa_mhz=2.5, gamma_mhz=3.0, g_mhz=1e12,
                              multi_photon_gate_error=1.0), pair, "atom")
        assert np.max(np.abs(clean.matrix - noisy.matrix)) < 1e-12


class TestPrepareState:
    @pytest.mark.parametrize("alpha,beta", [
        (1.0, 0.0), (0.0, 1.0), (SQ2, SQ2), (SQ2, -SQ2), (SQ2, 1j * SQ2),
    ])
    def test_perfect_parameters_give_pure_target(self, alpha, beta):
        qubit = InputQubit(alpha, beta)
        state = prepare_state(qubit, bob_node(), "a")
        assert fidelity_pure(state, qubit.vector) == pytest.approx(1.0, abs=1e-12)

    def test_pump_error_population(self):
        state = prepare_state(InputQubit(1.0, 0.0), bob_node(pump_fidelity=0.99))
        assert state.matrix[0, 0].real == pytest.approx(0.99, abs=1e-12)

    def test_pi_pulse_residual_population(self):
        node = bob_node(pump_fidelity=0.99, pi_pulse_residual=0.03)
        state = prepare_state(InputQubit(0.0, 1.0), node)
        assert state.matrix[1, 1].real >= 0.96
        # residual parameter reproduces the observed leftover population
        assert state.matrix[0, 0].real == pytest.approx(0.03, abs=1e-12)

    def test_normalization_enforced(self):
        with pytest.raises(QuantumStateError):
            InputQubit(1.0, 1.0)


class TestRamanRotation:
    def test_printed_matrix_forms(self):
        theta = 1.1
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        assert np.allclose(rotation_matrix("y", theta),
                           [[c, -s], [s, c]])
        assert np.allclose(rotation_matrix("x", theta),
                           [[c, -1j * s], [-1j * s, c]])
        z = rotation_matrix("z", math.pi)
        assert np.allclose(z / z[0, 0], [[1, 0], [0, -1]])

    def test_pi_half_y(self):
        state = DensityState.from_vector(HilbertLayout((("a", 2),)), UP)
        out = raman_rotation(state, "a", "y", math.pi / 2)
        plus = np.array([SQ2, SQ2])
        assert np.max(np.abs(out.matrix - np.outer(plus, plus))) < 1e-12

    def test_pi_x_swaps_poles(self):
        state = DensityState.from_vector(HilbertLayout((("a", 2),)), UP)
        out = raman_rotation(state, "a", "x", math.pi)
        assert out.matrix[1, 1].real == pytest.approx(1.0, abs=1e-12)

    def test_rotation_inverse(self):
        rng = np.random.default_rng(13)
        lay = HilbertLayout((("a", 2),))
        state = DensityState(lay, random_density(rng, 2))
        for axis in ("x", "y", "z"):
            out = raman_rotation(raman_rotation(state, "a", axis, 0.7),
                                 "a", axis, -0.7)
            assert np.max(np.abs(out.matrix - state.matrix)) < 1e-10

    def test_rotations_unitary(self):
        for axis in ("x", "y", "z"):
            m = rotation_matrix(axis, 2.2)
            assert np.max(np.abs(m.conj().T @ m - np.eye(2))) < 1e-12


class TestIdleDecoherence:
    def test_zero_duration(self):
        state = DensityState.from_vector(HilbertLayout((("a", 2),)),
                                         [SQ2, SQ2])
        out = idle_decoherence(state, "a", 0.0, bob_node(coherence_time_us=400))
        assert np.max(np.abs(out.matrix - state.matrix)) < 1e-12

    def test_exponential_at_t2(self):
        state = DensityState.from_vector(HilbertLayout((("a", 2),)),
                                         [SQ2, SQ2])
        node = bob_node(coherence_time_us=400.0)
        out = idle_decoherence(state, "a", 400.0, node, "exponential")
        want = (1.0 + math.exp(-1.0)) / 2.0
        assert fidelity_pure(out, np.array([SQ2, SQ2])) == pytest.approx(
            want, abs=1e-4)

    def test_gaussian_law(self):
        state = DensityState.from_vector(HilbertLayout((("a", 2),)),
                                         [SQ2, SQ2])
        node = bob_node(coherence_time_us=400.0)
        out = idle_decoherence(state, "a", 200.0, node, "gaussian")
        want = (1.0 + math.exp(-0.25)) / 2.0
        assert fidelity_pure(out, np.array([SQ2, SQ2])) == pytest.approx(
            want, abs=1e-9)

    def test_pole_states_unaffected(self):
        state = DensityState.from_vector(HilbertLayout((("a", 2),)), UP)
        out = idle_decoherence(state, "a", 1e4, bob_node(coherence_time_us=1.0))
        assert np.max(np.abs(out.matrix - state.matrix)) < 1e-12

    def test_negative_duration_rejected(self):
        state = DensityState.from_vector(HilbertLayout((("a", 2),)), UP)
        with pytest.raises(QuantumStateError):
            idle_decoherence(state, "a", -1.0, bob_node())


class TestAtomicReadout:
    def test_perfect_on_pole(self):
        state = DensityState.from_vector(HilbertLayout((("a", 2),)), UP)
        results = atomic_readout(state, "a", 1.0)
        assert results[0][1] == pytest.approx(1.0, abs=1e-12)
        assert results[1][2] is None

    def test_perfect_on_superposition(self):
        state = DensityState.from_vector(HilbertLayout((("a", 2),)), [SQ2, SQ2])
        probs = [p for _, p, _ in atomic_readout(state, "a", 1.0)]
        assert probs == pytest.approx([0.5, 0.5], abs=1e-12)

    def test_misassignment(self):
        state = DensityState.from_vector(HilbertLayout((("a", 2),)), UP)
        results = atomic_readout(state, "a", 0.98)
        assert results[0][1] == pytest.approx(0.98, abs=1e-12)
        assert results[1][1] == pytest.approx(0.02, abs=1e-12)
