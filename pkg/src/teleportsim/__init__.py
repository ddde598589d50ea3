"""teleportsim: single-photon teleportation between two cavity-QED memory nodes.

A desk-scale density-matrix simulator covering state preparation, the two
conditional cavity reflections, heralded polarization detection, classical
feedback, and the dominant imperfections (coherent-pulse photon statistics,
losses, dark counts, preparation errors, and atomic dephasing), plus an
experiment harness reproducing the published benchmark, sweeps, error budget,
and rate accounting.
"""

from .core import (
    DensityState,
    HilbertLayout,
    LinearOperator,
    NoiseChannelSpec,
    QuantumStateError,
    apply_noise,
    apply_unitary,
    embed_operator,
    fidelity_pure,
    partial_trace,
    projective_measure,
    tensor_product,
)
from .photonics import (
    ClickOutcome,
    DetectorParams,
    PolarizationModePair,
    PulseConfig,
    beam_splitter,
    click_povm,
    coherent_pulse_state,
    loss_channel,
    phase_shift,
    polarization_change_basis,
    required_cutoff,
)
from .cavity import (
    InputQubit,
    NodeParams,
    ReflectionAmplitudes,
    atomic_readout,
    cavity_reflection,
    idle_decoherence,
    prepare_state,
    raman_rotation,
    reflection_amplitudes,
)
from .protocol import (
    ProtocolConfig,
    TeleportResult,
    TimingConstants,
    build_timeline,
    feedback_for,
    herald_probability,
    run_protocol,
    teleport_fidelity,
    three_party_state,
)
from .config import default_config, load_config
from .experiments import (
    SIX_STATES,
    error_budget,
    finite_shot_tomography,
    fit_node_coupling,
    rate_estimate,
    six_state_benchmark,
    sweep,
)

__version__ = "0.1.0"
