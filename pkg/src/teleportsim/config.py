"""Config file IO: nested key-value text with units in the key names.

One canonical default file (defaults.cfg, packaged) carries the published
two-node operating point.  ``load_config`` builds a ProtocolConfig from it or
from a user-supplied file of the same shape.
"""

from __future__ import annotations

import configparser
import math
from importlib import resources
from pathlib import Path

from .cavity import InputQubit, NodeParams
from .core import QuantumStateError
from .photonics import DetectorParams, PulseConfig, required_cutoff
from .protocol import ProtocolConfig, TimingConstants

_SQ = 2.0 ** -0.5
_DEFAULT_INPUT = InputQubit(_SQ, _SQ)  # the imperfection-sensitive benchmark state


def _node_from_section(sec: configparser.SectionProxy) -> NodeParams:
    return NodeParams(
        kappa_mhz=sec.getfloat("kappa_mhz"),
        gamma_mhz=sec.getfloat("gamma_mhz"),
        g_mhz=sec.getfloat("g_mhz"),
        kappa_in_fraction=sec.getfloat("kappa_in_fraction", 1.0),
        mode_matching=sec.getfloat("mode_matching", 1.0),
        pump_fidelity=sec.getfloat("pump_fidelity", 1.0),
        pi_pulse_residual=sec.getfloat("pi_pulse_residual", 0.0),
        coherence_time_us=sec.getfloat("coherence_time_us", math.inf),
        pi_half_duration_us=sec.getfloat("pi_half_duration_us", 4.0),
        pi_duration_us=sec.getfloat("pi_duration_us", 8.0),
        multi_photon_gate_error=sec.getfloat("multi_photon_gate_error", 0.0),
    )


def parse_config(text: str, input_qubit: InputQubit | None = None) -> ProtocolConfig:
    parser = configparser.ConfigParser()
    parser.read_string(text)
    try:
        pulse_sec = parser["pulse"]
        mean_n = pulse_sec.getfloat("mean_photon_number")
        cutoff = max(pulse_sec.getint("fock_cutoff", 3), required_cutoff(mean_n))
        pulse = PulseConfig(
            mean_photon_number=mean_n,
            polarization=pulse_sec.get("polarization", "A"),
            fock_cutoff=cutoff,
            envelope_fwhm_us=pulse_sec.getfloat("envelope_fwhm_us", 1.0),
            single_photon=pulse_sec.getboolean("single_photon", False),
        )
        chan = parser["channel"]
        det = parser["detector"]
        timing_sec = parser["timing"] if parser.has_section("timing") else {}
        timing = TimingConstants(
            pi_half_us=float(timing_sec.get("pi_half_us", 4.0)),
            pi_us=float(timing_sec.get("pi_us", 8.0)),
            pump_bob_us=float(timing_sec.get("pump_bob_us", 200.0)),
            pump_alice_us=float(timing_sec.get("pump_alice_us", 240.0)),
            transit_fiber_us=float(timing_sec.get("transit_fiber_us", 1.0)),
            transit_detect_us=float(timing_sec.get("transit_detect_us", 0.5)),
            readout_us=float(timing_sec.get("readout_us", 4.0)),
            z_gate_us=float(timing_sec.get("z_gate_us", 0.0)),
        )
        proto = parser["protocol"]
        return ProtocolConfig(
            input=input_qubit if input_qubit is not None else _DEFAULT_INPUT,
            node_bob=_node_from_section(parser["node.bob"]),
            node_alice=_node_from_section(parser["node.alice"]),
            pulse=pulse,
            fiber_transmission=chan.getfloat("fiber_transmission"),
            fiber_depolarization=chan.getfloat("fiber_depolarization", 0.0),
            detection_path_efficiency=chan.getfloat("detection_path_efficiency"),
            detector=DetectorParams(
                efficiency=det.getfloat("efficiency", 0.9),
                dark_count_rate_hz=det.getfloat("dark_count_rate_hz", 9.0),
                gate_window_us=det.getfloat("gate_window_us", 3.0),
            ),
            delay_tau_us=proto.getfloat("delay_tau_us", 0.0),
            timing=timing,
            repetition_rate_hz=proto.getfloat("repetition_rate_hz", 1000.0),
            decoherence_law=proto.get("decoherence_law", "exponential"),
            readout_fidelity=proto.getfloat("readout_fidelity", 1.0),
        )
    except (configparser.Error, KeyError, TypeError, ValueError) as exc:
        raise QuantumStateError(f"bad config file: {exc}") from exc


def load_config(path: str | Path | None = None,
                input_qubit: InputQubit | None = None) -> ProtocolConfig:
    """Load a protocol config from ``path``, or the packaged defaults."""
    if path is None:
        text = resources.files(__package__).joinpath("defaults.cfg").read_text()
    else:
        text = Path(path).read_text()
    return parse_config(text, input_qubit)


def default_config(input_qubit: InputQubit | None = None) -> ProtocolConfig:
    return load_config(None, input_qubit)
