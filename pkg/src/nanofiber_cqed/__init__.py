"""Photon-mediated local and remote CZ gates in nanofiber cavity QED networks.

All rates and frequencies are angular frequencies in units of 2*pi*MHz unless
a name says otherwise.
"""

from nanofiber_cqed.errors import PhysicsError, ScenarioError, SolverError
from nanofiber_cqed.physics import (
    AmplitudeSet,
    AtomSpec,
    CavitySpec,
    amplitudes,
    atomic_scatter_rate,
    collective_coupling,
    residual_reflection_shift,
    simplified_reflection,
)
from nanofiber_cqed.gates import NodeLayout, gate_channel, ideal_unitary, local_layout, remote_layout
from nanofiber_cqed.fidelity import average_fidelity, entanglement_fidelity, superposition_fidelity
from nanofiber_cqed.pauli import error_rates

__version__ = "0.1.0"

__all__ = [
    "AmplitudeSet",
    "AtomSpec",
    "CavitySpec",
    "PhysicsError",
    "ScenarioError",
    "SolverError",
    "NodeLayout",
    "amplitudes",
    "average_fidelity",
    "entanglement_fidelity",
    "error_rates",
    "gate_channel",
    "ideal_unitary",
    "local_layout",
    "remote_layout",
    "superposition_fidelity",
    "atomic_scatter_rate",
    "collective_coupling",
    "residual_reflection_shift",
    "simplified_reflection",
]
