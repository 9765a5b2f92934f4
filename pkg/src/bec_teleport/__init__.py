"""Exact simulation of spin-coherent-state teleportation between BEC qubits."""

__version__ = "0.1.0"

from bec_teleport.spin_core import (
    DickeState,
    LogBinomialTable,
    SpinCoherentParams,
    SpinExpectation,
    coherent_state,
    expectation_spin,
    hadamard,
    hadamard_via_rotations,
    rotate,
    spin_operator_matrix,
)
from bec_teleport.channels import (
    DephasingParams,
    NumericalError,
    QubitDensity,
    dephase_exact,
    entangle_zz,
    master_equation_integrate,
)
from bec_teleport.protocol import (
    OutcomeDistribution,
    ProtocolConfig,
    TeleportOutcome,
    apply_correction,
    bob_conditional_state,
    initial_state,
    measurement_distribution,
    teleport_exact,
    teleport_sample,
)
from bec_teleport.metrics import (
    ErrorReport,
    approx_distribution,
    average_error,
    classical_binary_bound,
    ridge_location,
    success_probability,
    trace_distance_error,
)

__all__ = [
    "DephasingParams",
    "DickeState",
    "ErrorReport",
    "LogBinomialTable",
    "NumericalError",
    "OutcomeDistribution",
    "ProtocolConfig",
    "QubitDensity",
    "SpinCoherentParams",
    "SpinExpectation",
    "TeleportOutcome",
    "apply_correction",
    "approx_distribution",
    "average_error",
    "bob_conditional_state",
    "classical_binary_bound",
    "coherent_state",
    "dephase_exact",
    "entangle_zz",
    "expectation_spin",
    "hadamard",
    "hadamard_via_rotations",
    "initial_state",
    "master_equation_integrate",
    "measurement_distribution",
    "ridge_location",
    "rotate",
    "spin_operator_matrix",
    "success_probability",
    "teleport_exact",
    "teleport_sample",
    "trace_distance_error",
]
