"""Heat engines of two coupled oscillators: local, global and exact descriptions."""

from .exact import exact_steady_report
from .gaussian import CovarianceMatrix, two_mode_fidelity
from .global_me import global_report
from .local_me import local_report
from .model import EngineParams, bose_einstein
from .qubits import QubitMachineParams, qubit_steady

__all__ = [
    "CovarianceMatrix", "EngineParams", "QubitMachineParams", "bose_einstein",
    "exact_steady_report", "global_report", "local_report", "qubit_steady", "two_mode_fidelity",
]
