"""Inverse design and noise analysis of two-qubit gates in weakly
nonlinear 4-channel photonic interferometers with dual-rail encoding."""

__version__ = "0.1.0"

from photongate.fockspace import (
    FockBasis,
    computational_basis_indices,
    index_of,
    logical_to_fock,
    occupation_of,
)
from photongate.layers import FpLayerParams, HrLayerParams, expm_oracle, u_fp, u_hr
from photongate.circuit import BlockParams, CircuitSpec, block_unitary, total_unitary
from photongate.objective import avg_gate_fidelity, cost, leakage, target_gate

__all__ = [
    "FockBasis",
    "index_of",
    "occupation_of",
    "logical_to_fock",
    "computational_basis_indices",
    "FpLayerParams",
    "HrLayerParams",
    "u_fp",
    "u_hr",
    "expm_oracle",
    "BlockParams",
    "CircuitSpec",
    "block_unitary",
    "total_unitary",
    "target_gate",
    "cost",
    "avg_gate_fidelity",
    "leakage",
]
