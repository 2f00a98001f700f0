"""Cost function, average gate fidelity, leakage, targets, and gradients.

The cost is the entrywise squared distance between the 4x4 logic block
of the total propagator and the target gate; the average gate fidelity
is the mean squared overlap over the four computational basis states.
Zero cost implies unit fidelity but not conversely (the fidelity is
insensitive to a global phase on the logic block), which is why the
cost, not the fidelity, is the optimization objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from photongate import _kernels
from photongate.circuit import (
    BASIS_4CH,
    CircuitSpec,
    DIM,
    assemble_layer_dj,
    sector_unitaries,
    unpack_params,
)
from photongate.fockspace import computational_basis_indices, occupation_of

__all__ = [
    "TargetGate",
    "GateReport",
    "LOGIC_INDICES",
    "target_gate",
    "logic_submatrix",
    "cost",
    "avg_gate_fidelity",
    "leakage",
    "cost_gradient",
    "cost_value_and_grad",
    "phase_marginalized_cost",
    "gate_report",
    "two_photon_indices",
]

#: Indices of |00>, |01>, |10>, |11> in the 81-dim 4-channel basis.
LOGIC_INDICES = np.array(computational_basis_indices(BASIS_4CH))

_CNOT = np.array(
    [
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
        [0, 0, 1, 0],
    ],
    dtype=complex,
)

# RXX(pi/2) = exp(-i pi/4 X(x)X)
_MS = (1.0 / np.sqrt(2.0)) * np.array(
    [
        [1, 0, 0, -1j],
        [0, 1, -1j, 0],
        [0, -1j, 1, 0],
        [-1j, 0, 0, 1],
    ],
    dtype=complex,
)


@dataclass(frozen=True)
class TargetGate:
    name: str
    matrix: np.ndarray


@dataclass(frozen=True)
class GateReport:
    cost: float
    fidelity: float
    leakage: float
    logic_submatrix: np.ndarray


def target_gate(name: str) -> TargetGate:
    """Look up a target two-qubit gate by name ('cnot' or 'ms')."""
    key = name.lower().replace("-", "")
    if key == "cnot":
        return TargetGate("CNOT", _CNOT.copy())
    if key in ("ms", "rxx"):
        return TargetGate("MS", _MS.copy())
    raise ValueError(f"unknown target gate {name!r}")


def logic_submatrix(u: np.ndarray) -> np.ndarray:
    """Rows/columns of an 81x81 matrix restricted to the computational basis."""
    return u[np.ix_(LOGIC_INDICES, LOGIC_INDICES)]


def cost(u: np.ndarray, target: TargetGate) -> float:
    """Entrywise squared distance of the logic block from the target."""
    diff = logic_submatrix(u) - target.matrix
    return float(np.sum(np.abs(diff) ** 2))


def avg_gate_fidelity(u: np.ndarray, target: TargetGate) -> float:
    """Mean squared overlap over the four computational basis states."""
    overlaps = np.einsum("ij,ij->j", logic_submatrix(u).conj(), target.matrix)
    return float(np.mean(np.abs(overlaps) ** 2))


def leakage(u: np.ndarray) -> float:
    """Worst-case probability weight leaving the computational subspace."""
    sub = logic_submatrix(u)
    kept = np.sum(np.abs(sub) ** 2, axis=0)
    return float(np.max(1.0 - kept))


def phase_marginalized_cost(u: np.ndarray, target: TargetGate) -> float:
    """Cost minimized over a global phase on the target (diagnostic only)."""
    sub = logic_submatrix(u)
    overlap = np.vdot(target.matrix, sub)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.sum(np.abs(sub - phase * target.matrix) ** 2))


def _param_positions(spec: CircuitSpec) -> list[tuple[int, int, str, int]]:
    """(block index, sector index, tag, hr position) of each packed parameter."""
    order = spec.layer_order
    pos = []
    for bi in range(len(spec.blocks)):
        pos.append((bi, order.index("paral"), "paral", 0))
        pos.append((bi, order.index("paral"), "paral", 1))
        pos.append((bi, order.index("inter"), "inter", 0))
        pos.append((bi, order.index("down"), "down", 0))
        pos.append((bi, order.index("up"), "up", 0))
    return pos


def _kernel_descriptors(spec: CircuitSpec):
    """Per-sector and per-parameter index arrays for the compiled kernel."""
    n_sec = len(spec.layer_order)
    m = len(spec.blocks)
    kinds = np.array(
        [_kernels.KIND_CODES[tag] for _ in range(m) for tag in spec.layer_order],
        dtype=np.int64,
    )
    times = np.array(
        [spec.duration(bi, si) for bi in range(m) for si in range(n_sec)]
    )
    block_of = np.repeat(np.arange(m, dtype=np.int64), n_sec)
    param_sector = []
    param_slot = []
    for bi, si, _tag, which in _param_positions(spec):
        param_sector.append(bi * n_sec + si)
        param_slot.append(which)
    return (
        kinds,
        times,
        block_of,
        np.array(param_sector, dtype=np.int64),
        np.array(param_slot, dtype=np.int64),
    )


def cost_value_and_grad(
    v: np.ndarray, template: CircuitSpec, target: TargetGate
) -> tuple[float, np.ndarray]:
    """Cost and its analytic gradient w.r.t. the packed hopping rates.

    The total propagator is a product over sectors; each parameter enters
    exactly one sector, so its derivative is the sandwich
    suffix * d(sector)/dJ * prefix, restricted to the logic block.
    """
    if _kernels.cost_grad_core is not None:
        js = np.asarray(v, dtype=float).reshape(len(template.blocks), 5)
        kinds, times, block_of, param_sector, param_slot = _kernel_descriptors(
            template
        )
        c, grad = _kernels.cost_grad_core(
            js,
            template.omega,
            template.u,
            kinds,
            times,
            block_of,
            np.ascontiguousarray(target.matrix),
            LOGIC_INDICES.astype(np.int64),
            param_sector,
            param_slot,
        )
        return float(c), grad
    return _cost_value_and_grad_numpy(v, template, target)


def _cost_value_and_grad_numpy(
    v: np.ndarray, template: CircuitSpec, target: TargetGate
) -> tuple[float, np.ndarray]:
    """Pure-numpy twin of :func:`cost_value_and_grad`."""
    spec = unpack_params(v, template)
    units = sector_unitaries(spec)
    n = len(units)
    n_sec = len(spec.layer_order)

    # Only the logic rows/columns of U_tot enter the cost, so propagate
    # the 4 logic columns forward and the 4 logic rows backward instead
    # of accumulating full 81x81 products.
    eye = np.eye(DIM, dtype=complex)
    fwd = [eye[:, LOGIC_INDICES]]  # fwd[k] = U_k ... U_1 |S>, shape (81, 4)
    for u in units:
        fwd.append(u @ fwd[-1])
    bwd = [None] * (n + 1)  # bwd[k] = <S| U_n ... U_{k+1}, shape (4, 81)
    bwd[n] = eye[LOGIC_INDICES, :]
    for k in range(n - 1, -1, -1):
        bwd[k] = bwd[k + 1] @ units[k]

    diff = fwd[n][LOGIC_INDICES, :] - target.matrix
    c = float(np.sum(np.abs(diff) ** 2))

    grad = np.zeros(len(v))
    for pi, (bi, si, tag, which) in enumerate(_param_positions(spec)):
        k = bi * n_sec + si
        du = assemble_layer_dj(
            tag, spec.blocks[bi], spec, which, spec.duration(bi, si)
        )
        sand = bwd[k + 1] @ (du @ fwd[k])
        grad[pi] = 2.0 * float(np.sum(np.real(diff.conj() * sand)))
    return c, grad


def cost_gradient(
    v: np.ndarray, template: CircuitSpec, target: TargetGate
) -> np.ndarray:
    """Analytic gradient of :func:`cost` w.r.t. the packed parameters."""
    return cost_value_and_grad(v, template, target)[1]


def gate_report(u: np.ndarray, target: TargetGate) -> GateReport:
    return GateReport(
        cost=cost(u, target),
        fidelity=avg_gate_fidelity(u, target),
        leakage=leakage(u),
        logic_submatrix=logic_submatrix(u),
    )


def two_photon_indices() -> np.ndarray:
    """Indices of all total-photon-number-2 states, canonical order."""
    idx = [
        i
        for i in range(DIM)
        if sum(occupation_of(i, BASIS_4CH)) == 2
    ]
    return np.array(idx)
