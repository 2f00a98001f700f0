"""Closed-form sector unitaries for one and two coupled channels.

A free-propagation (FP) sector is a single channel with linear phase
``omega`` and Kerr shift ``u``; its propagator is diagonal on
{|0>, |1>, |2>}.  A hopping-region (HR) sector couples two adjacent
channels with rate ``j``; its 9x9 propagator is block diagonal in total
photon number.  The two-photon block is the exact exponential of the
Hamiltonian; the 3- and 4-photon coefficients are exact exponentials of
the cutoff-2 truncated Hamiltonian (those amplitudes are never reached
when at most two photons are injected).

An eigendecomposition-based matrix exponential is provided as an
independent oracle for testing the closed forms, together with the
analytic derivative of the HR propagator with respect to the hopping
rate (used by the optimizer's gradient).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FpLayerParams",
    "HrLayerParams",
    "u_fp",
    "u_hr",
    "hamiltonian_fp",
    "hamiltonian_hr",
    "expm_oracle",
    "d_u_hr_dj",
]

# Truncated single-mode annihilation operator on {|0>,|1>,|2>}.
A_TRUNC = np.diag(np.sqrt([1.0, 2.0]), k=1).astype(complex)
N_TRUNC = A_TRUNC.conj().T @ A_TRUNC

_SMALL = 1e-8  # |Omega*t| below this uses series limits for sin/Omega terms


@dataclass(frozen=True)
class FpLayerParams:
    """Free-propagation sector: channel energy, Kerr shift, duration."""

    omega: float
    u: float
    t: float


@dataclass(frozen=True)
class HrLayerParams:
    """Hopping-region sector: channel energy, Kerr shift, hopping rate, duration."""

    omega: float
    u: float
    j: float
    t: float


def u_fp(p: FpLayerParams) -> np.ndarray:
    """3x3 diagonal propagator diag(1, e^{-i w t}, e^{-i 2(U+w) t})."""
    return np.diag(
        np.exp(-1j * np.array([0.0, p.omega, 2.0 * (p.u + p.omega)]) * p.t)
    )


def hamiltonian_fp(p: FpLayerParams) -> np.ndarray:
    """Single-channel Hamiltonian w*n + U*n(n-1) truncated at n=2."""
    n = np.array([0.0, 1.0, 2.0])
    return np.diag(p.omega * n + p.u * n * (n - 1.0)).astype(complex)


def hamiltonian_hr(p: HrLayerParams) -> np.ndarray:
    """Two-channel Hamiltonian with hopping, truncated at n=2 per channel."""
    eye = np.eye(3, dtype=complex)
    n1 = np.kron(N_TRUNC, eye)
    n2 = np.kron(eye, N_TRUNC)
    hop = np.kron(A_TRUNC.conj().T, A_TRUNC)
    h = (
        p.omega * (n1 + n2)
        + p.u * (n1 @ (n1 - np.eye(9)) + n2 @ (n2 - np.eye(9)))
        + p.j * (hop + hop.conj().T)
    )
    return h


def _sinc_omega(omega: float, t: float) -> float:
    """sin(Omega t)/Omega with the removable singularity at Omega=0."""
    x = omega * t
    if abs(x) < _SMALL:
        return t * (1.0 - x * x / 6.0)
    return np.sin(x) / omega


def _hr_coefficients(p: HrLayerParams) -> dict[str, complex]:
    big_omega = np.sqrt(4.0 * p.j**2 + p.u**2)
    phi = p.u + 2.0 * p.omega
    t = p.t
    s = _sinc_omega(big_omega, t)  # sin(Omega t)/Omega
    c = np.cos(big_omega * t)
    ephi = np.exp(-1j * phi * t)
    eu = np.exp(-1j * p.u * t)
    ew = np.exp(-1j * p.omega * t)
    half = 0.5 * (c - 1j * p.u * s)
    coeff = {
        "A": (c + 1j * p.u * s) * ephi,
        "B": -1j * np.sqrt(2.0) * p.j * s * ephi,
        "C": (half + 0.5 * eu) * ephi,
        "D": (half - 0.5 * eu) * ephi,
        "E": np.cos(p.j * t) * ew,
        "F": -1j * np.sin(p.j * t) * ew,
        "G": np.cos(2.0 * p.j * t) * np.exp(-1j * (3.0 * p.omega + 2.0 * p.u) * t),
        "H": -1j * np.sin(2.0 * p.j * t) * np.exp(-1j * (3.0 * p.omega + 2.0 * p.u) * t),
        "I": np.exp(-4j * (p.omega + p.u) * t),
    }
    return coeff


def _assemble_hr(co: dict[str, complex]) -> np.ndarray:
    # Basis order (mixed-radix, first channel most significant):
    # 0:|0,0> 1:|0,1> 2:|0,2> 3:|1,0> 4:|1,1> 5:|1,2> 6:|2,0> 7:|2,1> 8:|2,2>
    m = np.zeros((9, 9), dtype=complex)
    m[0, 0] = 1.0
    m[1, 1] = m[3, 3] = co["E"]
    m[1, 3] = m[3, 1] = co["F"]
    m[2, 2] = m[6, 6] = co["C"]
    m[2, 6] = m[6, 2] = co["D"]
    m[2, 4] = m[4, 2] = m[6, 4] = m[4, 6] = co["B"]
    m[4, 4] = co["A"]
    m[5, 5] = m[7, 7] = co["G"]
    m[5, 7] = m[7, 5] = co["H"]
    m[8, 8] = co["I"]
    return m


def u_hr(p: HrLayerParams) -> np.ndarray:
    """9x9 hopping-region propagator exp(-i H t), in closed form."""
    return _assemble_hr(_hr_coefficients(p))


def d_u_hr_dj(p: HrLayerParams) -> np.ndarray:
    """Entrywise derivative of :func:`u_hr` with respect to the hopping rate."""
    big_omega = np.sqrt(4.0 * p.j**2 + p.u**2)
    t = p.t
    x = big_omega * t
    s = _sinc_omega(big_omega, t)
    c = np.cos(x)
    # h = d/dOmega [sin(Omega t)/Omega] / Omega = (x cos x - sin x)/Omega^3
    if abs(x) < 1e-4:
        h = t**3 * (-1.0 / 3.0 + x * x / 30.0)
    else:
        h = (x * c - np.sin(x)) / big_omega**3
    ephi = np.exp(-1j * (p.u + 2.0 * p.omega) * t)
    ew = np.exp(-1j * p.omega * t)
    e3 = np.exp(-1j * (3.0 * p.omega + 2.0 * p.u) * t)
    # dOmega/dJ = 4J/Omega; products are regrouped so every factor stays
    # finite as Omega -> 0 (s -> t, h -> -t^3/3).
    ts = t * s  # t * sin(x)/Omega, finite for all Omega
    dA = 4.0 * p.j * (-ts + 1j * p.u * h) * ephi
    dB = -1j * np.sqrt(2.0) * (s + 4.0 * p.j**2 * h) * ephi
    dC = 2.0 * p.j * (-ts - 1j * p.u * h) * ephi
    co = {
        "A": dA,
        "B": dB,
        "C": dC,
        "D": dC,
        "E": -t * np.sin(p.j * t) * ew,
        "F": -1j * t * np.cos(p.j * t) * ew,
        "G": -2.0 * t * np.sin(2.0 * p.j * t) * e3,
        "H": -2j * t * np.cos(2.0 * p.j * t) * e3,
        "I": 0.0,
    }
    out = _assemble_hr(co)
    out[0, 0] = 0.0
    return out


def expm_oracle(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i h t) by Hermitian eigendecomposition (test oracle)."""
    h = np.asarray(h, dtype=complex)
    if np.abs(h - h.conj().T).max() > 1e-10:
        raise ValueError("expm_oracle requires a Hermitian matrix")
    evals, evecs = np.linalg.eigh(h)
    return (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T
