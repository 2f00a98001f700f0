"""Open-system evolution under loss, thermal noise, and pure dephasing.

The density matrix is propagated sector-by-sector through the circuit,
holding each sector's Hamiltonian constant over its duration, with an
adaptive Dormand-Prince 5(4) integrator.  Dissipators are the standard
Lindblad forms: per-channel annihilation operators at rate
gamma*(n_B+1), creation operators at rate gamma*n_B, and photon-number
operators at the pure dephasing rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from photongate import _kernels
from photongate.circuit import (
    CHANNEL_ANNIHILATION,
    CHANNEL_NUMBER,
    CircuitSpec,
    DIM,
    sector_hamiltonians,
    total_time,
)

__all__ = [
    "NoiseConfig",
    "IntegratorConfig",
    "bose_occupation",
    "thermal_rates",
    "liouvillian_apply",
    "evolve_circuit_open",
    "state_fidelity",
    "gamma0",
    "decay_fit",
]


@dataclass(frozen=True)
class NoiseConfig:
    """Rates of the three noise channels (per unit circuit time)."""

    gamma: float = 0.0
    gamma_deph: float = 0.0
    temperature: float = 0.0
    omega_physical: float = 1.0

    def __post_init__(self) -> None:
        if self.gamma < 0 or self.gamma_deph < 0 or self.temperature < 0:
            raise ValueError("noise rates and temperature must be nonnegative")


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tolerance: float = 1e-8
    abs_tolerance: float = 1e-10
    initial_step: float = 1e-2
    max_step: float = np.inf


def bose_occupation(omega: float, temperature: float) -> float:
    """Bose-Einstein mean occupation at energy omega (same units as k_B T)."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    if temperature == 0.0:
        return 0.0
    return 1.0 / np.expm1(omega / temperature)


def thermal_rates(config: NoiseConfig) -> tuple[float, float]:
    """(gamma_minus, gamma_plus) = (gamma*(n_B+1), gamma*n_B)."""
    n_b = bose_occupation(config.omega_physical, config.temperature)
    return config.gamma * (n_b + 1.0), config.gamma * n_b


def _collapse_operators(config: NoiseConfig):
    """Stacked collapse operators and their rates for the 4-channel space."""
    gamma_minus, gamma_plus = thermal_rates(config)
    c_ops, rates = [], []
    for a in CHANNEL_ANNIHILATION:
        c_ops.append(a)
        rates.append(gamma_minus)
    for a in CHANNEL_ANNIHILATION:
        c_ops.append(a.conj().T)
        rates.append(gamma_plus)
    for n in CHANNEL_NUMBER:
        c_ops.append(n)
        rates.append(config.gamma_deph)
    c = np.ascontiguousarray(np.stack(c_ops))
    cd = np.ascontiguousarray(c.conj().transpose(0, 2, 1))
    cdc = np.ascontiguousarray(np.einsum("kij,kjl->kil", cd, c))
    return c, cd, cdc, np.array(rates)


def _collapse_coo(config: NoiseConfig):
    """Collapse operators in concatenated COO form for the compiled kernel.

    Zero-rate operators are dropped.  All collapse operators here (a,
    a^+, n) have diagonal C^+C; the rate-weighted sum of those diagonals
    is returned separately so the kernel applies the anticommutator
    elementwise.
    """
    c_ops, _, cdc_ops, rates = _collapse_operators(config)
    offs = [0]
    rows, cols, vals, kept = [], [], [], []
    diag = np.zeros(DIM)
    for k in range(len(rates)):
        diag += rates[k] * cdc_ops[k].diagonal().real
        if rates[k] == 0.0:
            continue
        r, c = np.nonzero(c_ops[k])
        rows.append(r)
        cols.append(c)
        vals.append(c_ops[k][r, c])
        kept.append(rates[k])
        offs.append(offs[-1] + len(r))
    if kept:
        rows = np.concatenate(rows).astype(np.int64)
        cols = np.concatenate(cols).astype(np.int64)
        vals = np.concatenate(vals).astype(np.complex128)
    else:
        rows = np.zeros(0, dtype=np.int64)
        cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0, dtype=np.complex128)
    return (
        np.array(offs, dtype=np.int64),
        rows,
        cols,
        vals,
        np.array(kept),
        diag,
    )


def liouvillian_apply(
    rho: np.ndarray, h: np.ndarray, config: NoiseConfig
) -> np.ndarray:
    """Right-hand side of the master equation, d(rho)/dt."""
    c, cd, cdc, rates = _collapse_operators(config)
    return _rhs_numpy(rho, h, c, cd, cdc, rates)


def _rhs_numpy(rho, h, c_ops, cd_ops, cdc_ops, rates):
    out = -1j * (h @ rho - rho @ h)
    for k in range(len(rates)):
        if rates[k] != 0.0:
            out += rates[k] * (
                c_ops[k] @ rho @ cd_ops[k]
                - 0.5 * (cdc_ops[k] @ rho + rho @ cdc_ops[k])
            )
    return out


def _integrate_sector_numpy(
    rho, h, c_ops, cd_ops, cdc_ops, rates, duration, rtol, atol, h0, hmax
):
    """Vectorized numpy twin of the compiled DP5(4) sector integrator."""
    a = _kernels._DP_A
    b5 = _kernels._DP_B5
    b4 = _kernels._DP_B4
    db = b5 - b4
    t = 0.0
    step = min(h0, duration)
    k = [None] * 7
    k[0] = _rhs_numpy(rho, h, c_ops, cd_ops, cdc_ops, rates)
    err_prev = 1.0
    while t < duration:
        step = min(step, duration - t)
        if step < 1e-12 * duration:
            return rho, step, 1
        for i in range(1, 6):
            y = rho + step * sum(a[i, j] * k[j] for j in range(i) if a[i, j] != 0.0)
            k[i] = _rhs_numpy(y, h, c_ops, cd_ops, cdc_ops, rates)
        y5 = rho + step * sum(b5[j] * k[j] for j in range(6) if b5[j] != 0.0)
        k[6] = _rhs_numpy(y5, h, c_ops, cd_ops, cdc_ops, rates)
        errmat = step * sum(db[j] * k[j] for j in range(7) if db[j] != 0.0)
        scale = atol + rtol * np.maximum(np.abs(rho), np.abs(y5))
        err = np.sqrt(np.mean(np.abs(errmat / scale) ** 2))
        if err <= 1.0:
            t += step
            rho = y5
            k[0] = k[6]
            err = max(err, 1e-10)
            fac = 0.9 * err ** (-0.7 / 5.0) * err_prev ** (0.4 / 5.0)
            err_prev = err
            step *= min(5.0, max(0.2, fac))
        else:
            step *= min(1.0, max(0.2, 0.9 * err ** (-0.2)))
        step = min(step, hmax)
    return rho, step, 0


def evolve_circuit_open(
    rho0: np.ndarray,
    spec: CircuitSpec,
    noise: NoiseConfig,
    integ: IntegratorConfig = IntegratorConfig(),
) -> np.ndarray:
    """Propagate a density matrix through the full circuit with noise."""
    rho = np.ascontiguousarray(rho0, dtype=complex)
    if rho.shape != (DIM, DIM):
        raise ValueError(f"density matrix must be {DIM}x{DIM}")
    use_kernel = _kernels.integrate_sector is not None
    if use_kernel:
        offs, rows, cols, vals, rates, diag = _collapse_coo(noise)
        args = (offs, rows, cols, vals, rates, diag)
        integrate = _kernels.integrate_sector
    else:
        c, cd, cdc, rates = _collapse_operators(noise)
        args = (c, cd, cdc, rates)
        integrate = _integrate_sector_numpy
    step = integ.initial_step
    for si, sd in enumerate(sector_hamiltonians(spec)):
        h = np.ascontiguousarray(sd.hamiltonian)
        rho, step, status = integrate(
            rho,
            h,
            *args,
            sd.duration,
            integ.rel_tolerance,
            integ.abs_tolerance,
            step,
            integ.max_step,
        )
        if status != 0:
            raise RuntimeError(f"step size underflow in sector {si}")
    return rho


def state_fidelity(rho: np.ndarray, pure_target: np.ndarray) -> float:
    """<psi|rho|psi> for a normalized pure target state."""
    psi = np.asarray(pure_target, dtype=complex)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"target state norm {norm} is not 1")
    val = np.vdot(psi, rho @ psi)
    return float(val.real)


def gamma0(spec: CircuitSpec) -> float:
    """Natural loss-rate unit 1/t_tot of a circuit."""
    return 1.0 / total_time(spec)


def decay_fit(samples) -> tuple[float, float, float]:
    """Fit F = F0 * exp(-r * x) in log space.

    `samples` is a list of (x, fidelity) pairs; returns (F0, r,
    max relative residual of the fit).
    """
    xs = np.array([s[0] for s in samples], dtype=float)
    fs = np.array([s[1] for s in samples], dtype=float)
    if len(xs) < 3 or len(np.unique(xs)) < 3:
        raise ValueError("need at least 3 samples with distinct abscissae")
    if np.any(fs <= 0):
        raise ValueError("fidelity samples must be positive for a log-space fit")
    slope, intercept = np.polyfit(xs, np.log(fs), 1)
    f0 = float(np.exp(intercept))
    rate = float(-slope)
    fitted = f0 * np.exp(-rate * xs)
    max_resid = float(np.max(np.abs(fitted - fs) / fs))
    return f0, rate, max_resid
