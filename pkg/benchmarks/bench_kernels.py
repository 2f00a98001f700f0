"""Benchmark the compiled kernels against the pure-numpy fallback paths.

Covers the two hot paths: the cost+gradient evaluation driving the
optimizer, and one open-system circuit evolution.  Run with

    python benchmarks/bench_kernels.py

The compiled path requires numba; set PHOTONGATE_NUMBA=0 to verify the
fallback in isolation (the script then skips the comparison).
"""

import time

import numpy as np

from photongate import _kernels
from photongate.circuit import BlockParams, CircuitSpec
from photongate.lindblad import NoiseConfig, evolve_circuit_open, gamma0
from photongate.objective import (
    LOGIC_INDICES,
    _cost_value_and_grad_numpy,
    cost_value_and_grad,
    target_gate,
)

BLOCKS = 20
REPEATS = 20


def timeit(fn, repeats):
    fn()  # warmup (includes JIT compilation on the compiled path)
    t0 = time.perf_counter()
    for _ in range(repeats):
        result = fn()
    return (time.perf_counter() - t0) / repeats, result


def main() -> None:
    rng = np.random.default_rng(0)
    template = CircuitSpec(blocks=(BlockParams(0, 0, 0, 0, 0),) * BLOCKS, u=0.5)
    target = target_gate("cnot")
    v = rng.uniform(0, 1, 5 * BLOCKS)

    print(f"cost+gradient, {BLOCKS} blocks ({5 * BLOCKS} parameters):")
    t_np, (c_np, g_np) = timeit(
        lambda: _cost_value_and_grad_numpy(v, template, target), REPEATS
    )
    print(f"  numpy fallback : {t_np * 1e3:8.2f} ms")
    if _kernels.cost_grad_core is not None:
        t_nb, (c_nb, g_nb) = timeit(
            lambda: cost_value_and_grad(v, template, target), REPEATS
        )
        print(f"  compiled kernel: {t_nb * 1e3:8.2f} ms  ({t_np / t_nb:.1f}x)")
        print(f"  value agreement: {abs(c_np - c_nb):.2e}, "
              f"gradient agreement: {np.max(np.abs(g_np - g_nb)):.2e}")
    else:
        print("  compiled kernel: disabled (PHOTONGATE_NUMBA=0 or numba missing)")

    spec = CircuitSpec(
        blocks=tuple(BlockParams(*rng.uniform(0, 1, 5)) for _ in range(2)), u=0.5
    )
    noise = NoiseConfig(gamma=0.5 * gamma0(spec), gamma_deph=0.01 * gamma0(spec))
    psi = np.zeros(81, dtype=complex)
    psi[LOGIC_INDICES[3]] = 1.0
    rho0 = np.outer(psi, psi.conj())

    print(f"\nopen-system evolution, {len(spec.blocks)} blocks "
          f"({8 * len(spec.blocks)} sectors):")
    if _kernels.integrate_sector is not None:
        t_nb, rho_nb = timeit(lambda: evolve_circuit_open(rho0, spec, noise), 3)
        print(f"  compiled kernel: {t_nb * 1e3:8.1f} ms")
        saved = _kernels.integrate_sector
        try:
            _kernels.integrate_sector = None
            t_np, rho_np = timeit(lambda: evolve_circuit_open(rho0, spec, noise), 3)
        finally:
            _kernels.integrate_sector = saved
        print(f"  numpy fallback : {t_np * 1e3:8.1f} ms  "
              f"(kernel is {t_np / t_nb:.1f}x faster)")
        print(f"  state agreement: {np.max(np.abs(rho_nb - rho_np)):.2e}")
    else:
        t_np, _ = timeit(lambda: evolve_circuit_open(rho0, spec, noise), 3)
        print(f"  numpy fallback : {t_np * 1e3:8.1f} ms (compiled kernel disabled)")


if __name__ == "__main__":
    main()
