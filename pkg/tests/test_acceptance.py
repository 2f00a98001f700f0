"""End-to-end acceptance checks.

Each test prints one PASS/FAIL verdict line (run with `pytest -s` to see
them as they complete).  The expensive optimizations are session-scoped
fixtures shared across criteria.  Expect tens of minutes at full budget.
"""

import json

import numpy as np
import pytest

from photongate.circuit import (
    BASIS_4CH,
    BlockParams,
    CircuitSpec,
    DEFAULT_LAYER_ORDER,
    DIM,
    assemble_layer,
    sector_hamiltonians,
    total_unitary,
    unpack_params,
)
from photongate.cli import main as cli_main
from photongate.fockspace import occupation_of
from photongate.layers import (
    HrLayerParams,
    expm_oracle,
    hamiltonian_fp,
    hamiltonian_hr,
    u_fp,
    u_hr,
    FpLayerParams,
)
from photongate.lindblad import (
    NoiseConfig,
    decay_fit,
    evolve_circuit_open,
    gamma0,
    state_fidelity,
)
from photongate.objective import (
    LOGIC_INDICES,
    avg_gate_fidelity,
    cost,
    cost_value_and_grad,
    leakage,
    target_gate,
)
from photongate.optimizer import OptimizerConfig, multi_restart_optimize
from photongate.robustness import NoiseSpec, monte_carlo_fidelity


def verdict(number: int, description: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"\nACCEPTANCE {number}: {status} - {description}{suffix}")
    assert ok, f"criterion {number} failed: {description}{suffix}"


def zero_template(blocks: int, u: float) -> CircuitSpec:
    return CircuitSpec(blocks=(BlockParams(0, 0, 0, 0, 0),) * blocks, u=u)


@pytest.fixture(scope="session")
def cnot_opt():
    template = zero_template(20, 0.5)
    report = multi_restart_optimize(
        template, target_gate("cnot"), OptimizerConfig(restarts=20, seed=0)
    )
    spec = unpack_params(report.best_params, template)
    return template, report, spec, total_unitary(spec)


@pytest.fixture(scope="session")
def ms_opt():
    template = zero_template(18, 0.5)
    report = multi_restart_optimize(
        template, target_gate("ms"), OptimizerConfig(restarts=20, seed=0)
    )
    return report


@pytest.fixture(scope="session")
def cnot_logic_input():
    """|11> input, its density matrix, and the ideal CNOT output state."""
    psi_in = np.zeros(DIM, dtype=complex)
    psi_in[LOGIC_INDICES[3]] = 1.0
    psi_ideal = np.zeros(DIM, dtype=complex)
    psi_ideal[LOGIC_INDICES] = target_gate("cnot").matrix[:, 3]
    return psi_in, np.outer(psi_in, psi_in.conj()), psi_ideal


def test_01_closed_forms_vs_oracle():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(100):
        omega, u, j = rng.uniform(-10, 10, 3)
        t = rng.uniform(0, 10)
        hp = HrLayerParams(omega, u, j, t)
        fp = FpLayerParams(omega, u, t)
        worst = max(
            worst,
            np.max(np.abs(u_hr(hp) - expm_oracle(hamiltonian_hr(hp), t))),
            np.max(np.abs(u_fp(fp) - expm_oracle(hamiltonian_fp(fp), t))),
        )
    verdict(1, "closed-form sector unitaries match the matrix-exponential "
               "oracle to 1e-10 over 100 draws", worst <= 1e-10, f"max dev {worst:.2e}")


def test_02_unitarity_and_number_conservation():
    rng = np.random.default_rng(2)
    totals = np.array([sum(occupation_of(i, BASIS_4CH)) for i in range(DIM)])
    mask = totals[:, None] != totals[None, :]
    worst_unit, worst_mix = 0.0, 0.0
    for _ in range(10):
        spec = CircuitSpec(
            blocks=(BlockParams(*rng.uniform(0, 1, 5)),), u=rng.uniform(0, 2),
            omega=rng.uniform(0, 1),
        )
        for tag in DEFAULT_LAYER_ORDER:
            m = assemble_layer(tag, spec.blocks[0], spec)
            worst_unit = max(worst_unit, np.max(np.abs(m.conj().T @ m - np.eye(DIM))))
            worst_mix = max(worst_mix, np.max(np.abs(m[mask])))
    ok = worst_unit <= 1e-9 and worst_mix <= 1e-12
    verdict(2, "every assembled propagator is unitary (1e-9) and conserves "
               "total photon number (1e-12)", ok,
            f"unitarity {worst_unit:.2e}, mixing {worst_mix:.2e}")


def test_03_gradient_vs_finite_differences():
    rng = np.random.default_rng(3)
    template = zero_template(5, 0.5)
    t = target_gate("cnot")
    step = 1e-6
    worst = 0.0
    for _ in range(20):
        v = rng.uniform(0.05, 0.95, 25)
        _, g = cost_value_and_grad(v, template, t)
        for k in range(25):
            vp, vm = v.copy(), v.copy()
            vp[k] += step
            vm[k] -= step
            fd = (
                cost(total_unitary(unpack_params(vp, template)), t)
                - cost(total_unitary(unpack_params(vm, template)), t)
            ) / (2 * step)
            if abs(g[k]) > 1e-10:
                worst = max(worst, abs(g[k] - fd) / abs(g[k]))
    verdict(3, "analytic cost gradient matches central finite differences to "
               "relative error 1e-6 at 20 points", worst <= 1e-6, f"worst {worst:.2e}")


def test_04_cnot_reproduction(cnot_opt):
    _, report, _, u_tot = cnot_opt
    leak = leakage(u_tot)
    ok = report.best_fidelity >= 0.995 and report.best_cost <= 1e-2 and leak <= 1e-3
    verdict(4, "optimized CNOT (20 blocks, U=0.5, 20 restarts) reaches "
               "fidelity >= 0.995, cost <= 1e-2, leakage <= 1e-3", ok,
            f"fidelity {report.best_fidelity:.6f}, cost {report.best_cost:.2e}, "
            f"leakage {leak:.2e}")


def test_05_ms_reproduction(ms_opt):
    verdict(5, "optimized Molmer-Sorensen RXX(pi/2) (18 blocks, U=0.5) reaches "
               "fidelity >= 0.995", ms_opt.best_fidelity >= 0.995,
            f"fidelity {ms_opt.best_fidelity:.6f}")


def test_06_nonlinearity_dependence(cnot_opt):
    _, mid, _, _ = cnot_opt
    t = target_gate("cnot")
    cfg = OptimizerConfig(restarts=20, seed=0)
    low = multi_restart_optimize(zero_template(20, 0.0), t, cfg)
    high = multi_restart_optimize(zero_template(20, 10.0), t, cfg)
    ok = (
        low.best_cost >= 10.0 * mid.best_cost
        and mid.best_fidelity > low.best_fidelity
        and mid.best_fidelity > high.best_fidelity
    )
    verdict(6, "equal-budget sweep: cost(U=0) >= 10x cost(U=0.5) and the "
               "intermediate nonlinearity wins on fidelity", ok,
            f"costs {low.best_cost:.2e}/{mid.best_cost:.2e}, fidelities "
            f"{low.best_fidelity:.4f}/{mid.best_fidelity:.4f}/{high.best_fidelity:.4f}")


def test_07_loss_decay_law(cnot_opt, cnot_logic_input):
    _, _, spec, u_tot = cnot_opt
    psi_in, rho0, psi_ideal = cnot_logic_input
    g0 = gamma0(spec)
    f_unitary = abs(np.vdot(psi_ideal, u_tot @ psi_in)) ** 2
    samples = []
    for g in np.linspace(0.0, 1.0, 11):
        rho = evolve_circuit_open(rho0, spec, NoiseConfig(gamma=g * g0))
        samples.append((g, state_fidelity(rho, psi_ideal)))
    f0 = samples[0][1]
    _, rate, _ = decay_fit(samples)
    rescale_dev = max(abs(f * np.exp(2 * g) - f0) / f0 for g, f in samples)
    closed_err = abs(f0 - f_unitary)
    ok = abs(rate - 2.0) <= 0.02 and rescale_dev <= 0.01 and closed_err <= 1e-6
    verdict(7, "loss sweep follows F0*exp(-2 gamma/gamma0): rate 2.00 +/- 0.02, "
               "rescaled fidelity within 1%, closed limit within 1e-6", ok,
            f"rate {rate:.5f}, rescaled dev {rescale_dev:.2e}, closed err {closed_err:.2e}")


def test_08_two_photon_selectivity(cnot_opt, cnot_logic_input):
    _, _, spec, _ = cnot_opt
    _, rho0, _ = cnot_logic_input
    rho = evolve_circuit_open(rho0, spec, NoiseConfig(gamma=0.5 * gamma0(spec)))
    pops = np.real(np.diag(rho))[LOGIC_INDICES]
    # ideal CNOT maps |11> -> |10>, computational index 2
    non_target = np.delete(pops, 2)
    verdict(8, "under loss at gamma/gamma0=0.5 from |11>, the non-target "
               "computational populations stay <= 1e-3",
            float(non_target.max()) <= 1e-3, f"max {non_target.max():.2e}")


def test_09_dephasing_threshold(cnot_opt, cnot_logic_input):
    _, _, spec, u_tot = cnot_opt
    psi_in, rho0, psi_ideal = cnot_logic_input
    g0 = gamma0(spec)
    f_closed = abs(np.vdot(psi_ideal, u_tot @ psi_in)) ** 2
    drops = {}
    for gd in (1e-4, 1e-2):
        rho = evolve_circuit_open(rho0, spec, NoiseConfig(gamma_deph=gd * g0))
        drops[gd] = f_closed - state_fidelity(rho, psi_ideal)
    ok = drops[1e-4] < 1e-2 and drops[1e-2] > 1e-2
    verdict(9, "pure dephasing: fidelity drop < 1e-2 at gamma_deph/gamma0 = 1e-4 "
               "and > 1e-2 at 1e-2", ok,
            f"drops {drops[1e-4]:.2e} / {drops[1e-2]:.2e}")


def test_10_static_noise_tolerance(cnot_opt):
    _, _, spec, u_tot = cnot_opt
    t = target_gate("cnot")
    f0 = avg_gate_fidelity(u_tot, t)
    devs = {}
    for n_max in (0.001, 0.01):
        rep = monte_carlo_fidelity(spec, t, NoiseSpec(n_max=n_max, samples=20, seed=0))
        devs[n_max] = abs(rep.mean - f0)
    ok = devs[0.001] <= 1e-3 and devs[0.01] <= 1e-2
    verdict(10, "20-sample static-noise Monte Carlo: mean fidelity within 1e-3 "
                "of noiseless at n_max=0.001 and within 1e-2 at 0.01", ok,
            f"deviations {devs[0.001]:.2e} / {devs[0.01]:.2e}")


def test_11_rx_gate_contract():
    omega, t = 0.37, 1.0
    worst = 0.0
    for theta in (0.0, np.pi / 2, np.pi, 2 * np.pi):
        m = u_hr(HrLayerParams(omega, 0.8, theta / 2.0 / t, t))
        # single-photon block on {|0,1>, |1,0>} versus RX(theta) up to e^{-i omega t}
        block = np.array([[m[1, 1], m[1, 3]], [m[3, 1], m[3, 3]]])
        rx = np.array(
            [
                [np.cos(theta / 2), -1j * np.sin(theta / 2)],
                [-1j * np.sin(theta / 2), np.cos(theta / 2)],
            ]
        )
        worst = max(worst, np.max(np.abs(block - np.exp(-1j * omega * t) * rx)))
    verdict(11, "a single hopping sector with Jt = theta/2 realizes RX(theta) on "
                "the single-photon subspace up to the global phase e^{-i omega t}",
            worst <= 1e-10, f"max dev {worst:.2e}")


def test_12_manifest_determinism(tmp_path):
    first = tmp_path / "opt1"
    assert cli_main(
        ["optimize", "--target", "cnot", "--blocks", "1", "--u", "0.5",
         "--restarts", "2", "--seed", "7", "--out-dir", str(first)]
    ) == 0
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "lindblad": {"gamma_grid": [0.0, 0.3], "gamma_deph_grid": [0.0],
                     "input_states": ["11"]},
        "robustness": {"n_max_list": [0.01], "samples": 3,
                       "targets": ["J", "T_HR", "T_FP"]},
    }))
    identical = True
    runs = {"optimize": first}
    for command in ("lindblad", "robustness"):
        out = tmp_path / command
        argv = [command, "--params", str(first / "circuit.json"), "--target", "cnot",
                "--config", str(cfg), "--seed", "5", "--out-dir", str(out)]
        assert cli_main(argv) == 0
        runs[command] = out
    # replay every run from its manifest into a fresh directory
    for command, out in runs.items():
        replay = tmp_path / f"{command}_replay"
        argv = [command, "--config", str(out / "manifest.json"),
                "--out-dir", str(replay)]
        if command != "optimize":
            argv += ["--params", str(first / "circuit.json")]
        assert cli_main(argv) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        for name in manifest["outputs"]:
            if (out / name).read_bytes() != (replay / name).read_bytes():
                identical = False
    verdict(12, "re-running commands from their manifests reproduces every "
                "numeric output byte-identically", identical)
