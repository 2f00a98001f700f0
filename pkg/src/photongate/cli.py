"""Command-line front end: optimize, sweep, evaluate, lindblad, robustness.

Every command reads a JSON config (CLI flags win over config values),
writes its artifacts atomically into --out-dir, and records a manifest
from which the run can be reproduced byte-identically (wall time
excluded).  Numeric text output carries 17 significant digits.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import os
import sys
import tempfile
import time
from itertools import product

import numpy as np

import photongate
from photongate.circuit import (
    BASIS_4CH,
    BlockParams,
    CircuitSpec,
    DEFAULT_LAYER_ORDER,
    PARAM_NAMES,
    pack_params,
    total_unitary,
    unpack_params,
)
from photongate.fockspace import occupation_of
from photongate.lindblad import (
    IntegratorConfig,
    NoiseConfig,
    evolve_circuit_open,
    gamma0,
    state_fidelity,
)
from photongate.objective import (
    LOGIC_INDICES,
    gate_report,
    target_gate,
    two_photon_indices,
)
from photongate.optimizer import OptimizerConfig, multi_restart_optimize
from photongate.robustness import NoiseSpec, monte_carlo_fidelity

SCHEMA_VERSION = 1

DEFAULT_CONFIG = {
    "schema_version": SCHEMA_VERSION,
    "target": "cnot",
    "blocks": 20,
    "u_over_jmax": 0.5,
    "jmax": 1.0,
    "omega": 0.0,
    "sector_time": 1.0,
    "layer_order": list(DEFAULT_LAYER_ORDER),
    "params": None,  # path to a circuit JSON / parameter CSV from a prior run
    "optimizer": {
        "restarts": 20,
        "memory": 10,
        "max_iterations": 1000,
        "grad_tolerance": 1e-10,
        "cost_tolerance": 1e-14,
        "init_mean": None,
        "init_std": None,
    },
    "sweep": {
        "u_grid": [0.0, 0.5],
        "blocks_grid": [20],
    },
    "lindblad": {
        "gamma_grid": [0.0, 0.5, 1.0],
        "gamma_deph_grid": [0.0],
        "temperature": 0.0,
        "rtol": 1e-8,
        "atol": 1e-10,
        "input_states": ["00", "01", "10", "11"],
    },
    "robustness": {
        "n_max_list": [0.001, 0.01, 0.05],
        "targets": ["J", "T_HR", "T_FP"],
        "samples": 20,
    },
}


class UsageError(Exception):
    """Bad invocation: malformed config, unknown keys, mismatched inputs."""


# ---------------------------------------------------------------------------
# formatting / file plumbing


def fmt(x: float) -> str:
    """Full-precision (17 significant digit) decimal text."""
    return format(float(x), ".17g")


def atomic_write(path: str, text: str) -> None:
    """Write via temp file + rename so readers never see partial content."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: str, header: list[str], rows: list[list[str]]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    atomic_write(path, "\n".join(lines) + "\n")


def write_json(path: str, doc) -> None:
    atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def matrix_csv_rows(m: np.ndarray, labels: list[str]) -> tuple[list[str], list[list[str]]]:
    header = ["state"] + labels
    rows = [[labels[i]] + [fmt(m[i, j]) for j in range(m.shape[1])] for i in range(m.shape[0])]
    return header, rows


# ---------------------------------------------------------------------------
# config handling


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = dict(base)
    for key, val in override.items():
        if key not in base:
            raise UsageError(f"unknown config key: {path}{key}")
        if isinstance(base[key], dict) and isinstance(val, dict):
            out[key] = _merge(base[key], val, f"{path}{key}.")
        else:
            out[key] = val
    return out


def load_config(args: argparse.Namespace) -> tuple[dict, int]:
    """Resolve config: defaults <- config file (or manifest) <- CLI flags."""
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))
    seed = 0
    if args.config is not None:
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
        if "config" in doc and "command" in doc:  # a manifest: replay its run
            seed = doc.get("seed", 0)
            doc = doc["config"]
        version = doc.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise UsageError(f"unsupported schema_version {version}")
        cfg = _merge(cfg, doc)
    for flag, key in (
        ("target", "target"),
        ("blocks", "blocks"),
        ("u", "u_over_jmax"),
        ("params", "params"),
    ):
        val = getattr(args, flag, None)
        if val is not None:
            cfg[key] = val
    if getattr(args, "restarts", None) is not None:
        cfg["optimizer"]["restarts"] = args.restarts
    if args.seed is not None:
        seed = args.seed
    return cfg, seed


def template_spec(cfg: dict, blocks: int | None = None, u: float | None = None) -> CircuitSpec:
    m = cfg["blocks"] if blocks is None else blocks
    return CircuitSpec(
        blocks=tuple(BlockParams(0.0, 0.0, 0.0, 0.0, 0.0) for _ in range(m)),
        u=(cfg["u_over_jmax"] if u is None else u) * cfg["jmax"],
        omega=cfg["omega"],
        jmax=cfg["jmax"],
        sector_time=cfg["sector_time"],
        layer_order=tuple(cfg["layer_order"]),
    )


def optimizer_config(cfg: dict, seed: int) -> OptimizerConfig:
    o = cfg["optimizer"]
    return OptimizerConfig(
        restarts=o["restarts"],
        init_mean=o["init_mean"],
        init_std=o["init_std"],
        memory=o["memory"],
        max_iterations=o["max_iterations"],
        grad_tolerance=o["grad_tolerance"],
        cost_tolerance=o["cost_tolerance"],
        seed=seed,
    )


def load_circuit(cfg: dict) -> CircuitSpec:
    """Load a circuit from a prior run: full JSON spec or parameter CSV."""
    path = cfg["params"]
    if path is None:
        raise UsageError("this command needs --params (circuit JSON or parameter CSV)")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".json"):
        return CircuitSpec.from_json(text)
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split(",")
    if header != ["block", *PARAM_NAMES]:
        raise UsageError(f"unexpected parameter CSV header in {path}")
    values = [float(x) for ln in lines[1:] for x in ln.split(",")[1:]]
    spec = template_spec(cfg, blocks=len(lines) - 1)
    return unpack_params(np.array(values), spec)


def params_csv(spec: CircuitSpec) -> tuple[list[str], list[list[str]]]:
    header = ["block", *PARAM_NAMES]
    rows = [
        [str(bi)] + [fmt(j) for j in block.as_tuple()]
        for bi, block in enumerate(spec.blocks)
    ]
    return header, rows


def write_manifest(
    out_dir: str, command: str, cfg: dict, seed: int, outputs: list[str], t0: float
) -> str:
    path = os.path.join(out_dir, "manifest.json")
    write_json(
        path,
        {
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "config": cfg,
            "seed": seed,
            "code_version": photongate.__version__,
            "wall_time_seconds": time.perf_counter() - t0,
            "outputs": sorted(os.path.basename(p) for p in outputs),
        },
    )
    return path


def logic_state_vector(label: str) -> np.ndarray:
    """Fock-embedded computational basis state from a 2-bit label like '01'."""
    if label not in ("00", "01", "10", "11"):
        raise UsageError(f"unknown input state {label!r}")
    psi = np.zeros(81, dtype=complex)
    psi[LOGIC_INDICES[int(label, 2)]] = 1.0
    return psi


# ---------------------------------------------------------------------------
# commands


def cmd_optimize(cfg: dict, seed: int, jobs: int, out_dir: str, t0: float) -> list[str]:
    template = template_spec(cfg)
    target = target_gate(cfg["target"])
    report = multi_restart_optimize(template, target, optimizer_config(cfg, seed))
    best_spec = unpack_params(report.best_params, template)
    rep = gate_report(total_unitary(best_spec), target)

    report_doc = report.to_dict()
    del report_doc["wall_time"]  # kept out of artifacts so re-runs are byte-identical
    report_doc.update(
        target=target.name,
        blocks=len(template.blocks),
        u_over_jmax=cfg["u_over_jmax"],
        leakage=rep.leakage,
    )
    report_path = os.path.join(out_dir, "report.json")
    write_json(report_path, report_doc)
    circuit_path = os.path.join(out_dir, "circuit.json")
    atomic_write(circuit_path, best_spec.to_json() + "\n")
    csv_path = os.path.join(out_dir, "params.csv")
    write_csv(csv_path, *params_csv(best_spec))
    print(
        f"optimize: target={target.name} blocks={len(template.blocks)} "
        f"best_cost={report.best_cost:.3e} fidelity={report.best_fidelity:.6f} "
        f"leakage={rep.leakage:.3e}"
    )
    return [report_path, circuit_path, csv_path]


def _sweep_cell(cfg: dict, seed: int, u: float, blocks: int, out_dir: str) -> dict:
    key_doc = {
        k: cfg[k]
        for k in ("target", "jmax", "omega", "sector_time", "layer_order", "optimizer")
    }
    key_doc.update(u_over_jmax=u, blocks=blocks, seed=seed)
    cell_key = hashlib.sha256(
        json.dumps(key_doc, sort_keys=True).encode()
    ).hexdigest()[:16]
    cell_path = os.path.join(out_dir, "cells", f"u{fmt(u)}_m{blocks}.json")
    if os.path.exists(cell_path):
        with open(cell_path, encoding="utf-8") as fh:
            doc = json.load(fh)
        if doc.get("cell_key") == cell_key:
            return doc  # already computed with identical settings: resume
    template = template_spec(cfg, blocks=blocks, u=u)
    target = target_gate(cfg["target"])
    report = multi_restart_optimize(template, target, optimizer_config(cfg, seed))
    doc = {
        "cell_key": cell_key,
        "u_over_jmax": u,
        "blocks": blocks,
        "best_cost": report.best_cost,
        "best_fidelity": report.best_fidelity,
        "best_params": [repr(x) for x in report.best_params.tolist()],
    }
    write_json(cell_path, doc)
    return doc


def cmd_sweep(cfg: dict, seed: int, jobs: int, out_dir: str, t0: float) -> list[str]:
    cells = list(product(cfg["sweep"]["u_grid"], cfg["sweep"]["blocks_grid"]))
    if not cells:
        raise UsageError("sweep grids must be non-empty")
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(
            pool.map(lambda c: _sweep_cell(cfg, seed, c[0], c[1], out_dir), cells)
        )
    results.sort(key=lambda d: (d["u_over_jmax"], d["blocks"]))
    rows = [
        [fmt(d["u_over_jmax"]), str(d["blocks"]), fmt(d["best_cost"]), fmt(d["best_fidelity"])]
        for d in results
    ]
    csv_path = os.path.join(out_dir, "sweep.csv")
    write_csv(csv_path, ["u_over_jmax", "blocks", "best_cost", "best_fidelity"], rows)
    for row in rows:
        print("sweep: " + " ".join(row))
    return [csv_path]


def cmd_evaluate(cfg: dict, seed: int, jobs: int, out_dir: str, t0: float) -> list[str]:
    spec = load_circuit(cfg)
    target = target_gate(cfg["target"])
    u_tot = total_unitary(spec)
    rep = gate_report(u_tot, target)

    report_path = os.path.join(out_dir, "evaluate_report.json")
    write_json(
        report_path,
        {
            "target": target.name,
            "blocks": len(spec.blocks),
            "u_over_jmax": spec.u / spec.jmax,
            "cost": rep.cost,
            "fidelity": rep.fidelity,
            "leakage": rep.leakage,
            "logic_submatrix_real": [[fmt(x) for x in row] for row in rep.logic_submatrix.real],
            "logic_submatrix_imag": [[fmt(x) for x in row] for row in rep.logic_submatrix.imag],
        },
    )
    tp_idx = two_photon_indices()
    labels = ["".join(map(str, occupation_of(i, BASIS_4CH))) for i in tp_idx]
    sub = u_tot[np.ix_(tp_idx, tp_idx)]
    real_path = os.path.join(out_dir, "two_photon_real.csv")
    imag_path = os.path.join(out_dir, "two_photon_imag.csv")
    write_csv(real_path, *matrix_csv_rows(sub.real, labels))
    write_csv(imag_path, *matrix_csv_rows(sub.imag, labels))
    print(
        f"evaluate: cost={rep.cost:.3e} fidelity={rep.fidelity:.6f} "
        f"leakage={rep.leakage:.3e}"
    )
    return [report_path, real_path, imag_path]


def cmd_lindblad(cfg: dict, seed: int, jobs: int, out_dir: str, t0: float) -> list[str]:
    spec = load_circuit(cfg)
    target = target_gate(cfg["target"])
    lb = cfg["lindblad"]
    g0 = gamma0(spec)
    integ = IntegratorConfig(rel_tolerance=lb["rtol"], abs_tolerance=lb["atol"])

    points = list(product(lb["gamma_grid"], lb["gamma_deph_grid"], lb["input_states"]))

    def run_point(pt):
        g, gd, label = pt
        psi_in = logic_state_vector(label)
        psi_ideal = np.zeros(81, dtype=complex)
        psi_ideal[LOGIC_INDICES] = target.matrix[:, int(label, 2)]
        noise = NoiseConfig(
            gamma=g * g0, gamma_deph=gd * g0, temperature=lb["temperature"]
        )
        rho = evolve_circuit_open(np.outer(psi_in, psi_in.conj()), spec, noise, integ)
        raw = state_fidelity(rho, psi_ideal)
        return g, gd, label, raw, raw * np.exp(2.0 * g)

    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(run_point, points))
    results.sort(key=lambda r: (r[0], r[1], r[2]))
    rows = [
        [fmt(g), fmt(gd), label, fmt(raw), fmt(resc)]
        for g, gd, label, raw, resc in results
    ]
    csv_path = os.path.join(out_dir, "lindblad.csv")
    write_csv(
        csv_path,
        ["gamma_over_gamma0", "gamma_deph_over_gamma0", "input_state", "raw_fidelity", "rescaled_fidelity"],
        rows,
    )
    for row in rows:
        print("lindblad: " + " ".join(row))
    return [csv_path]


def cmd_robustness(cfg: dict, seed: int, jobs: int, out_dir: str, t0: float) -> list[str]:
    spec = load_circuit(cfg)
    target = target_gate(cfg["target"])
    rb = cfg["robustness"]
    target_sets = rb["targets"]
    if target_sets and isinstance(target_sets[0], str):
        target_sets = [target_sets]  # single set given as a flat list

    rows: list[list[str]] = []
    for n_max in rb["n_max_list"]:
        for tset in target_sets:
            noise = NoiseSpec(
                n_max=n_max, targets=tuple(tset), samples=rb["samples"], seed=seed
            )
            report = monte_carlo_fidelity(spec, target, noise)
            set_label = "+".join(tset)
            for si, f in enumerate(report.fidelities):
                rows.append([fmt(n_max), set_label, str(si), fmt(f)])
            rows.append([fmt(n_max), set_label, "mean", fmt(report.mean)])
            rows.append([fmt(n_max), set_label, "std", fmt(report.std)])
            print(
                f"robustness: n_max={n_max} targets={set_label} "
                f"mean={report.mean:.6f} std={report.std:.2e}"
            )
    csv_path = os.path.join(out_dir, "robustness.csv")
    write_csv(csv_path, ["n_max", "target_set", "sample_index", "fidelity"], rows)
    return [csv_path]


COMMANDS = {
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "evaluate": cmd_evaluate,
    "lindblad": cmd_lindblad,
    "robustness": cmd_robustness,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photongate",
        description="Inverse design and noise validation of two-qubit photonic gates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", help="JSON config or manifest to replay")
        p.add_argument("--seed", type=int, help="base RNG seed (overrides config)")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers")
        p.add_argument("--out-dir", default=".", help="output directory")
        p.add_argument("--target", choices=["cnot", "ms"], help="target gate")
        p.add_argument("--params", help="circuit JSON or parameter CSV from a prior run")
        if name in ("optimize", "sweep"):
            p.add_argument("--blocks", type=int, help="number of blocks")
            p.add_argument("--u", type=float, help="nonlinearity U in units of jmax")
            p.add_argument("--restarts", type=int, help="optimizer restarts")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg, seed = load_config(args)
        out_dir = os.path.abspath(args.out_dir)
        os.makedirs(out_dir, exist_ok=True)
        outputs = COMMANDS[args.command](cfg, seed, args.jobs, out_dir, t0)
        write_manifest(out_dir, args.command, cfg, seed, outputs, t0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    missing = [p for p in outputs if not os.path.exists(p)]
    return 0 if not missing else 1


if __name__ == "__main__":
    sys.exit(main())
