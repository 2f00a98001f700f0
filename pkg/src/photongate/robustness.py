"""Static-parameter-fluctuation Monte Carlo.

Each sample perturbs the selected parameter classes (hopping rates,
HR sector times, FP sector times) by independent uniform draws scaled
by a reference value (jmax for rates, the nominal sector time for
durations), then re-evaluates the gate fidelity.  Perturbed rates are
deliberately NOT clipped back into the optimization bounds: these are
physical fluctuations, not optimizer constraints.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from photongate.circuit import (
    BlockParams,
    CircuitSpec,
    HR_TAGS,
    pack_params,
    total_unitary,
)
from photongate.objective import TargetGate, avg_gate_fidelity

__all__ = ["NoiseSpec", "RobustnessReport", "perturb_spec", "monte_carlo_fidelity"]

VALID_TARGETS = ("J", "T_HR", "T_FP")


@dataclass(frozen=True)
class NoiseSpec:
    """Uniform static-noise model: amplitude, perturbed classes, sampling."""

    n_max: float
    targets: tuple[str, ...] = VALID_TARGETS
    samples: int = 20
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_max < 0:
            raise ValueError("n_max must be nonnegative")
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        unknown = set(self.targets) - set(VALID_TARGETS)
        if unknown:
            raise ValueError(f"unknown noise targets: {sorted(unknown)}")


@dataclass(frozen=True)
class RobustnessReport:
    fidelities: tuple[float, ...]
    mean: float
    std: float


def perturb_spec(spec: CircuitSpec, noise: NoiseSpec, sample_index: int) -> CircuitSpec:
    """One noisy realization of a circuit; deterministic in (seed, sample_index)."""
    rng = np.random.default_rng((noise.seed, sample_index))
    out = spec
    if "J" in noise.targets:
        js = pack_params(spec)
        js = js + rng.uniform(-noise.n_max, noise.n_max, size=js.shape) * spec.jmax
        blocks = tuple(
            BlockParams(*js[5 * i : 5 * i + 5]) for i in range(len(spec.blocks))
        )
        out = replace(out, blocks=blocks)
    if "T_HR" in noise.targets or "T_FP" in noise.targets:
        times = np.full(
            (len(spec.blocks), len(spec.layer_order)),
            spec.sector_time,
        )
        if spec.sector_times is not None:
            times = np.array(spec.sector_times)
        for si, tag in enumerate(spec.layer_order):
            cls = "T_HR" if tag in HR_TAGS else "T_FP"
            if cls in noise.targets:
                ref = spec.sector_time
                times[:, si] += rng.uniform(
                    -noise.n_max, noise.n_max, size=len(spec.blocks)
                ) * ref
        out = replace(out, sector_times=tuple(map(tuple, times)))
    return out


def monte_carlo_fidelity(
    spec: CircuitSpec, target: TargetGate, noise: NoiseSpec
) -> RobustnessReport:
    """Fidelity statistics over `noise.samples` perturbed circuits."""
    fids = []
    for s in range(noise.samples):
        perturbed = perturb_spec(spec, noise, s)
        fids.append(avg_gate_fidelity(total_unitary(perturbed), target))
    fids_arr = np.array(fids)
    return RobustnessReport(
        fidelities=tuple(fids),
        mean=float(fids_arr.mean()),
        std=float(fids_arr.std(ddof=0)),
    )
