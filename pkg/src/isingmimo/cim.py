"""Simulated Coherent Ising Machine.

Each anneal integrates the DOPO in-phase/quadrature SDEs

    dc_i = [(-1 + p - c_i^2 - q_i^2) c_i + C sum_j J_ij c_j] dt
           + (1/A_s) sqrt(c_i^2 + q_i^2 + 1/2) dW_1
    dq_i =  (-1 - p - c_i^2 - q_i^2) q_i dt
           + (1/A_s) sqrt(c_i^2 + q_i^2 + 1/2) dW_2

from zero amplitudes with the pump ramped as p_k = pump_max * tanh(2k/n),
reading out s_i = sign(c_i) at n_m evenly spaced steps. The machine only
accepts coupling matrices, so batches fold the bias into an auxiliary spin
first (see ising.augment_aux).

The inner loop runs on a compiled kernel when the extension built, with a
NumPy fallback otherwise; set ISINGMIMO_KERNEL=python|cython to force one.
Anneal a of a batch draws its noise from rng.substream(a), so results are
independent of batching and worker count, and a batch of size n_a is a
prefix of any larger batch under the same stream.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import _cim_numpy
from .errors import ConfigError, IntegrationDivergedError
from .ising import CouplingOnlyProblem, IsingProblem, augment_aux, strip_aux
from .numerics import SeededRng

try:
    from . import _cim_core

    _HAVE_COMPILED = True
except ImportError:  # extension not built
    _cim_core = None
    _HAVE_COMPILED = False


def active_backend() -> str:
    """Which integration kernel run_batch/anneal will use."""
    choice = os.environ.get("ISINGMIMO_KERNEL", "auto")
    if choice == "python":
        return "python"
    if choice == "cython":
        if not _HAVE_COMPILED:
            raise ConfigError("ISINGMIMO_KERNEL=cython but the extension is not built")
        return "cython"
    if choice != "auto":
        raise ConfigError(f"ISINGMIMO_KERNEL must be auto|python|cython, got {choice!r}")
    return "cython" if _HAVE_COMPILED else "python"


@dataclass(frozen=True)
class CimParams:
    """Machine parameters; defaults follow the simulator calibration used
    throughout: dt = 0.01, 128 steps per anneal, C = sqrt(10), one readout
    per step. The saturation amplitude A_s sets the noise strength 1/A_s."""

    dt: float = 0.01
    steps: int = 128
    c: float = field(default_factory=lambda: math.sqrt(10.0))
    a_s: float = 10.0
    n_m: int = 128
    pump_max: float = 2.0

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("cim.dt must be > 0")
        if self.steps < 1:
            raise ConfigError("cim.steps must be >= 1")
        if not (1 <= self.n_m <= self.steps):
            raise ConfigError("cim.n_m must be in [1, steps]")
        if self.c <= 0:
            raise ConfigError("cim.coupling must be > 0")
        if self.a_s <= 0:
            raise ConfigError("cim.saturation must be > 0")


def pump_schedule(step_index: int, n: int, pump_max: float = 2.0) -> float:
    """Pump value at an integration step: pump_max * tanh(2 * step / n)."""
    if step_index < 0 or n < 1:
        raise ValueError("need step_index >= 0 and n >= 1")
    return pump_max * math.tanh(2.0 * step_index / n)


def _pump_array(params: CimParams, n: int) -> np.ndarray:
    return np.array(
        [pump_schedule(k, n, params.pump_max) for k in range(params.steps)]
    )


def _measurement_steps(steps: int, n_m: int) -> np.ndarray:
    """n_m step indices, evenly spaced, always ending at the final step."""
    return np.array([(i + 1) * steps // n_m - 1 for i in range(n_m)], dtype=np.int64)


def _integrate(
    j: np.ndarray,
    noise: np.ndarray,
    params: CimParams,
    trace_out: np.ndarray | None = None,
) -> np.ndarray:
    n_anneals, _, _, n = noise.shape
    out = np.empty((n_anneals, params.n_m, n), dtype=np.int8)
    pump = _pump_array(params, n)
    steps = _measurement_steps(params.steps, params.n_m)
    backend = active_backend()
    if trace_out is not None or backend == "python":
        bad = _cim_numpy.integrate_batch(
            j, noise, params.dt, params.c, 1.0 / params.a_s, pump, steps, out, trace_out
        )
    else:
        bad = _cim_core.integrate_batch(
            np.ascontiguousarray(j),
            np.ascontiguousarray(noise),
            params.dt,
            params.c,
            1.0 / params.a_s,
            pump,
            steps,
            out,
        )
    if bad >= 0:
        raise IntegrationDivergedError(bad)
    return out


def anneal(
    p: CouplingOnlyProblem,
    params: CimParams,
    rng: SeededRng,
    trace_file: str | os.PathLike | None = None,
) -> np.ndarray:
    """One machine run: n_m candidate readouts, shape (n_m, n_aug).

    trace_file dumps the full amplitude trajectory as CSV (debug only;
    forces the Python kernel).
    """
    n = p.n_aug
    noise = rng.generator().standard_normal((1, params.steps, 2, n))
    trace = np.empty((1, params.steps, 2, n)) if trace_file is not None else None
    out = _integrate(p.j_aug, noise, params, trace_out=trace)
    if trace_file is not None and trace is not None:
        with open(trace_file, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "spin_index", "c_amp", "q_amp"])
            for k in range(params.steps):
                for i in range(n):
                    w.writerow([k, i, repr(trace[0, k, 0, i]), repr(trace[0, k, 1, i])])
    return out[0]


def run_batch(
    p: IsingProblem,
    n_a: int,
    params: CimParams,
    rng: SeededRng,
) -> np.ndarray:
    """n_a independent anneals of the aux-augmented problem.

    Returns all n_a * n_m candidates with the auxiliary spin already
    stripped, shape (n_a * n_m, p.n), in (anneal, measurement) order.
    """
    if n_a < 1:
        raise ConfigError("n_a must be >= 1")
    aug = augment_aux(p)
    n = aug.n_aug
    noise = np.stack(
        [rng.substream(a).generator().standard_normal((params.steps, 2, n)) for a in range(n_a)]
    )
    out = _integrate(aug.j_aug, noise, params)
    flat = out.reshape(-1, n)
    return strip_aux(flat, aug.aux_index)
