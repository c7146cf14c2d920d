"""Pure-NumPy integration kernel for the DOPO dynamics.

Fallback for environments without the compiled extension; same interface
as ``_cim_core.integrate_batch``. Vectorized over the anneal batch, one
Python-level loop over integration steps.
"""

from __future__ import annotations

import numpy as np


def integrate_batch(
    j: np.ndarray,
    noise: np.ndarray,
    dt: float,
    coupling: float,
    inv_a_s: float,
    pump: np.ndarray,
    measure_steps: np.ndarray,
    out: np.ndarray,
    trace_out: np.ndarray | None = None,
) -> int:
    """Euler-Maruyama integration of the coupled in-phase/quadrature SDEs.

    noise is (n_anneals, steps, 2, n) standard normals, one independent draw
    per spin, component, and step. Measurements write sign(c) rows into
    ``out`` (n_anneals, n_m, n); zero amplitude reads as +1. Returns -1 on
    success or the step index at which an amplitude went non-finite.
    """
    n_anneals, steps, _, n = noise.shape
    c = np.zeros((n_anneals, n))
    q = np.zeros((n_anneals, n))
    sqrt_dt = np.sqrt(dt)
    noise_scale = inv_a_s * sqrt_dt
    m = 0
    for k in range(steps):
        p = pump[k]
        amp2 = c * c + q * q
        factor = np.sqrt(amp2 + 0.5) * noise_scale
        dc = ((p - 1.0 - amp2) * c + coupling * (c @ j.T)) * dt + factor * noise[:, k, 0, :]
        dq = ((-1.0 - p - amp2) * q) * dt + factor * noise[:, k, 1, :]
        c += dc
        q += dq
        if not (np.isfinite(c).all() and np.isfinite(q).all()):
            return k
        if trace_out is not None:
            trace_out[:, k, 0, :] = c
            trace_out[:, k, 1, :] = q
        if m < len(measure_steps) and k == measure_steps[m]:
            out[:, m, :] = np.where(c >= 0.0, 1, -1).astype(np.int8)
            m += 1
    return -1
