# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled integration kernel for the DOPO dynamics.

Same contract as ``_cim_numpy.integrate_batch`` (minus the trace hook,
which only the debug path needs). Plain Euler-Maruyama loops; no
fast-math so results stay IEEE-reproducible per build.
"""

from libc.math cimport sqrt, isfinite

import numpy as np


def integrate_batch(
    double[:, ::1] j,
    double[:, :, :, ::1] noise,
    double dt,
    double coupling,
    double inv_a_s,
    double[::1] pump,
    long[::1] measure_steps,
    signed char[:, :, ::1] out,
):
    cdef Py_ssize_t n_anneals = noise.shape[0]
    cdef Py_ssize_t steps = noise.shape[1]
    cdef Py_ssize_t n = noise.shape[3]
    cdef Py_ssize_t n_m = measure_steps.shape[0]
    cdef double sqrt_dt = sqrt(dt)
    cdef double noise_scale = inv_a_s * sqrt_dt
    cdef double[::1] c = np.zeros(n)
    cdef double[::1] q = np.zeros(n)
    cdef double[::1] coupl = np.zeros(n)
    cdef Py_ssize_t a, k, i, l, m
    cdef double p, ci, qi, amp2, factor, acc
    cdef bint ok

    for a in range(n_anneals):
        for i in range(n):
            c[i] = 0.0
            q[i] = 0.0
        m = 0
        for k in range(steps):
            p = pump[k]
            for i in range(n):
                acc = 0.0
                for l in range(n):
                    acc += j[i, l] * c[l]
                coupl[i] = acc
            ok = True
            for i in range(n):
                ci = c[i]
                qi = q[i]
                amp2 = ci * ci + qi * qi
                factor = sqrt(amp2 + 0.5) * noise_scale
                c[i] = ci + ((p - 1.0 - amp2) * ci + coupling * coupl[i]) * dt \
                    + factor * noise[a, k, 0, i]
                q[i] = qi + ((-1.0 - p - amp2) * qi) * dt \
                    + factor * noise[a, k, 1, i]
                if not (isfinite(c[i]) and isfinite(q[i])):
                    ok = False
            if not ok:
                return k
            if m < n_m and k == measure_steps[m]:
                for i in range(n):
                    out[a, m, i] = 1 if c[i] >= 0.0 else -1
                m += 1
    return -1
