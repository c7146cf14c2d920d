"""Built-in oracle property suite behind `isingmimo selftest`.

Quick deterministic checks of the exact machinery (mapping equivalence,
aux-spin theorem, sphere-decoder optimality, coding round trips, machine
determinism) against brute-force oracles. Prints one line per check.
"""

from __future__ import annotations

import itertools

import numpy as np

from .cim import CimParams, run_batch
from .coding import conv_code, encode, viterbi_decode
from .detectors import detect_sphere
from .harness import CAPACITY_REGIMES, hardware_requirements
from .ising import (
    IsingProblem,
    augment_aux,
    brute_force_ground,
    build_ml_ising,
    coupling_energy,
    energy,
    ground_states,
    ml_objective,
    normalize,
    quantize,
    regularize,
    strip_aux,
)
from .mimo import bits_to_frame, generate_channel, make_constellation, spins_to_real_symbols, transmit
from .numerics import SeededRng


def _random_problem(rng: SeededRng, n: int) -> IsingProblem:
    g = rng.generator()
    h = g.uniform(-1, 1, n)
    j = np.triu(g.uniform(-1, 1, (n, n)), 1)
    return IsingProblem(n=n, h=h, j=j + j.T)


def _check_mapping(rng: SeededRng) -> bool:
    for trial in range(6):
        m = (2, 4, 16)[trial % 3]
        cons = make_constellation(m)
        n_t = 2
        ch = generate_channel(rng.substream(trial), n_t, n_t, cons)
        bits = rng.substream(trial, 1).generator().integers(0, 2, n_t * cons.bits_per_symbol)
        frame = bits_to_frame(bits.astype(np.uint8), cons, n_t)
        y = transmit(ch, frame, cons, 10.0, rng.substream(trial, 2))
        p, _ = build_ml_ising(ch, y, cons)
        n_real = ch.h_real.shape[1]
        for s in itertools.product((-1, 1), repeat=p.n):
            s_arr = np.array(s)
            x = spins_to_real_symbols(s_arr, cons, n_real)
            direct = float(np.sum((np.concatenate([y.real, y.imag]) - ch.h_real @ x) ** 2))
            if abs(direct - ml_objective(p, s_arr)) > 1e-8 * max(1.0, direct):
                return False
    return True


def _check_aux(rng: SeededRng) -> bool:
    for trial in range(8):
        p = _random_problem(rng.substream(trial), 6)
        aug = augment_aux(p)
        _, e0 = brute_force_ground(p)
        best = min(
            coupling_energy(aug, np.array(s))
            for s in itertools.product((-1, 1), repeat=aug.n_aug)
        )
        if abs(best - e0) > 1e-9:
            return False
        s_aug = min(
            (s for s in itertools.product((-1, 1), repeat=aug.n_aug)),
            key=lambda s: coupling_energy(aug, np.array(s)),
        )
        if abs(energy(p, strip_aux(np.array(s_aug), aug.aux_index)) - e0) > 1e-9:
            return False
    return True


def _check_sphere(rng: SeededRng) -> bool:
    for trial in range(10):
        m = (2, 4, 16)[trial % 3]
        cons = make_constellation(m)
        n_t = 3 if m < 16 else 2
        ch = generate_channel(rng.substream(trial), n_t, n_t, cons)
        bits = rng.substream(trial, 1).generator().integers(0, 2, n_t * cons.bits_per_symbol)
        frame = bits_to_frame(bits.astype(np.uint8), cons, n_t)
        y = transmit(ch, frame, cons, 8.0, rng.substream(trial, 2))
        res = detect_sphere(ch, y, cons)
        exact = min(
            float(np.sum(np.abs(y - ch.h @ np.array(x)) ** 2))
            for x in itertools.product(cons.points(), repeat=n_t)
        )
        if abs(res.ml_metric - exact) > 1e-9:
            return False
    return True


def _check_regularization(rng: SeededRng) -> bool:
    p = _random_problem(rng, 6)
    g = rng.substream(1).generator()
    s_p = (2 * g.integers(0, 2, 6) - 1).astype(np.int8)
    reg = regularize(p, s_p, 0.15)
    vals = set()
    for s in itertools.product((-1, 1), repeat=6):
        s_arr = np.array(s, dtype=float)
        vals.add(round(energy(reg, s_arr) - energy(p, s_arr) + 2 * 0.15 * float(s_p @ s_arr), 12))
    return len(vals) == 1


def _check_quantize(rng: SeededRng) -> bool:
    p = normalize(_random_problem(rng, 6))
    q2 = quantize(p, 2)
    values = set(np.abs(q2.h)) | set(np.abs(q2.j[np.triu_indices(6, 1)]))
    if not values <= {0.0, 1.0}:
        return False
    grid = quantize(p, 5)
    return np.array_equal(quantize(grid, 5).h, grid.h) and np.array_equal(quantize(grid, 5).j, grid.j)


def _check_ground_set(rng: SeededRng) -> bool:
    h = np.zeros(4)
    j = np.triu(np.ones((4, 4)), 1)
    p = IsingProblem(n=4, h=h, j=j + j.T)
    states, _ = ground_states(p)
    s, _ = brute_force_ground(p)
    return states.shape[0] == 2 and np.array_equal(s, -np.ones(4, dtype=np.int8))


def _check_cim_determinism(rng: SeededRng) -> bool:
    p = normalize(_random_problem(rng, 8))
    a = run_batch(p, 4, CimParams(), rng.substream(0))
    b = run_batch(p, 4, CimParams(), rng.substream(0))
    if not np.array_equal(a, b):
        return False
    return a.shape == (4 * 128, 8)


def _check_coding(rng: SeededRng) -> bool:
    g = rng.generator()
    for rate in ("1/2", "1/3", "2/3"):
        code = conv_code(rate)
        bits = g.integers(0, 2, 96).astype(np.uint8)
        if not np.array_equal(viterbi_decode(encode(bits, code), code), bits):
            return False
    return True


def _check_hardware(rng: SeededRng) -> bool:
    reports = [hardware_requirements(r) for r in CAPACITY_REGIMES]
    return all(rep.anneals_per_ms_required == rep.regime.instances_per_ms * rep.regime.n_a
               for rep in reports)


CHECKS = (
    ("ml-to-ising mapping equivalence", _check_mapping),
    ("auxiliary-spin theorem", _check_aux),
    ("sphere decoder vs exhaustive search", _check_sphere),
    ("regularization algebra", _check_regularization),
    ("coefficient quantization grid", _check_quantize),
    ("ground-set degeneracy and tie rule", _check_ground_set),
    ("cim determinism and candidate counts", _check_cim_determinism),
    ("convolutional coding round trips", _check_coding),
    ("capacity-table arithmetic", _check_hardware),
)


def run_selftest() -> int:
    rng = SeededRng(20260801)
    failures = 0
    for i, (name, fn) in enumerate(CHECKS):
        ok = fn(rng.substream(i))
        print(f"{'ok' if ok else 'FAIL'} - {name}")
        failures += not ok
    print(f"selftest: {len(CHECKS) - failures}/{len(CHECKS)} checks passed")
    return 1 if failures else 0
