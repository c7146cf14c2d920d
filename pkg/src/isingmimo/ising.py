"""Ising problem representation and every transformation between maximum-
likelihood detection and machine-solvable spin problems.

Energy convention: ``E(s) = -h.s - s.J.s`` where J is symmetric with zero
diagonal and the quadratic form counts both (i,j) and (j,i). Problems carry
an ``offset`` and cumulative ``scale`` so that

    ||y_real - A x(s)||^2 == (E(s) + offset) * scale

holds through normalization and regularization, which is what lets
detectors rank machine candidates against linear estimates on the raw ML
metric.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from .errors import EncodingError, ProblemSizeError, UnnormalizedProblemError
from .mimo import ChannelInstance, Constellation, realify_observation, transform_matrix

BRUTE_FORCE_MAX_SPINS = 24
_ENUM_CHUNK = 1 << 14


@dataclass(frozen=True)
class IsingProblem:
    """Bias vector h, symmetric zero-diagonal coupling matrix j, and the
    bookkeeping (offset, scale) tying spin energies back to the ML metric."""

    n: int
    h: np.ndarray
    j: np.ndarray
    offset: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.h.shape != (self.n,) or self.j.shape != (self.n, self.n):
            raise ValueError("inconsistent h/j shapes")
        if not (np.isfinite(self.h).all() and np.isfinite(self.j).all()):
            raise ValueError("non-finite Ising coefficients")
        if np.any(np.diagonal(self.j) != 0.0):
            raise ValueError("coupling diagonal must be zero")
        if not np.array_equal(self.j, self.j.T):
            raise ValueError("coupling matrix must be symmetric")

    @property
    def max_coefficient(self) -> float:
        top_h = float(np.max(np.abs(self.h))) if self.n else 0.0
        top_j = float(np.max(np.abs(self.j))) if self.n else 0.0
        return max(top_h, top_j)


@dataclass(frozen=True)
class CouplingOnlyProblem:
    """Bias-free equivalent of an IsingProblem, one auxiliary spin added."""

    n_aug: int
    j_aug: np.ndarray
    aux_index: int


def energy(p: IsingProblem, s: np.ndarray) -> float:
    s = np.asarray(s, dtype=float)
    return float(-p.h @ s - s @ (p.j @ s))


def coupling_energy(p: CouplingOnlyProblem, s: np.ndarray) -> float:
    s = np.asarray(s, dtype=float)
    return float(-s @ (p.j_aug @ s))


def ml_objective(p: IsingProblem, s: np.ndarray) -> float:
    """Value of the original least-squares objective at spin vector s."""
    return (energy(p, s) + p.offset) * p.scale


def build_lattice_ising(a: np.ndarray, z: np.ndarray) -> IsingProblem:
    """Ising form of min_s ||z - A s||^2 over s in {-1,+1}^n.

    A is the real system matrix already folded with the spin weights, so
    every spin is a free +-1 variable.
    """
    g = a.T @ a
    g = (g + g.T) / 2.0
    h = 2.0 * (a.T @ z)
    j = -g
    np.fill_diagonal(j, 0.0)
    offset = float(z @ z + np.trace(g))
    return IsingProblem(n=a.shape[1], h=h, j=j, offset=offset, scale=1.0)


def build_ml_ising(
    channel: ChannelInstance, y: np.ndarray, constellation: Constellation
) -> tuple[IsingProblem, np.ndarray]:
    """ML-detection instance as an Ising problem, plus the spin transform T.

    With z = y_real - H_real T 1 + L_max H_real 1 the problem is
    h = 2 T' H_real' z, J = -zeroDiag(T' H_real' H_real T); for the
    power-of-two lattices used here z reduces to y_real exactly.
    """
    h_real = channel.h_real
    y_real = realify_observation(y)
    n_real = h_real.shape[1]
    t = transform_matrix(constellation, n_real)
    ones_s = np.ones(t.shape[1])
    ones_r = np.ones(n_real)
    z = y_real - h_real @ (t @ ones_s) + constellation.max_level * (h_real @ ones_r)
    return build_lattice_ising(h_real @ t, z), t


def normalize(p: IsingProblem) -> IsingProblem:
    """Scale coefficients into [-1, 1]; argmin set is unchanged.

    The divisor is folded into ``scale`` (and the offset divided by it) so
    ml_objective stays invariant. All-zero problems come back unchanged.
    """
    top = p.max_coefficient
    if top == 0.0:
        return p
    return replace(
        p,
        h=p.h / top,
        j=p.j / top,
        offset=p.offset / top,
        scale=p.scale * top,
    )


def regularize(p: IsingProblem, s_p: np.ndarray, r: float) -> IsingProblem:
    """Add the penalty r * ||s - s_p||^2, folded into the bias.

    ||s - s_p||^2 = 2n - 2 s_p.s on spins, so the bias gains 2r*s_p and the
    offset gains 2rn; couplings are untouched.
    """
    s_p = np.asarray(s_p, dtype=float)
    if s_p.shape != (p.n,):
        raise ValueError(f"s_p length {s_p.shape} != n = {p.n}")
    if r < 0:
        raise ValueError("r must be >= 0")
    if r == 0.0:
        return p
    return replace(p, h=p.h + 2.0 * r * s_p, offset=p.offset + 2.0 * r * p.n)


def augment_aux(p: IsingProblem) -> CouplingOnlyProblem:
    """Fold the bias into couplings to one extra spin s_a (placed last).

    Each pair coupling is h_i/2 so the double-counted quadratic form
    reproduces -h_i s_i s_a. Ground energy is preserved and optima come in
    global-flip pairs; strip_aux undoes the construction.
    """
    n = p.n
    j_aug = np.zeros((n + 1, n + 1))
    j_aug[:n, :n] = p.j
    j_aug[:n, n] = p.h / 2.0
    j_aug[n, :n] = p.h / 2.0
    return CouplingOnlyProblem(n_aug=n + 1, j_aug=j_aug, aux_index=n)


def strip_aux(solution: np.ndarray, aux_index: int) -> np.ndarray:
    """Recover an original-problem solution from an augmented readout."""
    solution = np.asarray(solution)
    aux = solution[..., aux_index]
    kept = np.delete(solution, aux_index, axis=-1)
    return kept * aux[..., np.newaxis] if solution.ndim > 1 else kept * aux


def _enumerate_spins(n: int, start: int, stop: int) -> np.ndarray:
    """Spin rows for configuration indices [start, stop); index ascending ==
    lexicographic ascending with -1 < +1 (spin 0 is the most significant)."""
    idx = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = (idx[:, np.newaxis] >> shifts) & 1
    return (2 * bits - 1).astype(np.int8)


def brute_force_ground(p: IsingProblem) -> tuple[np.ndarray, float]:
    """Exact ground state by exhaustive enumeration (n <= 24).

    Ties break toward the lexicographically smallest spin vector.
    """
    if p.n > BRUTE_FORCE_MAX_SPINS:
        raise ProblemSizeError(f"brute force limited to {BRUTE_FORCE_MAX_SPINS} spins, got {p.n}")
    best_e = np.inf
    best_s: np.ndarray | None = None
    total = 1 << p.n
    for start in range(0, total, _ENUM_CHUNK):
        s = _enumerate_spins(p.n, start, min(start + _ENUM_CHUNK, total)).astype(float)
        e = -(s @ p.h) - np.einsum("ij,ij->i", s @ p.j, s)
        i = int(np.argmin(e))
        if e[i] < best_e:
            best_e = float(e[i])
            best_s = s[i].astype(np.int8)
    assert best_s is not None
    return best_s, best_e


def ground_states(p: IsingProblem, max_states: int = 1 << 16) -> tuple[np.ndarray, float]:
    """All exact minimizers (n <= 24), lexicographic order, plus the energy."""
    if p.n > BRUTE_FORCE_MAX_SPINS:
        raise ProblemSizeError(f"brute force limited to {BRUTE_FORCE_MAX_SPINS} spins, got {p.n}")
    best_e = np.inf
    rows: list[np.ndarray] = []
    total = 1 << p.n
    for start in range(0, total, _ENUM_CHUNK):
        s = _enumerate_spins(p.n, start, min(start + _ENUM_CHUNK, total)).astype(float)
        e = -(s @ p.h) - np.einsum("ij,ij->i", s @ p.j, s)
        chunk_min = float(np.min(e))
        if chunk_min < best_e:
            best_e = chunk_min
            rows = [s[e == best_e].astype(np.int8)]
        elif chunk_min == best_e:
            rows.append(s[e == best_e].astype(np.int8))
        if sum(r.shape[0] for r in rows) > max_states:
            raise ProblemSizeError("ground set is too degenerate to materialize")
    return np.concatenate(rows, axis=0), best_e


def quantize(p: IsingProblem, k: int) -> IsingProblem:
    """Round each coefficient to the K-bit machine grid.

    One bit carries the sign, K-1 bits the magnitude: c -> sign(c) *
    round(|c| * L) / L with L = 2^(K-1) - 1 and ties rounding up, so K = 2
    leaves exactly {-1, 0, 1}.
    Requires a normalized problem. K >= 54 is finer than double precision
    and returns the problem unchanged.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if p.max_coefficient > 1.0 + 1e-12:
        raise UnnormalizedProblemError("quantize requires coefficients in [-1, 1]; normalize first")
    if k >= 54:
        return p
    levels = float((1 << (k - 1)) - 1)

    def q(c: np.ndarray) -> np.ndarray:
        return np.sign(c) * np.floor(np.abs(c) * levels + 0.5) / levels

    j = q(p.j)
    np.fill_diagonal(j, 0.0)
    return replace(p, h=q(p.h), j=j)


def l0_resilience(p: IsingProblem, k: int) -> int:
    """Hamming distance between the ground states of p and quantize(p, k).

    With degenerate ground sets on either side, the minimum over the cross
    product is returned.
    """
    set_a, _ = ground_states(p)
    set_b, _ = ground_states(quantize(normalize(p) if p.max_coefficient > 1.0 else p, k))
    # disagreement count via dot product of +-1 rows
    agree = set_a.astype(np.int32) @ set_b.astype(np.int32).T
    dist = (p.n - agree) // 2
    return int(dist.min())


def write_ising_text(p: IsingProblem, f: io.TextIOBase) -> None:
    """Flat interchange format: "n", then "i h_i" lines, then upper-triangle
    "i j J_ij" lines (0-based)."""
    f.write(f"{p.n}\n")
    for i in range(p.n):
        f.write(f"{i} {p.h[i]!r}\n")
    for i in range(p.n):
        for jdx in range(i + 1, p.n):
            if p.j[i, jdx] != 0.0:
                f.write(f"{i} {jdx} {p.j[i, jdx]!r}\n")


def read_ising_text(f: io.TextIOBase) -> IsingProblem:
    """Parse the flat format written by write_ising_text."""
    tokens_per_line = [line.split() for line in f.read().splitlines() if line.strip()]
    if not tokens_per_line or len(tokens_per_line[0]) != 1:
        raise EncodingError("first line must be the spin count")
    n = int(tokens_per_line[0][0])
    h = np.zeros(n)
    j = np.zeros((n, n))
    for toks in tokens_per_line[1:]:
        if len(toks) == 2:
            h[int(toks[0])] = float(toks[1])
        elif len(toks) == 3:
            a, b = int(toks[0]), int(toks[1])
            if a == b:
                raise EncodingError("diagonal coupling entries are not allowed")
            j[a, b] = j[b, a] = float(toks[2])
        else:
            raise EncodingError(f"malformed line: {' '.join(toks)}")
    return IsingProblem(n=n, h=h, j=j)
