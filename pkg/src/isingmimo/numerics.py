"""Linear-algebra and randomness substrate shared by the rest of the toolkit.

Matrices are plain numpy arrays (complex128 / float64). Randomness flows
through :class:`SeededRng`, a (seed, stream) pair: the same pair always
reproduces the same draws and distinct streams are statistically
independent, which is what makes every experiment replayable and
parallelizable at the same time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import RankDeficiencyError, SingularSystemError


@dataclass(frozen=True)
class SeededRng:
    """Deterministic random stream addressed by (master seed, stream path).

    ``stream`` is a tuple of non-negative integers; ``substream()`` appends
    to it, so hierarchical consumers (experiment -> instance -> anneal) can
    carve out independent streams without coordination. Each worker owns its
    streams; a SeededRng itself is immutable and never shares generator
    state.
    """

    seed: int
    stream: tuple[int, ...] = field(default=())

    def substream(self, *ids: int) -> "SeededRng":
        return SeededRng(self.seed, self.stream + tuple(int(i) for i in ids))

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream)
        return np.random.Generator(np.random.PCG64(ss))


def sample_standard_gaussian(rng: SeededRng, n: int) -> np.ndarray:
    """n i.i.d. standard normal draws from the given stream."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return rng.generator().standard_normal(n)


def qr_decompose(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Thin QR with orthonormal q and a real non-negative diagonal on r.

    Backed by LAPACK Householder reflections; the diagonal of r is phase-
    normalized afterwards so the factorization is unique. Raises
    RankDeficiencyError when a column is (numerically) dependent.
    """
    a = np.asarray(a)
    m, n = a.shape
    if m < n:
        raise RankDeficiencyError(f"need rows >= cols, got {m}x{n}")
    q, r = np.linalg.qr(a, mode="reduced")
    diag = np.diagonal(r).copy()
    tol = max(m, n) * np.finfo(float).eps * max(np.max(np.abs(diag)), 1e-300)
    if np.any(np.abs(diag) <= tol):
        raise RankDeficiencyError("matrix is rank deficient")
    # rotate each column's phase so diag(r) >= 0
    phase = diag / np.abs(diag)
    q = q * phase[np.newaxis, :]
    r = r * np.conj(phase)[:, np.newaxis]
    r[np.arange(n), np.arange(n)] = np.abs(diag)
    return q, r


def solve_hermitian_regularized(
    g: np.ndarray, rhs: np.ndarray, lam: float
) -> np.ndarray:
    """Solve (g + lam*I) v = rhs for Hermitian PSD g.

    lam = 0 is allowed only when g itself is invertible; otherwise a
    SingularSystemError is raised instead of returning garbage.
    """
    g = np.asarray(g)
    rhs = np.asarray(rhs)
    if lam < 0:
        raise ValueError("lam must be >= 0")
    sys = g + lam * np.eye(g.shape[0], dtype=g.dtype)
    try:
        v = np.linalg.solve(sys, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    resid = np.linalg.norm(sys @ v - rhs)
    if not np.isfinite(v).all() or resid > 1e-9 * max(np.linalg.norm(rhs), 1e-300):
        raise SingularSystemError("system is numerically singular; pass lam > 0")
    return v
