"""Detection algorithms: linear baselines (ZF, MMSE), the exact sphere
decoder, and the Ising-machine detectors (CIM-ML, RI-MIMO, TRIM, and the
artificial-noise-reduction variant).

Every detector returns a DetectionResult whose ml_metric is the raw
||y - H x||^2 of its answer; candidate selection always happens on that
metric, never on (regularized) Ising energies, so machine candidates and
linear estimates compete on a common scale.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .cim import CimParams, run_batch
from .errors import ConfigError, RankDeficiencyError, SearchBudgetExceededError, SingularSystemError
from .ising import IsingProblem, brute_force_ground, build_lattice_ising, build_ml_ising, normalize, quantize, regularize
from .mimo import (
    ChannelInstance,
    Constellation,
    complexify_symbols,
    frame_to_bits,
    noise_variance,
    realify_observation,
    realify_symbols,
    real_symbols_to_spins,
    slice_to_constellation,
)
from .numerics import SeededRng, qr_decompose, solve_hermitian_regularized

SOURCE_PRIORITY = {"sphere": 0, "trim": 1, "ri-mimo": 2, "ri-nr": 3, "cim-ml": 4, "mmse": 5, "zf": 6}


@dataclass(frozen=True)
class DetectionResult:
    """Hard decision for one received vector."""

    symbols: np.ndarray
    bits: np.ndarray
    ml_metric: float
    source: str


@dataclass(frozen=True)
class RiMimoConfig:
    """Knobs shared by the Ising-machine detectors.

    solver="brute" swaps the machine for the exhaustive ground-state oracle
    (single candidate per problem), which is how the tree search is checked
    against the sphere decoder.
    """

    n_a: int = 16
    r: float = 0.15
    include_mmse_candidate: bool = True
    cim: CimParams = field(default_factory=CimParams)
    precision_bits: int | None = None
    solver: str = "cim"

    def __post_init__(self):
        if self.n_a < 1:
            raise ConfigError("detector.n_a must be >= 1")
        if self.r < 0:
            raise ConfigError("detector.r must be >= 0")
        if self.solver not in ("cim", "brute"):
            raise ConfigError(f"detector.solver must be cim|brute, got {self.solver!r}")


def ml_metric(channel: ChannelInstance, y: np.ndarray, x: np.ndarray) -> float:
    return float(np.sum(np.abs(y - channel.h @ x) ** 2))


def _result(channel: ChannelInstance, y: np.ndarray, constellation: Constellation,
            x: np.ndarray, source: str) -> DetectionResult:
    return DetectionResult(
        symbols=x,
        bits=frame_to_bits(x, constellation),
        ml_metric=ml_metric(channel, y, x),
        source=source,
    )


def select_best(candidates: list[DetectionResult]) -> DetectionResult:
    """Minimal ml_metric; ties resolve by source priority then first-seen."""
    if not candidates:
        raise ValueError("no candidates to select from")
    return min(
        enumerate(candidates),
        key=lambda it: (it[1].ml_metric, SOURCE_PRIORITY.get(it[1].source, len(SOURCE_PRIORITY)), it[0]),
    )[1]


def mmse_soft_estimate(
    channel: ChannelInstance, y: np.ndarray, constellation: Constellation, snr_db: float
) -> np.ndarray:
    """Unsliced MMSE estimate (H'H + (sigma^2/Es) I)^-1 H'y."""
    g = channel.h.conj().T @ channel.h
    lam = noise_variance(constellation, channel.n_t, snr_db) / constellation.es
    return solve_hermitian_regularized(g, channel.h.conj().T @ y, lam)


def detect_mmse(
    channel: ChannelInstance, y: np.ndarray, constellation: Constellation, snr_db: float
) -> DetectionResult:
    soft = mmse_soft_estimate(channel, y, constellation, snr_db)
    return _result(channel, y, constellation, slice_to_constellation(soft, constellation), "mmse")


def detect_zf(
    channel: ChannelInstance, y: np.ndarray, constellation: Constellation
) -> DetectionResult:
    g = channel.h.conj().T @ channel.h
    try:
        soft = solve_hermitian_regularized(g, channel.h.conj().T @ y, 0.0)
    except SingularSystemError as exc:
        raise RankDeficiencyError("zero-forcing needs a full-column-rank channel") from exc
    return _result(channel, y, constellation, slice_to_constellation(soft, constellation), "zf")


def _lex_key(x: np.ndarray) -> tuple:
    return tuple((float(v.real), float(v.imag)) for v in x)


def detect_sphere(
    channel: ChannelInstance,
    y: np.ndarray,
    constellation: Constellation,
    node_budget: int = 5_000_000,
) -> DetectionResult:
    """Exact ML via Schnorr-Euchner enumeration with adaptive radius.

    Works on the realified system; levels at each depth are visited
    nearest-first around the unconstrained minimizer, partial distances
    prune against the best leaf so far. Raises SearchBudgetExceededError
    once node_budget tree nodes were expanded.
    """
    h_real = channel.h_real
    q, r = qr_decompose(h_real)
    w = q.T @ realify_observation(y)
    n = h_real.shape[1]
    levels = np.array(constellation.omega_r, dtype=float)

    best_metric = math.inf
    best_x: np.ndarray | None = None
    best_key: tuple | None = None
    x_partial = np.zeros(n)
    nodes = 0

    def visit(depth: int, partial: float) -> None:
        nonlocal best_metric, best_x, best_key, nodes
        if depth < 0:
            x_c = complexify_symbols(x_partial, constellation)
            key = _lex_key(x_c)
            if partial < best_metric or (partial == best_metric and (best_key is None or key < best_key)):
                best_metric = partial
                best_x = x_c
                best_key = key
            return
        center = (w[depth] - r[depth, depth + 1 :] @ x_partial[depth + 1 :]) / r[depth, depth]
        order = sorted(levels, key=lambda lv: (abs(lv - center), lv))
        for lv in order:
            nodes += 1
            if nodes > node_budget:
                raise SearchBudgetExceededError(nodes, node_budget)
            step = partial + (r[depth, depth] * (lv - center)) ** 2
            if step > best_metric:
                # nearest-first ordering: every later level is at least this far
                break
            x_partial[depth] = lv
            visit(depth - 1, step)

    visit(n - 1, 0.0)
    assert best_x is not None
    return _result(channel, y, constellation, best_x, "sphere")


def _solve_spins(p: IsingProblem, config: RiMimoConfig, rng: SeededRng) -> np.ndarray:
    if config.solver == "brute":
        return brute_force_ground(p)[0][np.newaxis, :]
    return run_batch(p, config.n_a, config.cim, rng)


def _machine_pipeline(p: IsingProblem, s_p: np.ndarray | None, config: RiMimoConfig) -> IsingProblem:
    """normalize -> regularize -> (renormalize + quantize when K is set)."""
    p = normalize(p)
    if s_p is not None and config.r > 0:
        p = regularize(p, s_p, config.r)
    if config.precision_bits is not None:
        p = quantize(normalize(p), config.precision_bits)
    return p


def _candidate_symbols(spins: np.ndarray, t: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Decode unique candidate spin rows into complex symbol rows."""
    uniq = np.unique(spins, axis=0)
    x_real = uniq.astype(float) @ t.T
    return complexify_symbols(x_real, constellation)


def _best_candidate(
    channel: ChannelInstance, y: np.ndarray, xs: np.ndarray
) -> tuple[np.ndarray, float]:
    resid = y[np.newaxis, :] - xs @ channel.h.T
    metrics = np.sum(np.abs(resid) ** 2, axis=1)
    i = int(np.argmin(metrics))
    return xs[i], float(metrics[i])


def detect_cim_ml(
    channel: ChannelInstance,
    y: np.ndarray,
    constellation: Constellation,
    snr_db: float,
    config: RiMimoConfig,
    rng: SeededRng,
) -> DetectionResult:
    """Unregularized Ising detection (the error-floor baseline)."""
    cfg = replace(config, r=0.0)
    p, t = build_ml_ising(channel, y, constellation)
    p = _machine_pipeline(p, None, cfg)
    xs = _candidate_symbols(_solve_spins(p, cfg, rng), t, constellation)
    x, _ = _best_candidate(channel, y, xs)
    out = _result(channel, y, constellation, x, "cim-ml")
    if cfg.include_mmse_candidate:
        out = select_best([out, detect_mmse(channel, y, constellation, snr_db)])
    return out


def detect_ri_mimo(
    channel: ChannelInstance,
    y: np.ndarray,
    constellation: Constellation,
    snr_db: float,
    config: RiMimoConfig,
    rng: SeededRng,
) -> DetectionResult:
    """Regularized Ising detection around the sliced MMSE estimate."""
    soft = mmse_soft_estimate(channel, y, constellation, snr_db)
    anchor = slice_to_constellation(soft, constellation)
    s_p = real_symbols_to_spins(realify_symbols(anchor, constellation), constellation)
    p, t = build_ml_ising(channel, y, constellation)
    p = _machine_pipeline(p, s_p, config)
    xs = _candidate_symbols(_solve_spins(p, config, rng), t, constellation)
    x, _ = _best_candidate(channel, y, xs)
    out = _result(channel, y, constellation, x, "ri-mimo")
    if config.include_mmse_candidate:
        out = select_best([out, detect_mmse(channel, y, constellation, snr_db)])
    return out


def detect_trim(
    channel: ChannelInstance,
    y: np.ndarray,
    constellation: Constellation,
    snr_db: float,
    d: int,
    config: RiMimoConfig,
    rng: SeededRng,
    max_total_anneals: int = 1 << 20,
) -> DetectionResult:
    """Tree search: enumerate the last d users, solve each residual
    subproblem with the regularized pipeline, keep the global best."""
    n_t = channel.n_t
    if not 1 <= d < n_t:
        raise ConfigError(f"trim depth must satisfy 1 <= d < N_t, got d={d}")
    points = constellation.points()
    n_branches = len(points) ** d
    if config.solver == "cim" and n_branches * config.n_a > max_total_anneals:
        raise ConfigError(
            f"trim depth {d} needs {n_branches * config.n_a} anneals, budget is {max_total_anneals}"
        )

    q, r_mat = qr_decompose(channel.h)
    w = q.conj().T @ y
    free = n_t - d
    soft = mmse_soft_estimate(channel, y, constellation, snr_db)
    anchor = slice_to_constellation(soft, constellation)
    s_p = real_symbols_to_spins(realify_symbols(anchor[:free], constellation), constellation)

    sub_channel = ChannelInstance.from_matrix(r_mat[:free, :free], constellation)
    c_bar = r_mat[:free, free:]
    w_bar = w[:free]

    best_x: np.ndarray | None = None
    best_metric = math.inf
    for b_idx, u_tuple in enumerate(itertools.product(points, repeat=d)):
        u = np.array(u_tuple)
        p, t = build_ml_ising(sub_channel, w_bar - c_bar @ u, constellation)
        p = _machine_pipeline(p, s_p, config)
        spins = _solve_spins(p, config, rng.substream(b_idx))
        xs_v = np.atleast_2d(_candidate_symbols(spins, t, constellation))
        xs = np.hstack([xs_v, np.tile(u, (xs_v.shape[0], 1))])
        x, metric = _best_candidate(channel, y, xs)
        if metric < best_metric:
            best_metric = metric
            best_x = x
    assert best_x is not None
    out = _result(channel, y, constellation, best_x, "trim")
    if config.include_mmse_candidate:
        out = select_best([out, detect_mmse(channel, y, constellation, snr_db)])
    return out


def detect_ri_nr(
    channel: ChannelInstance,
    y: np.ndarray,
    constellation: Constellation,
    snr_db: float,
    gamma: float,
    config: RiMimoConfig,
    rng: SeededRng,
) -> DetectionResult:
    """RI-MIMO on the noise-reduction augmented system.

    Draws artificial AWGN u at the wireless noise variance and adds one
    binary unknown sigma with column gamma*u; solving the enlarged problem
    lets the machine cancel part of the channel noise. Candidates are
    ranked on the enlarged objective, the answer is decoded from the
    non-auxiliary spins, and the reported metric is the plain ML one.
    """
    if not 0 <= gamma < 1:
        raise ConfigError("gamma must be in [0, 1)")
    sigma2 = noise_variance(constellation, channel.n_t, snr_db)
    parts = rng.substream(0).generator().standard_normal((2, channel.n_r))
    u = math.sqrt(sigma2 / 2.0) * (parts[0] + 1j * parts[1])

    from .mimo import transform_matrix

    t = transform_matrix(constellation, channel.h_real.shape[1])
    a = np.hstack([channel.h_real @ t, gamma * realify_observation(u)[:, np.newaxis]])
    y_real = realify_observation(y)
    p = build_lattice_ising(a, y_real)

    soft = mmse_soft_estimate(channel, y, constellation, snr_db)
    anchor = slice_to_constellation(soft, constellation)
    s_p = real_symbols_to_spins(realify_symbols(anchor, constellation), constellation)
    s_p_full = np.concatenate([s_p, [1]]).astype(np.int8)
    p = _machine_pipeline(p, s_p_full, config)

    spins = np.unique(_solve_spins(p, config, rng.substream(1)), axis=0)
    resid = y_real[np.newaxis, :] - spins.astype(float) @ a.T
    metrics = np.sum(resid**2, axis=1)
    best = spins[int(np.argmin(metrics))]
    x = complexify_symbols(best[:-1].astype(float) @ t.T, constellation)
    out = _result(channel, y, constellation, x, "ri-nr")
    if config.include_mmse_candidate:
        out = select_best([out, detect_mmse(channel, y, constellation, snr_db)])
    return out
