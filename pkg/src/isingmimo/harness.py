"""Experiment orchestration: BER curves, parameter sweeps, error-floor
studies, coded-throughput evaluation with an oracle MCS selector, and the
Ising-machine capacity planner.

Determinism contract: every random draw is addressed by
(seed, purpose, snr index, channel index, vector index, ...), so a run is
reproducible bit-for-bit no matter how instances are sharded over workers.
Channel draws live in stream space 0, per-instance payload/noise/detector
draws in stream space 1, coded-run draws in spaces 2/3.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .cim import CimParams
from .coding import conv_code, encode, viterbi_decode
from .detectors import (
    DetectionResult,
    RiMimoConfig,
    detect_cim_ml,
    detect_mmse,
    detect_ri_mimo,
    detect_ri_nr,
    detect_sphere,
    detect_trim,
    detect_zf,
)
from .errors import ConfigError
from .mimo import Constellation, bits_to_frame, generate_channel, make_constellation, transmit
from .numerics import SeededRng

DETECTOR_NAMES = ("zf", "mmse", "sphere", "cim-ml", "ri-mimo", "trim", "ri-nr")


@dataclass(frozen=True)
class DetectorSpec:
    """Which detector to run, with its knobs."""

    name: str = "ri-mimo"
    n_a: int = 16
    r: float = 0.15
    include_mmse_candidate: bool = True
    precision_bits: int | None = None
    trim_depth: int = 1
    gamma: float = 0.5
    solver: str = "cim"
    cim: CimParams = field(default_factory=CimParams)

    def __post_init__(self):
        if self.name not in DETECTOR_NAMES:
            raise ConfigError(f"detector.name must be one of {DETECTOR_NAMES}, got {self.name!r}")

    def rimimo_config(self) -> RiMimoConfig:
        return RiMimoConfig(
            n_a=self.n_a,
            r=self.r,
            include_mmse_candidate=self.include_mmse_candidate,
            cim=self.cim,
            precision_bits=self.precision_bits,
            solver=self.solver,
        )

    def run(
        self,
        channel,
        y: np.ndarray,
        constellation: Constellation,
        snr_db: float,
        rng: SeededRng,
    ) -> DetectionResult:
        if self.name == "zf":
            return detect_zf(channel, y, constellation)
        if self.name == "mmse":
            return detect_mmse(channel, y, constellation, snr_db)
        if self.name == "sphere":
            return detect_sphere(channel, y, constellation)
        if self.name == "cim-ml":
            return detect_cim_ml(channel, y, constellation, snr_db, self.rimimo_config(), rng)
        if self.name == "ri-mimo":
            return detect_ri_mimo(channel, y, constellation, snr_db, self.rimimo_config(), rng)
        if self.name == "trim":
            return detect_trim(
                channel, y, constellation, snr_db, self.trim_depth, self.rimimo_config(), rng
            )
        if self.name == "ri-nr":
            return detect_ri_nr(
                channel, y, constellation, snr_db, self.gamma, self.rimimo_config(), rng
            )
        raise ConfigError(f"unknown detector {self.name!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    n_t: int
    n_r: int
    modulation: int
    snr_points: tuple[float, ...]
    channels: int
    vectors_per_channel: int
    detector: DetectorSpec
    seed: int
    min_ber_target: float | None = None
    noiseless: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.channels < 1:
            raise ConfigError("system.channels must be >= 1")
        if self.vectors_per_channel < 1:
            raise ConfigError("system.vectors_per_channel must be >= 1")
        if self.n_r < self.n_t:
            raise ConfigError("system.n_r must be >= n_t")
        if not self.snr_points:
            raise ConfigError("system.snr_db must not be empty")
        if self.min_ber_target is not None and self.bits_per_point < 4.0 / self.min_ber_target:
            raise ConfigError(
                f"system.min_ber_target={self.min_ber_target} needs >= "
                f"{math.ceil(4.0 / self.min_ber_target)} bits per point, "
                f"config provides {self.bits_per_point}"
            )

    @property
    def bits_per_instance(self) -> int:
        return self.n_t * make_constellation(self.modulation).bits_per_symbol

    @property
    def bits_per_point(self) -> int:
        return self.channels * self.vectors_per_channel * self.bits_per_instance


def vectors_for_target(n_t: int, modulation: int, channels: int, min_ber_target: float) -> int:
    """Per-channel vector count so a point carries >= 4 / min_ber_target bits."""
    bpi = n_t * make_constellation(modulation).bits_per_symbol
    return max(1, math.ceil(4.0 / (min_ber_target * bpi * channels)))


def wilson_interval(errors: int, bits: int, z: float = 1.96) -> tuple[float, float]:
    """95% Wilson score interval for a bit-error proportion."""
    if bits == 0:
        return 0.0, 1.0
    p = errors / bits
    denom = 1.0 + z * z / bits
    center = (p + z * z / (2 * bits)) / denom
    half = z * math.sqrt(p * (1 - p) / bits + z * z / (4 * bits * bits)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    bits: int
    errors: int

    @property
    def ber(self) -> float:
        return self.errors / self.bits if self.bits else 0.0

    @property
    def ci(self) -> tuple[float, float]:
        return wilson_interval(self.errors, self.bits)


@dataclass(frozen=True)
class BerResult:
    detector: DetectorSpec
    points: tuple[BerPoint, ...]

    def point(self, snr_db: float) -> BerPoint:
        for p in self.points:
            if p.snr_db == snr_db:
                return p
        raise KeyError(snr_db)


def _channel_task(cfg: ExperimentConfig, snr_idx: int, ch_idx: int) -> tuple[int, int, int]:
    """Detect all vectors of one channel draw; returns (snr_idx, errors, bits)."""
    root = SeededRng(cfg.seed)
    cons = make_constellation(cfg.modulation)
    channel = generate_channel(root.substream(0, snr_idx, ch_idx), cfg.n_t, cfg.n_r, cons)
    snr_db = math.inf if cfg.noiseless else cfg.snr_points[snr_idx]
    errors = 0
    bits_total = 0
    bpi = cfg.bits_per_instance
    for v in range(cfg.vectors_per_channel):
        inst = root.substream(1, snr_idx, ch_idx, v)
        payload = inst.substream(0).generator().integers(0, 2, bpi).astype(np.uint8)
        frame = bits_to_frame(payload, cons, cfg.n_t)
        y = transmit(channel, frame, cons, snr_db, inst.substream(1))
        try:
            res = cfg.detector.run(channel, y, cons, snr_db, inst.substream(2))
        except Exception as exc:
            raise RuntimeError(
                f"detector {cfg.detector.name!r} failed on instance "
                f"(snr={cfg.snr_points[snr_idx]}, channel={ch_idx}, vector={v}, seed={cfg.seed})"
            ) from exc
        errors += int(np.count_nonzero(res.bits != payload))
        bits_total += bpi
    return snr_idx, errors, bits_total


def _run_tasks(cfg: ExperimentConfig) -> list[tuple[int, int, int]]:
    tasks = [(s, c) for s in range(len(cfg.snr_points)) for c in range(cfg.channels)]
    if cfg.workers <= 1 or len(tasks) == 1:
        return [_channel_task(cfg, s, c) for s, c in tasks]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(_channel_task, *zip(*[(cfg, s, c) for s, c in tasks])))


def run_ber_experiment(cfg: ExperimentConfig) -> BerResult:
    """Monte-Carlo BER per SNR point: generate channels, transmit frames,
    detect, and count bit disagreements against the payload."""
    err = np.zeros(len(cfg.snr_points), dtype=np.int64)
    tot = np.zeros(len(cfg.snr_points), dtype=np.int64)
    for snr_idx, errors, bits in _run_tasks(cfg):
        err[snr_idx] += errors
        tot[snr_idx] += bits
    points = tuple(
        BerPoint(snr_db=s, bits=int(tot[i]), errors=int(err[i]))
        for i, s in enumerate(cfg.snr_points)
    )
    return BerResult(detector=cfg.detector, points=points)


def sweep_anneals(cfg: ExperimentConfig, n_a_list: list[int]) -> list[tuple[int, BerResult]]:
    out = []
    for n_a in n_a_list:
        out.append((n_a, run_ber_experiment(replace(cfg, detector=replace(cfg.detector, n_a=n_a)))))
    return out


def sweep_regularization(cfg: ExperimentConfig, r_list: list[float]) -> list[tuple[float, BerResult]]:
    out = []
    for r in r_list:
        out.append((r, run_ber_experiment(replace(cfg, detector=replace(cfg.detector, r=r)))))
    return out


def sweep_precision(cfg: ExperimentConfig, k_list: list[int | None]) -> list[tuple[int | None, BerResult]]:
    """k entries of 0/None run at full precision."""
    out = []
    for k in k_list:
        bits = None if not k else int(k)
        out.append(
            (bits, run_ber_experiment(replace(cfg, detector=replace(cfg.detector, precision_bits=bits))))
        )
    return out


def error_floor_vs_anneals(cfg: ExperimentConfig, n_a_list: list[int]) -> list[tuple[int, BerResult]]:
    """Anneal sweep at the high-SNR limit with the MMSE candidate disabled,
    which is what exposes the machine's own error floor."""
    floor_cfg = replace(cfg, detector=replace(cfg.detector, include_mmse_candidate=False))
    return sweep_anneals(floor_cfg, n_a_list)


def fer(ber_coded: float, l: int) -> float:
    """Frame error rate of an l-bit frame at the given post-decoding BER."""
    if not 0.0 <= ber_coded <= 1.0:
        raise ValueError("ber must be in [0, 1]")
    if l < 1:
        raise ValueError("l must be >= 1")
    return 1.0 - (1.0 - ber_coded) ** l


def throughput(n_t: int, tr: float, fer_value: float) -> float:
    """Tput = N_t * Tr * (1 - FER)."""
    if not 0.0 <= fer_value <= 1.0:
        raise ValueError("fer must be in [0, 1]")
    return n_t * tr * (1.0 - fer_value)


DEFAULT_MCS_SET: tuple[tuple[int, str], ...] = tuple(
    (m, rate) for m in (2, 4, 16) for rate in ("1/3", "1/2", "2/3")
)


@dataclass(frozen=True)
class AmcPoint:
    snr_db: float
    modulation: int
    code_rate: str
    coded_ber: float
    fer: float
    tput: float


def simulate_coded_ber(
    cfg: ExperimentConfig,
    modulation: int,
    code_rate: str,
    snr_idx: int,
    mcs_idx: int,
    info_bits: int,
    frame_bits: int,
) -> float:
    """Post-decoding BER: encode packets, carry them over detected MIMO
    instances (channel redrawn every vectors_per_channel instances), decode."""
    cons = make_constellation(modulation)
    code = conv_code(code_rate)
    root = SeededRng(cfg.seed)
    snr_db = math.inf if cfg.noiseless else cfg.snr_points[snr_idx]
    bpi = cfg.n_t * cons.bits_per_symbol

    n_packets = max(1, math.ceil(info_bits / frame_bits))
    errors = 0
    total = 0
    instance = 0
    channel = None
    for pkt in range(n_packets):
        payload = (
            root.substream(3, snr_idx, mcs_idx, pkt)
            .generator()
            .integers(0, 2, frame_bits)
            .astype(np.uint8)
        )
        coded = encode(payload, code)
        n_inst = math.ceil(len(coded) / bpi)
        buf = np.zeros(n_inst * bpi, dtype=np.uint8)
        buf[: len(coded)] = coded
        received = np.empty_like(buf)
        for i in range(n_inst):
            if channel is None or instance % cfg.vectors_per_channel == 0:
                channel = generate_channel(
                    root.substream(2, snr_idx, mcs_idx, instance // cfg.vectors_per_channel),
                    cfg.n_t,
                    cfg.n_r,
                    cons,
                )
            chunk = buf[i * bpi : (i + 1) * bpi]
            frame = bits_to_frame(chunk, cons, cfg.n_t)
            inst_rng = root.substream(4, snr_idx, mcs_idx, pkt, i)
            y = transmit(channel, frame, cons, snr_db, inst_rng.substream(0))
            res = cfg.detector.run(channel, y, cons, snr_db, inst_rng.substream(1))
            received[i * bpi : (i + 1) * bpi] = res.bits
            instance += 1
        decoded = viterbi_decode(received[: len(coded)], code)
        errors += int(np.count_nonzero(decoded != payload))
        total += frame_bits
    return errors / total


def amc_throughput(
    cfg: ExperimentConfig,
    info_bits: int = 48000,
    frame_bits: int = 12000,
    mcs_set: tuple[tuple[int, str], ...] = DEFAULT_MCS_SET,
) -> list[AmcPoint]:
    """Coded throughput of every MCS at every SNR point.

    The oracle pick per SNR is the row maximizing tput (see best_mcs);
    per-user rate is bits/symbol * code rate in normalized units.
    """
    rows = []
    for snr_idx, snr_db in enumerate(cfg.snr_points):
        for mcs_idx, (modulation, rate) in enumerate(mcs_set):
            coded = simulate_coded_ber(
                cfg, modulation, rate, snr_idx, mcs_idx, info_bits, frame_bits
            )
            f = fer(coded, frame_bits)
            tr = math.log2(modulation) * float(Fraction(rate))
            rows.append(
                AmcPoint(
                    snr_db=snr_db,
                    modulation=modulation,
                    code_rate=rate,
                    coded_ber=coded,
                    fer=f,
                    tput=throughput(cfg.n_t, tr, f),
                )
            )
    return rows


def best_mcs(rows: list[AmcPoint]) -> dict[float, AmcPoint]:
    """Oracle AMC: per SNR, the throughput-maximizing MCS (first on ties)."""
    out: dict[float, AmcPoint] = {}
    for row in rows:
        cur = out.get(row.snr_db)
        if cur is None or row.tput > cur.tput:
            out[row.snr_db] = row
    return out


@dataclass(frozen=True)
class HardwareRegime:
    """One row of the machine-capacity analysis."""

    n_t: int
    n_r: int
    modulation: int
    n_a: int
    instances_per_ms: int = 8400
    pulse_spacing_s: float = 200e-12
    roundtrips: int = 128
    n_pe: int | None = None
    label: str = ""

    @property
    def n_s(self) -> int:
        return self.n_t * int(round(math.log2(self.modulation)))


@dataclass(frozen=True)
class HardwareReport:
    regime: HardwareRegime
    n_s: int
    anneals_per_ms_required: int
    anneal_time_s: float
    anneals_per_ms_per_machine: float
    machines_needed: int
    serial_budget_s: float
    batch_latency_s: float | None


def hardware_requirements(regime: HardwareRegime) -> HardwareReport:
    """Pure arithmetic behind the capacity table.

    A time-multiplexed machine needs roundtrips * n_s * pulse_spacing per
    anneal; the requirement is instances_per_ms * n_a anneals every ms.
    The machine count is the nearest integer to requirement/rate (the
    inputs are order-of-magnitude anneal budgets, not exact quotas).
    """
    n_s = regime.n_s
    required = regime.instances_per_ms * regime.n_a
    anneal_time = regime.roundtrips * n_s * regime.pulse_spacing_s
    per_machine = 1e-3 / anneal_time
    machines = int(math.floor(required / per_machine + 0.5))
    batch = None
    if regime.n_pe is not None:
        batch = 1e-3 / (regime.instances_per_ms / regime.n_pe)
    return HardwareReport(
        regime=regime,
        n_s=n_s,
        anneals_per_ms_required=required,
        anneal_time_s=anneal_time,
        anneals_per_ms_per_machine=per_machine,
        machines_needed=machines,
        serial_budget_s=1e-3 / regime.instances_per_ms,
        batch_latency_s=batch,
    )


# Operating regimes compatible with near-term machines: the anneal budgets
# are inputs (empirically sufficient per size/modulation), not derived.
CAPACITY_REGIMES: tuple[HardwareRegime, ...] = (
    HardwareRegime(label="Standard LTE 2x2", n_t=2, n_r=2, modulation=16, n_a=16),
    HardwareRegime(label="Massive MIMO 16x32", n_t=16, n_r=32, modulation=2, n_a=16),
    HardwareRegime(label="Large MIMO 16x16", n_t=16, n_r=16, modulation=2, n_a=64),
    HardwareRegime(label="Large MIMO 16x16", n_t=16, n_r=16, modulation=2, n_a=128),
    HardwareRegime(label="Large MIMO 20x20", n_t=20, n_r=20, modulation=2, n_a=64),
    HardwareRegime(label="Large MIMO 16x16", n_t=16, n_r=16, modulation=4, n_a=128),
    HardwareRegime(label="Large MIMO 8x8", n_t=8, n_r=8, modulation=16, n_a=256),
    HardwareRegime(label="Large MIMO 16x16", n_t=16, n_r=16, modulation=16, n_a=256),
)


def format_hardware_table(reports: list[HardwareReport]) -> str:
    """Plain-text capacity table (one line per regime)."""
    header = (
        f"{'Regime':<22}{'Mod':>6}{'N_a':>6}{'N_s':>6}"
        f"{'Anneals/ms':>14}{'Anneal time':>14}{'Machines':>10}"
    )
    lines = [header, "-" * len(header)]
    for rep in reports:
        r = rep.regime
        lines.append(
            f"{r.label or f'{r.n_t}x{r.n_r}':<22}{r.modulation:>6}{r.n_a:>6}{rep.n_s:>6}"
            f"{rep.anneals_per_ms_required:>14}"
            f"{rep.anneal_time_s * 1e6:>12.4f}us"
            f"{rep.machines_needed:>10}"
        )
    return "\n".join(lines)


def _flatten_config(cfg: ExperimentConfig) -> list[tuple[str, object]]:
    det = cfg.detector
    items: list[tuple[str, object]] = [
        ("system.n_t", cfg.n_t),
        ("system.n_r", cfg.n_r),
        ("system.modulation", cfg.modulation),
        ("system.snr_db", list(cfg.snr_points)),
        ("system.channels", cfg.channels),
        ("system.vectors_per_channel", cfg.vectors_per_channel),
        ("system.seed", cfg.seed),
        ("system.noiseless", cfg.noiseless),
        ("detector.name", det.name),
        ("detector.n_a", det.n_a),
        ("detector.r", det.r),
        ("detector.include_mmse_candidate", det.include_mmse_candidate),
        ("detector.precision_bits", det.precision_bits),
        ("detector.trim_depth", det.trim_depth),
        ("detector.gamma", det.gamma),
        ("detector.solver", det.solver),
        ("detector.cim.dt", det.cim.dt),
        ("detector.cim.steps", det.cim.steps),
        ("detector.cim.n_m", det.cim.n_m),
        ("detector.cim.coupling", det.cim.c),
        ("detector.cim.saturation", det.cim.a_s),
        ("detector.cim.pump_max", det.cim.pump_max),
    ]
    if cfg.min_ber_target is not None:
        items.insert(7, ("system.min_ber_target", cfg.min_ber_target))
    return items


BER_CSV_COLUMNS = (
    "snr_db",
    "detector",
    "n_a",
    "r",
    "precision_bits",
    "bits",
    "errors",
    "ber",
    "ci_low",
    "ci_high",
)

AMC_CSV_COLUMNS = ("snr_db", "detector", "modulation", "code_rate", "coded_ber", "fer", "tput")


def ber_rows(result: BerResult) -> list[dict]:
    det = result.detector
    rows = []
    for p in result.points:
        lo, hi = p.ci
        rows.append(
            {
                "snr_db": p.snr_db,
                "detector": det.name,
                "n_a": det.n_a,
                "r": det.r,
                "precision_bits": det.precision_bits if det.precision_bits else 0,
                "bits": p.bits,
                "errors": p.errors,
                "ber": p.ber,
                "ci_low": lo,
                "ci_high": hi,
            }
        )
    return rows


def write_csv(path: str | os.PathLike, columns: tuple[str, ...], rows: list[dict],
              cfg: ExperimentConfig | None = None) -> None:
    """CSV with the effective config echoed as '# key = value' header lines."""
    with open(path, "w", newline="") as fh:
        if cfg is not None:
            for key, value in _flatten_config(cfg):
                fh.write(f"# {key} = {value}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_csv_cell(row[c]) for c in columns) + "\n")


def _csv_cell(v: object) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def read_csv_rows(path: str | os.PathLike) -> list[dict]:
    """Read back a toolkit CSV, skipping the config header comments."""
    import csv as _csv

    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(_csv.DictReader(lines))
