"""Command-line frontend.

Verbs: ber, sweep-anneals, sweep-reg, sweep-precision, error-floor, amc,
hardware, solve-ising, selftest. Experiment verbs read a TOML config (see
config.py for the schema); every config key has a flag override and the
seed is mandatory — there is no wall-clock default, so identical
invocations produce identical artifacts.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import __version__
from .cim import active_backend
from .config import apply_overrides, build_experiment, load_config_file
from .errors import IsingMimoError
from .harness import (
    AMC_CSV_COLUMNS,
    BER_CSV_COLUMNS,
    CAPACITY_REGIMES,
    HardwareRegime,
    amc_throughput,
    ber_rows,
    best_mcs,
    error_floor_vs_anneals,
    format_hardware_table,
    hardware_requirements,
    run_ber_experiment,
    sweep_anneals,
    sweep_precision,
    sweep_regularization,
    write_csv,
)
from .ising import brute_force_ground, energy, normalize, read_ising_text


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--seed", type=int, help="master seed (required here or in the config)")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--workers", type=int, default=None,
                   help="parallel workers (default: $ISINGMIMO_WORKERS or 1; output is identical for any value)")
    p.add_argument("--nt", type=int, help="override system.n_t")
    p.add_argument("--nr", type=int, help="override system.n_r")
    p.add_argument("--mod", type=int, help="override system.modulation")
    p.add_argument("--snr", type=_float_list, help="override system.snr_db, comma separated")
    p.add_argument("--channels", type=int, help="override system.channels")
    p.add_argument("--vectors", type=int, help="override system.vectors_per_channel")
    p.add_argument("--min-ber-target", type=float, help="override system.min_ber_target")
    p.add_argument("--noiseless", action="store_true", default=None,
                   help="transmit with zero noise")
    p.add_argument("--detector", help="override detector.name")
    p.add_argument("--na", type=int, help="override detector.n_a")
    p.add_argument("--r", type=float, help="override detector.r")
    p.add_argument("--precision", type=int, help="override detector.precision_bits (0 = full)")
    p.add_argument("--trim-depth", type=int, help="override detector.trim_depth")
    p.add_argument("--gamma", type=float, help="override detector.gamma")
    p.add_argument("--solver", help="override detector.solver (cim|brute)")


def _experiment_config(args: argparse.Namespace, default_snr: list[float] | None = None):
    data = load_config_file(args.config) if args.config else {}
    workers = args.workers
    if workers is None:
        workers = int(os.environ.get("ISINGMIMO_WORKERS", "1"))
    overrides = {
        "system.seed": args.seed,
        "system.n_t": args.nt,
        "system.n_r": args.nr,
        "system.modulation": args.mod,
        "system.snr_db": args.snr,
        "system.channels": args.channels,
        "system.vectors_per_channel": args.vectors,
        "system.min_ber_target": args.min_ber_target,
        "system.noiseless": args.noiseless,
        "system.workers": workers,
        "detector.name": args.detector,
        "detector.n_a": args.na,
        "detector.r": args.r,
        "detector.precision_bits": args.precision,
        "detector.trim_depth": args.trim_depth,
        "detector.gamma": args.gamma,
        "detector.solver": args.solver,
    }
    merged = apply_overrides(data, overrides)
    if default_snr is not None and "snr_db" not in merged.get("system", {}):
        merged = apply_overrides(merged, {"system.snr_db": default_snr})
    return merged, build_experiment(merged)


def _cmd_ber(args) -> int:
    _, cfg = _experiment_config(args)
    result = run_ber_experiment(cfg)
    out = args.out or "ber.csv"
    write_csv(out, BER_CSV_COLUMNS, ber_rows(result), cfg)
    worst = max(p.ber for p in result.points)
    print(f"ber: wrote {out} ({len(result.points)} SNR points, detector {cfg.detector.name}, "
          f"{cfg.bits_per_point} bits/point, worst BER {worst:.3e})")
    return 0


def _run_sweep(args, sweep_fn, values, out_default, label) -> int:
    _, cfg = _experiment_config(args, default_snr=[40.0] if label == "error-floor" else None)
    results = sweep_fn(cfg, values)
    rows = []
    for _, res in results:
        rows.extend(ber_rows(res))
    out = args.out or out_default
    write_csv(out, BER_CSV_COLUMNS, rows, cfg)
    print(f"{label}: wrote {out} ({len(values)} settings x {len(cfg.snr_points)} SNR points)")
    return 0


def _cmd_sweep_anneals(args) -> int:
    return _run_sweep(args, sweep_anneals, args.na_list, "sweep_anneals.csv", "sweep-anneals")


def _cmd_sweep_reg(args) -> int:
    return _run_sweep(args, sweep_regularization, args.r_list, "sweep_reg.csv", "sweep-reg")


def _cmd_sweep_precision(args) -> int:
    return _run_sweep(args, sweep_precision, args.k_list, "sweep_precision.csv", "sweep-precision")


def _cmd_error_floor(args) -> int:
    return _run_sweep(args, error_floor_vs_anneals, args.na_list, "error_floor.csv", "error-floor")


def _cmd_amc(args) -> int:
    merged, cfg = _experiment_config(args)
    amc = merged.get("amc", {})
    info_bits = args.info_bits or amc.get("info_bits", 48000)
    frame_bits = args.frame_bits or amc.get("frame_bits", 12000)
    rows = amc_throughput(cfg, info_bits=info_bits, frame_bits=frame_bits)
    csv_rows = [
        {
            "snr_db": r.snr_db,
            "detector": cfg.detector.name,
            "modulation": r.modulation,
            "code_rate": r.code_rate,
            "coded_ber": r.coded_ber,
            "fer": r.fer,
            "tput": r.tput,
        }
        for r in rows
    ]
    out = args.out or "amc.csv"
    write_csv(out, AMC_CSV_COLUMNS, csv_rows, cfg)
    picks = best_mcs(rows)
    for snr in sorted(picks):
        b = picks[snr]
        print(f"amc: snr {snr:g} dB -> best MCS {b.modulation}-QAM rate {b.code_rate}, "
              f"tput {b.tput:.3f}")
    print(f"amc: wrote {out}")
    return 0


def _cmd_hardware(args) -> int:
    if args.table:
        reports = [hardware_requirements(r) for r in CAPACITY_REGIMES]
    else:
        for name in ("nt", "nr", "mod", "na"):
            if getattr(args, name) is None:
                raise IsingMimoError(f"hardware requires --{name} (or use --table)")
        regime = HardwareRegime(
            n_t=args.nt,
            n_r=args.nr,
            modulation=args.mod,
            n_a=args.na,
            instances_per_ms=args.instances_per_ms,
            pulse_spacing_s=args.pulse_spacing_ps * 1e-12,
            roundtrips=args.roundtrips,
            n_pe=args.npe,
        )
        reports = [hardware_requirements(regime)]
    text = format_hardware_table(reports)
    for rep in reports:
        extra = (f"  serial budget {rep.serial_budget_s * 1e9:.1f} ns per instance; "
                 f"{rep.anneals_per_ms_per_machine:.1f} anneals/ms per machine")
        if rep.batch_latency_s is not None:
            extra += f"; batch latency {rep.batch_latency_s * 1e6:.1f} us at N_PE={rep.regime.n_pe}"
        text += "\n" + extra
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    return 0


def _cmd_solve_ising(args) -> int:
    with open(args.infile) as fh:
        problem = read_ising_text(fh)
    if problem.n <= 24 and not args.na:
        spins, e = brute_force_ground(problem)
    else:
        if args.seed is None:
            raise IsingMimoError("solve-ising with --na requires --seed")
        from .cim import CimParams, run_batch
        from .numerics import SeededRng

        norm = normalize(problem)
        cands = run_batch(norm, args.na, CimParams(), SeededRng(args.seed))
        energies = [energy(problem, s) for s in np.unique(cands, axis=0)]
        uniq = np.unique(cands, axis=0)
        best = int(np.argmin(energies))
        spins, e = uniq[best], energies[best]
    print("spins: " + " ".join(f"{int(v):+d}" for v in spins))
    print(f"energy: {e!r}")
    return 0


def _cmd_selftest(args) -> int:
    from .selftest import run_selftest

    return run_selftest()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="isingmimo",
        description="Ising-machine MIMO detection experiments "
                    f"(v{__version__}, kernel backend: {active_backend()})",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("ber", help="BER vs SNR for one detector")
    _add_experiment_flags(p)
    p.set_defaults(fn=_cmd_ber)

    p = sub.add_parser("sweep-anneals", help="BER vs anneal count")
    _add_experiment_flags(p)
    p.add_argument("--na-list", type=_int_list, default=[1, 4, 16, 64])
    p.set_defaults(fn=_cmd_sweep_anneals)

    p = sub.add_parser("sweep-reg", help="BER vs regularization factor")
    _add_experiment_flags(p)
    p.add_argument("--r-list", type=_float_list, default=[0.0, 0.05, 0.1, 0.15, 0.3])
    p.set_defaults(fn=_cmd_sweep_reg)

    p = sub.add_parser("sweep-precision", help="BER vs coefficient precision (bits)")
    _add_experiment_flags(p)
    p.add_argument("--k-list", type=_int_list, default=[2, 3, 5, 0],
                   help="0 means full precision")
    p.set_defaults(fn=_cmd_sweep_precision)

    p = sub.add_parser("error-floor", help="machine error floor vs anneal count "
                                           "(no MMSE candidate, default 40 dB)")
    _add_experiment_flags(p)
    p.add_argument("--na-list", type=_int_list, default=[1, 2, 4, 6, 10, 16])
    p.set_defaults(fn=_cmd_error_floor)

    p = sub.add_parser("amc", help="oracle adaptive-MCS throughput vs SNR")
    _add_experiment_flags(p)
    p.add_argument("--info-bits", type=int, default=None)
    p.add_argument("--frame-bits", type=int, default=None)
    p.set_defaults(fn=_cmd_amc)

    p = sub.add_parser("hardware", help="Ising-machine capacity planner")
    p.add_argument("--nt", type=int)
    p.add_argument("--nr", type=int)
    p.add_argument("--mod", type=int)
    p.add_argument("--na", type=int)
    p.add_argument("--instances-per-ms", type=int, default=8400)
    p.add_argument("--pulse-spacing-ps", type=float, default=200.0)
    p.add_argument("--roundtrips", type=int, default=128)
    p.add_argument("--npe", type=int, default=None)
    p.add_argument("--table", action="store_true", help="print all preset regimes")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_hardware)

    p = sub.add_parser("solve-ising", help="solve a problem in the flat text format")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--na", type=int, default=0, help="anneal count (0 = exact brute force)")
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=_cmd_solve_ising)

    p = sub.add_parser("selftest", help="run the built-in oracle property suite")
    p.set_defaults(fn=_cmd_selftest)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except IsingMimoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
