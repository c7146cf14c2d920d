import math

import numpy as np
import pytest

from isingmimo.errors import ConfigError
from isingmimo.harness import (
    CAPACITY_REGIMES,
    BerPoint,
    DetectorSpec,
    ExperimentConfig,
    HardwareRegime,
    amc_throughput,
    ber_rows,
    best_mcs,
    error_floor_vs_anneals,
    fer,
    hardware_requirements,
    read_csv_rows,
    run_ber_experiment,
    sweep_anneals,
    sweep_regularization,
    throughput,
    vectors_for_target,
    wilson_interval,
    write_csv,
    BER_CSV_COLUMNS,
)


def small_config(detector, snr=(10.0,), seed=77, **kwargs):
    defaults = dict(
        n_t=2, n_r=2, modulation=2, snr_points=tuple(snr), channels=4,
        vectors_per_channel=8, detector=detector, seed=seed,
    )
    defaults.update(kwargs)
    return ExperimentConfig(**defaults)


class TestConfig:
    def test_bits_arithmetic(self):
        cfg = small_config(DetectorSpec(name="mmse"))
        assert cfg.bits_per_instance == 2
        assert cfg.bits_per_point == 64

    def test_min_ber_target_violation(self):
        with pytest.raises(ConfigError):
            small_config(DetectorSpec(name="mmse"), min_ber_target=1e-3)

    def test_vectors_for_target(self):
        v = vectors_for_target(n_t=8, modulation=2, channels=16, min_ber_target=1e-3)
        assert 16 * v * 8 >= 4000

    def test_geometry_validation(self):
        with pytest.raises(ConfigError):
            small_config(DetectorSpec(name="mmse"), n_t=4, n_r=2)

    def test_unknown_detector(self):
        with pytest.raises(ConfigError):
            DetectorSpec(name="genie")


class TestWilson:
    def test_contains_point_estimate(self):
        for errors, bits in [(0, 100), (3, 100), (50, 100), (100, 100)]:
            lo, hi = wilson_interval(errors, bits)
            assert lo <= errors / bits <= hi

    def test_no_data(self):
        assert wilson_interval(0, 0) == (0.0, 1.0)

    def test_zero_errors_lower_bound(self):
        lo, hi = wilson_interval(0, 1000)
        assert lo == 0.0
        assert 0 < hi < 0.01


class TestBerExperiment:
    def test_noiseless_sphere_zero_ber(self):
        cfg = small_config(DetectorSpec(name="sphere"), noiseless=True)
        res = run_ber_experiment(cfg)
        assert res.points[0].errors == 0

    def test_mmse_noise_dominated(self):
        cfg = small_config(
            DetectorSpec(name="mmse"), snr=(-10.0,), channels=16, vectors_per_channel=32
        )
        ber = run_ber_experiment(cfg).points[0].ber
        assert 0.2 < ber < 0.6

    def test_deterministic_across_workers(self):
        cfg = small_config(DetectorSpec(name="ri-mimo", n_a=2), channels=6)
        seq = run_ber_experiment(cfg)
        par = run_ber_experiment(ExperimentConfig(**{**cfg.__dict__, "workers": 3}))
        assert seq.points == par.points

    def test_detector_error_carries_coordinates(self):
        cfg = small_config(DetectorSpec(name="trim", trim_depth=1), n_t=1, n_r=1)
        with pytest.raises(RuntimeError, match="channel=0"):
            run_ber_experiment(cfg)  # depth 1 >= n_t triggers a config error inside


class TestSweeps:
    def test_single_setting(self):
        cfg = small_config(DetectorSpec(name="ri-mimo", n_a=2))
        table = sweep_anneals(cfg, [1])
        assert len(table) == 1
        assert table[0][0] == 1

    def test_r_zero_column_equals_cim_ml(self):
        cfg = small_config(DetectorSpec(name="ri-mimo", n_a=4), snr=(8.0,))
        (r_val, reg), = sweep_regularization(cfg, [0.0])
        assert r_val == 0.0
        cim = run_ber_experiment(
            ExperimentConfig(**{**cfg.__dict__, "detector": DetectorSpec(name="cim-ml", n_a=4)})
        )
        assert reg.points[0].errors == cim.points[0].errors

    def test_error_floor_disables_mmse_candidate(self):
        cfg = small_config(DetectorSpec(name="ri-mimo", n_a=2, include_mmse_candidate=True))
        table = error_floor_vs_anneals(cfg, [1, 2])
        assert all(not res.detector.include_mmse_candidate for _, res in table)


class TestFormulas:
    def test_fer_edges(self):
        assert fer(0.0, 12000) == 0.0
        assert fer(1.0, 12000) == 1.0

    def test_fer_value(self):
        expected = 1.0 - (1.0 - 1e-5) ** 12000
        assert fer(1e-5, 12000) == pytest.approx(expected, abs=1e-12)
        assert fer(1e-5, 12000) == pytest.approx(0.11308, abs=1e-4)

    def test_fer_validation(self):
        with pytest.raises(ValueError):
            fer(1.5, 100)
        with pytest.raises(ValueError):
            fer(0.5, 0)

    def test_throughput(self):
        assert throughput(16, 1.0, 0.0) == 16.0
        assert throughput(16, 1.0, 1.0) == 0.0
        assert throughput(16, 1.0, 0.5) == 8.0


class TestAmc:
    def test_oracle_extremes(self):
        det = DetectorSpec(name="mmse")
        lo = ExperimentConfig(
            n_t=2, n_r=2, modulation=2, snr_points=(-6.0, 38.0), channels=2,
            vectors_per_channel=20, detector=det, seed=3,
        )
        rows = amc_throughput(lo, info_bits=3000, frame_bits=1500)
        picks = best_mcs(rows)
        low = picks[-6.0]
        assert (low.modulation, low.code_rate) == (2, "1/3")
        high = picks[38.0]
        assert (high.modulation, high.code_rate) == (16, "2/3")
        assert high.tput == pytest.approx(2 * 4 * 2 / 3)

    def test_rows_cover_grid(self):
        det = DetectorSpec(name="zf")
        cfg = ExperimentConfig(
            n_t=2, n_r=2, modulation=2, snr_points=(12.0,), channels=1,
            vectors_per_channel=10, detector=det, seed=4,
        )
        rows = amc_throughput(cfg, info_bits=600, frame_bits=300)
        assert len(rows) == 9
        assert all(r.fer == pytest.approx(fer(r.coded_ber, 300)) for r in rows)


class TestHardware:
    def test_capacity_table_values(self):
        # displayed requirement values from the published capacity analysis
        expected = [1.344e5, 1.344e5, 5.376e5, 1.075e6, 5.376e5, 1.075e6, 2.15e6, 2.15e6]
        expected_ns = [8, 16, 16, 16, 20, 32, 32, 64]
        for regime, req, ns in zip(CAPACITY_REGIMES, expected, expected_ns):
            rep = hardware_requirements(regime)
            assert rep.n_s == ns
            assert rep.anneals_per_ms_required == regime.n_a * 8400
            assert rep.anneals_per_ms_required == pytest.approx(req, rel=1e-3)

    def test_time_multiplexed_chain(self):
        regime = HardwareRegime(n_t=16, n_r=16, modulation=16, n_a=256, n_pe=1000)
        rep = hardware_requirements(regime)
        assert rep.n_s == 64
        assert rep.anneal_time_s == pytest.approx(1.6384e-6, rel=1e-12)
        assert rep.anneals_per_ms_per_machine == pytest.approx(610.35, abs=0.01)
        assert abs(rep.machines_needed - 3522) <= 1
        assert rep.serial_budget_s == pytest.approx(119e-9, abs=1e-9)
        assert rep.batch_latency_s == pytest.approx(119.05e-6, abs=0.1e-6)

    def test_spin_count_uses_transmitters(self):
        rep = hardware_requirements(HardwareRegime(n_t=16, n_r=32, modulation=2, n_a=16))
        assert rep.n_s == 16


class TestCsv:
    def test_round_trip(self, tmp_path):
        cfg = small_config(DetectorSpec(name="mmse"))
        res = run_ber_experiment(cfg)
        path = tmp_path / "out.csv"
        write_csv(path, BER_CSV_COLUMNS, ber_rows(res), cfg)
        rows = read_csv_rows(path)
        assert len(rows) == 1
        assert rows[0]["detector"] == "mmse"
        assert int(rows[0]["bits"]) == cfg.bits_per_point
        header = path.read_text().splitlines()[0]
        assert header.startswith("# system.n_t = 2")

    def test_point_properties(self):
        p = BerPoint(snr_db=10.0, bits=1000, errors=10)
        assert p.ber == 0.01
        lo, hi = p.ci
        assert lo < 0.01 < hi
