import io

import pytest

from drivelife.ingest import parse_ssd_log, write_ssd_csv
from drivelife.lifecycle import detect_ssd_failures
from drivelife.synth import (BurstSpec, SynthConfig, generate_fleet,
                             verify_fleet)


class TestConfig:
    def test_invalid_fractions_rejected(self):
        with pytest.raises(ValueError):
            SynthConfig(models={"M": 1.0})
        with pytest.raises(ValueError):
            SynthConfig(models={"M": -0.1})

    def test_multipliers_must_be_at_least_one(self):
        with pytest.raises(ValueError):
            SynthConfig(infant_hazard_multiplier=0.5)

    def test_minimum_population(self):
        with pytest.raises(ValueError):
            SynthConfig(n_drives=0)


class TestGenerate:
    def test_zero_failure_fraction_means_no_failures(self):
        cfg = SynthConfig(n_drives=30, horizon_days=120, models={"M": 0.0},
                          seed=1)
        ds, truth = generate_fleet(cfg)
        assert truth == []
        assert not any(r.swap_event for r in ds.iter_records())

    def test_calibration_against_fleet_targets(self):
        # targets patterned on the observed fleet: 11.29% of drives failed,
        # 0.002176 daily uncorrectable-error incidence
        cfg = SynthConfig(n_drives=2000, horizon_days=365,
                          models={"M": 0.1129}, seed=42)
        ds, truth = generate_fleet(cfg)
        failed = len({ev.drive for ev in truth})
        assert abs(failed / 2000 - 0.1129) <= 0.02
        report = verify_fleet(ds, truth, cfg)
        assert report.check("failed_fraction[all]").ok
        assert report.check("incidence[uncorrectable]").ok

    def test_same_seed_byte_identical_csv(self):
        cfg = SynthConfig(n_drives=25, horizon_days=90, seed=9)
        out = []
        for _ in range(2):
            ds, _ = generate_fleet(cfg)
            buf = io.StringIO()
            write_ssd_csv(ds, buf)
            out.append(buf.getvalue())
        assert out[0] == out[1]

    def test_different_seed_differs(self):
        a, _ = generate_fleet(SynthConfig(n_drives=10, horizon_days=60, seed=1))
        b, _ = generate_fleet(SynthConfig(n_drives=10, horizon_days=60, seed=2))
        assert a != b

    def test_cumulative_fields_non_decreasing_and_ingest_accepts(self):
        cfg = SynthConfig(n_drives=40, horizon_days=150,
                          models={"M": 0.3}, seed=6)
        ds, _ = generate_fleet(cfg)
        buf = io.StringIO()
        write_ssd_csv(ds, buf)
        parsed = parse_ssd_log(buf.getvalue())
        assert parsed.provenance["quarantined"] == []
        assert parsed == ds

    def test_ground_truth_recovered_by_failure_rule(self):
        cfg = SynthConfig(n_drives=150, horizon_days=200, models={"M": 0.25},
                          seed=3)
        ds, truth = generate_fleet(cfg)
        detected = detect_ssd_failures(ds)
        planted = {(e.drive, e.age_days, e.ordinal) for e in truth}
        found = {(e.drive, e.age_days, e.ordinal) for e in detected}
        assert planted == found

    def test_hdd_fleet_has_daily_smart_snapshots(self):
        cfg = SynthConfig(family="hdd", n_drives=12, horizon_days=90,
                          models={"ST-TEST": 0.2}, seed=4,
                          error_incidence={"smart_187": 0.01},
                          bursts=(BurstSpec(kind="smart_187", mean=5.0),))
        ds, truth = generate_fleet(cfg)
        assert ds.family == "hdd"
        rec = next(ds.iter_records())
        assert 9 in rec.smart_raw and 240 in rec.smart_raw
        flagged = sum(1 for r in ds.iter_records() if r.failed_today)
        assert flagged == len(truth)


class TestVerify:
    def test_self_consistency(self):
        cfg = SynthConfig(n_drives=800, horizon_days=200, models={"M": 0.15},
                          seed=10)
        ds, truth = generate_fleet(cfg)
        assert verify_fleet(ds, truth, cfg).ok

    def test_doubled_target_fails_fraction_check(self):
        cfg = SynthConfig(n_drives=800, horizon_days=200, models={"M": 0.15},
                          seed=10)
        ds, truth = generate_fleet(cfg)
        doubled = SynthConfig(n_drives=800, horizon_days=200,
                              models={"M": 0.30}, seed=10)
        report = verify_fleet(ds, truth, doubled)
        assert not report.check("failed_fraction[M]").ok

    def test_infant_multiplier_shows_in_rate_ratio(self):
        cfg = SynthConfig(n_drives=1200, horizon_days=365, models={"M": 0.12},
                          infant_hazard_multiplier=5.0, seed=12)
        ds, truth = generate_fleet(cfg)
        report = verify_fleet(ds, truth, cfg)
        check = report.check("infant_rate_ratio")
        assert check.realized >= 3.0 and check.ok
