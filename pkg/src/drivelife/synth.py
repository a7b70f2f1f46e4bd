"""Deterministic synthetic fleet generator with plantable failure effects.

Drives fail under a piecewise-constant daily hazard (an infant multiplier
covers the first ~90 days; an HFH multiplier boosts HDDs above a head
flying hours threshold), calibrated so the expected share of failed
drives matches each model's target fraction. Failures are followed by the
full observable sequence: a short zero-activity run, an unrecorded gap, a
swap marker (SSD) and, with configurable probability, a later re-entry,
so lifecycle reconstruction can be validated end to end against the
returned ground truth.

Error counters follow per-kind daily Bernoulli incidence with small
Poisson magnitudes. Burst specs add pre-failure ramps to chosen error
kinds (optionally only for young or old failures); confounder specs add
failure-independent activity spikes. Everything derives from the config
seed, drive by drive, so a fleet is reproducible record for record.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from . import charstats
from .ingest import FleetDataset, HddDailyRecord, SsdDailyRecord, US_PER_DAY, SSD_ERROR_KINDS
from .lifecycle import FailureEvent

__all__ = [
    "BurstSpec",
    "ConfounderSpec",
    "SynthConfig",
    "CalibrationCheck",
    "CalibrationReport",
    "generate_fleet",
    "verify_fleet",
    "DEFAULT_SSD_ERROR_INCIDENCE",
]

#: Daily per-kind incidence targets (share of drive-days with >=1 error),
#: patterned on the MLC-A column of the observed-incidence table.
DEFAULT_SSD_ERROR_INCIDENCE = {
    "correctable": 0.828895,
    "erase": 0.0005,
    "final_read": 0.001077,
    "final_write": 0.000026,
    "meta": 0.000014,
    "read": 0.000090,
    "response": 0.000001,
    "timeout": 0.000009,
    "uncorrectable": 0.002176,
    "write": 0.000117,
}

_DEFAULT_SSD_MODELS = {"MLC-A": 0.0695, "MLC-B": 0.143, "MLC-D": 0.125}
_DEFAULT_HDD_MODELS = {"ST4000DM000": 0.1021, "ST12000NM0007": 0.0376}

_HDD_EPOCH = dt.date(2014, 1, 17)

#: Caps keeping the planted post-failure sequence within the backward
#: trim bound of the SSD failure rule (7 + 14 + 1 < 30).
_MAX_INACTIVITY_RUN = 7
_MAX_PRESWAP_GAP = 14


@dataclass(frozen=True)
class BurstSpec:
    """Pre-failure error ramp: extra counts in the last ``days`` before failure."""

    kind: str = "uncorrectable"
    mean: float = 20.0
    days: int = 3
    probability: float = 1.0
    age_class: str = "all"  # "young" | "old" | "all"

    def applies(self, fail_age: int, infant_days: int) -> bool:
        if self.age_class == "young":
            return fail_age <= infant_days
        if self.age_class == "old":
            return fail_age > infant_days
        return True


@dataclass(frozen=True)
class ConfounderSpec:
    """Failure-independent activity spikes (for partition-improvement fixtures)."""

    feature: str = "write_ops"  # write_ops | read_ops | an error kind
    rate: float = 0.0           # per-day spike probability
    mean: float = 50.0          # added magnitude when a spike hits
    age_class: str = "all"

    def applies(self, age: int, infant_days: int) -> bool:
        if self.age_class == "young":
            return age <= infant_days
        if self.age_class == "old":
            return age > infant_days
        return True


@dataclass(frozen=True)
class SynthConfig:
    family: str = "ssd"
    n_drives: int = 100
    horizon_days: int = 365
    models: dict = field(default_factory=lambda: dict(_DEFAULT_SSD_MODELS))
    infant_hazard_multiplier: float = 1.0
    infant_period_days: int = 90
    hfh_effect: float = 1.0
    hfh_threshold: float = 40_000.0
    hfh_high_fraction: float = 0.2  # HDD drives starting above the HFH threshold
    error_incidence: dict = field(
        default_factory=lambda: dict(DEFAULT_SSD_ERROR_INCIDENCE))
    bursts: tuple = (BurstSpec(),)
    confounders: tuple = ()
    read_ops_mean: float = 4000.0
    write_ops_mean: float = 2500.0
    erase_ops_mean: float = 40.0
    pe_rate_per_day: float = 1.5
    inactivity_mean_days: float = 2.0
    preswap_gap_mean_days: float = 2.0
    reentry_probability: float = 0.5
    reentry_gap_mean_days: float = 30.0
    seed: int = 0

    def __post_init__(self):
        if self.family not in ("ssd", "hdd"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.n_drives < 1:
            raise ValueError("n_drives must be >= 1")
        if self.horizon_days < 2:
            raise ValueError("horizon_days must be >= 2")
        if not self.models:
            raise ValueError("at least one model is required")
        for name, fraction in self.models.items():
            if not 0.0 <= fraction < 1.0:
                raise ValueError(
                    f"target failure fraction for {name} must be in [0, 1): {fraction}")
        if self.infant_hazard_multiplier < 1 or self.hfh_effect < 1:
            raise ValueError("hazard multipliers must be >= 1")
        for p, name in ((self.reentry_probability, "reentry_probability"),
                        (self.hfh_high_fraction, "hfh_high_fraction")):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        for kind, p in self.error_incidence.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"incidence for {kind} must be in [0, 1]")


def _solve_hazard(target: float, horizon: int, multiplier: float,
                  infant_days: int) -> float:
    """Daily base hazard whose cumulative failure probability hits the target."""
    if target <= 0.0:
        return 0.0
    infant = min(infant_days, horizon)
    mature = horizon - infant

    def survival_gap(h: float) -> float:
        s = (1.0 - min(multiplier * h, 1.0)) ** infant * (1.0 - h) ** mature
        return (1.0 - s) - target

    hi = 1.0 / multiplier - 1e-12
    if survival_gap(hi) < 0:
        raise ValueError(f"target failure fraction {target} is infeasible "
                         f"within {horizon} days")
    return float(brentq(survival_gap, 1e-15, hi, xtol=1e-15))


def _assign_models(config: SynthConfig) -> list[str]:
    names = sorted(config.models)
    return [names[i % len(names)] for i in range(config.n_drives)]


def _sample_failure_day(rng, hazards: np.ndarray, start: int) -> int | None:
    us = rng.random(hazards.size - start)
    hits = np.flatnonzero(us < hazards[start:])
    return int(start + hits[0]) if hits.size else None


def _capped_geometric(rng, mean: float, cap: int) -> int:
    if mean <= 0:
        return 0
    return min(int(rng.geometric(1.0 / (1.0 + mean))) - 1, cap)


@dataclass
class _DrivePlan:
    segments: list          # (start_day, end_day, ends_in_failure)
    failures: list          # fail days
    swaps: list             # swap day per failure
    inactivity: list        # (first_day, last_day) zero-activity runs


def _plan_drive(rng, hazards: np.ndarray, horizon: int,
                config: SynthConfig) -> _DrivePlan:
    plan = _DrivePlan([], [], [], [])
    start = 0
    while start < horizon:
        f = _sample_failure_day(rng, hazards, start)
        if f is None:
            plan.segments.append((start, horizon - 1, False))
            break
        plan.segments.append((start, f, True))
        plan.failures.append(f)
        budget = horizon - 1 - f
        if budget == 0:
            run = gap = 0
            swap = f  # swap flagged on the final active record
        else:
            run = min(_capped_geometric(rng, config.inactivity_mean_days,
                                        _MAX_INACTIVITY_RUN), budget - 1)
            gap = min(_capped_geometric(rng, config.preswap_gap_mean_days,
                                        _MAX_PRESWAP_GAP), budget - 1 - run)
            swap = f + run + gap + 1
        plan.swaps.append(swap)
        if run:
            plan.inactivity.append((f + 1, f + run))
        if rng.random() >= config.reentry_probability:
            break
        reentry = swap + int(rng.geometric(1.0 / config.reentry_gap_mean_days))
        if reentry >= horizon:
            break
        start = reentry
    return plan


def _error_counts(rng, n_days: int, incidence: dict) -> dict[str, np.ndarray]:
    out = {}
    for kind, p in incidence.items():
        if p <= 0:
            continue
        hit = rng.random(n_days) < p
        counts = np.zeros(n_days, dtype=np.int64)
        n_hit = int(hit.sum())
        if n_hit:
            counts[hit] = 1 + rng.poisson(0.5, size=n_hit)
        out[kind] = counts
    return out


def _generate_ssd_drive(drive_id: str, model: str, rng, config: SynthConfig
                        ) -> tuple[list[SsdDailyRecord], list[int]]:
    horizon = config.horizon_days
    base = _solve_hazard(config.models[model], horizon,
                         config.infant_hazard_multiplier,
                         config.infant_period_days)
    hazards = np.full(horizon, base)
    infant = min(config.infant_period_days, horizon)
    hazards[:infant] = min(base * config.infant_hazard_multiplier, 1.0)
    plan = _plan_drive(rng, hazards, horizon, config)

    inactivity_after = {first - 1: (first, last)
                        for first, last in plan.inactivity}
    records: list[SsdDailyRecord] = []
    pe_cum = 0
    bb_factory = int(rng.poisson(3.0))
    bb_new = 0
    for start, end, fails in plan.segments:
        n = end - start + 1
        days = np.arange(start, end + 1)
        reads = 1 + rng.poisson(config.read_ops_mean, size=n)
        writes = 1 + rng.poisson(config.write_ops_mean, size=n)
        erases = rng.poisson(config.erase_ops_mean, size=n)
        pe_inc = rng.poisson(config.pe_rate_per_day, size=n)
        bb_inc = (rng.random(n) < 0.002).astype(np.int64)
        errors = _error_counts(rng, n, config.error_incidence)

        for spec in config.confounders:
            hits = rng.random(n) < spec.rate
            applies = np.array([spec.applies(int(d), config.infant_period_days)
                                for d in days])
            hits &= applies
            n_hits = int(hits.sum())
            if not n_hits:
                continue
            bump = rng.poisson(spec.mean, size=n_hits)
            if spec.feature == "write_ops":
                writes[hits] += bump
            elif spec.feature == "read_ops":
                reads[hits] += bump
            else:
                col = errors.setdefault(spec.feature, np.zeros(n, dtype=np.int64))
                col[hits] += bump

        if fails:
            fail_day = end
            for spec in config.bursts:
                if not spec.applies(fail_day, config.infant_period_days):
                    continue
                if rng.random() >= spec.probability:
                    continue
                col = errors.setdefault(spec.kind, np.zeros(n, dtype=np.int64))
                first = max(0, n - spec.days)
                for i in range(first, n):
                    # ramp toward the failure day
                    level = spec.mean * (i - first + 1) / (n - first)
                    col[i] += rng.poisson(level)

        pe_values = pe_cum + np.cumsum(pe_inc)
        pe_cum = int(pe_values[-1])
        bb_values = bb_new + np.cumsum(bb_inc)
        bb_new = int(bb_values[-1])
        for i in range(n):
            day_errors = {k: int(v[i]) for k, v in errors.items() if v[i]}
            records.append(SsdDailyRecord(
                drive_id=drive_id, model=model,
                timestamp_us=int(days[i]) * US_PER_DAY,
                read_ops=int(reads[i]), write_ops=int(writes[i]),
                erase_ops=int(erases[i]), pe_cycles_cum=int(pe_values[i]),
                dead=False, read_only=False,
                bad_blocks_factory_cum=bb_factory,
                bad_blocks_new_cum=int(bb_values[i]),
                errors=day_errors, swap_event=False))
        if fails and end in inactivity_after:
            # the zero-activity run carries the wear counters as of the
            # failure, not the drive's final values
            first, last = inactivity_after[end]
            for day in range(first, last + 1):
                records.append(SsdDailyRecord(
                    drive_id=drive_id, model=model,
                    timestamp_us=day * US_PER_DAY,
                    read_ops=0, write_ops=0, erase_ops=0, pe_cycles_cum=pe_cum,
                    dead=False, read_only=True,
                    bad_blocks_factory_cum=bb_factory, bad_blocks_new_cum=bb_new,
                    errors={}, swap_event=False))

    by_day = {r.day: r for r in records}
    for swap in plan.swaps:
        existing = by_day.get(swap)
        if existing is not None:
            records[records.index(existing)] = replace(existing, swap_event=True,
                                                       dead=True)
        else:
            records.append(SsdDailyRecord(
                drive_id=drive_id, model=model, timestamp_us=swap * US_PER_DAY,
                read_ops=None, write_ops=None, erase_ops=None,
                pe_cycles_cum=None, dead=True, read_only=True,
                bad_blocks_factory_cum=None, bad_blocks_new_cum=None,
                errors={}, swap_event=True))
    records.sort(key=lambda r: r.timestamp_us)
    return records, plan.failures


def _generate_hdd_drive(serial: str, model: str, rng, config: SynthConfig
                        ) -> tuple[list[HddDailyRecord], list[int]]:
    horizon = config.horizon_days
    base = _solve_hazard(config.models[model], horizon, 1.0,
                         config.infant_period_days)
    hfh_start = 0.0
    if rng.random() < config.hfh_high_fraction:
        hfh_start = config.hfh_threshold * (1.1 + rng.random())
    boosted = (config.hfh_effect if hfh_start > config.hfh_threshold else 1.0)
    hazards = np.full(horizon, min(base * boosted, 1.0))
    plan = _plan_drive(rng, hazards, horizon, config)

    incidence = {k: v for k, v in config.error_incidence.items()
                 if k.startswith("smart_")}
    records: list[HddDailyRecord] = []
    cum = {5: 0, 187: 0, 197: 0, 198: 0, 199: 0, 241: 0, 242: 0}
    power_cycles = int(rng.integers(1, 20))
    for start, end, fails in plan.segments:
        n = end - start + 1
        days = np.arange(start, end + 1)
        hours = rng.uniform(6.0, 14.0, size=n)
        writes = rng.poisson(2_000_000.0, size=n)
        reads = rng.poisson(3_000_000.0, size=n)
        increments = {}
        for kind, p in incidence.items():
            sid = int(kind.split("_")[1])
            hit = rng.random(n) < p
            counts = np.zeros(n, dtype=np.int64)
            if hit.any():
                counts[hit] = 1 + rng.poisson(0.5, size=int(hit.sum()))
            increments[sid] = counts
        if fails:
            for spec in config.bursts:
                if not spec.kind.startswith("smart_"):
                    continue
                if not spec.applies(end, config.infant_period_days):
                    continue
                if rng.random() >= spec.probability:
                    continue
                sid = int(spec.kind.split("_")[1])
                col = increments.setdefault(sid, np.zeros(n, dtype=np.int64))
                first = max(0, n - spec.days)
                for i in range(first, n):
                    col[i] += rng.poisson(spec.mean * (i - first + 1) / (n - first))
        hfh_cum = hfh_start + np.cumsum(hours)
        for i in range(n):
            day = int(days[i])
            for sid, counts in increments.items():
                if sid in cum:
                    cum[sid] += int(counts[i])
            cum[241] += int(writes[i])
            cum[242] += int(reads[i])
            smart = {
                1: int(rng.integers(0, 200_000_000)),
                3: 0,
                4: power_cycles,
                5: cum[5],
                7: int(rng.integers(0, 1_000_000)),
                9: 24 * day,
                10: 0,
                12: power_cycles,
                187: cum[187],
                188: 0,
                190: int(rng.integers(50, 80)),
                192: power_cycles,
                193: power_cycles,
                194: int(rng.integers(20, 45)),
                197: cum[197],
                198: cum[198],
                199: cum[199],
                240: int(hfh_cum[i]),
                241: cum[241],
                242: cum[242],
            }
            records.append(HddDailyRecord(
                date=_HDD_EPOCH + dt.timedelta(days=day), serial=serial,
                model=model, failed_today=fails and day == end,
                smart_raw=smart))
    return records, plan.failures


def generate_fleet(config: SynthConfig) -> tuple[FleetDataset, list[FailureEvent]]:
    """Generate a fleet and its ground-truth failure events, deterministically.

    Per-drive randomness is seeded by (config.seed, drive index), so any
    subset of drives is reproducible independently of the others.
    """
    models = _assign_models(config)
    records: dict[str, list] = {}
    truth: list[FailureEvent] = []
    for i in range(config.n_drives):
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, i]))
        drive_id = f"{config.family}-{i:05d}"
        if config.family == "ssd":
            drive_records, failures = _generate_ssd_drive(drive_id, models[i],
                                                          rng, config)
        else:
            drive_records, failures = _generate_hdd_drive(drive_id, models[i],
                                                          rng, config)
        records[drive_id] = drive_records
        for ordinal, day in enumerate(failures, start=1):
            truth.append(FailureEvent(drive_id, day, ordinal, config.family))
    provenance = {"source": "synthetic", "seed": config.seed,
                  "filters": [], "rejected": [], "rejected_count": 0,
                  "quarantined": []}
    return FleetDataset(config.family, records, provenance), truth


@dataclass(frozen=True)
class CalibrationCheck:
    name: str
    target: float
    realized: float
    tolerance: float
    ok: bool


@dataclass
class CalibrationReport:
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def check(self, name: str) -> CalibrationCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def verify_fleet(ds: FleetDataset, truth: Sequence[FailureEvent],
                 config: SynthConfig, fraction_tol_pp: float = 2.0,
                 incidence_rel_tol: float = 0.2,
                 infant_ratio_floor: float = 3.0) -> CalibrationReport:
    """Recompute realized failure fractions, error incidence, and infant ratio.

    Failure-fraction checks compare per-model realized shares of failed
    drives against the configured targets (skipped for HDD fleets with an
    HFH hazard boost, which intentionally shifts the overall rate).
    Incidence checks compare the share of drive-days with at least one
    error of each kind; the infant check requires the month-0..2 failure
    rate to exceed the month-3+ rate by ``infant_ratio_floor`` when an
    infant multiplier is configured.
    """
    checks: list[CalibrationCheck] = []
    failed_by_model: dict[str, set] = {}
    drives_by_model: dict[str, list] = {}
    model_of: dict[str, str] = {}
    for drive, seq in ds.records.items():
        if not seq:
            continue
        model = seq[0].model
        model_of[drive] = model
        drives_by_model.setdefault(model, []).append(drive)
    for ev in truth:
        failed_by_model.setdefault(model_of[ev.drive], set()).add(ev.drive)

    if not (config.family == "hdd" and config.hfh_effect > 1.0):
        for model in sorted(config.models):
            population = drives_by_model.get(model, [])
            if not population:
                continue
            realized = len(failed_by_model.get(model, ())) / len(population)
            target = config.models[model]
            tol = fraction_tol_pp / 100.0
            checks.append(CalibrationCheck(
                f"failed_fraction[{model}]", target, realized, tol,
                abs(realized - target) <= tol))
        total_failed = len({ev.drive for ev in truth})
        overall_target = (sum(config.models[m] * len(drives_by_model.get(m, ()))
                              for m in config.models) / max(ds.n_drives, 1))
        realized = total_failed / max(ds.n_drives, 1)
        tol = fraction_tol_pp / 100.0
        checks.append(CalibrationCheck("failed_fraction[all]", overall_target,
                                       realized, tol,
                                       abs(realized - overall_target) <= tol))

    if config.family == "ssd":
        # Days inside a planted burst window are signal, not baseline:
        # exclude them when measuring the incidence of burst-affected kinds.
        burst_kinds = {spec.kind for spec in config.bursts if spec.mean > 0}
        burst_span = max((spec.days for spec in config.bursts), default=0)
        burst_days: dict[str, set] = {}
        for ev in truth:
            days = burst_days.setdefault(ev.drive, set())
            days.update(range(ev.age_days - burst_span + 1, ev.age_days + 1))
        day_total = 0
        clean_total = 0
        day_hits = {kind: 0 for kind in SSD_ERROR_KINDS}
        clean_hits = {kind: 0 for kind in SSD_ERROR_KINDS}
        for drive in ds.drives:
            in_burst = burst_days.get(drive, ())
            for rec in ds.records[drive]:
                if rec.read_ops is None:
                    continue  # bare swap markers carry no activity summary
                day_total += 1
                clean = rec.day not in in_burst
                clean_total += clean
                for kind in rec.errors:
                    day_hits[kind] += 1
                    clean_hits[kind] += clean
        for kind, target in config.error_incidence.items():
            if target <= 0 or day_total == 0:
                continue
            if kind in burst_kinds:
                realized = clean_hits.get(kind, 0) / max(clean_total, 1)
                n = clean_total
            else:
                realized = day_hits.get(kind, 0) / day_total
                n = day_total
            # tolerance: relative band widened by a 3-sigma sampling floor
            band = max(incidence_rel_tol * target,
                       3.0 * math.sqrt(target * (1.0 - target) / max(n, 1)))
            checks.append(CalibrationCheck(f"incidence[{kind}]", target,
                                           realized, band,
                                           abs(realized - target) <= band))

    if config.infant_hazard_multiplier > 1.0:
        curve = charstats.monthly_failure_rate(truth, ds)
        infant = [r for r in curve.rate[:3] if r is not None]
        mature = [r for r in curve.rate[3:] if r is not None]
        if infant and mature and sum(mature):
            ratio = (sum(infant) / len(infant)) / (sum(mature) / len(mature))
            checks.append(CalibrationCheck("infant_rate_ratio",
                                           infant_ratio_floor, ratio,
                                           0.0, ratio >= infant_ratio_floor))
    return CalibrationReport(checks)
