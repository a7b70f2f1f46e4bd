"""Reconstruct drive lifecycles (failure, swap, repair, re-entry) with explicit censoring.

The HDD log flags the last operational day directly. The SSD log only
records swap events, so the failure day is recovered by walking backward
from each swap: days with no report are skipped, then a maximal trailing
run of reported-but-inactive days (zero reads and writes) is trimmed; the
failure is the last day with operational activity. The backward trim is
bounded at 30 days, which comfortably covers the observed inactive runs
(under a week in the large majority of cases) while preventing
pathological trims on long-idle drives.

Drive age sources:

* SSD: timestamps count microseconds from lifetime start, so the age of a
  record is ``timestamp_us // US_PER_DAY``.
* HDD: SMART 9 (power-on hours) / 24 when present on the record; otherwise
  the last SMART-9 anchor carried forward by calendar-day deltas; before
  any anchor, days since the drive's first record.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .ingest import FleetDataset, HddDailyRecord, SsdDailyRecord

__all__ = [
    "FailureEvent",
    "OperationalPeriod",
    "RepairSpell",
    "CensoredSample",
    "SSD_TRIM_BOUND_DAYS",
    "LONG_LIMBO_DAYS",
    "hdd_record_ages",
    "detect_hdd_failures",
    "detect_ssd_failures",
    "detect_failures",
    "extract_operational_periods",
    "build_repair_spells",
    "repair_stats",
    "failure_count_distribution",
    "censored_cdf",
    "period_length_sample",
    "repair_duration_sample",
    "preswap_gap_sample",
]

#: Backward bound (days) on SSD pre-swap inactivity trimming.
SSD_TRIM_BOUND_DAYS = 30

#: Pre-swap gaps above this are flagged as probable forgotten-in-limbo drives.
LONG_LIMBO_DAYS = 100


@dataclass(frozen=True, slots=True)
class FailureEvent:
    """A single catastrophic failure of one drive."""

    drive: str
    age_days: int
    ordinal: int  # 1-based failure index for this drive
    family: str   # "hdd" | "ssd"
    degenerate: bool = False  # swap with no operational activity before it


@dataclass(frozen=True, slots=True)
class OperationalPeriod:
    """A maximal in-production span of one drive, ending in failure or censoring."""

    drive: str
    start_day: int
    end_day: int
    terminal: str  # "failure" | "censored"

    @property
    def length(self) -> int:
        return self.end_day - self.start_day


@dataclass(frozen=True, slots=True)
class RepairSpell:
    """The repair bookkeeping attached to one failure.

    ``preswap_gap_days`` is the SSD-only non-operational period between the
    failure and the physical swap (None for HDDs). ``reentry_day`` is the
    first post-failure operational record, or None if the drive is never
    seen back in production (right-censored repair).
    """

    drive: str
    fail_day: int
    reentry_day: int | None
    preswap_gap_days: int | None = None

    @property
    def repair_days(self) -> int | None:
        """Length of the repair process: swap (SSD) or failure (HDD) to re-entry."""
        if self.reentry_day is None:
            return None
        swap_day = self.fail_day + (self.preswap_gap_days or 0)
        return self.reentry_day - swap_day

    @property
    def long_limbo(self) -> bool:
        return (self.preswap_gap_days or 0) > LONG_LIMBO_DAYS


@dataclass(frozen=True)
class CensoredSample:
    """Finite observed durations plus a count of right-censored observations."""

    values: tuple
    censored_count: int

    def __post_init__(self):
        if self.censored_count < 0:
            raise ValueError("censored_count must be >= 0")

    @property
    def total(self) -> int:
        return len(self.values) + self.censored_count


def hdd_record_ages(records: Sequence[HddDailyRecord]) -> list[int]:
    """Per-record drive ages in days for one HDD's sorted record sequence."""
    ages = []
    anchor_age = None
    anchor_date = None
    first_date = records[0].date
    for r in records:
        hours = r.smart_raw.get(9)
        if hours is not None:
            age = hours // 24
            anchor_age, anchor_date = age, r.date
        elif anchor_age is not None:
            age = anchor_age + (r.date - anchor_date).days
        else:
            age = (r.date - first_date).days
        ages.append(age)
    return ages


def record_ages(family: str, records: Sequence) -> list[int]:
    if family == "hdd":
        return hdd_record_ages(records)
    return [r.day for r in records]


def detect_hdd_failures(ds: FleetDataset) -> list[FailureEvent]:
    """One FailureEvent per failure-flagged HDD record, in drive/time order."""
    if ds.family != "hdd":
        raise ValueError("detect_hdd_failures needs an HDD dataset")
    events = []
    for serial in ds.drives:
        seq = ds.records[serial]
        ages = hdd_record_ages(seq)
        ordinal = 0
        for r, age in zip(seq, ages):
            if r.failed_today:
                ordinal += 1
                events.append(FailureEvent(serial, age, ordinal, "hdd"))
    return events


def _is_active(rec: SsdDailyRecord) -> bool:
    # A missing performance summary counts as no activity.
    return bool(rec.read_ops) or bool(rec.write_ops)


def detect_ssd_failures(ds: FleetDataset) -> list[FailureEvent]:
    """Recover SSD failure days from swap events by backward inactivity trimming.

    For each swap: records after the previous swap and up to (and
    including) the swap day are scanned backward; reported-but-inactive
    days (zero reads and writes) are trimmed, bounded at
    ``SSD_TRIM_BOUND_DAYS`` before the swap day. The failure lands on the
    last active day; if none exists the event degenerates to the drive's
    first in-scope record.
    """
    if ds.family != "ssd":
        raise ValueError("detect_ssd_failures needs an SSD dataset")
    events = []
    for drive in ds.drives:
        seq = ds.records[drive]
        ordinal = 0
        prev_swap_index = -1  # records at or before this index belong to earlier failures
        for i, rec in enumerate(seq):
            if not rec.swap_event:
                continue
            swap_day = rec.day
            fail_day = None
            cutoff_day = swap_day - SSD_TRIM_BOUND_DAYS
            bounded = None
            for j in range(i, prev_swap_index, -1):
                cand = seq[j]
                if _is_active(cand):
                    fail_day = cand.day
                    break
                if cand.day < cutoff_day:
                    bounded = cand.day
                    break
            if fail_day is None and bounded is not None:
                fail_day = bounded
            ordinal += 1
            if fail_day is None:
                # No operational activity anywhere before the swap.
                first = seq[prev_swap_index + 1] if prev_swap_index + 1 <= i else rec
                events.append(FailureEvent(drive, first.day, ordinal, "ssd",
                                           degenerate=True))
            else:
                events.append(FailureEvent(drive, fail_day, ordinal, "ssd"))
            prev_swap_index = i
    return events


def detect_failures(ds: FleetDataset) -> list[FailureEvent]:
    return detect_hdd_failures(ds) if ds.family == "hdd" else detect_ssd_failures(ds)


def _reentry_day(ds: FleetDataset, drive: str, after_day: int) -> int | None:
    """First recorded day strictly after ``after_day`` (drive back in the workflow)."""
    ages = record_ages(ds.family, ds.records[drive])
    for age in ages:
        if age > after_day:
            return age
    return None


def _swap_day_for(ds: FleetDataset, drive: str, event: FailureEvent) -> int:
    """Day of the swap matching an SSD failure event (ordinal-aligned)."""
    swaps = [r.day for r in ds.records[drive] if r.swap_event]
    return swaps[event.ordinal - 1]


def extract_operational_periods(ds: FleetDataset,
                                failures: Iterable[FailureEvent]) -> list[OperationalPeriod]:
    """Cut each drive's observation span into failure-terminated and censored periods.

    The first period runs from the drive's first record to its first
    failure (terminal ``failure``) or last record (``censored``); each
    post-failure re-entry opens another period.
    """
    by_drive: dict[str, list[FailureEvent]] = {}
    for ev in failures:
        by_drive.setdefault(ev.drive, []).append(ev)
    periods = []
    for drive in ds.drives:
        seq = ds.records[drive]
        ages = record_ages(ds.family, seq)
        last_day = ages[-1]
        start = ages[0]
        for ev in sorted(by_drive.get(drive, ()), key=lambda e: e.ordinal):
            periods.append(OperationalPeriod(drive, start, ev.age_days, "failure"))
            boundary = (_swap_day_for(ds, drive, ev)
                        if ds.family == "ssd" else ev.age_days)
            reentry = _reentry_day(ds, drive, boundary)
            if reentry is None:
                start = None
                break
            start = reentry
        if start is not None and (not by_drive.get(drive) or start <= last_day):
            periods.append(OperationalPeriod(drive, start, last_day, "censored"))
    return periods


def build_repair_spells(ds: FleetDataset,
                        failures: Iterable[FailureEvent]) -> list[RepairSpell]:
    """One RepairSpell per failure: pre-swap gap (SSD) and re-entry day if any."""
    spells = []
    for ev in failures:
        if ds.family == "ssd":
            swap_day = _swap_day_for(ds, ev.drive, ev)
            gap = swap_day - ev.age_days
        else:
            swap_day = ev.age_days
            gap = None
        spells.append(RepairSpell(ev.drive, ev.age_days,
                                  _reentry_day(ds, ev.drive, swap_day), gap))
    return spells


def repair_stats(spells: Sequence[RepairSpell], horizons: Sequence[float],
                 total_drives: int) -> dict[float, tuple[float, float]]:
    """Fraction of failed drives (and of all drives) repaired within each horizon.

    A horizon of ``math.inf`` reports the complement: the share of spells
    never observed to re-enter. Empty spells yield all-zero fractions.
    """
    if list(horizons) != sorted(horizons):
        raise ValueError("horizons must be sorted ascending")
    n_spells = len(spells)
    out = {}
    for horizon in horizons:
        if n_spells == 0:
            out[horizon] = (0.0, 0.0)
            continue
        if math.isinf(horizon):
            hits = sum(1 for s in spells if s.repair_days is None)
        else:
            hits = sum(1 for s in spells
                       if s.repair_days is not None and s.repair_days <= horizon)
        out[horizon] = (hits / n_spells,
                        hits / total_drives if total_drives else 0.0)
    return out


def failure_count_distribution(failures: Iterable[FailureEvent],
                               total_drives: int) -> dict[int, tuple[float, float | None]]:
    """Map k -> (share of all drives with k failures, share of failed drives).

    The failed-drive share is None for k=0. Raises if the population is
    smaller than the number of distinct failed drives.
    """
    per_drive: dict[str, int] = {}
    for ev in failures:
        per_drive[ev.drive] = max(per_drive.get(ev.drive, 0), ev.ordinal)
    n_failed = len(per_drive)
    if total_drives < n_failed:
        raise ValueError(
            f"population ({total_drives}) smaller than failed drives ({n_failed})")
    counts: dict[int, int] = {}
    for k in per_drive.values():
        counts[k] = counts.get(k, 0) + 1
    dist: dict[int, tuple[float, float | None]] = {
        0: ((total_drives - n_failed) / total_drives, None)}
    for k in sorted(counts):
        dist[k] = (counts[k] / total_drives,
                   counts[k] / n_failed if n_failed else None)
    return dist


def censored_cdf(sample: CensoredSample,
                 grid: Sequence[float]) -> tuple[list[tuple[float, float]], float]:
    """Empirical CDF of a right-censored sample, plus its censored mass.

    F(t) = (#values <= t) / (#values + censored_count); the censored mass
    is censored_count / total, so F never exceeds 1 - censored mass.
    """
    if sample.total == 0:
        raise ValueError("empty sample")
    if list(grid) != sorted(grid):
        raise ValueError("grid must be sorted ascending")
    values = sorted(sample.values)
    total = sample.total
    points = []
    idx = 0
    for t in grid:
        while idx < len(values) and values[idx] <= t:
            idx += 1
        points.append((t, idx / total))
    return points, sample.censored_count / total


def period_length_sample(periods: Iterable[OperationalPeriod]) -> CensoredSample:
    """Time-to-failure sample: failure-terminated lengths, censored periods counted."""
    values = []
    censored = 0
    for p in periods:
        if p.terminal == "failure":
            values.append(p.length)
        else:
            censored += 1
    return CensoredSample(tuple(values), censored)


def repair_duration_sample(spells: Iterable[RepairSpell]) -> CensoredSample:
    """Time-to-repair sample: completed repair lengths, unfinished ones censored."""
    values = []
    censored = 0
    for s in spells:
        d = s.repair_days
        if d is None:
            censored += 1
        else:
            values.append(d)
    return CensoredSample(tuple(values), censored)


def preswap_gap_sample(spells: Iterable[RepairSpell]) -> CensoredSample:
    """Non-operational period preceding each swap (SSD spells only)."""
    values = tuple(s.preswap_gap_days for s in spells
                   if s.preswap_gap_days is not None)
    return CensoredSample(values, 0)
