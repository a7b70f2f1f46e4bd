import datetime as dt

import pytest

from drivelife.ingest import (FleetDataset, HddDailyRecord, SsdDailyRecord,
                              US_PER_DAY)


def ssd_rec(drive, day, reads=100, writes=50, erases=5, pe="auto", swap=False,
            errors=None, dead=False, model="MLC-A", bbf=2, bbn=0):
    return SsdDailyRecord(
        drive_id=drive, model=model, timestamp_us=day * US_PER_DAY,
        read_ops=reads, write_ops=writes, erase_ops=erases,
        pe_cycles_cum=day + 1 if pe == "auto" else pe,
        dead=dead, read_only=False, bad_blocks_factory_cum=bbf,
        bad_blocks_new_cum=bbn, errors=errors or {}, swap_event=swap)


def hdd_rec(serial, day_or_date, failed=False, smart=None,
            model="ST4000DM000"):
    if isinstance(day_or_date, int):
        date = dt.date(2015, 1, 1) + dt.timedelta(days=day_or_date)
    else:
        date = day_or_date
    return HddDailyRecord(date=date, serial=serial, model=model,
                          failed_today=failed, smart_raw=smart or {})


def ssd_dataset(records_by_drive) -> FleetDataset:
    return FleetDataset("ssd", {d: sorted(seq, key=lambda r: r.timestamp_us)
                                for d, seq in records_by_drive.items()})


def hdd_dataset(records_by_drive) -> FleetDataset:
    return FleetDataset("hdd", {d: sorted(seq, key=lambda r: r.date)
                                for d, seq in records_by_drive.items()})


@pytest.fixture
def simple_ssd():
    """One drive: active days 1-7, inactive 8-10, gap, swap day 13."""
    recs = [ssd_rec("d1", day) for day in range(1, 8)]
    recs += [ssd_rec("d1", day, reads=0, writes=0, erases=0, pe=8)
             for day in (8, 9, 10)]
    recs.append(ssd_rec("d1", 13, reads=0, writes=0, erases=0, pe=8, swap=True,
                        dead=True))
    return ssd_dataset({"d1": recs})
