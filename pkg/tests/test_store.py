import json
import random

import pytest

from rucs.clock import FakeClock
from rucs.domain import (
    ControlState,
    DriverState,
    Drowsiness,
    AutomationLevel,
    LocationState,
    NoData,
    SequenceRegression,
    StateRecord,
    TripNotActive,
    TripStatus,
)
from rucs.store import Directory, StateStore, TtlCache


def record(trip="T1", seq=1, driver=None, control=None):
    return StateRecord(
        trip=trip,
        seq=seq,
        recorded_at=float(seq),
        location=LocationState(48.19, 14.11, 13.9, 90.0),
        driver=driver,
        control=control,
    )


def driver(level):
    return DriverState(drowsiness=Drowsiness(level), measured_at=0.0)


class TestAppendState:
    def test_append_grows_log(self):
        store = StateStore()
        store.append_state(record(seq=1))
        assert store.log_length("T1") == 1

    def test_sequence_regression(self):
        store = StateStore()
        store.append_state(record(seq=2))
        with pytest.raises(SequenceRegression):
            store.append_state(record(seq=2))
        with pytest.raises(SequenceRegression):
            store.append_state(record(seq=1))

    def test_inactive_trip_rejected(self):
        store = StateStore(trip_status=lambda t: TripStatus.COMPLETED)
        with pytest.raises(TripNotActive):
            store.append_state(record())

    def test_position_sink_triggered(self):
        seen = []
        store = StateStore(position_sink=lambda trip, loc, at: seen.append((trip, at)))
        store.append_state(record(seq=5))
        assert seen == [("T1", 5.0)]

    def test_field_test_message_volume(self):
        # Same order of magnitude as a full field-test run's state messages.
        store = StateStore()
        for seq in range(1, 19_777):
            store.append_state(record(seq=seq))
        assert store.log_length("T1") == 19_776

    def test_jsonl_layout(self, tmp_path):
        store = StateStore(data_dir=tmp_path)
        store.append_state(record(seq=1))
        store.append_state(record(seq=2))
        path = tmp_path / "trips" / "T1" / "states.jsonl"
        lines = path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 2
        assert json.loads(lines[0])["seq"] == 1

    def test_records_copy_is_isolated(self):
        store = StateStore()
        store.append_state(record(seq=1))
        snapshot = store.records("T1")
        snapshot.clear()
        assert store.log_length("T1") == 1


class TestLatestState:
    def test_latest_wins(self):
        store = StateStore()
        store.append_state(record(seq=1, driver=driver("low")))
        store.append_state(record(seq=2, driver=driver("none")))
        got, seq = store.latest_state("T1", "driver")
        assert got.drowsiness is Drowsiness.NONE
        assert seq == 2

    def test_no_data(self):
        store = StateStore()
        store.append_state(record(seq=1))
        with pytest.raises(NoData):
            store.latest_state("T1", "driver")

    def test_component_from_earlier_record(self):
        store = StateStore()
        store.append_state(record(seq=1, driver=driver("low")))
        store.append_state(record(seq=2))  # omits driver
        got, seq = store.latest_state("T1", "driver")
        assert got.drowsiness is Drowsiness.LOW
        assert seq == 1

    @pytest.mark.parametrize("seed", range(10))
    def test_agrees_with_backward_scan(self, seed):
        rng = random.Random(seed)
        store = StateStore()
        log = []
        for seq in range(1, rng.randint(2, 60)):
            rec = record(
                seq=seq,
                driver=driver(rng.choice(["none", "low", "medium", "high"]))
                if rng.random() < 0.5
                else None,
                control=ControlState(automation_level=rng.choice(list(AutomationLevel)))
                if rng.random() < 0.5
                else None,
            )
            store.append_state(rec)
            log.append(rec)
        for kind in ("driver", "control", "location"):
            expected = next(
                ((getattr(r, kind), r.seq) for r in reversed(log) if getattr(r, kind) is not None),
                None,
            )
            if expected is None:
                with pytest.raises(NoData):
                    store.latest_state("T1", kind)
            else:
                assert store.latest_state("T1", kind) == expected


class TestTtlCache:
    def test_put_get_hit(self):
        clock = FakeClock()
        cache = TtlCache(clock)
        cache.put("k", b"v", 60)
        assert cache.get("k") == b"v"
        assert cache.hits == 1 and cache.misses == 0

    def test_miss_counted(self):
        cache = TtlCache(FakeClock())
        assert cache.get("unknown") is None
        assert cache.misses == 1

    def test_expiry(self):
        clock = FakeClock()
        cache = TtlCache(clock)
        cache.put("k", "v", ttl=10)
        clock.advance(10.001)
        assert cache.get("k") is None
        assert not cache.exists("k")

    def test_exists_consistent_with_get(self):
        clock = FakeClock()
        cache = TtlCache(clock)
        cache.put("k", "v", 5)
        assert cache.exists("k")
        clock.advance(6)
        assert not cache.exists("k")

    def test_counter_totals(self):
        clock = FakeClock()
        cache = TtlCache(clock)
        cache.put("a", 1, 100)
        for key in ["a", "b", "a", "c", "a"]:
            cache.get(key)
        assert cache.hits + cache.misses == cache.total_gets == 5

    def test_ttl_must_be_positive(self):
        with pytest.raises(ValueError):
            TtlCache(FakeClock()).put("k", "v", 0)


class TestDirectory:
    def test_single_active_trip_per_vehicle(self):
        from rucs.domain import TripAlreadyActive, UserAccount, VehicleProfile

        d = Directory(FakeClock())
        d.add_user(UserAccount("u1", "s", "n"))
        d.add_vehicle(VehicleProfile("v1", "u1", "m", 2020, "p1", "red"))
        d.start_trip("t1", "v1")
        with pytest.raises(TripAlreadyActive):
            d.start_trip("t2", "v1")
        d.complete_trip("t1")
        d.start_trip("t3", "v1")  # allowed again after completion

    def test_duplicate_plate(self):
        from rucs.domain import DuplicatePlate, UserAccount, VehicleProfile

        d = Directory(FakeClock())
        d.add_user(UserAccount("u1", "s", "n"))
        d.add_vehicle(VehicleProfile("v1", "u1", "m", 2020, "p1", "red"))
        with pytest.raises(DuplicatePlate):
            d.add_vehicle(VehicleProfile("v2", "u1", "m", 2021, "p1", "blue"))

    def test_read_listen_topic_counts(self):
        from rucs.domain import UserAccount, VehicleProfile

        d = Directory(FakeClock())
        d.add_user(UserAccount("u1", "s", "n"))
        d.add_vehicle(VehicleProfile("v1", "u1", "m", 2020, "p1", "red"))
        trip = d.start_trip("t1", "v1")
        assert d.read_listen_topic("t1") == trip.listen_topic
        assert d.read_listen_topic("missing") is None
        assert d.trip_reads == 2
