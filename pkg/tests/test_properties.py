import random

import pytest

from rucs.clock import FakeClock
from rucs.domain import (
    AutomationLevel,
    ControlState,
    DriverState,
    Drowsiness,
    LocationState,
    NoData,
    PermissionDenied,
    StateRecord,
)
from rucs.properties import (
    DrowsinessHandler,
    Handler,
    NoHandler,
    PropertyEngine,
    PropertyRequest,
    SchemaInvalid,
    UnknownTask,
)
from rucs.store import StateStore

ALL_EXPOSED = frozenset({"drowsiness", "automation_level", "always"})


def record(trip, seq, drowsiness=None, automation=None):
    return StateRecord(
        trip=trip,
        seq=seq,
        recorded_at=float(seq),
        location=LocationState(48.19, 14.11, 13.9, 90.0),
        driver=DriverState(Drowsiness(drowsiness), 0.0) if drowsiness else None,
        control=ControlState(AutomationLevel(automation)) if automation else None,
    )


@pytest.fixture
def store():
    return StateStore()


@pytest.fixture
def engine(store):
    e = PropertyEngine(store, exposure_lookup=lambda t: ALL_EXPOSED, clock=FakeClock())
    e.register_builtin_handlers()
    yield e
    e.shutdown()


def req(prop="drowsiness", target="B"):
    return PropertyRequest(requester_trip="A", target_trip=target, property=prop)


class AcceptAll(Handler):
    def __init__(self, tag):
        self.tag = tag

    def accepts(self, name):
        return name == "always"

    def run(self, request, store):
        return {"tag": self.tag}, 0


class TestChain:
    def test_drowsiness_resolves_to_builtin(self, engine):
        assert isinstance(engine.get_handler("drowsiness"), DrowsinessHandler)

    def test_unknown_property(self, engine):
        with pytest.raises(NoHandler):
            engine.get_handler("unknown_prop")

    def test_registration_order_wins(self, store):
        engine = PropertyEngine(store, exposure_lookup=lambda t: ALL_EXPOSED)
        first, second = AcceptAll("first"), AcceptAll("second")
        engine.register(first)
        engine.register(second)
        assert engine.get_handler("always") is first
        engine.shutdown()


class TestHandleProperty:
    def test_drowsiness_low(self, engine, store):
        store.append_state(record("B", 1, drowsiness="low"))
        result = engine.handle_property(req())
        assert result.value == {"level": "low", "binary": "non-drowsy"}
        assert result.source_seq == 1

    def test_no_driver_state(self, engine, store):
        store.append_state(record("B", 1))
        with pytest.raises(NoData):
            engine.handle_property(req())

    def test_permission_denied(self, store):
        engine = PropertyEngine(store, exposure_lookup=lambda t: frozenset())
        engine.register_builtin_handlers()
        store.append_state(record("B", 1, drowsiness="low"))
        with pytest.raises(PermissionDenied):
            engine.handle_property(req())
        engine.shutdown()

    def test_automation_level(self, engine, store):
        store.append_state(record("B", 1, automation="autonomous"))
        result = engine.handle_property(req(prop="automation_level"))
        assert result.value == {"level": "autonomous"}

    def test_schema_rejection(self, store):
        class Broken(Handler):
            def accepts(self, name):
                return name == "drowsiness"

            def run(self, request, store):
                return {"level": "not-a-level"}, 1

        engine = PropertyEngine(store, exposure_lookup=lambda t: ALL_EXPOSED)
        engine.register(Broken())
        with pytest.raises(SchemaInvalid):
            engine.handle_property(req())
        engine.shutdown()

    @pytest.mark.parametrize("level,binary", [
        ("none", "non-drowsy"),
        ("low", "non-drowsy"),
        ("medium", "drowsy"),
        ("high", "drowsy"),
    ])
    def test_binary_mapping(self, engine, store, level, binary):
        store.append_state(record("B", 1, drowsiness=level))
        assert engine.handle_property(req()).value["binary"] == binary


class TestDeferred:
    def test_deferred_equals_synchronous(self, engine, store):
        store.append_state(record("B", 1, drowsiness="medium"))
        sync = engine.handle_property(req())
        task_id = engine.submit_deferred(req())
        deferred = engine.wait_deferred(task_id)
        assert deferred.value == sync.value
        assert deferred.source_seq == sync.source_seq

    def test_unknown_task(self, engine):
        with pytest.raises(UnknownTask):
            engine.poll_deferred("nope")

    def test_result_cached_by_source_seq(self, engine, store):
        store.append_state(record("B", 1, drowsiness="low"))
        t1 = engine.submit_deferred(req())
        engine.wait_deferred(t1)
        invocations = engine.executor_invocations
        t2 = engine.submit_deferred(req())
        result = engine.wait_deferred(t2)
        assert engine.executor_invocations == invocations  # served from cache
        assert result.value == {"level": "low", "binary": "non-drowsy"}

    def test_state_advance_invalidates_cache(self, engine, store):
        store.append_state(record("B", 1, drowsiness="low"))
        engine.wait_deferred(engine.submit_deferred(req()))
        store.append_state(record("B", 2, drowsiness="high"))
        result = engine.wait_deferred(engine.submit_deferred(req()))
        assert result.value == {"level": "high", "binary": "drowsy"}

    def test_deferred_error_surfaces(self, engine, store):
        store.append_state(record("B", 1))  # no driver state
        task_id = engine.submit_deferred(req())
        with pytest.raises(NoData):
            engine.wait_deferred(task_id)

    @pytest.mark.parametrize("seed", range(10))
    def test_equivalence_over_randomized_logs(self, seed):
        rng = random.Random(seed)
        store = StateStore()
        engine = PropertyEngine(store, exposure_lookup=lambda t: ALL_EXPOSED)
        engine.register_builtin_handlers()
        try:
            for seq in range(1, rng.randint(2, 30)):
                store.append_state(
                    record(
                        "B",
                        seq,
                        drowsiness=rng.choice([None, "none", "low", "medium", "high"]),
                        automation=rng.choice([None, "manual", "assisted", "autonomous"]),
                    )
                )
            for prop in ("drowsiness", "automation_level"):
                request = req(prop=prop)
                try:
                    sync = engine.handle_property(request)
                except NoData:
                    with pytest.raises(NoData):
                        engine.wait_deferred(engine.submit_deferred(request))
                    continue
                deferred = engine.wait_deferred(engine.submit_deferred(request))
                assert deferred.value == sync.value
                assert deferred.source_seq == sync.source_seq
        finally:
            engine.shutdown()
