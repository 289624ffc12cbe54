from __future__ import annotations

import pytest

from mabex.engine import (
    COMPLETED,
    Engine,
    EngineError,
    Event,
    ExecutedEvent,
    InitError,
    ObjectSystem,
    Quiescent,
    Violation,
    ViolationError,
    WorldObject,
    INTERRUPTED,
    VIOLATED,
)
from mabex.sml import parse_specification

from conftest import make_v2x_world


def approach(car: str) -> Event:
    return Event("sensor", car, "approachingObstacle")


def register(car: str) -> Event:
    return Event(car, "oc", "register")


class TestInit:
    def test_fig2_engine_starts_idle(self, listing_spec, fig2_state_world):
        engine = Engine(listing_spec, fig2_state_world)
        assert engine.instances == []
        assert engine.history() == ()

    def test_empty_spec_is_permanently_quiescent(self, fig2_state_world):
        engine = Engine(parse_specification(""), fig2_state_world)
        assert isinstance(engine.step_system(), Quiescent)
        engine.inject_environment_event(approach("c1"))
        assert isinstance(engine.step_system(), Quiescent)

    def test_world_missing_binding_target_rejected(self, listing_spec):
        world = make_v2x_world()
        del world.object("cp").attributes["obstacleCtrl"]
        with pytest.raises(InitError):
            Engine(listing_spec, world)

    def test_invalid_spec_rejected_with_diagnostics(self, fig2_state_world):
        spec = parse_specification("guarantee scenario X { a -> b.zap() }")
        with pytest.raises(InitError) as excinfo:
            Engine(spec, fig2_state_world)
        assert excinfo.value.diagnostics


class TestInject:
    def test_approach_spawns_registration_scenario(self, fig2_state_engine):
        result = fig2_state_engine.inject_environment_event(approach("c1"))
        assert isinstance(result, ExecutedEvent)
        assert [(t.kind, t.scenario) for t in result.transitions] == [
            ("spawned", "CarRegistersAtObstacle")
        ]

    def test_register_completes_and_spawns(self, fig2_state_engine):
        fig2_state_engine.inject_environment_event(approach("c1"))
        result = fig2_state_engine.inject_environment_event(register("c1"))
        kinds = [(t.kind, t.scenario) for t in result.transitions]
        assert ("advanced", "CarRegistersAtObstacle") in kinds
        assert ("terminated", "CarRegistersAtObstacle") in kinds
        spawned = [s for k, s in kinds if k == "spawned"]
        assert spawned == [
            "CarEnteringAllowedDefault",
            "CarEnteringDisallowedWhenCarPassing",
            "EnteringDisallowedForOtherPriorityVehicle",
            "SetPriorityForEmergencyVehicle",
        ]

    def test_unmatched_event_grows_history_without_transitions(self, fig2_state_engine):
        result = fig2_state_engine.inject_environment_event(
            Event("c2", "oc", "passingL2.remove", ("c2",))
        )
        assert result.transitions == ()
        assert len(fig2_state_engine.history()) == 1

    def test_unknown_object_rejected(self, fig2_state_engine):
        from mabex.engine.objects import WorldError

        with pytest.raises(WorldError):
            fig2_state_engine.inject_environment_event(approach("ghost"))

    def test_system_sender_rejected(self, fig2_state_engine):
        with pytest.raises(EngineError):
            fig2_state_engine.inject_environment_event(
                Event("oc", "c1", "enteringAllowed")
            )


class TestStepSystem:
    def test_fig2_disallows_and_interrupts_default(self, fig2_state_engine):
        engine = fig2_state_engine
        engine.inject_environment_event(approach("c1"))
        engine.inject_environment_event(register("c1"))
        result = engine.step_system()
        assert isinstance(result, ExecutedEvent)
        assert result.event.text() == "oc -> c1.enteringDisallowed()"
        annotations = engine.history()[-1].annotations
        assert [a.text for a in annotations] == [
            "entering is disallowed because other cars are passing the obstacle "
            "in the opposite direction.",
            "entering is disallowed because a priority vehicle is registered "
            "for passing the obstacle.",
        ]
        statuses = {
            engine.spec.scenarios[i.scenario_index].name: i.status
            for i in engine.instances
            if i.scenario_index == 1
        }
        assert statuses["CarEnteringAllowedDefault"] == INTERRUPTED

    def test_empty_road_allows_with_annotation(self, listing_spec):
        engine = Engine(listing_spec, make_v2x_world())
        engine.inject_environment_event(approach("c1"))
        engine.inject_environment_event(register("c1"))
        result = engine.step_system()
        assert result.event.text() == "oc -> c1.enteringAllowed()"
        assert [a.text for a in engine.history()[-1].annotations] == [
            "entering is allowed because there is no indication to disallow it."
        ]
        default = next(i for i in engine.instances if i.scenario_index == 1)
        assert default.status == COMPLETED

    def test_no_active_instances_is_quiescent(self, fig2_state_engine):
        assert isinstance(fig2_state_engine.step_system(), Quiescent)


class TestRunToQuiescence:
    def test_fig2_run_executes_exactly_the_disallow(self, fig2_state_engine):
        engine = fig2_state_engine
        engine.inject_environment_event(approach("c1"))
        engine.inject_environment_event(register("c1"))
        events = engine.run_to_quiescence()
        assert [e.text() for e in events] == ["oc -> c1.enteringDisallowed()"]

    def test_fresh_engine_runs_empty(self, fig2_state_engine):
        assert fig2_state_engine.run_to_quiescence() == []

    def test_committed_add_precedes_requested_response(self, listing_spec):
        # emergency vehicle on an empty road: the registry update is committed,
        # so it must fire before the tier-2 enteringAllowed
        engine = Engine(listing_spec, make_v2x_world())
        engine.inject_environment_event(approach("c3"))
        engine.inject_environment_event(register("c3"))
        events = engine.run_to_quiescence()
        assert [e.message for e in events] == [
            "registeredPriorityVehicles.add",
            "enteringAllowed",
        ]
        assert engine.world.object("oc").collections["registeredPriorityVehicles"] == ["c3"]


class TestExecutableEvents:
    def test_fig2_post_register_candidates(self, fig2_state_engine):
        engine = fig2_state_engine
        engine.inject_environment_event(approach("c1"))
        engine.inject_environment_event(register("c1"))
        assert [e.text() for e in engine.executable_events()] == [
            "oc -> c1.enteringDisallowed()"
        ]

    def test_quiescent_engine_has_no_candidates(self, fig2_state_engine):
        assert fig2_state_engine.executable_events() == []

    def test_two_cars_on_empty_road_one_allowed_each(self, listing_spec):
        world = make_v2x_world(cars=[("c1", "Car", "L1"), ("c4", "Car", "L1")])
        engine = Engine(listing_spec, world)
        for car in ("c1", "c4"):
            engine.inject_environment_event(approach(car))
            engine.inject_environment_event(register(car))
        candidates = engine.executable_events()
        # brute force over the instance list: every requested step at a cut
        expected = set()
        for inst in engine.instances:
            if not inst.is_active:
                continue
            from mabex.sml.ast import step_at, MessageStep

            step = step_at(engine.spec.scenarios[inst.scenario_index], inst.cut)
            if isinstance(step, MessageStep) and step.urgency != "none":
                expected.add(
                    (
                        inst.bindings.get(step.sender, step.sender),
                        inst.bindings.get(step.receiver, step.receiver),
                        step.message,
                    )
                )
        assert {(e.sender, e.receiver, e.message) for e in candidates} == expected
        assert sorted(e.receiver for e in candidates) == ["c1", "c4"]
        assert {e.message for e in candidates} == {"enteringAllowed"}


class TestStrictness:
    def test_repeated_approach_violates_strict_wait(self, fig2_state_engine):
        engine = fig2_state_engine
        engine.inject_environment_event(approach("c1"))
        result = engine.inject_environment_event(approach("c1"))
        assert isinstance(result, Violation)
        assert result.reason == "strict"
        violated = [t for t in result.transitions if t.kind == VIOLATED]
        assert len(violated) == 1
        # the same event also spawns a fresh instance
        assert any(t.kind == "spawned" for t in result.transitions)

    def test_unrelated_events_do_not_violate_strictness(self, fig2_state_engine):
        engine = fig2_state_engine
        engine.inject_environment_event(approach("c1"))
        result = engine.inject_environment_event(
            Event("c2", "oc", "passingL2.remove", ("c2",))
        )
        assert isinstance(result, ExecutedEvent)

    def test_candidate_that_would_violate_strictness_is_withheld(self, fig2_state_world):
        spec = parse_specification(
            """
            guarantee scenario WaitsStrictly {
                sensor -> car.approachingObstacle()
                strict requested car -> oc.register()
                requested oc -> car.enteringAllowed()
            }
            guarantee scenario WantsAllowed {
                sensor -> car.approachingObstacle()
                requested oc -> car.enteringAllowed()
            }
            """
        )
        engine = Engine(spec, fig2_state_world)
        engine.inject_environment_event(approach("c1"))
        # enteringAllowed is requested by WantsAllowed but appears later in
        # WaitsStrictly whose cut is the strict register: it must not run
        result = engine.step_system()
        assert isinstance(result, Violation)
        assert result.reason == "strict"


class TestDeadlockReporting:
    def test_blocked_requested_event_is_reported(self, fig2_state_world):
        spec = parse_specification(
            """
            guarantee scenario Wants {
                sensor -> car.approachingObstacle()
                requested oc -> car.enteringAllowed()
            }
            guarantee scenario Blocks {
                sensor -> car.approachingObstacle()
                car -> oc.register()
            } constraints [
                forbidden oc -> car.enteringAllowed()
            ]
            """
        )
        engine = Engine(spec, fig2_state_world)
        engine.inject_environment_event(approach("c1"))
        # Blocks waits for an environment register and forbids the only
        # requested candidate meanwhile: a stall, reported rather than dropped
        result = engine.step_system()
        assert isinstance(result, Violation)
        assert result.reason == "forbidden"
        with pytest.raises(ViolationError):
            engine.run_to_quiescence()
        # the environment can release the block
        engine.inject_environment_event(register("c1"))
        released = engine.step_system()
        assert isinstance(released, ExecutedEvent)
        assert released.event.message == "enteringAllowed"


class TestGuardStability:
    def test_forbidden_stays_active_after_guard_turns_false(self, fig2_state_engine):
        engine = fig2_state_engine
        engine.inject_environment_event(approach("c1"))
        engine.inject_environment_event(register("c1"))
        # both disallow alternatives were entered; emptying the collections
        # afterwards must not deactivate their constraints
        engine.inject_environment_event(Event("c2", "oc", "passingL2.remove", ("c2",)))
        engine.inject_environment_event(
            Event("c3", "oc", "registeredPriorityVehicles.remove", ("c3",))
        )
        assert [e.message for e in engine.executable_events()] == ["enteringDisallowed"]

    def test_skipped_alternative_never_activates_constraints(self, listing_spec):
        engine = Engine(listing_spec, make_v2x_world())
        engine.inject_environment_event(approach("c1"))
        engine.inject_environment_event(register("c1"))
        assert [e.message for e in engine.executable_events()] == ["enteringAllowed"]


def test_progress_accounting_every_instance_reaches_one_terminal_status(listing_spec):
    engine = Engine(listing_spec, make_v2x_world(passing_l2=["c2"], priority=["c3"]))
    engine.inject_environment_event(approach("c1"))
    engine.inject_environment_event(register("c1"))
    engine.run_to_quiescence()
    terminal = {"completed", "violated", "interrupted", "active"}
    assert all(inst.status in terminal for inst in engine.instances)
    from mabex.engine.export import export_history

    text = export_history(engine)
    for inst in engine.instances:
        if inst.status != "active":
            # exactly one terminal transition was recorded for it
            terminal_kinds = [
                t["kind"]
                for line in text.splitlines()
                for t in __import__("json").loads(line)["transitions"]
                if t["iid"] == inst.iid
                and t["kind"] in ("terminated", "violated", "interrupted")
            ]
            assert len(terminal_kinds) == 1
