from __future__ import annotations

import pytest

from mabex.engine import Engine, Event
from mabex.loop import (
    ConditionTarget,
    EventTarget,
    ExplanationSession,
    QueryError,
    TriggerRule,
)
from mabex.loop.config import load_rules
from mabex.loop.records import USER_QUERY
from mabex.sml.parser import parse_expression, parse_pattern

from conftest import make_v2x_world

DISALLOW_RULE = TriggerRule(
    rule_id="disallowed-on-l1",
    pattern=parse_pattern("oc -> *.enteringDisallowed()"),
    predicate=parse_expression("receiver.direction == L1"),
    behavior_label="entry denied to a car on lane L1",
)


def _session(listing_spec, world, rules=(DISALLOW_RULE,), **kwargs):
    return ExplanationSession(Engine(listing_spec, world), rules=list(rules), **kwargs)


def _drive_to_decision(session):
    session.inject(Event("sensor", "c1", "approachingObstacle"))
    session.inject(Event("c1", "oc", "register"))
    session.run_to_quiescence()


def test_monitor_ingest_appends(listing_spec, fig2_state_world):
    session = _session(listing_spec, fig2_state_world)
    assert session.stream == []
    session.monitor_ingest(USER_QUERY, {"text": "Why are we leaving the highway?"})
    assert len(session.stream) == 1
    assert session.stream[0].kind == USER_QUERY


def test_engine_events_flow_into_the_stream(listing_spec, fig2_state_world):
    session = _session(listing_spec, fig2_state_world)
    _drive_to_decision(session)
    events = [r for r in session.stream if r.kind == "event"]
    assert len(events) == 3
    assert [r.timestamp for r in session.stream] == sorted(
        r.timestamp for r in session.stream
    )


def test_rule_fires_once_for_the_disallow(listing_spec, fig2_state_world):
    session = _session(listing_spec, fig2_state_world)
    _drive_to_decision(session)
    triggered = [n for n in session.notifications if n.need.origin_rule == "disallowed-on-l1"]
    assert len(triggered) == 1
    assert isinstance(triggered[0].need.target, EventTarget)
    assert triggered[0].need.target.step_index == 3


def test_rule_does_not_fire_for_l2_car_allowed(listing_spec):
    world = make_v2x_world()
    session = _session(listing_spec, world)
    session.inject(Event("sensor", "c2", "approachingObstacle"))
    session.inject(Event("c2", "oc", "register"))
    session.run_to_quiescence()  # enteringAllowed(c2)
    assert session.notifications == []


def test_analyze_consumes_each_record_once(listing_spec, fig2_state_world):
    session = _session(listing_spec, fig2_state_world)
    _drive_to_decision(session)
    assert session.analyze() == []
    assert session.analyze() == []


def test_predicate_error_surfaces_rule_id(listing_spec, fig2_state_world):
    broken = TriggerRule(
        rule_id="broken",
        pattern=parse_pattern("*.enteringDisallowed"),
        predicate=parse_expression("receiver.nonexistent == 1"),
        behavior_label="boom",
    )
    session = _session(listing_spec, fig2_state_world, rules=(broken,))
    with pytest.raises(QueryError, match="broken"):
        _drive_to_decision(session)


def test_query_map_turns_question_into_condition_need(listing_spec, fig2_state_world):
    config = load_rules(
        'query "Why is a priority vehicle registered?" {\n'
        "  kind: whycond\n"
        "  condition: !oc.registeredPriorityVehicles.isEmpty()\n"
        "}\n"
    )
    session = ExplanationSession(
        Engine(listing_spec, fig2_state_world), query_map=config.query_map
    )
    session.monitor_ingest(
        USER_QUERY, {"text": "Why is a priority vehicle registered?"}
    )
    needs = session.analyze()
    assert len(needs) == 1
    assert isinstance(needs[0].target, ConditionTarget)


def test_unmapped_question_becomes_targetless_need(listing_spec, fig2_state_world):
    session = _session(listing_spec, fig2_state_world)
    session.monitor_ingest(USER_QUERY, {"text": "Why are we leaving the highway?"})
    needs = session.analyze()
    assert len(needs) == 1
    assert needs[0].target is None


def test_ask_unmapped_question_is_an_error_and_ledgered(listing_spec, fig2_state_world):
    session = _session(listing_spec, fig2_state_world)
    with pytest.raises(QueryError):
        session.ask("Why are we leaving the highway?")
    assert len(session.pending_ledger()) == 1


def test_recipient_reaction_recorded(listing_spec, fig2_state_world):
    session = _session(listing_spec, fig2_state_world)
    session.record_reaction("end_user", helpful=True)
    assert session.stream[-1].kind == "recipient_reaction"
    assert session.stream[-1].payload == {"recipient": "end_user", "helpful": True}
