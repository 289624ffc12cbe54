from __future__ import annotations

import json
import time

import pytest
from fastapi.testclient import TestClient

from mabex.service.app import create_app

FIG2_SENTENCE = (
    "Entering is disallowed because other cars are passing the obstacle in the "
    "opposite direction and a priority vehicle is registered for passing the obstacle"
)


@pytest.fixture
def client():
    with TestClient(create_app()) as c:
        yield c


def _create(client, scene="fig2") -> str:
    response = client.post("/sessions", json={"scene": scene})
    assert response.status_code == 201
    return response.json()["session_id"]


def _drive_fig2(client, sid: str) -> None:
    client.post(f"/sessions/{sid}/events", json={"event": "sensor -> c1.approachingObstacle()"})
    client.post(f"/sessions/{sid}/events", json={"event": "c1 -> oc.register()"})
    client.post(f"/sessions/{sid}/step", json={"until_quiescent": True})


class TestSessions:
    def test_create_fig2(self, client):
        response = client.post("/sessions", json={"scene": "fig2"})
        assert response.status_code == 201
        body = response.json()
        assert body["schema_version"] == 1
        assert body["scene"] == "fig2"
        assert body["step_count"] == 4  # preroll history

    def test_duplicate_create_gives_distinct_ids(self, client):
        assert _create(client) != _create(client)

    def test_unknown_scene_404(self, client):
        assert client.post("/sessions", json={"scene": "mars"}).status_code == 404

    def test_unknown_session_404(self, client):
        assert client.post("/sessions/nope/step", json={}).status_code == 404

    def test_schema_version_mismatch_rejected(self, client):
        response = client.post("/sessions", json={"scene": "fig2", "schema_version": 9})
        assert response.status_code == 400

    def test_scenes_listing(self, client):
        assert client.get("/scenes").json()["scenes"] == ["fig2", "empty-road"]

    def test_session_expiry(self):
        with TestClient(create_app(ttl_seconds=0.05)) as client:
            sid = _create(client)
            assert client.get(f"/sessions/{sid}/state").status_code == 200
            time.sleep(0.1)
            assert client.get(f"/sessions/{sid}/state").status_code == 404


class TestEventsAndStep:
    def test_inject_spawns(self, client):
        sid = _create(client)
        response = client.post(
            f"/sessions/{sid}/events",
            json={"event": "sensor -> c1.approachingObstacle()"},
        )
        body = response.json()
        assert body["results"][0]["kind"] == "executed"
        assert body["results"][0]["transitions"][0]["scenario"] == "CarRegistersAtObstacle"
        assert len(body["new_entries"]) == 1

    def test_structured_event_body(self, client):
        sid = _create(client)
        response = client.post(
            f"/sessions/{sid}/events",
            json={"event": {"sender": "sensor", "receiver": "c1",
                            "message": "approachingObstacle", "args": []}},
        )
        assert response.json()["results"][0]["kind"] == "executed"

    def test_unmatched_event_has_no_transitions(self, client):
        sid = _create(client)
        response = client.post(
            f"/sessions/{sid}/events", json={"event": "c2 -> oc.passingL2.remove(c2)"}
        )
        assert response.json()["results"][0]["transitions"] == []

    def test_malformed_event_400(self, client):
        sid = _create(client)
        assert (
            client.post(f"/sessions/{sid}/events", json={"event": "gibberish(("}).status_code
            == 400
        )
        assert (
            client.post(
                f"/sessions/{sid}/events", json={"event": "ghost -> oc.register()"}
            ).status_code
            == 400
        )

    def test_step_until_quiescent_reports_notification(self, client):
        sid = _create(client)
        client.post(f"/sessions/{sid}/events", json={"event": "sensor -> c1.approachingObstacle()"})
        client.post(f"/sessions/{sid}/events", json={"event": "c1 -> oc.register()"})
        body = client.post(f"/sessions/{sid}/step", json={"until_quiescent": True}).json()
        kinds = [r["kind"] for r in body["results"]]
        assert kinds == ["executed", "quiescent"]
        assert body["notifications"][0]["explained"] is True
        assert body["notifications"][0]["text"] == FIG2_SENTENCE


class TestQueries:
    def test_why_matches_in_process_render_byte_for_byte(self, client):
        sid = _create(client)
        _drive_fig2(client, sid)
        over_http = client.post(
            f"/sessions/{sid}/query", json={"kind": "why", "target": "last"}
        ).json()["text"]

        from mabex.engine import Event
        from mabex.v2x import load_scene

        session = load_scene("fig2")
        session.inject(Event("sensor", "c1", "approachingObstacle"))
        session.inject(Event("c1", "oc", "register"))
        session.run_to_quiescence()
        in_process = session.why("last", {"audience": "end_user"}).text
        assert over_http == in_process == FIG2_SENTENCE

    def test_whycond_and_flip_event(self, client):
        sid = _create(client)
        body = client.post(
            f"/sessions/{sid}/query",
            json={"kind": "whycond", "condition": "!oc.registeredPriorityVehicles.isEmpty()"},
        ).json()
        assert "car registered is a priority vehicle because it is an emergency vehicle" in body["text"]
        assert body["ir"]["flip_event"]["message"] == "registeredPriorityVehicles.add"

    def test_when_horizon_zero_is_unknown(self, client):
        sid = _create(client)
        body = client.post(
            f"/sessions/{sid}/query",
            json={"kind": "when", "pattern": "oc -> c1.enteringAllowed()", "horizon": 0},
        ).json()
        assert body["text"] == "Not reachable within 0 environment steps."
        assert body["ir"]["steps"] is None

    def test_ask_goes_through_the_query_map(self, client):
        sid = _create(client)
        body = client.post(
            f"/sessions/{sid}/query",
            json={"kind": "ask", "question": "Why is a priority vehicle registered?"},
        ).json()
        assert "emergency vehicle" in body["text"]

    def test_follow_up_flow_from_handles(self, client):
        sid = _create(client)
        _drive_fig2(client, sid)
        why = client.post(
            f"/sessions/{sid}/query",
            json={"kind": "why", "target": "last", "recipient": {"id": "u1"}},
        ).json()
        handle = next(
            f for f in why["follow_ups"] if f["label"] == "Why is a priority vehicle registered?"
        )
        follow = client.post(
            f"/sessions/{sid}/query",
            json={
                "kind": handle["kind"],
                "condition": handle["payload"],
                "recipient": {"id": "u1"},
                "follow_up": True,
            },
        ).json()
        assert "emergency vehicle" in follow["text"]

    def test_condition_not_holding_409(self, client):
        sid = _create(client, scene="empty-road")
        response = client.post(
            f"/sessions/{sid}/query",
            json={"kind": "whycond", "condition": "!oc.registeredPriorityVehicles.isEmpty()"},
        )
        assert response.status_code == 409

    def test_engineer_and_machine_formats(self, client):
        sid = _create(client)
        _drive_fig2(client, sid)
        engineer = client.post(
            f"/sessions/{sid}/query",
            json={"kind": "why", "target": "last", "recipient": {"audience": "engineer"}},
        ).json()
        assert "CarEnteringDisallowedWhenCarPassing" in engineer["text"]
        machine = client.post(
            f"/sessions/{sid}/query",
            json={"kind": "why", "target": "last",
                  "recipient": {"audience": "machine", "format": "structured"}},
        ).json()
        assert machine["text"] is None
        assert machine["structured"]["subject"] == "entering is disallowed"


class TestHistoryAndState:
    def test_history_json_and_lines(self, client):
        sid = _create(client)
        _drive_fig2(client, sid)
        body = client.get(f"/sessions/{sid}/history").json()
        assert len(body["entries"]) == 7
        lines = client.get(
            f"/sessions/{sid}/history", params={"format": "lines"}
        ).text.strip().splitlines()
        assert len(lines) == 7
        record = json.loads(lines[-1])
        assert record["event"]["message"] == "enteringDisallowed"

    def test_state_view(self, client):
        sid = _create(client)
        _drive_fig2(client, sid)
        state = client.get(f"/sessions/{sid}/state").json()
        assert state["last_system_event"]["message"] == "enteringDisallowed"
        assert state["world"]["oc"]["collections"]["registeredPriorityVehicles"] == ["c3"]
        assert "Why is a priority vehicle registered?" in state["questions"]
        assert [m["name"] for m in state["alphabet"]] == [
            "c2-exits-narrow-section",
            "c3-completes-pass",
        ]


class TestReloadEndpoint:
    def test_reload_resolves_ledger_over_http(self, client, listing_text):
        from mabex.sml import parse_specification
        from mabex.sml.printer import pretty_print

        stripped = pretty_print(
            parse_specification(listing_text), include_annotations=False
        )
        sid = _create(client)
        ok = client.post(
            f"/sessions/{sid}/reload-models", json={"spec_text": stripped}
        ).json()
        assert ok["accepted"]
        _drive_fig2(client, sid)
        assert client.get(f"/sessions/{sid}/state").json()["pending_ledger"] == 1
        restored = client.post(
            f"/sessions/{sid}/reload-models", json={"spec_text": listing_text}
        ).json()
        assert restored["accepted"]
        assert restored["resolved"] == [0]
        assert client.get(f"/sessions/{sid}/state").json()["pending_ledger"] == 0

    def test_bad_reload_is_reported_not_applied(self, client):
        sid = _create(client)
        body = client.post(
            f"/sessions/{sid}/reload-models", json={"spec_text": "guarantee {"}
        ).json()
        assert body["accepted"] is False
        assert body["errors"]


class TestSubscribe:
    def test_queue_fan_out_delivers_history_and_need_events(self):
        from mabex.service.sessions import SessionManager

        manager = SessionManager()
        handle = manager.create("fig2")
        q = manager.attach_queue(handle)
        with handle.lock:
            from mabex.loop.session import parse_event_text

            handle.session.inject(parse_event_text("sensor -> c1.approachingObstacle()"))
            handle.session.inject(parse_event_text("c1 -> oc.register()"))
            handle.session.run_to_quiescence()
        kinds = []
        payloads = []
        while not q.empty():
            kind, payload = q.get_nowait()
            kinds.append(kind)
            payloads.append(payload)
        assert kinds.count("history") == 3
        assert "need" in kinds
        need = payloads[kinds.index("need")]
        assert need["text"] == FIG2_SENTENCE
        manager.detach_queue(handle, q)
        assert handle.subscribers == []

    def test_sse_stream_over_a_live_server(self, live_server):
        import httpx

        base = live_server
        with httpx.Client(base_url=base, timeout=10.0) as http:
            sid = http.post("/sessions", json={"scene": "fig2"}).json()["session_id"]
            seen_types: list[str] = []
            payloads: list[dict] = []
            with http.stream("GET", f"/sessions/{sid}/subscribe") as stream:
                http.post(
                    f"/sessions/{sid}/events",
                    json={"event": "sensor -> c1.approachingObstacle()"},
                )
                http.post(f"/sessions/{sid}/events", json={"event": "c1 -> oc.register()"})
                http.post(f"/sessions/{sid}/step", json={"until_quiescent": True})
                for line in stream.iter_lines():
                    if line.startswith("event: "):
                        seen_types.append(line.removeprefix("event: "))
                    if line.startswith("data: "):
                        payloads.append(json.loads(line.removeprefix("data: ")))
                        if seen_types and seen_types[-1] == "need":
                            break
            assert "history" in seen_types
            assert any(p.get("text") == FIG2_SENTENCE for p in payloads)
