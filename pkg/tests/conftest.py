from __future__ import annotations

import pytest

from mabex.engine import Engine, ObjectSystem, WorldObject
from mabex.sml import parse_specification
from mabex.v2x.scenes import read_data_text

V2X_CLASSES = {
    "CoordinationPoint": None,
    "ObstacleController": None,
    "Sensor": None,
    "Car": None,
    "EmergencyVehicle": "Car",
}

V2X_RECEIVABLE = {
    "Car": {"approachingObstacle", "enteringAllowed", "enteringDisallowed"},
    "ObstacleController": {"register"},
}


@pytest.fixture(scope="session")
def listing_text() -> str:
    return read_data_text("narrow_passage.sml")


@pytest.fixture(scope="session")
def listing_spec(listing_text):
    return parse_specification(listing_text)


def make_v2x_world(
    passing_l1=(),
    passing_l2=(),
    priority=(),
    cars=None,
) -> ObjectSystem:
    """Directly constructed narrow-passage world (no preroll)."""
    if cars is None:
        cars = [
            ("c1", "Car", "L1"),
            ("c2", "Car", "L2"),
            ("c3", "EmergencyVehicle", "L2"),
        ]
    objects = [
        WorldObject("cp", "CoordinationPoint", "system", {"obstacleCtrl": "oc"}),
        WorldObject(
            "oc",
            "ObstacleController",
            "system",
            {},
            {
                "passingL1": list(passing_l1),
                "passingL2": list(passing_l2),
                "registeredPriorityVehicles": list(priority),
            },
        ),
        WorldObject("sensor", "Sensor", "environment"),
    ]
    for oid, cls, direction in cars:
        position = "passing" if oid in (*passing_l1, *passing_l2) else "approaching"
        objects.append(
            WorldObject(
                oid, cls, "environment", {"direction": direction, "position": position}
            )
        )
    return ObjectSystem(
        objects=objects, classes=dict(V2X_CLASSES), receivable=V2X_RECEIVABLE
    )


@pytest.fixture
def fig2_state_world() -> ObjectSystem:
    """The fig2 situation with the priority registration pre-seeded."""
    return make_v2x_world(passing_l2=["c2"], priority=["c3"])


@pytest.fixture
def fig2_state_engine(listing_spec, fig2_state_world) -> Engine:
    return Engine(listing_spec, fig2_state_world)


@pytest.fixture
def fig2_session(tmp_path):
    from mabex.v2x import load_scene

    return load_scene("fig2", ledger_path=tmp_path / "ledger.jsonl")


@pytest.fixture
def empty_road_session():
    from mabex.v2x import load_scene

    return load_scene("empty-road")


@pytest.fixture(scope="session")
def live_server():
    """A real uvicorn server for streaming tests; yields its base URL."""
    import socket
    import threading
    import time

    import uvicorn

    from mabex.service.app import create_app

    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]

    config = uvicorn.Config(
        create_app(), host="127.0.0.1", port=port, log_level="warning"
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("uvicorn did not start in time")
        time.sleep(0.02)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)
