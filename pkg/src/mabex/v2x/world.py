"""Narrow-passage world: cars, two lanes, an obstacle controller.

Car positions are symbolic tags (approaching / registered / passing /
passed) updated from the messages the engine executes; the update hook also
asserts the world invariants after every event.
"""

from __future__ import annotations

from ..engine.objects import ENVIRONMENT, Event, ObjectSystem, WorldObject

CLASSES: dict[str, str | None] = {
    "CoordinationPoint": None,
    "ObstacleController": None,
    "Sensor": None,
    "Car": None,
    "EmergencyVehicle": "Car",
}

RECEIVABLE: dict[str, set[str]] = {
    "Car": {"approachingObstacle", "enteringAllowed", "enteringDisallowed"},
    "ObstacleController": {"register"},
}

APPROACHING = "approaching"
REGISTERED = "registered"
PASSING = "passing"
PASSED = "passed"

PASSING_COLLECTIONS = ("passingL1", "passingL2")


class InvariantViolation(Exception):
    pass


def build_world(object_defs: list[dict]) -> ObjectSystem:
    world = ObjectSystem(classes=dict(CLASSES), receivable=RECEIVABLE)
    for definition in object_defs:
        world.add_object(
            WorldObject(
                oid=definition["id"],
                cls=definition["class"],
                realm=definition.get("realm", ENVIRONMENT),
                attributes=dict(definition.get("attributes", {})),
                collections={
                    name: list(members)
                    for name, members in definition.get("collections", {}).items()
                },
            )
        )
    check_invariants(world)
    return world


def reactor(world: ObjectSystem, event: Event) -> None:
    """Domain reaction applied after each executed event."""
    if event.message == "approachingObstacle":
        _set_position(world, event.receiver, APPROACHING)
        # a fresh approach starts a new passage negotiation; stale priority
        # grants from an earlier passage are dropped
        for oc in world.objects.values():
            if oc.cls == "ObstacleController" and "registeredPriorityVehicles" in oc.collections:
                world.apply_collection_op(
                    oc.oid, "registeredPriorityVehicles", "remove", event.receiver
                )
    elif event.message == "register":
        _set_position(world, event.sender, REGISTERED)
    elif event.message.endswith(".add") and _is_passing_op(event.message):
        _set_position(world, str(event.args[0]), PASSING)
    elif event.message.endswith(".remove") and _is_passing_op(event.message):
        _set_position(world, str(event.args[0]), PASSED)
    check_invariants(world)


def _is_passing_op(message: str) -> bool:
    return message.split(".")[0] in PASSING_COLLECTIONS


def _set_position(world: ObjectSystem, oid: str, position: str) -> None:
    obj = world.object(oid)
    if world.is_instance(oid, "Car"):
        obj.attributes["position"] = position


def check_invariants(world: ObjectSystem) -> None:
    """A car passes in at most one direction; priority implies registration."""
    controllers = [o for o in world.objects.values() if o.cls == "ObstacleController"]
    for oc in controllers:
        l1 = set(oc.collections.get("passingL1", []))
        l2 = set(oc.collections.get("passingL2", []))
        both = l1 & l2
        if both:
            raise InvariantViolation(
                f"cars in both passing collections: {', '.join(sorted(both))}"
            )
        for car in oc.collections.get("registeredPriorityVehicles", []):
            position = world.object(car).attributes.get("position")
            if position == APPROACHING:
                raise InvariantViolation(
                    f"priority vehicle '{car}' has not registered yet"
                )


def variable_snapshot(world: ObjectSystem, event: Event) -> dict[str, object]:
    """Variables for the shipped causality tree, relative to the event's car."""
    car = event.receiver
    direction = world.object(car).attributes.get("direction")
    opposite = "passingL2" if direction == "L1" else "passingL1"
    oc = next(o for o in world.objects.values() if o.cls == "ObstacleController")
    registry = oc.collections.get("registeredPriorityVehicles", [])
    return {
        "cars passing in the opposite direction": len(oc.collections.get(opposite, [])) > 0,
        "priority vehicle registered": any(member != car for member in registry),
    }
