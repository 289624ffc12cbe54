"""Object system the scenarios execute against.

Objects live in one of two realms (environment or system), carry scalar
attributes and ordered collections of object ids, and belong to classes in
a single-inheritance table. Snapshots are full deep copies; the canonical
dict form (sorted keys) backs digests and deterministic exports.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace

from ..sml.exprs import EvalError
from ..sml.validate import ClassSchema, ObjectSchema

ENVIRONMENT = "environment"
SYSTEM = "system"


class WorldError(Exception):
    """Malformed world definition or reference to a missing object."""


@dataclass
class WorldObject:
    oid: str
    cls: str
    realm: str = ENVIRONMENT
    attributes: dict[str, object] = field(default_factory=dict)
    collections: dict[str, list[str]] = field(default_factory=dict)


@dataclass(frozen=True)
class Event:
    """One message exchange. `origin` always equals the sender's realm."""

    sender: str
    receiver: str
    message: str
    args: tuple[object, ...] = ()
    origin: str = ENVIRONMENT
    step_index: int | None = None

    def text(self) -> str:
        args = ", ".join(str(a) for a in self.args)
        return f"{self.sender} -> {self.receiver}.{self.message}({args})"

    def call_text(self) -> str:
        args = ", ".join(str(a) for a in self.args)
        return f"{self.receiver}.{self.message}({args})"

    def to_dict(self) -> dict:
        return {
            "sender": self.sender,
            "receiver": self.receiver,
            "message": self.message,
            "args": list(self.args),
            "origin": self.origin,
        }


class ObjectSystem:
    """Mutable world of objects plus its class table."""

    def __init__(
        self,
        objects: list[WorldObject] | None = None,
        classes: dict[str, str | None] | None = None,
        receivable: dict[str, set[str]] | None = None,
    ):
        self.objects: dict[str, WorldObject] = {}
        self.classes: dict[str, str | None] = dict(classes or {})
        self.receivable: dict[str, set[str]] = {k: set(v) for k, v in (receivable or {}).items()}
        for obj in objects or []:
            self.add_object(obj)

    def add_object(self, obj: WorldObject) -> None:
        if obj.oid in self.objects:
            raise WorldError(f"duplicate object id '{obj.oid}'")
        if obj.cls not in self.classes:
            self.classes.setdefault(obj.cls, None)
        if obj.realm not in (ENVIRONMENT, SYSTEM):
            raise WorldError(f"object '{obj.oid}' has unknown realm '{obj.realm}'")
        self.objects[obj.oid] = obj

    def object(self, oid: str) -> WorldObject:
        try:
            return self.objects[oid]
        except KeyError:
            raise WorldError(f"unknown object '{oid}'") from None

    def realm(self, oid: str) -> str:
        return self.object(oid).realm

    def is_instance(self, oid: str, class_name: str) -> bool:
        cls: str | None = self.object(oid).cls
        while cls is not None:
            if cls == class_name:
                return True
            cls = self.classes.get(cls)
        return False

    def apply_collection_op(self, oid: str, collection: str, op: str, member: str) -> None:
        """Set-style mutation: add appends if absent, remove is tolerant."""
        obj = self.object(oid)
        if collection not in obj.collections:
            raise WorldError(f"object '{oid}' has no collection '{collection}'")
        items = obj.collections[collection]
        if op == "add":
            if member not in self.objects:
                raise WorldError(
                    f"cannot add unknown object '{member}' to '{oid}.{collection}'"
                )
            if member not in items:
                items.append(member)
        elif op == "remove":
            if member in items:
                items.remove(member)
        else:
            raise WorldError(f"unsupported collection operation '{op}'")

    def check_collection_members(self) -> None:
        """Collections hold object ids; every member must exist."""
        for obj in self.objects.values():
            for name, members in obj.collections.items():
                for member in members:
                    if member not in self.objects:
                        raise WorldError(
                            f"collection '{obj.oid}.{name}' references "
                            f"unknown object '{member}'"
                        )

    def clone(self) -> "ObjectSystem":
        out = ObjectSystem(classes=dict(self.classes), receivable=self.receivable)
        for obj in self.objects.values():
            out.objects[obj.oid] = replace(
                obj,
                attributes=copy.deepcopy(obj.attributes),
                collections={k: list(v) for k, v in obj.collections.items()},
            )
        return out

    def canonical(self) -> dict:
        return {
            oid: {
                "class": obj.cls,
                "realm": obj.realm,
                "attributes": {k: obj.attributes[k] for k in sorted(obj.attributes)},
                "collections": {k: list(obj.collections[k]) for k in sorted(obj.collections)},
            }
            for oid, obj in sorted(self.objects.items())
        }

    def schema(self) -> ObjectSchema:
        per_class: dict[str, dict[str, set[str]]] = {
            cls: {"attributes": set(), "collections": set()} for cls in self.classes
        }
        for obj in self.objects.values():
            per_class[obj.cls]["attributes"] |= set(obj.attributes)
            per_class[obj.cls]["collections"] |= set(obj.collections)
        classes = {
            cls: ClassSchema(
                parent=self.classes.get(cls),
                attributes=frozenset(info["attributes"]),
                collections=frozenset(info["collections"]),
                messages=frozenset(self.receivable.get(cls, set())),
            )
            for cls, info in per_class.items()
        }
        return ObjectSchema(
            classes=classes,
            objects={oid: obj.cls for oid, obj in self.objects.items()},
        )


class WorldScope:
    """Expression scope over an object system with optional role bindings.

    Bare names resolve through the bindings first; unbound names stand for
    themselves (object ids and symbolic literals such as lane names).
    """

    def __init__(self, world: ObjectSystem, bindings: dict[str, str] | None = None):
        self.world = world
        self.bindings = bindings or {}

    def resolve_name(self, name: str) -> object:
        return self.bindings.get(name, name)

    def attribute(self, oid: str, name: str) -> object:
        if oid not in self.world.objects:
            raise EvalError(f"unknown object '{oid}'")
        obj = self.world.objects[oid]
        if name in obj.attributes:
            return obj.attributes[name]
        if name in obj.collections:
            return tuple(obj.collections[name])
        raise EvalError(f"unknown attribute '{name}' on object '{oid}'")

    def collection(self, oid: str, name: str):
        if oid not in self.world.objects:
            raise EvalError(f"unknown object '{oid}'")
        obj = self.world.objects[oid]
        if name not in obj.collections:
            raise EvalError(f"unknown collection '{name}' on object '{oid}'")
        return tuple(obj.collections[name])

    def is_instance(self, oid: str, class_name: str) -> bool:
        if oid not in self.world.objects:
            raise EvalError(f"unknown object '{oid}'")
        return self.world.is_instance(oid, class_name)
