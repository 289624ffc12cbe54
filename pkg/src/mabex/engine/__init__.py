"""Play-out engine: object system, scenario instances, history."""

from .export import entry_line, export_history, snapshot_digest
from .objects import ENVIRONMENT, SYSTEM, Event, ObjectSystem, WorldObject, WorldScope
from .playout import (
    ACTIVE,
    ADVANCED,
    COMPLETED,
    INTERRUPTED,
    SPAWNED,
    TERMINATED,
    VIOLATED,
    Engine,
    EngineError,
    ExecutedEvent,
    FiredAnnotation,
    HistoryEntry,
    InitError,
    Quiescent,
    ScenarioInstance,
    StepResult,
    Transition,
    Violation,
    ViolationError,
)

__all__ = [
    "ACTIVE",
    "ADVANCED",
    "COMPLETED",
    "ENVIRONMENT",
    "Engine",
    "EngineError",
    "Event",
    "ExecutedEvent",
    "FiredAnnotation",
    "HistoryEntry",
    "INTERRUPTED",
    "InitError",
    "ObjectSystem",
    "Quiescent",
    "SPAWNED",
    "SYSTEM",
    "ScenarioInstance",
    "StepResult",
    "TERMINATED",
    "Transition",
    "VIOLATED",
    "Violation",
    "ViolationError",
    "WorldObject",
    "WorldScope",
    "entry_line",
    "export_history",
    "snapshot_digest",
]
