"""Plain-dict forms of engine/loop results.

The service responses and the CLI transcripts are both built from these, so
a transcript produced over HTTP is byte-identical to one produced in
process.
"""

from __future__ import annotations

from typing import Any

from ..engine.objects import Event
from ..engine.playout import (
    ExecutedEvent,
    HistoryEntry,
    Quiescent,
    StepResult,
    Violation,
)
from ..engine.export import snapshot_digest
from .session import RenderedExplanation

SCHEMA_VERSION = 1


def event_to_dict(event: Event) -> dict[str, Any]:
    return event.to_dict() | {"step_index": event.step_index, "text": event.text()}


def transition_to_dict(transition) -> dict[str, Any]:
    return {
        "iid": transition.iid,
        "kind": transition.kind,
        "scenario": transition.scenario,
        "steps": list(transition.steps),
    }


def step_result_to_dict(result: StepResult) -> dict[str, Any]:
    if isinstance(result, ExecutedEvent):
        return {
            "kind": "executed",
            "event": event_to_dict(result.event),
            "transitions": [transition_to_dict(t) for t in result.transitions],
            "violation": None,
        }
    if isinstance(result, Quiescent):
        return {"kind": "quiescent", "event": None, "transitions": [], "violation": None}
    assert isinstance(result, Violation)
    return {
        "kind": "violation",
        "event": event_to_dict(result.event) if result.event else None,
        "transitions": [transition_to_dict(t) for t in result.transitions],
        "violation": {"instance_id": result.instance_id, "reason": result.reason},
    }


def history_entry_to_dict(entry: HistoryEntry) -> dict[str, Any]:
    return {
        "step_index": entry.step_index,
        "event": event_to_dict(entry.event),
        "transitions": [transition_to_dict(t) for t in entry.transitions],
        "annotations": [
            {"scenario": a.scenario, "step": a.step, "text": a.text}
            for a in entry.annotations
        ],
        "snapshot_digest": snapshot_digest(entry.snapshot_after),
    }


def rendered_to_dict(rendered: RenderedExplanation) -> dict[str, Any]:
    out: dict[str, Any] = {
        "follow_ups": [
            {"label": f.label, "kind": f.kind, "payload": f.payload, "horizon": f.horizon}
            for f in rendered.follow_ups
        ],
        "ir": rendered.ir.to_dict(),
    }
    if isinstance(rendered.text, str):
        out["text"] = rendered.text
        out["structured"] = None
    else:
        out["text"] = None
        out["structured"] = rendered.text
    return out
