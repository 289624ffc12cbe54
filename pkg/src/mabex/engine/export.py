"""Line-delimited history export for golden-file testing.

One compact JSON record per history entry, key order fixed:
step_index, event, transitions, annotations, snapshot (digest of the
canonical world form). Identical runs serialize bit-for-bit identically.
"""

from __future__ import annotations

import hashlib
import json

from .objects import ObjectSystem
from .playout import Engine, HistoryEntry


def snapshot_digest(world: ObjectSystem) -> str:
    canon = json.dumps(world.canonical(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def entry_line(entry: HistoryEntry) -> str:
    record = {
        "step_index": entry.step_index,
        "event": entry.event.to_dict(),
        "transitions": [
            {"iid": t.iid, "kind": t.kind, "scenario": t.scenario, "steps": list(t.steps)}
            for t in entry.transitions
        ],
        "annotations": [
            {"scenario": a.scenario, "step": a.step, "text": a.text}
            for a in entry.annotations
        ],
        "snapshot": snapshot_digest(entry.snapshot_after),
    }
    return json.dumps(record, separators=(",", ":"))


def export_history(engine: Engine) -> str:
    lines = [entry_line(entry) for entry in engine.history()]
    return "\n".join(lines) + ("\n" if lines else "")
