"""Record types flowing through the monitor-analyze-build-explain loop."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from ..engine.objects import Event
from ..sml.ast import MessagePattern
from ..sml.exprs import Expr, to_text

# monitor record kinds
EVENT = "event"
SNAPSHOT = "snapshot"
USER_QUERY = "user_query"
RECIPIENT_REACTION = "recipient_reaction"

# need kinds
SYSTEM_TRIGGERED = "system_triggered"
USER_QUERY_NEED = "user_query"


@dataclass(frozen=True)
class MonitorRecord:
    kind: str
    payload: dict[str, Any]
    timestamp: int  # logical clock assigned by the session


@dataclass(frozen=True)
class TriggerRule:
    rule_id: str
    pattern: MessagePattern
    predicate: Expr | None
    behavior_label: str


@dataclass(frozen=True)
class EventTarget:
    step_index: int

    def key(self) -> str:
        return f"event#{self.step_index}"


@dataclass(frozen=True)
class ConditionTarget:
    condition: Expr

    def key(self) -> str:
        return f"cond:{to_text(self.condition)}"


@dataclass(frozen=True)
class FutureTarget:
    pattern: MessagePattern
    horizon: int = 4

    def key(self) -> str:
        return f"future:{self.pattern.text()}"


NeedTarget = EventTarget | ConditionTarget | FutureTarget


@dataclass(frozen=True)
class ExplanationNeed:
    kind: str  # system_triggered | user_query
    target: NeedTarget | None
    recipient: str = "end_user"
    origin_rule: str | None = None
    behavior_label: str = ""

    def dedup_key(self) -> tuple[str, str]:
        target_key = self.target.key() if self.target is not None else "none"
        return (target_key, self.behavior_label)


@dataclass(frozen=True)
class Cause:
    reason_clause: str
    subject_clause: str | None
    provenance: str
    support: tuple[int, ...] = ()
    depth: int = 1


@dataclass(frozen=True)
class FollowUpHandle:
    label: str
    kind: str  # whycond | when
    payload: str  # condition or pattern text
    horizon: int | None = None


@dataclass(frozen=True)
class ExplanationIR:
    """Intermediate explanation: not yet shaped for a particular recipient."""

    kind: str  # event | condition | future
    subject_clause: str
    causes: tuple[Cause, ...] = ()
    follow_ups: tuple[FollowUpHandle, ...] = ()
    # event targets
    step_index: int | None = None
    # condition targets
    condition_text: str | None = None
    flip_event: Event | None = None
    initially_true: bool = False
    # future targets
    steps: int | None = None
    witness_events: tuple[Event, ...] = ()
    witness_labels: tuple[str, ...] = ()
    horizon: int | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "kind": self.kind,
            "subject": self.subject_clause,
            "causes": [
                {
                    "reason": c.reason_clause,
                    "subject": c.subject_clause,
                    "provenance": c.provenance,
                    "support": list(c.support),
                    "depth": c.depth,
                }
                for c in self.causes
            ],
            "follow_ups": [
                {"label": f.label, "kind": f.kind, "payload": f.payload, "horizon": f.horizon}
                for f in self.follow_ups
            ],
        }
        if self.step_index is not None:
            out["step_index"] = self.step_index
        if self.condition_text is not None:
            out["condition"] = self.condition_text
            out["initially_true"] = self.initially_true
            if self.flip_event is not None:
                out["flip_event"] = self.flip_event.to_dict() | {
                    "step_index": self.flip_event.step_index
                }
        if self.kind == "future":
            out["steps"] = self.steps
            out["horizon"] = self.horizon
            out["witness"] = [e.to_dict() for e in self.witness_events]
            out["witness_labels"] = list(self.witness_labels)
        return out


@dataclass(frozen=True)
class Unexplainable:
    """Build result when no model covers the behavior; feeds the ledger."""

    need: ExplanationNeed
    note: str


@dataclass
class RecipientModel:
    recipient_id: str = "end_user"
    audience: str = "end_user"  # end_user | engineer | machine
    format: str = "textual"  # textual | structured
    verbosity_depth: int = 2

    def __post_init__(self) -> None:
        if self.verbosity_depth < 1:
            raise ValueError("verbosity_depth must be >= 1")


@dataclass
class PendingLedgerEntry:
    need: ExplanationNeed
    note: str
    first_seen: int
    status: str = "pending"  # pending | resolved
    resolution: ExplanationIR | None = None


@dataclass(frozen=True)
class QuerySpec:
    """Query-map entry: canned question mapped onto a structured target."""

    kind: str  # why | whycond | when
    pattern: MessagePattern | None = None
    condition: Expr | None = None
    horizon: int = 4


@dataclass(frozen=True)
class EnvMacro:
    """Named environment update used as one look-ahead step."""

    name: str
    events: tuple[Event, ...]


def split_fragment(text: str) -> tuple[str | None, str]:
    """Split an annotation into (subject clause, reason clause).

    Annotations are either "<subject> because <reason>" or a bare clause;
    bare clauses have no subject and render as standalone sentences.
    """
    marker = " because "
    if marker in text:
        subject, reason = text.split(marker, 1)
        return subject.strip(), reason.strip()
    return None, text.strip()
