"""Monitor-analyze-build-explain loop around a play-out engine."""

from .build import (
    ConditionNotHolding,
    FlipResult,
    LookaheadAnswer,
    NoFlip,
    TargetNotFound,
    TreeBinding,
    Unknown,
    build_explanation,
    lookahead_query,
    trace_condition_flip,
)
from .config import ConfigError, SessionConfig, load_rules, load_rules_file
from .records import (
    Cause,
    ConditionTarget,
    EnvMacro,
    EventTarget,
    ExplanationIR,
    ExplanationNeed,
    FollowUpHandle,
    FutureTarget,
    MonitorRecord,
    PendingLedgerEntry,
    QuerySpec,
    RecipientModel,
    TriggerRule,
    Unexplainable,
    split_fragment,
)
from .render import merge_clauses, render_explanation
from .session import (
    ExplanationSession,
    NeedNotification,
    QueryError,
    ReloadReport,
    RenderedExplanation,
    parse_event_text,
)

__all__ = [
    "Cause",
    "ConditionNotHolding",
    "ConditionTarget",
    "ConfigError",
    "EnvMacro",
    "EventTarget",
    "ExplanationIR",
    "ExplanationNeed",
    "ExplanationSession",
    "FlipResult",
    "FollowUpHandle",
    "FutureTarget",
    "LookaheadAnswer",
    "MonitorRecord",
    "NeedNotification",
    "NoFlip",
    "PendingLedgerEntry",
    "QueryError",
    "QuerySpec",
    "RecipientModel",
    "ReloadReport",
    "RenderedExplanation",
    "SessionConfig",
    "TargetNotFound",
    "TreeBinding",
    "TriggerRule",
    "Unexplainable",
    "Unknown",
    "build_explanation",
    "load_rules",
    "load_rules_file",
    "lookahead_query",
    "merge_clauses",
    "parse_event_text",
    "render_explanation",
    "split_fragment",
    "trace_condition_flip",
]
