"""One explanation session: a live engine plus the loop state around it.

The session ingests everything the engine executes into a monitor stream,
analyzes new records against the trigger rules, builds explanations for the
needs it detects, keeps the ledger of behavior it could not explain, and
retries that ledger whenever models are reloaded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

from ..causality import FormatError, load_tree
from ..engine.objects import Event, WorldScope
from ..engine.playout import Engine, InitError, StepResult
from ..sml import ast
from ..sml.exprs import EvalError, eval_expr
from ..sml.parser import ParseError, parse_expression, parse_pattern, parse_specification
from .build import (
    ConditionNotHolding,
    TargetNotFound,
    TreeBinding,
    build_explanation,
)
from .records import (
    EVENT,
    RECIPIENT_REACTION,
    SYSTEM_TRIGGERED,
    USER_QUERY,
    USER_QUERY_NEED,
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
)
from .render import render_explanation

UNEXPLAINABLE_TEXT = "No explanation available yet; the behavior was recorded for model learning."


class QueryError(Exception):
    pass


@dataclass(frozen=True)
class RenderedExplanation:
    text: str | dict
    ir: ExplanationIR
    follow_ups: tuple[FollowUpHandle, ...]


@dataclass(frozen=True)
class NeedNotification:
    need: ExplanationNeed
    explained: bool
    rendered: str | dict | None
    note: str | None = None


@dataclass
class ReloadReport:
    accepted: bool
    errors: list[str] = field(default_factory=list)
    resolved: list[int] = field(default_factory=list)  # ledger positions
    kept_instances: list[int] = field(default_factory=list)
    interrupted_instances: list[int] = field(default_factory=list)


class ExplanationSession:
    def __init__(
        self,
        engine: Engine,
        *,
        scene_name: str = "",
        rules: Sequence[TriggerRule] = (),
        query_map: dict[str, QuerySpec] | None = None,
        tree_bindings: Sequence[TreeBinding] = (),
        env_macros: Sequence[EnvMacro] = (),
        ledger_path: str | Path | None = None,
    ):
        self.engine = engine
        self.scene_name = scene_name
        self.rules = list(rules)
        self.query_map = dict(query_map or {})
        self.tree_bindings = list(tree_bindings)
        self.env_macros = list(env_macros)
        self.stream: list[MonitorRecord] = []
        self.ledger: list[PendingLedgerEntry] = []
        self.notifications: list[NeedNotification] = []
        self.recipients: dict[str, RecipientModel] = {}
        self._clock = 0
        self._cursor = 0  # analyze consumption position in the stream
        self._history_seen = 0
        self._ledger_path = Path(ledger_path) if ledger_path else None
        self._observers: list[Callable[[str, dict], None]] = []
        self._sync_history()

    # -- engine pass-through with monitoring --------------------------------

    def inject(self, event: Event) -> StepResult:
        result = self.engine.inject_environment_event(event)
        self._after_engine_activity()
        return result

    def step(self) -> StepResult:
        result = self.engine.step_system()
        self._after_engine_activity()
        return result

    def run_to_quiescence(self) -> list[Event]:
        try:
            events = self.engine.run_to_quiescence()
        finally:
            self._after_engine_activity()
        return events

    def _after_engine_activity(self) -> None:
        new_entries = self._sync_history()
        for entry in new_entries:
            self._notify("history", {"step_index": entry.step_index})
        for need in self.analyze():
            if need.kind == SYSTEM_TRIGGERED:
                self._handle_triggered(need)

    def _sync_history(self) -> list:
        entries = self.engine.history()
        new = list(entries[self._history_seen :])
        for entry in new:
            self.monitor_ingest(
                EVENT,
                {
                    "step_index": entry.step_index,
                    "event": entry.event.to_dict(),
                },
            )
        self._history_seen = len(entries)
        return new

    # -- monitor -------------------------------------------------------------

    def monitor_ingest(self, kind: str, payload: dict[str, Any]) -> MonitorRecord:
        self._clock += 1
        record = MonitorRecord(kind=kind, payload=payload, timestamp=self._clock)
        self.stream.append(record)
        return record

    def record_reaction(self, recipient_id: str, helpful: bool) -> MonitorRecord:
        return self.monitor_ingest(
            RECIPIENT_REACTION, {"recipient": recipient_id, "helpful": helpful}
        )

    # -- analyze ---------------------------------------------------------------

    def analyze(self) -> list[ExplanationNeed]:
        """Consume unprocessed monitor records; each record is seen once."""
        needs: list[ExplanationNeed] = []
        while self._cursor < len(self.stream):
            record = self.stream[self._cursor]
            self._cursor += 1
            if record.kind == EVENT:
                needs.extend(self._match_rules(record))
            elif record.kind == USER_QUERY:
                need = self._map_query(record)
                if need is not None:
                    needs.append(need)
        return needs

    def _match_rules(self, record: MonitorRecord) -> list[ExplanationNeed]:
        step_index = record.payload["step_index"]
        entry = self.engine.history()[step_index - 1]
        event = entry.event
        out = []
        for rule in self.rules:
            if not rule.pattern.matches_event(event):
                continue
            if rule.predicate is not None:
                scope = WorldScope(
                    entry.snapshot_after,
                    {"sender": event.sender, "receiver": event.receiver},
                )
                try:
                    holds = eval_expr(rule.predicate, scope)
                except EvalError as exc:
                    raise QueryError(f"rule '{rule.rule_id}': {exc}") from exc
                if holds is not True:
                    continue
            out.append(
                ExplanationNeed(
                    kind=SYSTEM_TRIGGERED,
                    target=EventTarget(step_index=step_index),
                    origin_rule=rule.rule_id,
                    behavior_label=rule.behavior_label,
                )
            )
        return out

    def _map_query(self, record: MonitorRecord) -> ExplanationNeed | None:
        question = record.payload.get("text", "")
        recipient = record.payload.get("recipient", "end_user")
        spec = self.query_map.get(question)
        if spec is None:
            return ExplanationNeed(
                kind=USER_QUERY_NEED,
                target=None,
                recipient=recipient,
                behavior_label=f"unmapped query: {question}",
            )
        return self._need_for_query_spec(spec, recipient)

    def _need_for_query_spec(self, spec: QuerySpec, recipient: str) -> ExplanationNeed | None:
        if spec.kind == "whycond":
            assert spec.condition is not None
            return ExplanationNeed(
                kind=USER_QUERY_NEED,
                target=ConditionTarget(condition=spec.condition),
                recipient=recipient,
            )
        if spec.kind == "when":
            assert spec.pattern is not None
            return ExplanationNeed(
                kind=USER_QUERY_NEED,
                target=FutureTarget(pattern=spec.pattern, horizon=spec.horizon),
                recipient=recipient,
            )
        assert spec.pattern is not None
        step_index = self._latest_match(spec.pattern)
        if step_index is None:
            return None
        return ExplanationNeed(
            kind=USER_QUERY_NEED,
            target=EventTarget(step_index=step_index),
            recipient=recipient,
        )

    def _handle_triggered(self, need: ExplanationNeed) -> None:
        result = self._build(need)
        if isinstance(result, Unexplainable):
            self.record_unexplained(need, result.note)
            notification = NeedNotification(
                need=need, explained=False, rendered=None, note=result.note
            )
        else:
            rendered = render_explanation(result, self._recipient({"audience": "end_user"}))
            notification = NeedNotification(need=need, explained=True, rendered=rendered)
        self.notifications.append(notification)
        self._notify(
            "need",
            {
                "label": need.behavior_label,
                "rule": need.origin_rule,
                "explained": notification.explained,
                "text": notification.rendered if isinstance(notification.rendered, str) else None,
            },
        )

    # -- build + explain --------------------------------------------------------

    def _build(self, need: ExplanationNeed) -> ExplanationIR | Unexplainable:
        return build_explanation(
            need,
            self.engine,
            tree_bindings=self.tree_bindings,
            query_map=self.query_map,
            env_alphabet=self.env_macros,
        )

    def why(self, target_ref: str | int, recipient: dict | RecipientModel | None = None) -> RenderedExplanation:
        step_index = self.resolve_event_ref(target_ref)
        model = self._recipient(recipient)
        self.monitor_ingest(
            USER_QUERY,
            {"text": f"why #{step_index}", "recipient": model.recipient_id},
        )
        self.analyze()
        need = ExplanationNeed(
            kind=USER_QUERY_NEED,
            target=EventTarget(step_index=step_index),
            recipient=model.recipient_id,
        )
        return self._answer(need, model)

    def whycond(self, condition_text: str, recipient: dict | RecipientModel | None = None) -> RenderedExplanation:
        try:
            condition = parse_expression(condition_text)
        except ParseError as exc:
            raise QueryError(f"bad condition: {exc}") from exc
        model = self._recipient(recipient)
        self.monitor_ingest(
            USER_QUERY,
            {"text": f"whycond {condition_text}", "recipient": model.recipient_id},
        )
        self.analyze()
        need = ExplanationNeed(
            kind=USER_QUERY_NEED,
            target=ConditionTarget(condition=condition),
            recipient=model.recipient_id,
        )
        return self._answer(need, model)

    def when(
        self,
        pattern_text: str,
        horizon: int = 4,
        recipient: dict | RecipientModel | None = None,
    ) -> RenderedExplanation:
        try:
            pattern = parse_pattern(pattern_text)
        except ParseError as exc:
            raise QueryError(f"bad pattern: {exc}") from exc
        model = self._recipient(recipient)
        self.monitor_ingest(
            USER_QUERY,
            {"text": f"when {pattern_text}", "recipient": model.recipient_id},
        )
        self.analyze()
        need = ExplanationNeed(
            kind=USER_QUERY_NEED,
            target=FutureTarget(pattern=pattern, horizon=horizon),
            recipient=model.recipient_id,
        )
        return self._answer(need, model)

    def ask(self, question: str, recipient: dict | RecipientModel | None = None) -> RenderedExplanation:
        """Answer a canned natural-language question via the query map."""
        model = self._recipient(recipient)
        self.monitor_ingest(USER_QUERY, {"text": question, "recipient": model.recipient_id})
        self.analyze()
        spec = self.query_map.get(question)
        if spec is None:
            need = ExplanationNeed(
                kind=USER_QUERY_NEED,
                target=None,
                recipient=model.recipient_id,
                behavior_label=f"unmapped query: {question}",
            )
            self.record_unexplained(need, "question is not in the query map")
            raise QueryError(f"unrecognized question: {question!r}")
        need = self._need_for_query_spec(spec, model.recipient_id)
        if need is None:
            raise QueryError(f"no matching behavior in the history for {question!r}")
        return self._answer(need, model)

    def follow_up(
        self, handle: FollowUpHandle, recipient: dict | RecipientModel | None = None
    ) -> RenderedExplanation:
        """Answer a follow-up handle; the recipient's verbosity grows by one."""
        model = self._recipient(recipient)
        model.verbosity_depth += 1
        if handle.kind == "whycond":
            return self.whycond(handle.payload, model)
        if handle.kind == "when":
            return self.when(handle.payload, handle.horizon or 4, model)
        raise QueryError(f"unsupported follow-up kind '{handle.kind}'")

    def _answer(self, need: ExplanationNeed, model: RecipientModel) -> RenderedExplanation:
        result = self._build(need)
        if isinstance(result, Unexplainable):
            self.record_unexplained(need, result.note)
            raise QueryError(UNEXPLAINABLE_TEXT)
        return RenderedExplanation(
            text=render_explanation(result, model),
            ir=result,
            follow_ups=result.follow_ups,
        )

    def why_not(self, pattern_text: str) -> list[str]:
        """Experimental: reasons the pattern is currently blocked.

        Lists the annotations of steps inside active regions whose forbidden
        constraints match the pattern, then guard texts as a fallback.
        """
        pattern = parse_pattern(pattern_text)
        reasons: list[str] = []
        for inst in self.engine.instances:
            if not inst.is_active:
                continue
            scenario = self.engine.spec.scenarios[inst.scenario_index]
            blocking = [
                c
                for c in self.engine._active_constraints(inst)
                if c.kind == ast.FORBIDDEN
                and pattern.matches(
                    inst.bindings.get(c.sender, c.sender),
                    inst.bindings.get(c.receiver, c.receiver),
                    c.qualified_message,
                    (),
                )
            ]
            if not blocking:
                continue
            annotated = [
                step.annotation
                for _, step in ast.iter_steps(scenario)
                if step.annotation is not None
            ]
            if annotated:
                reasons.extend(annotated)
            else:
                reasons.append(f"forbidden while {scenario.name} is active")
        return reasons

    # -- ledger + model learning ---------------------------------------------

    def record_unexplained(self, need: ExplanationNeed, note: str) -> PendingLedgerEntry:
        for entry in self.ledger:
            if entry.need.dedup_key() == need.dedup_key():
                return entry
        entry = PendingLedgerEntry(
            need=need, note=note, first_seen=len(self.engine.history())
        )
        self.ledger.append(entry)
        self._append_ledger_line(
            {"status": "pending", "target": need.dedup_key()[0], "label": need.behavior_label,
             "note": note, "first_seen": entry.first_seen}
        )
        return entry

    def pending_ledger(self) -> list[PendingLedgerEntry]:
        return [e for e in self.ledger if e.status == "pending"]

    def reload_models(
        self,
        spec_text: str | None = None,
        tree_texts: dict[str, str] | None = None,
    ) -> ReloadReport:
        report = ReloadReport(accepted=False)

        new_spec = None
        if spec_text is not None:
            try:
                new_spec = parse_specification(spec_text)
            except ParseError as exc:
                report.errors.append(f"spec: {exc}")
                return report

        new_trees = {}
        for name, text in (tree_texts or {}).items():
            try:
                new_trees[name] = load_tree(text)
            except FormatError as exc:
                report.errors.append(f"tree {name}: {exc}")
                return report

        if new_spec is not None:
            try:
                instance_report = self.engine.reload_spec(new_spec)
            except InitError as exc:
                report.errors.append(f"spec: {exc}")
                return report
            report.kept_instances = instance_report["kept"]
            report.interrupted_instances = instance_report["interrupted"]

        for name, tree in new_trees.items():
            for i, binding in enumerate(self.tree_bindings):
                if binding.tree.root.node_id == name:
                    self.tree_bindings[i] = TreeBinding(
                        pattern=binding.pattern, tree=tree, variables=binding.variables
                    )

        report.accepted = True
        for position, entry in enumerate(self.ledger):
            if entry.status != "pending":
                continue
            result = self._build(entry.need)
            if isinstance(result, Unexplainable):
                continue
            entry.status = "resolved"
            entry.resolution = result
            report.resolved.append(position)
            self._append_ledger_line(
                {"status": "resolved", "target": entry.need.dedup_key()[0],
                 "label": entry.need.behavior_label}
            )
        self._notify("reload", {"resolved": report.resolved})
        return report

    def _append_ledger_line(self, record: dict) -> None:
        if self._ledger_path is None:
            return
        with open(self._ledger_path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(record, separators=(",", ":")) + "\n")

    # -- helpers -----------------------------------------------------------------

    def resolve_event_ref(self, ref: str | int) -> int:
        """Map a why-target reference onto a history step index.

        Accepts an integer, "#<n>", "last" (latest system event), or an event
        pattern whose latest match is taken.
        """
        history = self.engine.history()
        if isinstance(ref, int):
            index = ref
        else:
            text = ref.strip()
            if text.startswith("#"):
                index = int(text[1:])
            elif text == "last":
                index = 0
                for entry in reversed(history):
                    if entry.event.origin == "system":
                        index = entry.step_index
                        break
                if index == 0:
                    raise TargetNotFound("no system event in the history yet")
            else:
                try:
                    pattern = parse_pattern(text)
                except ParseError as exc:
                    raise QueryError(f"bad event reference: {exc}") from exc
                found = self._latest_match(pattern)
                if found is None:
                    raise TargetNotFound(f"no history event matches {text!r}")
                index = found
        if not 1 <= index <= len(history):
            raise TargetNotFound(f"no history entry #{index}")
        return index

    def _latest_match(self, pattern: ast.MessagePattern) -> int | None:
        for entry in reversed(self.engine.history()):
            if pattern.matches_event(entry.event):
                return entry.step_index
        return None

    def _recipient(self, spec: dict | RecipientModel | None) -> RecipientModel:
        if isinstance(spec, RecipientModel):
            self.recipients.setdefault(spec.recipient_id, spec)
            return spec
        data = dict(spec or {})
        recipient_id = data.get("id") or data.get("audience") or "end_user"
        model = self.recipients.get(recipient_id)
        if model is None:
            model = RecipientModel(
                recipient_id=recipient_id,
                audience=data.get("audience", "end_user"),
                format=data.get("format", "textual"),
                verbosity_depth=int(data.get("verbosity_depth", 2)),
            )
            self.recipients[recipient_id] = model
        elif "verbosity_depth" in data:
            model.verbosity_depth = int(data["verbosity_depth"])
        return model

    def recipient_model(self, spec: dict | RecipientModel | None) -> RecipientModel:
        return self._recipient(spec)

    def bump_verbosity(self, recipient_id: str) -> None:
        model = self.recipients.get(recipient_id)
        if model is not None:
            model.verbosity_depth += 1

    def subscribe(self, callback: Callable[[str, dict], None]) -> None:
        self._observers.append(callback)

    def _notify(self, kind: str, payload: dict) -> None:
        for callback in self._observers:
            callback(kind, payload)


def parse_event_text(text: str) -> Event:
    """Parse `sender -> receiver.message(args)` into a concrete event."""
    pattern = parse_pattern(text)
    if pattern.sender == "*" or pattern.receiver == "*" or pattern.message == "*":
        raise QueryError(f"event text must be concrete: {text!r}")
    args = tuple(pattern.args or ())
    if any(a == "*" for a in args):
        raise QueryError(f"event text must be concrete: {text!r}")
    return Event(
        sender=pattern.sender,
        receiver=pattern.receiver,
        message=pattern.message,
        args=args,
    )
