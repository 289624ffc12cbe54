"""Build phase: turn an explanation need into an intermediate explanation.

Event needs collect the annotations of the scenario steps that fired at the
target history entry (resolved against the *currently loaded* specification,
so a model reload can explain past behavior), merged with active causality
tree paths when a tree is bound to the event. Condition needs walk the
history backwards for the event that flipped the condition to true. Future
needs run a bounded breadth-first look-ahead over forked engines.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from ..causality import CausalityTree, active_monitored_events, collect_causes
from ..engine.objects import Event, ObjectSystem, WorldScope
from ..engine.playout import Engine, HistoryEntry, ViolationError
from ..sml import ast
from ..sml.exprs import And, Expr, eval_expr, substitute, to_text
from .records import (
    Cause,
    ConditionTarget,
    EnvMacro,
    EventTarget,
    ExplanationIR,
    ExplanationNeed,
    FollowUpHandle,
    FutureTarget,
    QuerySpec,
    Unexplainable,
    split_fragment,
)


class ConditionNotHolding(Exception):
    """whycond precondition failure: the condition is not currently true."""


class TargetNotFound(Exception):
    pass


@dataclass(frozen=True)
class FlipResult:
    event: Event
    annotations: tuple[str, ...]
    step_index: int


@dataclass(frozen=True)
class NoFlip:
    initially_true: bool = True


@dataclass(frozen=True)
class LookaheadAnswer:
    steps: int
    witness_events: tuple[Event, ...]
    witness_labels: tuple[str, ...]


@dataclass(frozen=True)
class Unknown:
    horizon: int


@dataclass(frozen=True)
class TreeBinding:
    """Causality tree consulted for events matching the pattern."""

    pattern: ast.MessagePattern
    tree: CausalityTree
    # derives the tree's variable snapshot from (world snapshot, event)
    variables: Callable[[ObjectSystem, Event], Mapping[str, object]]


def build_explanation(
    need: ExplanationNeed,
    engine: Engine,
    tree_bindings: Sequence[TreeBinding] = (),
    query_map: Mapping[str, QuerySpec] | None = None,
    env_alphabet: Sequence[EnvMacro] = (),
) -> ExplanationIR | Unexplainable:
    target = need.target
    if isinstance(target, EventTarget):
        return _build_for_event(need, target, engine, tree_bindings, query_map or {})
    if isinstance(target, ConditionTarget):
        return _build_for_condition(need, target, engine)
    if isinstance(target, FutureTarget):
        return _build_for_future(target, engine, env_alphabet)
    return Unexplainable(need=need, note="need has no resolvable target")


# -- event targets -------------------------------------------------------------


def _build_for_event(
    need: ExplanationNeed,
    target: EventTarget,
    engine: Engine,
    tree_bindings: Sequence[TreeBinding],
    query_map: Mapping[str, QuerySpec],
) -> ExplanationIR | Unexplainable:
    history = engine.history()
    if not 1 <= target.step_index <= len(history):
        raise TargetNotFound(f"no history entry #{target.step_index}")
    entry = history[target.step_index - 1]

    causes: list[Cause] = []
    seen: set[tuple[str | None, str]] = set()
    follow_ups: list[FollowUpHandle] = []
    fu_seen: set[str] = set()

    for scenario_name, step_path, text, iid in _fired_step_annotations(entry, engine.spec):
        subject, reason = split_fragment(text)
        key = (subject, _norm(reason))
        if key not in seen:
            seen.add(key)
            causes.append(
                Cause(
                    reason_clause=reason,
                    subject_clause=subject,
                    provenance=f"scenario {scenario_name}, step {ast.step_id(step_path)}",
                    support=(entry.step_index,),
                )
            )
        _guard_follow_ups(
            engine, iid, scenario_name, step_path, query_map, follow_ups, fu_seen
        )

    for binding in tree_bindings:
        if not binding.pattern.matches_event(entry.event):
            continue
        snapshot = binding.variables(entry.snapshot_after, entry.event)
        for tree_cause in collect_causes(binding.tree, snapshot):
            subject, reason = split_fragment(tree_cause.text)
            key = (subject, _norm(reason))
            if key in seen:
                continue
            seen.add(key)
            causes.append(
                Cause(
                    reason_clause=reason,
                    subject_clause=subject,
                    provenance=f"tree {binding.tree.root.node_id}, node {tree_cause.node_id}",
                    support=(entry.step_index,),
                    depth=tree_cause.depth,
                )
            )
        for _node_id, event_name in active_monitored_events(binding.tree, snapshot):
            label = f"When {event_name}?"
            if label not in fu_seen:
                fu_seen.add(label)
                follow_ups.append(
                    FollowUpHandle(label=label, kind="when", payload=event_name)
                )

    if not causes:
        return Unexplainable(
            need=need,
            note=f"no annotation or causality node covers {entry.event.text()}",
        )

    subject = next((c.subject_clause for c in causes if c.subject_clause), None)
    return ExplanationIR(
        kind="event",
        subject_clause=subject or _humanize_message(entry.event.message),
        causes=tuple(causes),
        follow_ups=tuple(follow_ups),
        step_index=entry.step_index,
    )


def _fired_step_annotations(
    entry: HistoryEntry, spec: ast.ScenarioSpec
) -> list[tuple[str, tuple[int, ...], str, int]]:
    """(scenario, step path, annotation, instance id) for steps traversed here.

    Resolved against the given spec so reloaded models apply retroactively.
    """
    out = []
    for transition in entry.transitions:
        scenario = spec.scenario_named(transition.scenario)
        if scenario is None:
            continue
        for step_text in transition.steps:
            path = ast.parse_step_id(step_text)
            step = ast.step_at(scenario, path)
            if step is not None and step.annotation:
                out.append((scenario.name, path, step.annotation, transition.iid))
    return out


def _guard_follow_ups(
    engine: Engine,
    iid: int,
    scenario_name: str,
    step_path: tuple[int, ...],
    query_map: Mapping[str, QuerySpec],
    follow_ups: list[FollowUpHandle],
    seen: set[str],
) -> None:
    """One whycond handle per top-level conjunct of each governing guard."""
    scenario = engine.spec.scenario_named(scenario_name)
    if scenario is None:
        return
    instance = engine.instance(iid)
    bindings = instance.bindings if instance is not None else {}
    for depth in range(1, len(step_path)):
        alt = ast.step_at(scenario, step_path[:depth])
        if not isinstance(alt, ast.AlternativeStep):
            continue
        guard = substitute(alt.guard, bindings)
        parts = guard.operands if isinstance(guard, And) else (guard,)
        for part in parts:
            text = to_text(part)
            if text in seen:
                continue
            seen.add(text)
            label = _question_for_condition(part, query_map) or f"Why {text}?"
            follow_ups.append(FollowUpHandle(label=label, kind="whycond", payload=text))


def _question_for_condition(
    condition: Expr, query_map: Mapping[str, QuerySpec]
) -> str | None:
    for question, spec in query_map.items():
        if spec.kind == "whycond" and spec.condition == condition:
            return question
    return None


def _norm(clause: str) -> str:
    return clause.rstrip(".").strip().lower()


def _humanize_message(message: str) -> str:
    name = message.split(".")[-1]
    words: list[str] = []
    current = ""
    for ch in name:
        if ch.isupper() and current:
            words.append(current)
            current = ch.lower()
        else:
            current += ch.lower() if ch.isupper() else ch
    if current:
        words.append(current)
    return " ".join(words)


# -- condition targets ---------------------------------------------------------


def trace_condition_flip(engine: Engine, condition: Expr) -> FlipResult | NoFlip:
    """Latest history event that turned the condition from false to true.

    Raises ConditionNotHolding when the condition is false in the newest
    snapshot; returns NoFlip when it has held since state 0.
    """
    history = engine.history()
    latest = history[-1].snapshot_after if history else engine.initial_snapshot
    if not _holds(condition, latest):
        raise ConditionNotHolding(to_text(condition))
    for entry in reversed(history):
        after = _holds(condition, entry.snapshot_after)
        before = _holds(condition, engine.snapshot_before(entry.step_index))
        if after and not before:
            return FlipResult(
                event=entry.event,
                annotations=tuple(a.text for a in entry.annotations),
                step_index=entry.step_index,
            )
    return NoFlip(initially_true=True)


def _holds(condition: Expr, world: ObjectSystem) -> bool:
    value = eval_expr(condition, WorldScope(world))
    if not isinstance(value, bool):
        raise ConditionNotHolding(f"condition is not boolean: {to_text(condition)}")
    return value


def _build_for_condition(
    need: ExplanationNeed, target: ConditionTarget, engine: Engine
) -> ExplanationIR | Unexplainable:
    result = trace_condition_flip(engine, target.condition)
    condition_text = to_text(target.condition)
    if isinstance(result, NoFlip):
        return ExplanationIR(
            kind="condition",
            subject_clause=condition_text,
            causes=(
                Cause(
                    reason_clause="it has held since the initial state",
                    subject_clause=None,
                    provenance="history state 0",
                    support=(0,),
                ),
            ),
            condition_text=condition_text,
            initially_true=True,
        )
    if not result.annotations:
        return Unexplainable(
            need=need,
            note=f"flip event {result.event.text()} carries no annotation",
        )
    causes = tuple(
        Cause(
            reason_clause=text,
            subject_clause=None,
            provenance=f"flip event at step {result.step_index}",
            support=(result.step_index,),
        )
        for text in result.annotations
    )
    return ExplanationIR(
        kind="condition",
        subject_clause=condition_text,
        causes=causes,
        condition_text=condition_text,
        flip_event=result.event,
    )


# -- future targets --------------------------------------------------------------


def lookahead_query(
    engine: Engine,
    target: ast.MessagePattern,
    env_alphabet: Sequence[EnvMacro],
    horizon: int,
) -> LookaheadAnswer | Unknown:
    """Minimal number of environment steps until the target is executable.

    Breadth-first search over forked engines: each ply injects one alphabet
    entry and runs to quiescence; the target is reached when it matches an
    executed event or a member of the candidate set. `Unknown` is the
    bounded answer past the horizon.
    """
    if any(target.matches_event(e) for e in engine.executable_events()):
        return LookaheadAnswer(steps=0, witness_events=(), witness_labels=())

    frontier: list[tuple[Engine, tuple[EnvMacro, ...]]] = [(engine, ())]
    for depth in range(1, horizon + 1):
        next_frontier: list[tuple[Engine, tuple[EnvMacro, ...]]] = []
        for base, prefix in frontier:
            for macro in env_alphabet:
                fork = base.fork()
                hit = False
                dead = False
                for event in macro.events:
                    fork.inject_environment_event(event)
                    if target.matches_event(event):
                        hit = True
                try:
                    executed = fork.run_to_quiescence()
                except ViolationError as exc:
                    executed = exc.executed
                    dead = True
                if any(target.matches_event(e) for e in executed):
                    hit = True
                if not hit and any(
                    target.matches_event(e) for e in fork.executable_events()
                ):
                    hit = True
                if hit:
                    witness = prefix + (macro,)
                    return LookaheadAnswer(
                        steps=depth,
                        witness_events=tuple(
                            e for m in witness for e in m.events
                        ),
                        witness_labels=tuple(m.name for m in witness),
                    )
                if not dead:
                    next_frontier.append((fork, prefix + (macro,)))
        frontier = next_frontier
    return Unknown(horizon=horizon)


def _build_for_future(
    target: FutureTarget, engine: Engine, env_alphabet: Sequence[EnvMacro]
) -> ExplanationIR:
    answer = lookahead_query(engine, target.pattern, env_alphabet, target.horizon)
    subject = target.pattern.text()
    if isinstance(answer, Unknown):
        return ExplanationIR(
            kind="future",
            subject_clause=subject,
            causes=(
                Cause(
                    reason_clause=(
                        f"no environment sequence within {answer.horizon} steps makes it executable"
                    ),
                    subject_clause=None,
                    provenance=f"look-ahead horizon {answer.horizon}",
                ),
            ),
            steps=None,
            horizon=target.horizon,
        )
    return ExplanationIR(
        kind="future",
        subject_clause=subject,
        causes=(
            Cause(
                reason_clause=(
                    "it is executable now"
                    if answer.steps == 0
                    else f"it becomes executable after {answer.steps} environment steps"
                ),
                subject_clause=None,
                provenance="look-ahead",
            ),
        ),
        steps=answer.steps,
        witness_events=answer.witness_events,
        witness_labels=answer.witness_labels,
        horizon=target.horizon,
    )
