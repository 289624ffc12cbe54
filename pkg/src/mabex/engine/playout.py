"""Play-out execution of scenario specifications.

An engine holds the live object world, the set of scenario instances and an
append-only history. Environment events arrive via
:meth:`Engine.inject_environment_event`; system events are chosen by
:meth:`Engine.step_system` from the requested/committed steps at active cuts,
subject to every active forbidden constraint and to strictness.

Semantics in brief:

* An event spawns an instance of every scenario whose first message unifies
  with it, and advances every active instance whose enabled (cut) message
  unifies with it.
* When a cut reaches an alternative block its guard is evaluated once,
  against the current world; a true guard enters the block and activates the
  block's constraints for as long as the cut stays inside it.
* ``committed`` steps form candidate tier 1 and are executed before any
  ``requested`` (tier 2) candidate. Ties break deterministically by scenario
  declaration index, step position and binding object ids.
* While an instance waits at a ``strict`` step, an event that unifies with a
  different message of the same scenario body violates the instance; events
  the scenario never mentions are ignored. The candidate selection never
  picks an event that would violate strictness or match an active forbidden
  constraint.
* Side-effect messages (`x.<collection>.add/remove(y)`) mutate the named
  collection with set semantics.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

from ..sml import ast
from ..sml.exprs import EvalError, PathRef, eval_expr
from ..sml.validate import Diagnostic, validate
from .objects import ENVIRONMENT, SYSTEM, Event, ObjectSystem, WorldScope

ACTIVE = "active"
COMPLETED = "completed"
VIOLATED = "violated"
INTERRUPTED = "interrupted"

# transition kinds recorded in history entries
SPAWNED = "spawned"
ADVANCED = "advanced"
TERMINATED = "terminated"  # normal completion

MAX_RUN_STEPS = 10_000


class EngineError(Exception):
    pass


class InitError(EngineError):
    def __init__(self, message: str, diagnostics: Sequence[Diagnostic] = ()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


@dataclass
class ScenarioInstance:
    iid: int
    scenario_index: int
    bindings: dict[str, str]
    cut: tuple[int, ...]
    status: str = ACTIVE

    @property
    def is_active(self) -> bool:
        return self.status == ACTIVE


@dataclass(frozen=True)
class Transition:
    iid: int
    kind: str  # spawned | advanced | terminated | violated | interrupted
    scenario: str
    steps: tuple[str, ...] = ()  # ids of steps traversed by this transition


@dataclass(frozen=True)
class FiredAnnotation:
    scenario: str
    step: str
    text: str


@dataclass(frozen=True)
class HistoryEntry:
    step_index: int
    event: Event
    snapshot_after: ObjectSystem
    transitions: tuple[Transition, ...]
    annotations: tuple[FiredAnnotation, ...]


@dataclass(frozen=True)
class ExecutedEvent:
    event: Event
    transitions: tuple[Transition, ...]


@dataclass(frozen=True)
class Quiescent:
    pass


@dataclass(frozen=True)
class Violation:
    instance_id: int
    reason: str  # strict | forbidden
    event: Event | None = None
    transitions: tuple[Transition, ...] = ()


StepResult = ExecutedEvent | Quiescent | Violation


class ViolationError(EngineError):
    def __init__(self, violation: Violation, executed: list[Event]):
        super().__init__(f"play-out violation: {violation.reason} in instance #{violation.instance_id}")
        self.violation = violation
        self.executed = executed


@dataclass(frozen=True)
class _Candidate:
    key: tuple
    event: Event
    iid: int


class Engine:
    """Single-writer play-out engine over one specification and world."""

    def __init__(
        self,
        spec: ast.ScenarioSpec,
        world: ObjectSystem,
        reactor: Callable[[ObjectSystem, Event], None] | None = None,
    ):
        diagnostics = validate(spec, world.schema())
        if diagnostics:
            raise InitError(
                "specification does not validate against the world: "
                + "; ".join(d.message for d in diagnostics),
                diagnostics,
            )
        self.spec = spec
        self.world = world
        self.reactor = reactor
        world.check_collection_members()
        for scenario in spec.scenarios:
            self._resolve_declared_bindings(scenario)
        self.initial_snapshot = world.clone()
        self.instances: list[ScenarioInstance] = []
        self._history: list[HistoryEntry] = []
        self._next_iid = 1

    # -- public API ---------------------------------------------------------

    def inject_environment_event(self, event: Event) -> StepResult:
        if self.world.realm(event.sender) != ENVIRONMENT:
            raise EngineError(
                f"'{event.sender}' is a system object; system events are chosen by step_system"
            )
        self.world.object(event.receiver)
        return self._execute(event)

    def step_system(self) -> StepResult:
        selected, blocked = self._candidates()
        if selected:
            return self._execute(selected[0].event)
        if blocked:
            first = min(blocked, key=lambda b: b[0].key)
            return Violation(instance_id=first[0].iid, reason=first[1])
        return Quiescent()

    def run_to_quiescence(self) -> list[Event]:
        executed: list[Event] = []
        for _ in range(MAX_RUN_STEPS):
            result = self.step_system()
            if isinstance(result, ExecutedEvent):
                executed.append(result.event)
                continue
            if isinstance(result, Quiescent):
                return executed
            raise ViolationError(result, executed)
        raise EngineError(f"no quiescence within {MAX_RUN_STEPS} steps")

    def executable_events(self) -> list[Event]:
        selected, _ = self._candidates()
        return [c.event for c in selected]

    def history(self) -> tuple[HistoryEntry, ...]:
        return tuple(self._history)

    def instance(self, iid: int) -> ScenarioInstance | None:
        for inst in self.instances:
            if inst.iid == iid:
                return inst
        return None

    def snapshot_before(self, step_index: int) -> ObjectSystem:
        if step_index <= 1:
            return self.initial_snapshot
        return self._history[step_index - 2].snapshot_after

    def fork(self) -> "Engine":
        clone = object.__new__(Engine)
        clone.spec = self.spec
        clone.world = self.world.clone()
        clone.reactor = self.reactor
        clone.initial_snapshot = self.initial_snapshot
        clone.instances = [
            ScenarioInstance(
                iid=i.iid,
                scenario_index=i.scenario_index,
                bindings=dict(i.bindings),
                cut=i.cut,
                status=i.status,
            )
            for i in self.instances
        ]
        clone._history = list(self._history)
        clone._next_iid = self._next_iid
        return clone

    def pending_requested(self) -> list[tuple[int, str, str]]:
        """Requested/committed steps still waiting at active cuts (run-end report)."""
        out = []
        for inst in self.instances:
            if not inst.is_active:
                continue
            step = self._cut_step(inst)
            if step is not None and step.urgency != ast.URGENCY_NONE:
                scenario = self.spec.scenarios[inst.scenario_index]
                out.append((inst.iid, scenario.name, self._step_text(step, inst)))
        return out

    def reload_spec(self, new_spec: ast.ScenarioSpec) -> dict[str, list[int]]:
        """Swap the specification, keeping world and history.

        Active instances keep running where their scenario still exists and
        their cut still addresses a message step with the same message;
        anything else is interrupted. Returns {'kept': [...], 'interrupted': [...]}.
        """
        diagnostics = validate(new_spec, self.world.schema())
        if diagnostics:
            raise InitError(
                "reloaded specification does not validate: "
                + "; ".join(d.message for d in diagnostics),
                diagnostics,
            )
        for scenario in new_spec.scenarios:
            self._resolve_declared_bindings(scenario)

        report: dict[str, list[int]] = {"kept": [], "interrupted": []}
        old = self.spec
        for inst in self.instances:
            if not inst.is_active:
                continue
            name = old.scenarios[inst.scenario_index].name
            new_index = new_spec.index_of(name)
            keep = False
            if new_index is not None:
                old_step = ast.step_at(old.scenarios[inst.scenario_index], inst.cut)
                new_step = ast.step_at(new_spec.scenarios[new_index], inst.cut)
                keep = (
                    isinstance(old_step, ast.MessageStep)
                    and isinstance(new_step, ast.MessageStep)
                    and new_step.qualified_message == old_step.qualified_message
                )
            if keep:
                assert new_index is not None
                inst.scenario_index = new_index
                report["kept"].append(inst.iid)
            else:
                inst.status = INTERRUPTED
                report["interrupted"].append(inst.iid)
        self.spec = new_spec
        return report

    # -- event application --------------------------------------------------

    def _execute(self, event: Event) -> StepResult:
        self.world.object(event.sender)
        self.world.object(event.receiver)
        event = replace(
            event,
            origin=self.world.realm(event.sender),
            step_index=len(self._history) + 1,
        )

        self._apply_side_effect(event)
        if self.reactor is not None:
            self.reactor(self.world, event)

        transitions: list[Transition] = []
        fired: list[FiredAnnotation] = []
        violation: Violation | None = None

        # phase 1: decide per active instance against the pre-event cuts
        decisions: list[tuple[ScenarioInstance, str, dict[str, str] | None]] = []
        for inst in self.instances:
            if not inst.is_active:
                continue
            decisions.append(self._decide(inst, event))

        # phase 2: apply
        for inst, action, new_bindings in decisions:
            scenario = self.spec.scenarios[inst.scenario_index]
            if action == "advance":
                assert new_bindings is not None
                self._advance(inst, new_bindings, transitions, fired)
            elif action == "interrupt":
                inst.status = INTERRUPTED
                transitions.append(Transition(inst.iid, INTERRUPTED, scenario.name))
            elif action in ("forbidden", "strict"):
                inst.status = VIOLATED
                transitions.append(Transition(inst.iid, VIOLATED, scenario.name))
                if violation is None:
                    violation = Violation(instance_id=inst.iid, reason=action)

        # phase 3: spawn fresh instances
        for index, scenario in enumerate(self.spec.scenarios):
            self._try_spawn(index, scenario, event, transitions, fired)

        entry = HistoryEntry(
            step_index=event.step_index or 0,
            event=event,
            snapshot_after=self.world.clone(),
            transitions=tuple(transitions),
            annotations=tuple(fired),
        )
        self._history.append(entry)

        if violation is not None:
            return replace(violation, event=event, transitions=tuple(transitions))
        return ExecutedEvent(event=event, transitions=tuple(transitions))

    def _decide(
        self, inst: ScenarioInstance, event: Event
    ) -> tuple[ScenarioInstance, str, dict[str, str] | None]:
        step = self._cut_step(inst)
        if isinstance(step, ast.MessageStep):
            unified = self._unify(step, event, inst.bindings)
            if unified is not None:
                return inst, "advance", unified
        for constraint in self._active_constraints(inst):
            if constraint.kind == ast.INTERRUPT and self._constraint_matches(
                constraint, event, inst.bindings
            ):
                return inst, "interrupt", None
        for constraint in self._active_constraints(inst):
            if constraint.kind == ast.FORBIDDEN and self._constraint_matches(
                constraint, event, inst.bindings
            ):
                return inst, "forbidden", None
        if self._strict_violation(inst, event):
            return inst, "strict", None
        return inst, "ignore", None

    def _apply_side_effect(self, event: Event) -> None:
        if "." not in event.message:
            return
        parts = event.message.split(".")
        if len(parts) != 2:
            raise EngineError(f"unsupported nested collection message '{event.message}'")
        collection, op = parts
        if len(event.args) != 1 or not isinstance(event.args[0], str):
            raise EngineError(f"collection operation '{event.message}' takes one object id")
        self.world.apply_collection_op(event.receiver, collection, op, event.args[0])

    def _advance(
        self,
        inst: ScenarioInstance,
        new_bindings: dict[str, str],
        transitions: list[Transition],
        fired: list[FiredAnnotation],
    ) -> None:
        scenario = self.spec.scenarios[inst.scenario_index]
        inst.bindings = new_bindings
        matched_path = inst.cut
        step = ast.step_at(scenario, matched_path)
        assert isinstance(step, ast.MessageStep)
        traversed = [ast.step_id(matched_path)]
        if step.annotation is not None:
            fired.append(FiredAnnotation(scenario.name, ast.step_id(matched_path), step.annotation))
        inst.cut = matched_path[:-1] + (matched_path[-1] + 1,)
        self._normalize(inst, traversed, fired)
        transitions.append(Transition(inst.iid, ADVANCED, scenario.name, tuple(traversed)))
        if inst.status == COMPLETED:
            transitions.append(Transition(inst.iid, TERMINATED, scenario.name))

    def _try_spawn(
        self,
        index: int,
        scenario: ast.Scenario,
        event: Event,
        transitions: list[Transition],
        fired: list[FiredAnnotation],
    ) -> None:
        if not scenario.body or not isinstance(scenario.body[0], ast.MessageStep):
            return
        first = scenario.body[0]
        base = self._resolve_declared_bindings(scenario)
        unified = self._unify(first, event, base)
        if unified is None:
            return
        inst = ScenarioInstance(
            iid=self._next_iid,
            scenario_index=index,
            bindings=unified,
            cut=(1,),
        )
        self._next_iid += 1
        self.instances.append(inst)
        traversed = ["0"]
        if first.annotation is not None:
            fired.append(FiredAnnotation(scenario.name, "0", first.annotation))
        self._normalize(inst, traversed, fired)
        transitions.append(Transition(inst.iid, SPAWNED, scenario.name, tuple(traversed)))
        if inst.status == COMPLETED:
            transitions.append(Transition(inst.iid, TERMINATED, scenario.name))

    def _normalize(
        self,
        inst: ScenarioInstance,
        traversed: list[str],
        fired: list[FiredAnnotation],
    ) -> None:
        """Resolve the cut to the next enabled message step (or completion).

        Enters alternatives whose guard holds (evaluated once, now), skips the
        others, and pops out of finished blocks.
        """
        scenario = self.spec.scenarios[inst.scenario_index]
        while True:
            body = _body_at(scenario, inst.cut[:-1])
            if inst.cut[-1] >= len(body):
                if len(inst.cut) == 1:
                    inst.status = COMPLETED
                    return
                alt_path = inst.cut[:-1]
                inst.cut = alt_path[:-1] + (alt_path[-1] + 1,)
                continue
            step = ast.step_at(scenario, inst.cut)
            if isinstance(step, ast.AlternativeStep):
                scope = WorldScope(self.world, inst.bindings)
                guard = eval_expr(step.guard, scope)
                if not isinstance(guard, bool):
                    raise EngineError(
                        f"guard of {scenario.name} did not evaluate to a boolean"
                    )
                if guard:
                    traversed.append(ast.step_id(inst.cut))
                    if step.annotation is not None:
                        fired.append(
                            FiredAnnotation(scenario.name, ast.step_id(inst.cut), step.annotation)
                        )
                    inst.cut = inst.cut + (0,)
                else:
                    inst.cut = inst.cut[:-1] + (inst.cut[-1] + 1,)
                continue
            return

    # -- matching -----------------------------------------------------------

    def _cut_step(self, inst: ScenarioInstance) -> ast.MessageStep | None:
        step = ast.step_at(self.spec.scenarios[inst.scenario_index], inst.cut)
        if isinstance(step, ast.MessageStep):
            return step
        return None

    def _unify(
        self, step: ast.MessageStep, event: Event, bindings: dict[str, str]
    ) -> dict[str, str] | None:
        if step.qualified_message != event.message:
            return None
        if len(step.args) != len(event.args):
            return None
        new = dict(bindings)
        if not self._unify_role(step.sender, event.sender, new):
            return None
        if not self._unify_role(step.receiver, event.receiver, new):
            return None
        for expr, value in zip(step.args, event.args):
            if isinstance(expr, PathRef) and len(expr.segments) == 1:
                name = expr.head
                if name in new:
                    if new[name] != value:
                        return None
                elif name in self.world.objects:
                    if name != value:
                        return None
                elif isinstance(value, str):
                    new[name] = value
                else:
                    return None
                continue
            try:
                if eval_expr(expr, WorldScope(self.world, new)) != value:
                    return None
            except EvalError:
                return None
        return new

    def _unify_role(self, role: str, oid: str, bindings: dict[str, str]) -> bool:
        if role in bindings:
            return bindings[role] == oid
        if role in self.world.objects:
            return role == oid
        bindings[role] = oid
        return True

    def _constraint_matches(
        self, constraint: ast.Constraint, event: Event, bindings: dict[str, str]
    ) -> bool:
        """Unbound constraint roles act as wildcards; args must match exactly."""
        if constraint.qualified_message != event.message:
            return False
        for role, actual in ((constraint.sender, event.sender), (constraint.receiver, event.receiver)):
            expected = bindings.get(role, role if role in self.world.objects else None)
            if expected is not None and expected != actual:
                return False
        if len(constraint.args) != len(event.args):
            return False
        for expr, value in zip(constraint.args, event.args):
            if isinstance(expr, PathRef) and len(expr.segments) == 1:
                name = expr.head
                expected = bindings.get(name, name if name in self.world.objects else None)
                if expected is not None and expected != value:
                    return False
                continue
            try:
                if eval_expr(expr, WorldScope(self.world, bindings)) != value:
                    return False
            except EvalError:
                return False
        return True

    def _active_constraints(self, inst: ScenarioInstance) -> Iterable[ast.Constraint]:
        scenario = self.spec.scenarios[inst.scenario_index]
        yield from scenario.constraints
        for depth in range(1, len(inst.cut)):
            step = ast.step_at(scenario, inst.cut[:depth])
            if isinstance(step, ast.AlternativeStep):
                yield from step.constraints

    def _strict_violation(self, inst: ScenarioInstance, event: Event) -> bool:
        step = self._cut_step(inst)
        if step is None or not step.strict:
            return False
        if self._unify(step, event, inst.bindings) is not None:
            return False
        scenario = self.spec.scenarios[inst.scenario_index]
        for path, other in ast.iter_message_steps(scenario):
            if path == inst.cut:
                continue
            if self._unify(other, event, inst.bindings) is not None:
                return True
        return False

    # -- candidate selection -------------------------------------------------

    def _raw_candidates(self) -> list[_Candidate]:
        out: list[_Candidate] = []
        for inst in self.instances:
            if not inst.is_active:
                continue
            # only guarantee scenarios oblige the system; assumptions describe
            # the environment and never produce system candidates
            if self.spec.scenarios[inst.scenario_index].kind != ast.GUARANTEE:
                continue
            step = self._cut_step(inst)
            if step is None or step.urgency == ast.URGENCY_NONE:
                continue
            event = self._concretize(step, inst)
            if event is None or self.world.realm(event.sender) != SYSTEM:
                continue
            tier = 0 if step.urgency == ast.URGENCY_COMMITTED else 1
            key = (
                tier,
                inst.scenario_index,
                inst.cut,
                tuple(sorted(inst.bindings.values())),
            )
            out.append(_Candidate(key=key, event=event, iid=inst.iid))
        # the same event may be requested by several instances; keep one
        by_event: dict[tuple, _Candidate] = {}
        for cand in out:
            ident = (cand.event.sender, cand.event.receiver, cand.event.message, cand.event.args)
            kept = by_event.get(ident)
            if kept is None or cand.key < kept.key:
                by_event[ident] = cand
        return sorted(by_event.values(), key=lambda c: c.key)

    def _concretize(self, step: ast.MessageStep, inst: ScenarioInstance) -> Event | None:
        sender = inst.bindings.get(
            step.sender, step.sender if step.sender in self.world.objects else None
        )
        receiver = inst.bindings.get(
            step.receiver, step.receiver if step.receiver in self.world.objects else None
        )
        if sender is None or receiver is None:
            return None
        args: list[object] = []
        scope = WorldScope(self.world, inst.bindings)
        for expr in step.args:
            if isinstance(expr, PathRef) and len(expr.segments) == 1:
                name = expr.head
                value = inst.bindings.get(name, name if name in self.world.objects else None)
                if value is None:
                    return None
                args.append(value)
                continue
            try:
                args.append(eval_expr(expr, scope))
            except EvalError:
                return None
        return Event(
            sender=sender,
            receiver=receiver,
            message=step.qualified_message,
            args=tuple(args),
            origin=SYSTEM,
        )

    def _candidates(self) -> tuple[list[_Candidate], list[tuple[_Candidate, str]]]:
        selected: list[_Candidate] = []
        blocked: list[tuple[_Candidate, str]] = []
        for cand in self._raw_candidates():
            if self._forbidden_by_any(cand.event):
                blocked.append((cand, "forbidden"))
                continue
            if self._would_violate_strict(cand.event):
                blocked.append((cand, "strict"))
                continue
            selected.append(cand)
        return selected, blocked

    def _forbidden_by_any(self, event: Event) -> bool:
        for inst in self.instances:
            if not inst.is_active:
                continue
            for constraint in self._active_constraints(inst):
                if constraint.kind == ast.FORBIDDEN and self._constraint_matches(
                    constraint, event, inst.bindings
                ):
                    return True
        return False

    def _would_violate_strict(self, event: Event) -> bool:
        return any(
            self._strict_violation(inst, event)
            for inst in self.instances
            if inst.is_active
        )

    # -- misc -----------------------------------------------------------------

    def _resolve_declared_bindings(self, scenario: ast.Scenario) -> dict[str, str]:
        out: dict[str, str] = {}
        for role, path in scenario.bindings:
            value: object = path[0]
            if value not in self.world.objects:
                raise InitError(
                    f"{scenario.name}: binding '{role}' starts at unknown object '{path[0]}'"
                )
            for segment in path[1:]:
                obj = self.world.object(str(value))
                if segment not in obj.attributes:
                    raise InitError(
                        f"{scenario.name}: binding '{role}' cannot resolve "
                        f"'{segment}' on '{obj.oid}'"
                    )
                value = obj.attributes[segment]
            if not isinstance(value, str) or value not in self.world.objects:
                raise InitError(
                    f"{scenario.name}: binding '{role}' does not denote an object"
                )
            out[role] = value
        return out

    def _step_text(self, step: ast.MessageStep, inst: ScenarioInstance) -> str:
        sender = inst.bindings.get(step.sender, step.sender)
        receiver = inst.bindings.get(step.receiver, step.receiver)
        return f"{sender} -> {receiver}.{step.qualified_message}()"


def _body_at(scenario: ast.Scenario, prefix: tuple[int, ...]) -> tuple[ast.Step, ...]:
    body: tuple[ast.Step, ...] = scenario.body
    for index in prefix:
        step = body[index]
        assert isinstance(step, ast.AlternativeStep)
        body = step.body
    return body
