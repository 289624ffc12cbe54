"""AST for the scenario specification language.

A specification is an ordered sequence of guarantee/assumption scenarios.
Scenario bodies mix message steps and guarded alternative blocks; forbidden
and interrupt constraints attach either to the whole scenario or to an
alternative block. Explanation annotations (`// @EX: ...`) are first-class
attachments on the step they precede.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

from .exprs import Expr

GUARANTEE = "guarantee"
ASSUMPTION = "assumption"

URGENCY_NONE = "none"
URGENCY_REQUESTED = "requested"
URGENCY_COMMITTED = "committed"

FORBIDDEN = "forbidden"
INTERRUPT = "interrupt"


@dataclass(frozen=True)
class SourcePos:
    line: int
    col: int


@dataclass(frozen=True)
class MessageStep:
    sender: str
    receiver_path: tuple[str, ...]
    message: str
    args: tuple[Expr, ...] = ()
    strict: bool = False
    urgency: str = URGENCY_NONE
    annotation: str | None = None
    pos: SourcePos | None = field(default=None, compare=False, repr=False)

    @property
    def qualified_message(self) -> str:
        """Message name qualified by the collection path below the receiver.

        `oc -> oc.registeredPriorityVehicles.add(car)` has receiver `oc` and
        qualified message `registeredPriorityVehicles.add`.
        """
        return ".".join(self.receiver_path[1:] + (self.message,))

    @property
    def receiver(self) -> str:
        return self.receiver_path[0]


@dataclass(frozen=True)
class Constraint:
    kind: str  # forbidden | interrupt
    sender: str
    receiver_path: tuple[str, ...]
    message: str
    args: tuple[Expr, ...] = ()
    pos: SourcePos | None = field(default=None, compare=False, repr=False)

    @property
    def qualified_message(self) -> str:
        return ".".join(self.receiver_path[1:] + (self.message,))

    @property
    def receiver(self) -> str:
        return self.receiver_path[0]


@dataclass(frozen=True)
class AlternativeStep:
    guard: Expr
    body: tuple["Step", ...]
    constraints: tuple[Constraint, ...] = ()
    annotation: str | None = None
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


Step = Union[MessageStep, AlternativeStep]


@dataclass(frozen=True)
class Scenario:
    kind: str  # guarantee | assumption
    name: str
    bindings: tuple[tuple[str, tuple[str, ...]], ...]
    body: tuple[Step, ...]
    constraints: tuple[Constraint, ...] = ()
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ScenarioSpec:
    scenarios: tuple[Scenario, ...]

    def scenario_named(self, name: str) -> Scenario | None:
        for scenario in self.scenarios:
            if scenario.name == name:
                return scenario
        return None

    def index_of(self, name: str) -> int | None:
        for i, scenario in enumerate(self.scenarios):
            if scenario.name == name:
                return i
        return None


def step_at(scenario: Scenario, path: tuple[int, ...]) -> Step | None:
    """Step addressed by an index path into (possibly nested) bodies.

    Returns None for the end position of any level.
    """
    body: tuple[Step, ...] = scenario.body
    step: Step | None = None
    for depth, index in enumerate(path):
        if index >= len(body):
            return None
        step = body[index]
        if depth < len(path) - 1:
            if not isinstance(step, AlternativeStep):
                return None
            body = step.body
    return step


def step_id(path: tuple[int, ...]) -> str:
    return ".".join(str(i) for i in path)


def parse_step_id(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split("."))


def iter_steps(scenario: Scenario) -> Iterator[tuple[tuple[int, ...], Step]]:
    """Depth-first enumeration of every step with its index path."""
    yield from _iter_body(scenario.body, ())


def _iter_body(
    body: tuple[Step, ...], prefix: tuple[int, ...]
) -> Iterator[tuple[tuple[int, ...], Step]]:
    for i, step in enumerate(body):
        path = prefix + (i,)
        yield path, step
        if isinstance(step, AlternativeStep):
            yield from _iter_body(step.body, path)


def iter_message_steps(scenario: Scenario) -> Iterator[tuple[tuple[int, ...], MessageStep]]:
    for path, step in iter_steps(scenario):
        if isinstance(step, MessageStep):
            yield path, step


@dataclass(frozen=True)
class MessagePattern:
    """Wildcard-capable event pattern: sender, receiver, message, args.

    `args` of None matches any argument list; a tuple matches element-wise
    with "*" as the argument wildcard.
    """

    sender: str = "*"
    receiver: str = "*"
    message: str = "*"
    args: tuple[object, ...] | None = None

    def matches(self, sender: str, receiver: str, message: str, args: tuple) -> bool:
        if self.sender != "*" and self.sender != sender:
            return False
        if self.receiver != "*" and self.receiver != receiver:
            return False
        if self.message != "*" and self.message != message:
            return False
        if self.args is None:
            return True
        if len(self.args) != len(args):
            return False
        return all(p == "*" or p == a for p, a in zip(self.args, args))

    def matches_event(self, event) -> bool:
        return self.matches(event.sender, event.receiver, event.message, tuple(event.args))

    def text(self) -> str:
        args = "" if self.args is None else "(" + ", ".join(str(a) for a in self.args) + ")"
        return f"{self.sender} -> {self.receiver}.{self.message}{args}"
