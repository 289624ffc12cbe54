"""Static checks of a parsed specification against an object-world schema.

Diagnostics cover unknown message names, unknown attributes/collections in
guards, and roles that can never be bound (a role must be introduced by a
bindings clause or by the first step of its scenario). An empty diagnostic
list means the specification is well-formed for the given schema.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ast
from .exprs import Contains, Expr, InstanceOf, IsEmpty, referenced_paths

COLLECTION_OPS = ("add", "remove")


@dataclass(frozen=True)
class ClassSchema:
    parent: str | None = None
    attributes: frozenset[str] = frozenset()
    collections: frozenset[str] = frozenset()
    messages: frozenset[str] = frozenset()


@dataclass(frozen=True)
class ObjectSchema:
    classes: dict[str, ClassSchema] = field(default_factory=dict)
    objects: dict[str, str] = field(default_factory=dict)  # object id -> class name

    @property
    def checks_messages(self) -> bool:
        return any(c.messages for c in self.classes.values())

    def all_attributes(self) -> frozenset[str]:
        out: set[str] = set()
        for cls in self.classes.values():
            out |= cls.attributes
        return frozenset(out)

    def all_collections(self) -> frozenset[str]:
        out: set[str] = set()
        for cls in self.classes.values():
            out |= cls.collections
        return frozenset(out)

    def all_messages(self) -> frozenset[str]:
        out: set[str] = set()
        for cls in self.classes.values():
            out |= cls.messages
        return frozenset(out)


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    line: int = 0
    col: int = 0

    def to_line(self, filename: str = "<spec>") -> str:
        return f"{filename}:{self.line}:{self.col}: {self.severity}: {self.message}"


def validate(spec: ast.ScenarioSpec, schema: ObjectSchema) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    for scenario in spec.scenarios:
        _validate_scenario(scenario, schema, out)
    return out


def _validate_scenario(
    scenario: ast.Scenario, schema: ObjectSchema, out: list[Diagnostic]
) -> None:
    pos = scenario.pos or ast.SourcePos(0, 0)

    # roles introduced by bindings or unified from the first step
    bound: set[str] = {role for role, _ in scenario.bindings}
    if scenario.body and isinstance(scenario.body[0], ast.MessageStep):
        first = scenario.body[0]
        bound.add(first.sender)
        bound.add(first.receiver)
    known_heads = bound | set(schema.objects)

    for role, path in scenario.bindings:
        if path[0] not in schema.objects:
            out.append(
                Diagnostic(
                    "error",
                    f"{scenario.name}: binding '{role}' starts at unknown object '{path[0]}'",
                    pos.line,
                    pos.col,
                )
            )
        for segment in path[1:]:
            if segment not in schema.all_attributes():
                out.append(
                    Diagnostic(
                        "error",
                        f"{scenario.name}: binding '{role}' uses unknown attribute '{segment}'",
                        pos.line,
                        pos.col,
                    )
                )

    for path, step in ast.iter_steps(scenario):
        if isinstance(step, ast.MessageStep):
            _check_role(scenario, step.sender, known_heads, step.pos, out)
            _check_role(scenario, step.receiver, known_heads, step.pos, out)
            _check_message(scenario, step.receiver_path, step.message, schema, step.pos, out)
            for arg in step.args:
                _check_expr(scenario, arg, known_heads, schema, step.pos, out)
        else:
            _check_expr(scenario, step.guard, known_heads, schema, step.pos, out)
            for constraint in step.constraints:
                _check_message(
                    scenario, constraint.receiver_path, constraint.message, schema,
                    constraint.pos, out,
                )
    for constraint in scenario.constraints:
        _check_message(
            scenario, constraint.receiver_path, constraint.message, schema,
            constraint.pos, out,
        )


def _check_role(
    scenario: ast.Scenario,
    role: str,
    known: set[str],
    pos: ast.SourcePos | None,
    out: list[Diagnostic],
) -> None:
    if role in known:
        return
    where = pos or ast.SourcePos(0, 0)
    out.append(
        Diagnostic(
            "error",
            f"{scenario.name}: role '{role}' is never bound "
            "(not in bindings or the first step)",
            where.line,
            where.col,
        )
    )


def _check_message(
    scenario: ast.Scenario,
    receiver_path: tuple[str, ...],
    message: str,
    schema: ObjectSchema,
    pos: ast.SourcePos | None,
    out: list[Diagnostic],
) -> None:
    where = pos or ast.SourcePos(0, 0)
    if len(receiver_path) > 1:
        # collection-addressed message: selector must be a known collection
        selector = receiver_path[-1]
        if selector not in schema.all_collections():
            out.append(
                Diagnostic(
                    "error",
                    f"{scenario.name}: unknown collection '{selector}'",
                    where.line,
                    where.col,
                )
            )
        if message not in COLLECTION_OPS:
            out.append(
                Diagnostic(
                    "error",
                    f"{scenario.name}: unknown collection operation '{message}'"
                    f" (expected one of {', '.join(COLLECTION_OPS)})",
                    where.line,
                    where.col,
                )
            )
        return
    if schema.checks_messages and message not in schema.all_messages():
        out.append(
            Diagnostic(
                "error",
                f"{scenario.name}: unknown message name '{message}'",
                where.line,
                where.col,
            )
        )


def _check_expr(
    scenario: ast.Scenario,
    expr: Expr,
    known_heads: set[str],
    schema: ObjectSchema,
    pos: ast.SourcePos | None,
    out: list[Diagnostic],
) -> None:
    where = pos or ast.SourcePos(0, 0)
    names = schema.all_attributes() | schema.all_collections()
    for path in referenced_paths(expr):
        if len(path.segments) > 1 and path.head not in known_heads:
            out.append(
                Diagnostic(
                    "error",
                    f"{scenario.name}: role '{path.head}' is never bound "
                    "(not in bindings or the first step)",
                    where.line,
                    where.col,
                )
            )
        for segment in path.segments[1:]:
            if segment not in names:
                out.append(
                    Diagnostic(
                        "error",
                        f"{scenario.name}: unknown attribute '{segment}'",
                        where.line,
                        where.col,
                    )
                )
    for node in _predicate_nodes(expr):
        target = node.target.segments[-1]
        if target not in schema.all_collections():
            # already reported as unknown attribute above only if missing from
            # both sets; flag collection misuse explicitly
            if target in schema.all_attributes():
                out.append(
                    Diagnostic(
                        "error",
                        f"{scenario.name}: '{target}' is an attribute, not a collection",
                        where.line,
                        where.col,
                    )
                )
    for cls in _instance_classes(expr):
        if cls not in schema.classes:
            out.append(
                Diagnostic(
                    "error",
                    f"{scenario.name}: unknown class '{cls}'",
                    where.line,
                    where.col,
                )
            )


def _predicate_nodes(expr: Expr):
    from .exprs import And, Eq, Not, Or

    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, (IsEmpty, Contains)):
            yield node
            if isinstance(node, Contains):
                stack.append(node.item)
        elif isinstance(node, Not):
            stack.append(node.operand)
        elif isinstance(node, (And, Or)):
            stack.extend(node.operands)
        elif isinstance(node, Eq):
            stack.append(node.left)
            stack.append(node.right)


def _instance_classes(expr: Expr):
    from .exprs import And, Eq, Not, Or

    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, InstanceOf):
            yield node.class_name
        elif isinstance(node, Not):
            stack.append(node.operand)
        elif isinstance(node, (And, Or)):
            stack.extend(node.operands)
        elif isinstance(node, Eq):
            stack.append(node.left)
            stack.append(node.right)
        elif isinstance(node, Contains):
            stack.append(node.item)
