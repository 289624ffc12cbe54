"""Canonical pretty-printer; its output reparses to a structurally equal AST."""

from __future__ import annotations

from . import ast
from .exprs import to_text

_INDENT = "    "


def pretty_print(spec: ast.ScenarioSpec, include_annotations: bool = True) -> str:
    chunks = [_print_scenario(s, include_annotations) for s in spec.scenarios]
    return "\n".join(chunks)


def _print_scenario(scenario: ast.Scenario, annotations: bool) -> str:
    lines: list[str] = []
    header = f"{scenario.kind} scenario {scenario.name}"
    if scenario.bindings:
        bound = ", ".join(f"{role} = {'.'.join(path)}" for role, path in scenario.bindings)
        header += f" bindings [{bound}]"
    lines.append(header + " {")
    _print_body(scenario.body, 1, lines, annotations)
    if scenario.constraints:
        lines.append("} constraints [")
        for constraint in scenario.constraints:
            lines.append(_INDENT + _constraint_text(constraint))
        lines.append("]")
    else:
        lines.append("}")
    return "\n".join(lines) + "\n"


def _print_body(
    body: tuple[ast.Step, ...], depth: int, lines: list[str], annotations: bool
) -> None:
    pad = _INDENT * depth
    for step in body:
        if annotations and step.annotation is not None:
            lines.append(f"{pad}// @EX: {step.annotation}")
        if isinstance(step, ast.MessageStep):
            lines.append(pad + _message_text(step))
        else:
            lines.append(f"{pad}alternative [{to_text(step.guard)}] {{")
            _print_body(step.body, depth + 1, lines, annotations)
            if step.constraints:
                lines.append(f"{pad}}} constraints [")
                for constraint in step.constraints:
                    lines.append(pad + _INDENT + _constraint_text(constraint))
                lines.append(f"{pad}]")
            else:
                lines.append(pad + "}")


def _message_text(step: ast.MessageStep) -> str:
    words = []
    if step.strict:
        words.append("strict")
    if step.urgency != ast.URGENCY_NONE:
        words.append(step.urgency)
    call = ".".join(step.receiver_path + (step.message,))
    args = ", ".join(to_text(a) for a in step.args)
    words.append(f"{step.sender} -> {call}({args})")
    return " ".join(words)


def _constraint_text(constraint: ast.Constraint) -> str:
    call = ".".join(constraint.receiver_path + (constraint.message,))
    args = ", ".join(to_text(a) for a in constraint.args)
    return f"{constraint.kind} {constraint.sender} -> {call}({args})"
