"""Scenario specification language: parsing, validation, pretty-printing."""

from .ast import (
    AlternativeStep,
    Constraint,
    MessagePattern,
    MessageStep,
    Scenario,
    ScenarioSpec,
    Step,
    iter_steps,
    step_at,
    step_id,
)
from .exprs import EvalError, Expr, eval_expr, to_text
from .lexer import LexError, tokenize
from .parser import ParseError, parse_expression, parse_pattern, parse_specification
from .printer import pretty_print
from .validate import ClassSchema, Diagnostic, ObjectSchema, validate

__all__ = [
    "AlternativeStep",
    "ClassSchema",
    "Constraint",
    "Diagnostic",
    "EvalError",
    "Expr",
    "LexError",
    "MessagePattern",
    "MessageStep",
    "ObjectSchema",
    "ParseError",
    "Scenario",
    "ScenarioSpec",
    "Step",
    "eval_expr",
    "iter_steps",
    "parse_expression",
    "parse_pattern",
    "parse_specification",
    "pretty_print",
    "step_at",
    "step_id",
    "to_text",
    "tokenize",
    "validate",
]
