"""Boolean expression trees shared by scenario guards, trigger rules and queries.

The expression language is deliberately small: boolean connectives, equality,
attribute paths, the collection predicates ``isEmpty()`` / ``contains(x)``,
the class test ``instanceOf``, and literals. Evaluation is total: an unknown
object, attribute or collection raises :class:`EvalError` instead of silently
evaluating to false.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence


class EvalError(Exception):
    """Raised when an expression cannot be evaluated against a scope."""


class Scope(Protocol):
    """Name resolution interface expressions are evaluated against."""

    def resolve_name(self, name: str) -> object: ...

    def attribute(self, oid: str, name: str) -> object: ...

    def collection(self, oid: str, name: str) -> Sequence[object]: ...

    def is_instance(self, oid: str, class_name: str) -> bool: ...


@dataclass(frozen=True)
class PathRef:
    """Dotted name: a role/object head followed by attribute segments."""

    segments: tuple[str, ...]

    @property
    def head(self) -> str:
        return self.segments[0]


@dataclass(frozen=True)
class Lit:
    value: object


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class And:
    operands: tuple["Expr", ...]


@dataclass(frozen=True)
class Or:
    operands: tuple["Expr", ...]


@dataclass(frozen=True)
class Eq:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class InstanceOf:
    subject: PathRef
    class_name: str


@dataclass(frozen=True)
class IsEmpty:
    target: PathRef


@dataclass(frozen=True)
class Contains:
    target: PathRef
    item: "Expr"


Expr = PathRef | Lit | Not | And | Or | Eq | InstanceOf | IsEmpty | Contains


def resolve_value(path: PathRef, scope: Scope) -> object:
    """Resolve a dotted path to a plain value (attribute or collection)."""
    value = scope.resolve_name(path.head)
    for segment in path.segments[1:-1]:
        value = scope.attribute(_require_oid(value, path), segment)
    if len(path.segments) > 1:
        value = scope.attribute(_require_oid(value, path), path.segments[-1])
    return value


def resolve_collection(path: PathRef, scope: Scope) -> Sequence[object]:
    """Resolve a dotted path whose final segment names a collection."""
    if len(path.segments) < 2:
        raise EvalError(f"'{to_text(path)}' does not name a collection")
    value = scope.resolve_name(path.head)
    for segment in path.segments[1:-1]:
        value = scope.attribute(_require_oid(value, path), segment)
    return scope.collection(_require_oid(value, path), path.segments[-1])


def _require_oid(value: object, path: PathRef) -> str:
    if not isinstance(value, str):
        raise EvalError(f"cannot navigate into non-object value in '{to_text(path)}'")
    return value


def eval_expr(expr: Expr, scope: Scope) -> object:
    """Evaluate an expression; boolean operators insist on boolean operands."""
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, PathRef):
        return resolve_value(expr, scope)
    if isinstance(expr, Not):
        return not _as_bool(eval_expr(expr.operand, scope), expr.operand)
    if isinstance(expr, And):
        return all(_as_bool(eval_expr(op, scope), op) for op in expr.operands)
    if isinstance(expr, Or):
        return any(_as_bool(eval_expr(op, scope), op) for op in expr.operands)
    if isinstance(expr, Eq):
        return eval_expr(expr.left, scope) == eval_expr(expr.right, scope)
    if isinstance(expr, InstanceOf):
        subject = resolve_value(PathRef(expr.subject.segments[:1]), scope) \
            if len(expr.subject.segments) == 1 else resolve_value(expr.subject, scope)
        return scope.is_instance(_require_oid(subject, expr.subject), expr.class_name)
    if isinstance(expr, IsEmpty):
        return len(resolve_collection(expr.target, scope)) == 0
    if isinstance(expr, Contains):
        member = eval_expr(expr.item, scope)
        return member in resolve_collection(expr.target, scope)
    raise EvalError(f"unsupported expression node: {expr!r}")


def _as_bool(value: object, expr: Expr) -> bool:
    if not isinstance(value, bool):
        raise EvalError(f"'{to_text(expr)}' is not boolean (got {value!r})")
    return value


# precedence levels used when printing: or < and < comparison < unary < atom
_PREC_OR, _PREC_AND, _PREC_CMP, _PREC_UNARY, _PREC_ATOM = range(5)


def to_text(expr: Expr) -> str:
    """Canonical text form; reparses to a structurally equal expression."""
    return _text(expr, _PREC_OR)


def _text(expr: Expr, parent_prec: int) -> str:
    if isinstance(expr, Or):
        body = " || ".join(_text(op, _PREC_AND) for op in expr.operands)
        return f"({body})" if parent_prec > _PREC_OR else body
    if isinstance(expr, And):
        body = " && ".join(_text(op, _PREC_CMP) for op in expr.operands)
        return f"({body})" if parent_prec > _PREC_AND else body
    if isinstance(expr, Eq):
        body = f"{_text(expr.left, _PREC_UNARY)} == {_text(expr.right, _PREC_UNARY)}"
        return f"({body})" if parent_prec > _PREC_CMP else body
    if isinstance(expr, InstanceOf):
        body = f"{_text(expr.subject, _PREC_UNARY)} instanceOf {expr.class_name}"
        return f"({body})" if parent_prec > _PREC_CMP else body
    if isinstance(expr, Not):
        return f"!{_text(expr.operand, _PREC_UNARY)}"
    if isinstance(expr, IsEmpty):
        return f"{'.'.join(expr.target.segments)}.isEmpty()"
    if isinstance(expr, Contains):
        return f"{'.'.join(expr.target.segments)}.contains({_text(expr.item, _PREC_OR)})"
    if isinstance(expr, PathRef):
        return ".".join(expr.segments)
    if isinstance(expr, Lit):
        if expr.value is True:
            return "true"
        if expr.value is False:
            return "false"
        if isinstance(expr.value, str):
            return '"' + expr.value.replace("\\", "\\\\").replace('"', '\\"') + '"'
        return str(expr.value)
    raise ValueError(f"unsupported expression node: {expr!r}")


def conjuncts(expr: Expr) -> list[Expr]:
    """Top-level conjunct decomposition (a && b && c -> [a, b, c])."""
    if isinstance(expr, And):
        return list(expr.operands)
    return [expr]


def substitute(expr: Expr, bindings: Mapping[str, str]) -> Expr:
    """Replace role heads of paths with concrete object ids."""
    if isinstance(expr, PathRef):
        head = bindings.get(expr.head, expr.head)
        return PathRef((head,) + expr.segments[1:])
    if isinstance(expr, Not):
        return Not(substitute(expr.operand, bindings))
    if isinstance(expr, And):
        return And(tuple(substitute(op, bindings) for op in expr.operands))
    if isinstance(expr, Or):
        return Or(tuple(substitute(op, bindings) for op in expr.operands))
    if isinstance(expr, Eq):
        return Eq(substitute(expr.left, bindings), substitute(expr.right, bindings))
    if isinstance(expr, InstanceOf):
        subject = substitute(expr.subject, bindings)
        assert isinstance(subject, PathRef)
        return InstanceOf(subject, expr.class_name)
    if isinstance(expr, IsEmpty):
        target = substitute(expr.target, bindings)
        assert isinstance(target, PathRef)
        return IsEmpty(target)
    if isinstance(expr, Contains):
        target = substitute(expr.target, bindings)
        assert isinstance(target, PathRef)
        return Contains(target, substitute(expr.item, bindings))
    return expr


def referenced_paths(expr: Expr) -> list[PathRef]:
    """All dotted paths occurring in the expression, in evaluation order."""
    out: list[PathRef] = []
    _collect_paths(expr, out)
    return out


def _collect_paths(expr: Expr, out: list[PathRef]) -> None:
    if isinstance(expr, PathRef):
        out.append(expr)
    elif isinstance(expr, Not):
        _collect_paths(expr.operand, out)
    elif isinstance(expr, (And, Or)):
        for op in expr.operands:
            _collect_paths(op, out)
    elif isinstance(expr, Eq):
        _collect_paths(expr.left, out)
        _collect_paths(expr.right, out)
    elif isinstance(expr, InstanceOf):
        out.append(expr.subject)
    elif isinstance(expr, IsEmpty):
        out.append(expr.target)
    elif isinstance(expr, Contains):
        out.append(expr.target)
        _collect_paths(expr.item, out)
