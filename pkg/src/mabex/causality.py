"""AND/OR causality trees: load, evaluate, extract explanation fragments.

A tree connects an observable event (the root) to its possible causes. Every
node carries a natural-language explanation fragment; leaves (and optionally
internal nodes) carry a condition over a variable snapshot. An or-node is
active when at least one child is active, an and-node when all children are;
a node with a false condition is inactive regardless of its children.

Document format (`.causes`, UTF-8):

    node <id> {
        label: "<display label>"
        combinator: or | and          # required on nodes with children
        condition: <expr>             # required on childless nodes (except the root)
        explains: "<explanation fragment>"
        monitors: "<event name>"      # optional: event whose occurrence flips a leaf
        node <id> { ... }             # children, in order
    }

Conditions reference snapshot variables by quoted string or bare identifier,
combined with `!`, `&&`, `||` and `== <literal>`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Mapping

from .sml.exprs import And, Eq, EvalError, Lit, Not, Or, PathRef
from .sml.lexer import LexError, TT, Token, tokenize

OR = "or"
AND = "and"


class FormatError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.line = line
        self.col = col


@dataclass(frozen=True)
class VarRef:
    """Reference to a snapshot variable (may contain spaces when quoted)."""

    name: str


Condition = VarRef | Not | And | Or | Eq | Lit


@dataclass(frozen=True)
class CausalityNode:
    node_id: str
    label: str
    explains: str
    combinator: str | None = None
    condition: Condition | None = None
    monitors: str | None = None
    children: tuple["CausalityNode", ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class CausalityTree:
    root: CausalityNode

    def nodes(self) -> Iterator[CausalityNode]:
        stack = [self.root]
        while stack:
            node = stack.pop(0)
            yield node
            stack = list(node.children) + stack

    def node_by_id(self, node_id: str) -> CausalityNode | None:
        for node in self.nodes():
            if node.node_id == node_id:
                return node
        return None

    def height(self) -> int:
        def depth(node: CausalityNode) -> int:
            if not node.children:
                return 1
            return 1 + max(depth(c) for c in node.children)

        return depth(self.root)


# -- loading -----------------------------------------------------------------


def load_tree(text: str) -> CausalityTree:
    try:
        tokens = tokenize(text)
    except LexError as exc:
        raise FormatError(str(exc), exc.line, exc.col) from exc
    parser = _TreeParser(tokens)
    root = parser.parse_node()
    tok = parser.peek()
    if tok.type != TT.EOF:
        raise FormatError("trailing input after the root node", tok.line, tok.col)
    tree = CausalityTree(root)
    _check(tree)
    return tree


def load_tree_file(path) -> CausalityTree:
    with open(path, encoding="utf-8") as handle:
        return load_tree(handle.read())


def _check(tree: CausalityTree) -> None:
    seen: set[str] = set()
    for node in tree.nodes():
        if node.node_id in seen:
            raise FormatError(f"duplicate node id '{node.node_id}'")
        seen.add(node.node_id)
        if node.children:
            if node.combinator not in (OR, AND):
                raise FormatError(
                    f"node '{node.node_id}' has children but no or/and combinator"
                )
        elif node is not tree.root and node.condition is None:
            raise FormatError(f"leaf '{node.node_id}' has no condition")


class _TreeParser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.type != TT.EOF:
            self.pos += 1
        return tok

    def expect(self, token_type: str) -> Token:
        tok = self.peek()
        if tok.type != token_type:
            raise FormatError(f"expected '{token_type}', got '{tok.value}'", tok.line, tok.col)
        return self.advance()

    def parse_node(self) -> CausalityNode:
        kw = self.expect(TT.IDENT)
        if kw.value != "node":
            raise FormatError(f"expected 'node', got '{kw.value}'", kw.line, kw.col)
        ident = self.expect(TT.IDENT)
        self.expect(TT.LBRACE)

        fields: dict[str, object] = {}
        children: list[CausalityNode] = []
        while self.peek().type != TT.RBRACE:
            tok = self.peek()
            if tok.type == TT.EOF:
                raise FormatError("unexpected end of input in node block", tok.line, tok.col)
            if tok.type == TT.IDENT and tok.value == "node":
                children.append(self.parse_node())
                continue
            key_tok = self.expect(TT.IDENT)
            key = str(key_tok.value)
            self.expect(TT.COLON)
            if key in ("label", "explains", "monitors"):
                fields[key] = str(self.expect(TT.STRING).value)
            elif key == "combinator":
                word = self.expect(TT.IDENT)
                if word.value not in (OR, AND):
                    raise FormatError(
                        f"unknown combinator '{word.value}'", word.line, word.col
                    )
                fields[key] = str(word.value)
            elif key == "condition":
                fields[key] = self.parse_condition()
            else:
                raise FormatError(f"unknown field '{key}'", key_tok.line, key_tok.col)
        self.expect(TT.RBRACE)

        return CausalityNode(
            node_id=str(ident.value),
            label=str(fields.get("label", ident.value)),
            explains=str(fields.get("explains", fields.get("label", ident.value))),
            combinator=fields.get("combinator"),  # type: ignore[arg-type]
            condition=fields.get("condition"),  # type: ignore[arg-type]
            monitors=fields.get("monitors"),  # type: ignore[arg-type]
            children=tuple(children),
        )

    # conditions: ! && || == over quoted/bare variables and literals
    def parse_condition(self) -> Condition:
        return self._parse_or()

    def _parse_or(self) -> Condition:
        operands = [self._parse_and()]
        while self.peek().type == TT.OR_OR:
            self.advance()
            operands.append(self._parse_and())
        return operands[0] if len(operands) == 1 else Or(tuple(operands))

    def _parse_and(self) -> Condition:
        operands = [self._parse_cmp()]
        while self.peek().type == TT.AND_AND:
            self.advance()
            operands.append(self._parse_cmp())
        return operands[0] if len(operands) == 1 else And(tuple(operands))

    def _parse_cmp(self) -> Condition:
        left = self._parse_unary()
        if self.peek().type == TT.EQ_EQ:
            self.advance()
            return Eq(left, self._parse_literal())
        return left

    def _parse_unary(self) -> Condition:
        if self.peek().type == TT.BANG:
            self.advance()
            return Not(self._parse_unary())
        tok = self.peek()
        if tok.type == TT.LPAREN:
            self.advance()
            inner = self._parse_or()
            self.expect(TT.RPAREN)
            return inner
        if tok.type == TT.STRING:
            self.advance()
            return VarRef(str(tok.value))
        if tok.type == TT.IDENT:
            if tok.value == "true":
                self.advance()
                return Lit(True)
            if tok.value == "false":
                self.advance()
                return Lit(False)
            self.advance()
            return VarRef(str(tok.value))
        raise FormatError(f"expected condition, got '{tok.value}'", tok.line, tok.col)

    def _parse_literal(self) -> Condition:
        tok = self.peek()
        if tok.type == TT.NUMBER:
            self.advance()
            return Lit(tok.value)
        if tok.type == TT.STRING:
            self.advance()
            return Lit(str(tok.value))
        if tok.type == TT.IDENT:
            self.advance()
            if tok.value == "true":
                return Lit(True)
            if tok.value == "false":
                return Lit(False)
            return Lit(str(tok.value))
        raise FormatError(f"expected literal, got '{tok.value}'", tok.line, tok.col)


# -- evaluation ----------------------------------------------------------------


def eval_condition(condition: Condition, snapshot: Mapping[str, object]) -> object:
    if isinstance(condition, VarRef):
        if condition.name not in snapshot:
            raise EvalError(f"unknown variable '{condition.name}'")
        return snapshot[condition.name]
    if isinstance(condition, Lit):
        return condition.value
    if isinstance(condition, Not):
        return not _bool(eval_condition(condition.operand, snapshot))
    if isinstance(condition, And):
        return all(_bool(eval_condition(op, snapshot)) for op in condition.operands)
    if isinstance(condition, Or):
        return any(_bool(eval_condition(op, snapshot)) for op in condition.operands)
    if isinstance(condition, Eq):
        return eval_condition(condition.left, snapshot) == eval_condition(
            condition.right, snapshot
        )
    if isinstance(condition, PathRef):  # pragma: no cover - trees use VarRef
        raise EvalError("object paths are not valid in tree conditions")
    raise EvalError(f"unsupported condition node: {condition!r}")


def _bool(value: object) -> bool:
    if not isinstance(value, bool):
        raise EvalError(f"condition value {value!r} is not boolean")
    return value


def _activity(tree: CausalityTree, snapshot: Mapping[str, object]) -> Callable[[CausalityNode], bool]:
    cache: dict[str, bool] = {}

    def active(node: CausalityNode) -> bool:
        hit = cache.get(node.node_id)
        if hit is not None:
            return hit
        ok = True
        if node.condition is not None:
            ok = _bool(eval_condition(node.condition, snapshot))
        if ok and node.children:
            if node.combinator == AND:
                ok = all(active(c) for c in node.children)
            else:
                ok = any(active(c) for c in node.children)
        cache[node.node_id] = ok
        return ok

    return active


def evaluate(tree: CausalityTree, snapshot: Mapping[str, object]) -> frozenset[tuple[str, ...]]:
    """Maximal root-to-leaf paths (as id tuples) active under the snapshot."""
    active = _activity(tree, snapshot)
    if not active(tree.root):
        return frozenset()
    paths: set[tuple[str, ...]] = set()

    def walk(node: CausalityNode, prefix: tuple[str, ...]) -> None:
        path = prefix + (node.node_id,)
        if node.is_leaf:
            paths.add(path)
            return
        for child in node.children:
            if active(child):
                walk(child, path)

    walk(tree.root, ())
    return frozenset(paths)


@dataclass(frozen=True)
class TreeCause:
    """One fragment extracted from an active tree region."""

    node_id: str
    depth: int  # root children are depth 1
    text: str


def collect_causes(
    tree: CausalityTree, snapshot: Mapping[str, object]
) -> list[TreeCause]:
    """Active-region fragments in tree order, and-children merged per level.

    The root names the observable event and contributes no fragment.
    """
    active = _activity(tree, snapshot)
    if not active(tree.root):
        return []
    out: list[TreeCause] = []
    _collect_children(tree.root, 1, active, out)
    return out


def _collect_children(node, depth, active, out: list[TreeCause]) -> None:
    if not node.children:
        return
    if node.combinator == AND:
        merged = " and ".join(c.explains for c in node.children)
        out.append(TreeCause(node_id=node.node_id, depth=depth, text=merged))
        for child in node.children:
            _collect_children(child, depth + 1, active, out)
        return
    for child in node.children:
        if active(child):
            out.append(TreeCause(node_id=child.node_id, depth=depth, text=child.explains))
            _collect_children(child, depth + 1, active, out)


def explain_from_tree(
    tree: CausalityTree, snapshot: Mapping[str, object], depth_limit: int
) -> list[str]:
    """Explanation fragments down to `depth_limit` levels below the root."""
    if depth_limit < 1:
        raise ValueError("depth_limit must be >= 1")
    return [c.text for c in collect_causes(tree, snapshot) if c.depth <= depth_limit]


def active_monitored_events(
    tree: CausalityTree, snapshot: Mapping[str, object]
) -> list[tuple[str, str]]:
    """(node id, monitored event name) for leaves on active paths."""
    out = []
    for path in sorted(evaluate(tree, snapshot)):
        node = tree.node_by_id(path[-1])
        if node is not None and node.monitors:
            out.append((node.node_id, node.monitors))
    return out
