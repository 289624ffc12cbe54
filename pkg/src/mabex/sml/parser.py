"""Recursive-descent parser for `.sml` scenario specifications.

Grammar (EBNF):

    spec         = { scenario } EOF
    scenario     = ( "guarantee" | "assumption" ) "scenario" IDENT
                   [ bindings ] "{" { step } "}" [ constraints ]
    bindings     = "bindings" "[" binding { "," binding } "]"
    binding      = IDENT "=" path
    step         = [ ANNOTATION ] ( message_step | alternative )
    message_step = { "strict" | "requested" | "committed" }
                   IDENT "->" path "(" [ args ] ")"
    alternative  = "alternative" "[" expr "]" "{" { step } "}" [ constraints ]
    constraints  = "constraints" "[" { constraint } "]"
    constraint   = ( "forbidden" | "interrupt" ) IDENT "->" path "(" [ args ] ")"
    args         = expr { "," expr }

    expr         = or_expr
    or_expr      = and_expr { "||" and_expr }
    and_expr     = cmp_expr { "&&" cmp_expr }
    cmp_expr     = unary [ "==" unary | "instanceOf" IDENT ]
    unary        = "!" unary | atom
    atom         = "(" expr ")" | "true" | "false" | NUMBER | STRING | pathcall
    pathcall     = path [ ".isEmpty()" | ".contains(" expr ")" ]
    path         = IDENT { "." IDENT }

The last segment of a message step's path is the message name; the segments
before it form the receiver path (role plus optional collection selector).
Keywords are contextual: any word is a valid identifier outside its keyword
position, so message and role names never clash with the grammar.
"""

from __future__ import annotations

from . import ast
from .exprs import And, Contains, Eq, Expr, InstanceOf, IsEmpty, Lit, Not, Or, PathRef
from .lexer import LexError, TT, Token, tokenize


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected: frozenset[str] = frozenset()):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col
        self.expected = expected


_MODALITY_WORDS = ("strict", "requested", "committed")


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # token plumbing -------------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        i = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[i]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.type != TT.EOF:
            self.pos += 1
        return tok

    def expect(self, token_type: str) -> Token:
        tok = self.peek()
        if tok.type != token_type:
            raise ParseError(
                f"expected '{token_type}', got {_describe(tok)}",
                tok.line,
                tok.col,
                expected=frozenset({token_type}),
            )
        return self.advance()

    def expect_word(self, *words: str) -> Token:
        tok = self.peek()
        if tok.type != TT.IDENT or tok.value not in words:
            raise ParseError(
                f"expected {' or '.join(repr(w) for w in words)}, got {_describe(tok)}",
                tok.line,
                tok.col,
                expected=frozenset(words),
            )
        return self.advance()

    def at_word(self, *words: str) -> bool:
        tok = self.peek()
        return tok.type == TT.IDENT and tok.value in words

    # specification --------------------------------------------------------

    def parse_spec(self) -> ast.ScenarioSpec:
        scenarios: list[ast.Scenario] = []
        names: set[str] = set()
        while self.peek().type != TT.EOF:
            scenario = self.parse_scenario()
            if scenario.name in names:
                assert scenario.pos is not None
                raise ParseError(
                    f"duplicate scenario name '{scenario.name}'",
                    scenario.pos.line,
                    scenario.pos.col,
                )
            names.add(scenario.name)
            scenarios.append(scenario)
        return ast.ScenarioSpec(tuple(scenarios))

    def parse_scenario(self) -> ast.Scenario:
        kw = self.expect_word(ast.GUARANTEE, ast.ASSUMPTION)
        self.expect_word("scenario")
        name_tok = self.expect(TT.IDENT)

        bindings: list[tuple[str, tuple[str, ...]]] = []
        if self.at_word("bindings"):
            self.advance()
            self.expect(TT.LBRACK)
            while True:
                role = self.expect(TT.IDENT)
                self.expect(TT.EQ)
                path = self.parse_path()
                bindings.append((str(role.value), path))
                if self.peek().type == TT.COMMA:
                    self.advance()
                    continue
                break
            self.expect(TT.RBRACK)

        self.expect(TT.LBRACE)
        body = self.parse_body()
        self.expect(TT.RBRACE)

        constraints: tuple[ast.Constraint, ...] = ()
        if self.at_word("constraints"):
            constraints = self.parse_constraints()

        return ast.Scenario(
            kind=str(kw.value),
            name=str(name_tok.value),
            bindings=tuple(bindings),
            body=body,
            constraints=constraints,
            pos=ast.SourcePos(name_tok.line, name_tok.col),
        )

    def parse_body(self) -> tuple[ast.Step, ...]:
        steps: list[ast.Step] = []
        while True:
            tok = self.peek()
            if tok.type == TT.RBRACE:
                return tuple(steps)
            if tok.type == TT.EOF:
                raise ParseError(
                    "unexpected end of input inside scenario body",
                    tok.line,
                    tok.col,
                    expected=frozenset({"}", "step"}),
                )
            steps.append(self.parse_step())

    def parse_step(self) -> ast.Step:
        annotation: str | None = None
        if self.peek().type == TT.ANNOTATION:
            ann_tok = self.advance()
            annotation = str(ann_tok.value)
            nxt = self.peek()
            if nxt.type in (TT.RBRACE, TT.EOF):
                raise ParseError(
                    "@EX annotation is not followed by a step",
                    ann_tok.line,
                    ann_tok.col,
                )

        if self.at_word("alternative"):
            return self.parse_alternative(annotation)
        return self.parse_message_step(annotation)

    def parse_alternative(self, annotation: str | None) -> ast.AlternativeStep:
        kw = self.advance()
        self.expect(TT.LBRACK)
        guard = self.parse_expression()
        self.expect(TT.RBRACK)
        self.expect(TT.LBRACE)
        body = self.parse_body()
        self.expect(TT.RBRACE)
        constraints: tuple[ast.Constraint, ...] = ()
        if self.at_word("constraints"):
            constraints = self.parse_constraints()
        return ast.AlternativeStep(
            guard=guard,
            body=body,
            constraints=constraints,
            annotation=annotation,
            pos=ast.SourcePos(kw.line, kw.col),
        )

    def parse_message_step(self, annotation: str | None) -> ast.MessageStep:
        strict = False
        urgency = ast.URGENCY_NONE
        first = self.peek()
        while self.at_word(*_MODALITY_WORDS):
            word = str(self.advance().value)
            if word == "strict":
                strict = True
            elif urgency == ast.URGENCY_NONE:
                urgency = word
            else:
                raise ParseError(
                    f"conflicting urgency modality '{word}'", first.line, first.col
                )

        sender = self.expect(TT.IDENT)
        self.expect(TT.ARROW)
        path = self.parse_path()
        if len(path) < 2:
            tok = self.peek()
            raise ParseError(
                "message step needs 'receiver.message(...)'",
                tok.line,
                tok.col,
                expected=frozenset({"."}),
            )
        args = self.parse_call_args()
        return ast.MessageStep(
            sender=str(sender.value),
            receiver_path=path[:-1],
            message=path[-1],
            args=args,
            strict=strict,
            urgency=urgency,
            annotation=annotation,
            pos=ast.SourcePos(sender.line, sender.col),
        )

    def parse_constraints(self) -> tuple[ast.Constraint, ...]:
        self.expect_word("constraints")
        self.expect(TT.LBRACK)
        out: list[ast.Constraint] = []
        while not self.peek().type == TT.RBRACK:
            kw = self.expect_word(ast.FORBIDDEN, ast.INTERRUPT)
            sender = self.expect(TT.IDENT)
            self.expect(TT.ARROW)
            path = self.parse_path()
            if len(path) < 2:
                raise ParseError(
                    "constraint needs 'receiver.message(...)'",
                    sender.line,
                    sender.col,
                )
            args = self.parse_call_args()
            out.append(
                ast.Constraint(
                    kind=str(kw.value),
                    sender=str(sender.value),
                    receiver_path=path[:-1],
                    message=path[-1],
                    args=args,
                    pos=ast.SourcePos(kw.line, kw.col),
                )
            )
        self.expect(TT.RBRACK)
        return tuple(out)

    def parse_call_args(self) -> tuple[Expr, ...]:
        self.expect(TT.LPAREN)
        args: list[Expr] = []
        if self.peek().type != TT.RPAREN:
            while True:
                args.append(self.parse_expression())
                if self.peek().type == TT.COMMA:
                    self.advance()
                    continue
                break
        self.expect(TT.RPAREN)
        return tuple(args)

    def parse_path(self) -> tuple[str, ...]:
        segments = [str(self.expect(TT.IDENT).value)]
        while self.peek().type == TT.DOT and self.peek(1).type == TT.IDENT:
            self.advance()
            segments.append(str(self.advance().value))
        return tuple(segments)

    # expressions ----------------------------------------------------------

    def parse_expression(self) -> Expr:
        return self._parse_or()

    def _parse_or(self) -> Expr:
        operands = [self._parse_and()]
        while self.peek().type == TT.OR_OR:
            self.advance()
            operands.append(self._parse_and())
        return operands[0] if len(operands) == 1 else Or(tuple(operands))

    def _parse_and(self) -> Expr:
        operands = [self._parse_cmp()]
        while self.peek().type == TT.AND_AND:
            self.advance()
            operands.append(self._parse_cmp())
        return operands[0] if len(operands) == 1 else And(tuple(operands))

    def _parse_cmp(self) -> Expr:
        left = self._parse_unary()
        if self.peek().type == TT.EQ_EQ:
            self.advance()
            return Eq(left, self._parse_unary())
        if self.at_word("instanceOf"):
            tok = self.advance()
            cls = self.expect(TT.IDENT)
            if not isinstance(left, PathRef):
                raise ParseError("instanceOf applies to an object path", tok.line, tok.col)
            return InstanceOf(left, str(cls.value))
        return left

    def _parse_unary(self) -> Expr:
        if self.peek().type == TT.BANG:
            self.advance()
            return Not(self._parse_unary())
        return self._parse_atom()

    def _parse_atom(self) -> Expr:
        tok = self.peek()
        if tok.type == TT.LPAREN:
            self.advance()
            inner = self.parse_expression()
            self.expect(TT.RPAREN)
            return inner
        if tok.type == TT.NUMBER:
            self.advance()
            return Lit(tok.value)
        if tok.type == TT.STRING:
            self.advance()
            return Lit(str(tok.value))
        if tok.type == TT.IDENT:
            if tok.value == "true":
                self.advance()
                return Lit(True)
            if tok.value == "false":
                self.advance()
                return Lit(False)
            return self._parse_pathcall()
        raise ParseError(
            f"expected expression, got {_describe(tok)}",
            tok.line,
            tok.col,
            expected=frozenset({"expression"}),
        )

    def _parse_pathcall(self) -> Expr:
        segments = [str(self.expect(TT.IDENT).value)]
        while self.peek().type == TT.DOT:
            if self.peek(1).type != TT.IDENT:
                tok = self.peek(1)
                raise ParseError(
                    f"expected identifier after '.', got {_describe(tok)}",
                    tok.line,
                    tok.col,
                )
            self.advance()
            name_tok = self.advance()
            name = str(name_tok.value)
            if self.peek().type == TT.LPAREN:
                # only the two collection predicates may be called in guards
                if name == "isEmpty":
                    self.advance()
                    self.expect(TT.RPAREN)
                    return IsEmpty(PathRef(tuple(segments)))
                if name == "contains":
                    self.advance()
                    item = self.parse_expression()
                    self.expect(TT.RPAREN)
                    return Contains(PathRef(tuple(segments)), item)
                raise ParseError(
                    f"unknown predicate '{name}' (only isEmpty/contains)",
                    name_tok.line,
                    name_tok.col,
                )
            segments.append(name)
        return PathRef(tuple(segments))


def _describe(tok: Token) -> str:
    if tok.type == TT.EOF:
        return "end of input"
    return f"'{tok.value}'" if tok.type == TT.IDENT else f"'{tok.type}'"


def parse_specification(text: str) -> ast.ScenarioSpec:
    """Parse a complete `.sml` document. Raises ParseError on malformed input."""
    try:
        tokens = tokenize(text)
    except LexError as exc:
        raise ParseError(str(exc), exc.line, exc.col) from exc
    return Parser(tokens).parse_spec()


def parse_expression(text: str) -> Expr:
    """Parse a standalone guard/condition expression."""
    try:
        tokens = tokenize(text)
    except LexError as exc:
        raise ParseError(str(exc), exc.line, exc.col) from exc
    parser = Parser(tokens)
    expr = parser.parse_expression()
    tok = parser.peek()
    if tok.type != TT.EOF:
        raise ParseError(f"trailing input after expression: {_describe(tok)}", tok.line, tok.col)
    return expr


def parse_pattern(text: str) -> ast.MessagePattern:
    """Parse an event pattern: `[sender ->] receiver.message[(args)]`.

    `*` is accepted for sender, receiver, message and individual arguments;
    omitting the argument list matches any arguments. A bare `message` (no
    dot) leaves the receiver as a wildcard.
    """
    try:
        tokens = tokenize(text)
    except LexError as exc:
        raise ParseError(str(exc), exc.line, exc.col) from exc
    parser = Parser(tokens)
    pattern = _parse_pattern_tokens(parser)
    tok = parser.peek()
    if tok.type != TT.EOF:
        raise ParseError(f"trailing input after pattern: {_describe(tok)}", tok.line, tok.col)
    return pattern


def _parse_pattern_tokens(parser: Parser) -> ast.MessagePattern:
    def name_or_star() -> str:
        tok = parser.peek()
        if tok.type == TT.STAR:
            parser.advance()
            return "*"
        return str(parser.expect(TT.IDENT).value)

    first = name_or_star()
    sender = "*"
    segments: list[str]
    if parser.peek().type == TT.ARROW:
        parser.advance()
        sender = first
        segments = [name_or_star()]
    else:
        segments = [first]
    while parser.peek().type == TT.DOT:
        parser.advance()
        segments.append(name_or_star())

    args: tuple[object, ...] | None = None
    if parser.peek().type == TT.LPAREN:
        parser.advance()
        collected: list[object] = []
        while parser.peek().type != TT.RPAREN:
            tok = parser.peek()
            if tok.type == TT.STAR:
                parser.advance()
                collected.append("*")
            elif tok.type in (TT.IDENT, TT.NUMBER, TT.STRING):
                parser.advance()
                collected.append(tok.value)
            else:
                raise ParseError(
                    f"expected pattern argument, got {_describe(tok)}", tok.line, tok.col
                )
            if parser.peek().type == TT.COMMA:
                parser.advance()
        parser.expect(TT.RPAREN)
        args = tuple(collected)

    if len(segments) == 1:
        return ast.MessagePattern(sender=sender, receiver="*", message=segments[0], args=args)
    return ast.MessagePattern(
        sender=sender, receiver=segments[0], message=".".join(segments[1:]), args=args
    )


def pattern_for_query(parser_text: str) -> ast.MessagePattern:
    return parse_pattern(parser_text)
