"""Loader for `.rules` session config: trigger rules and the query map.

    rule <id> {
        event: <pattern>              # sender -> receiver.message[(args)]
        when: <boolean expression>    # optional; `sender`/`receiver` are bound
        label: "<behavior label>"
    }

    query "<question as the user asks it>" {
        kind: why | whycond | when
        pattern: <pattern>            # why / when
        condition: <expression>       # whycond
        horizon: <number>             # when, default 4
    }
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..sml.lexer import LexError, TT, Token, tokenize
from ..sml.parser import ParseError, Parser, _parse_pattern_tokens
from .records import QuerySpec, TriggerRule


class ConfigError(Exception):
    pass


@dataclass
class SessionConfig:
    rules: list[TriggerRule] = field(default_factory=list)
    query_map: dict[str, QuerySpec] = field(default_factory=dict)


def load_rules(text: str) -> SessionConfig:
    try:
        tokens = tokenize(text)
    except LexError as exc:
        raise ConfigError(str(exc)) from exc
    parser = Parser(tokens)
    config = SessionConfig()
    while parser.peek().type != TT.EOF:
        tok = parser.peek()
        if tok.type == TT.IDENT and tok.value == "rule":
            _parse_rule(parser, config)
        elif tok.type == TT.IDENT and tok.value == "query":
            _parse_query(parser, config)
        else:
            raise ConfigError(f"{tok.line}:{tok.col}: expected 'rule' or 'query'")
    return config


def load_rules_file(path) -> SessionConfig:
    with open(path, encoding="utf-8") as handle:
        return load_rules(handle.read())


def _parse_rule(parser: Parser, config: SessionConfig) -> None:
    parser.advance()  # 'rule'
    ident = _expect(parser, TT.IDENT)
    _expect(parser, TT.LBRACE)
    pattern = None
    predicate = None
    label = str(ident.value)
    while parser.peek().type != TT.RBRACE:
        key = _expect(parser, TT.IDENT)
        _expect(parser, TT.COLON)
        word = str(key.value)
        if word == "event":
            pattern = _parse_pattern_tokens(parser)
        elif word == "when":
            predicate = parser.parse_expression()
        elif word == "label":
            label = str(_expect(parser, TT.STRING).value)
        else:
            raise ConfigError(f"{key.line}:{key.col}: unknown rule field '{word}'")
    parser.advance()  # '}'
    if pattern is None:
        raise ConfigError(f"rule '{ident.value}' has no event pattern")
    config.rules.append(
        TriggerRule(
            rule_id=str(ident.value),
            pattern=pattern,
            predicate=predicate,
            behavior_label=label,
        )
    )


def _parse_query(parser: Parser, config: SessionConfig) -> None:
    parser.advance()  # 'query'
    question = _expect(parser, TT.STRING)
    _expect(parser, TT.LBRACE)
    kind = None
    pattern = None
    condition = None
    horizon = 4
    while parser.peek().type != TT.RBRACE:
        key = _expect(parser, TT.IDENT)
        _expect(parser, TT.COLON)
        word = str(key.value)
        if word == "kind":
            kind = str(_expect(parser, TT.IDENT).value)
        elif word == "pattern":
            pattern = _parse_pattern_tokens(parser)
        elif word == "condition":
            condition = parser.parse_expression()
        elif word == "horizon":
            horizon = int(_expect(parser, TT.NUMBER).value)  # type: ignore[arg-type]
        else:
            raise ConfigError(f"{key.line}:{key.col}: unknown query field '{word}'")
    parser.advance()  # '}'
    if kind not in ("why", "whycond", "when"):
        raise ConfigError(f"query {question.value!r} has invalid kind {kind!r}")
    if kind == "whycond" and condition is None:
        raise ConfigError(f"query {question.value!r} needs a condition")
    if kind in ("why", "when") and pattern is None:
        raise ConfigError(f"query {question.value!r} needs a pattern")
    config.query_map[str(question.value)] = QuerySpec(
        kind=kind, pattern=pattern, condition=condition, horizon=horizon
    )


def _expect(parser: Parser, token_type: str) -> Token:
    try:
        return parser.expect(token_type)
    except ParseError as exc:
        raise ConfigError(str(exc)) from exc
