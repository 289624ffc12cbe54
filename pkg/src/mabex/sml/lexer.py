"""Tokenizer for `.sml` scenario files and the related structured-text formats.

Ordinary `//` comments are discarded. Comments of the form `// @EX: ...`
(the explanation annotations) are kept as ANNOTATION tokens so the parser
can attach them to the lexically following step.
"""

from __future__ import annotations

import re
from dataclasses import dataclass


class TT:
    """Token types."""

    IDENT = "IDENT"
    NUMBER = "NUMBER"
    STRING = "STRING"
    ANNOTATION = "ANNOTATION"
    ARROW = "->"
    AND_AND = "&&"
    OR_OR = "||"
    EQ_EQ = "=="
    BANG = "!"
    DOT = "."
    COMMA = ","
    EQ = "="
    COLON = ":"
    STAR = "*"
    LBRACE = "{"
    RBRACE = "}"
    LBRACK = "["
    RBRACK = "]"
    LPAREN = "("
    RPAREN = ")"
    EOF = "EOF"


@dataclass(frozen=True)
class Token:
    type: str
    value: object
    line: int
    col: int

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Token({self.type}, {self.value!r}, {self.line}:{self.col})"


class LexError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


_ANNOTATION_RE = re.compile(r"\s*@EX:\s*(.*)$")

_TWO_CHAR = {"->": TT.ARROW, "&&": TT.AND_AND, "||": TT.OR_OR, "==": TT.EQ_EQ}
_ONE_CHAR = {
    "!": TT.BANG,
    ".": TT.DOT,
    ",": TT.COMMA,
    "=": TT.EQ,
    ":": TT.COLON,
    "*": TT.STAR,
    "{": TT.LBRACE,
    "}": TT.RBRACE,
    "[": TT.LBRACK,
    "]": TT.RBRACK,
    "(": TT.LPAREN,
    ")": TT.RPAREN,
}


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    while i < n:
        ch = source[i]

        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue

        if ch == "/" and i + 1 < n and source[i + 1] == "/":
            start_col = col
            j = i + 2
            while j < n and source[j] != "\n":
                j += 1
            comment = source[i + 2 : j]
            match = _ANNOTATION_RE.match(comment)
            if match:
                tokens.append(Token(TT.ANNOTATION, match.group(1).strip(), line, start_col))
            col += j - i
            i = j
            continue

        if ch == '"':
            start_line, start_col = line, col
            i += 1
            col += 1
            buf: list[str] = []
            while i < n and source[i] != '"':
                c = source[i]
                if c == "\n":
                    raise LexError("unterminated string literal", start_line, start_col)
                if c == "\\" and i + 1 < n:
                    i += 1
                    col += 1
                    esc = source[i]
                    buf.append({"n": "\n", "t": "\t"}.get(esc, esc))
                else:
                    buf.append(c)
                i += 1
                col += 1
            if i >= n:
                raise LexError("unterminated string literal", start_line, start_col)
            i += 1
            col += 1
            tokens.append(Token(TT.STRING, "".join(buf), start_line, start_col))
            continue

        two = source[i : i + 2]
        if two in _TWO_CHAR:
            tokens.append(Token(_TWO_CHAR[two], two, line, col))
            i += 2
            col += 2
            continue

        if ch.isdigit():
            start_col = col
            j = i
            while j < n and (source[j].isdigit() or source[j] == "."):
                j += 1
            text = source[i:j]
            # a trailing dot belongs to the next token, not the number
            if text.endswith("."):
                text = text[:-1]
                j -= 1
            value: object = float(text) if "." in text else int(text)
            tokens.append(Token(TT.NUMBER, value, line, start_col))
            col += j - i
            i = j
            continue

        if ch.isalpha() or ch == "_":
            start_col = col
            j = i
            while j < n:
                c = source[j]
                if c.isalnum() or c == "_":
                    j += 1
                    continue
                # hyphen joins identifier parts (rule/node ids) but never
                # swallows the arrow of `a->b`
                if c == "-" and j + 1 < n and (source[j + 1].isalnum() or source[j + 1] == "_"):
                    j += 2
                    continue
                break
            tokens.append(Token(TT.IDENT, source[i:j], line, start_col))
            col += j - i
            i = j
            continue

        if ch in _ONE_CHAR:
            tokens.append(Token(_ONE_CHAR[ch], ch, line, col))
            i += 1
            col += 1
            continue

        raise LexError(f"unexpected character {ch!r}", line, col)

    tokens.append(Token(TT.EOF, "", line, col))
    return tokens
