"""Hand-written C lexer with a keyword/name/operator/punctuation taxonomy.

Comments and whitespace produce no tokens.  A preprocessor directive line
inside a function body is kept as a single ``Other`` token so that the
C code around it lexes normally.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

log = logging.getLogger(__name__)

KEYWORD = "Keyword"
NAME = "Name"
OPERATOR = "Operator"
PUNCTUATION = "Punctuation"
LITERAL = "Literal"
OTHER = "Other"
KINDS = (KEYWORD, NAME, OPERATOR, PUNCTUATION, LITERAL, OTHER)

# C11 reserved words
KEYWORDS = frozenset("""
    auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while
    _Alignas _Alignof _Atomic _Bool _Complex _Generic _Imaginary _Noreturn
    _Static_assert _Thread_local
""".split())

PUNCTUATORS = frozenset("(){};,[]")

# longest first within each length class; maximal munch picks the first hit
OPERATORS = (
    "<<=", ">>=", "...",
    "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
    "*=", "/=", "%=", "+=", "-=", "&=", "^=", "|=", "##",
    "=", "+", "-", "*", "/", "%", "<", ">", "!", "~", "&", "|", "^",
    "?", ":", ".",
)
_OPS_BY_LEN = {n: frozenset(op for op in OPERATORS if len(op) == n) for n in (3, 2, 1)}

_IDENT_START = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_IDENT_CHARS = _IDENT_START | frozenset("0123456789")
_LITERAL_PREFIXES = ("u8", "u", "U", "L")


@dataclass(frozen=True)
class Token:
    kind: str
    lexeme: str
    offset: int

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lexeme": self.lexeme, "offset": self.offset}


@dataclass(frozen=True)
class TokenCounts:
    total: int = 0
    keyword: int = 0
    name: int = 0
    operator: int = 0
    punctuation: int = 0
    literal: int = 0
    other: int = 0

    def as_tuple(self) -> tuple[int, ...]:
        return (self.total, self.keyword, self.name, self.operator, self.punctuation, self.literal, self.other)

    def to_dict(self) -> dict:
        return {
            "total": self.total, "keyword": self.keyword, "name": self.name,
            "operator": self.operator, "punctuation": self.punctuation,
            "literal": self.literal, "other": self.other,
        }


def _at_line_start(code: str, i: int) -> bool:
    j = i - 1
    while j >= 0 and code[j] in " \t\f\v":
        j -= 1
    return j < 0 or code[j] == "\n"


def _skip_comment(code: str, i: int) -> int:
    """Return the end of the comment starting at ``i``, or ``i`` if none."""
    if code.startswith("/*", i):
        end = code.find("*/", i + 2)
        return len(code) if end < 0 else end + 2
    if code.startswith("//", i):
        n = len(code)
        j = i + 2
        while j < n and not (code[j] == "\n" and code[j - 1] != "\\"):
            j += 1
        return j
    return i


def _directive_end(code: str, i: int) -> int:
    """End of a directive starting at ``i``; stops before a trailing comment."""
    n = len(code)
    j = i
    while j < n:
        c = code[j]
        if c == "\n" and code[j - 1] != "\\":
            break
        if c == "/" and j + 1 < n and code[j + 1] in "*/":
            break
        if c == '"' or c == "'":
            j = _literal_end(code, j, c, quiet=True)
            continue
        j += 1
    while j > i + 1 and code[j - 1].isspace():
        j -= 1
    return j


def _literal_end(code: str, i: int, quote: str, quiet: bool = False) -> int:
    n = len(code)
    j = i + 1
    while j < n:
        c = code[j]
        if c == "\\":
            j += 2
            continue
        if c == quote:
            return j + 1
        if c == "\n":
            break
        j += 1
    if not quiet:
        log.warning("unterminated literal at offset %d", i)
    return min(j, n)


def _number_end(code: str, i: int) -> int:
    # preprocessing-number
    n = len(code)
    j = i + 1
    while j < n:
        c = code[j]
        if c in "eEpP" and j + 1 < n and code[j + 1] in "+-":
            j += 2
        elif c in _IDENT_CHARS or c == ".":
            j += 1
        else:
            break
    return j


def tokenize(code: str) -> list[Token]:
    tokens = []
    n = len(code)
    i = 0
    while i < n:
        c = code[i]
        if c.isspace():
            i += 1
            continue
        if c == "/" and i + 1 < n and code[i + 1] in "*/":
            i = _skip_comment(code, i)
            continue
        if c == "\\" and i + 1 < n and code[i + 1] == "\n":
            i += 2
            continue
        if c in _IDENT_START:
            j = i + 1
            while j < n and code[j] in _IDENT_CHARS:
                j += 1
            word = code[i:j]
            if j < n and code[j] in "\"'" and word in _LITERAL_PREFIXES:
                end = _literal_end(code, j, code[j])
                tokens.append(Token(LITERAL, code[i:end], i))
                i = end
                continue
            tokens.append(Token(KEYWORD if word in KEYWORDS else NAME, word, i))
            i = j
            continue
        if c.isdigit() or (c == "." and i + 1 < n and code[i + 1].isdigit()):
            j = _number_end(code, i)
            tokens.append(Token(LITERAL, code[i:j], i))
            i = j
            continue
        if c == '"' or c == "'":
            j = _literal_end(code, i, c)
            tokens.append(Token(LITERAL, code[i:j], i))
            i = j
            continue
        if c == "#" and _at_line_start(code, i):
            j = _directive_end(code, i)
            tokens.append(Token(OTHER, code[i:j], i))
            i = j
            continue
        if c in PUNCTUATORS:
            tokens.append(Token(PUNCTUATION, c, i))
            i += 1
            continue
        for size in (3, 2, 1):
            if code[i:i + size] in _OPS_BY_LEN[size]:
                tokens.append(Token(OPERATOR, code[i:i + size], i))
                i += size
                break
        else:
            tokens.append(Token(OTHER, c, i))
            i += 1
    return tokens


def count_tokens(tokens: Iterable[Token]) -> TokenCounts:
    tally = dict.fromkeys(KINDS, 0)
    for tok in tokens:
        tally[tok.kind] += 1
    return TokenCounts(
        total=sum(tally.values()),
        keyword=tally[KEYWORD],
        name=tally[NAME],
        operator=tally[OPERATOR],
        punctuation=tally[PUNCTUATION],
        literal=tally[LITERAL],
        other=tally[OTHER],
    )


def _escape(lexeme: str) -> str:
    return lexeme.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n").replace("\r", "\\r")


def dump_tokens(tokens: Iterable[Token]) -> str:
    """One ``offset<TAB>kind<TAB>lexeme`` line per token."""
    return "".join(f"{t.offset}\t{t.kind}\t{_escape(t.lexeme)}\n" for t in tokens)
