"""Token structure networks.

A function's tokens are grouped recursively under interpretive nodes
(``if-statement``, ``call-expression``, ...).  Every token becomes one leaf
and every group one inner node, so the resulting undirected graph is a tree.

The grouper is deliberately tolerant: anything it cannot classify is
attached flat to the innermost open group.  Expressions use a four-level
precedence simplification (assignment < binary < unary < primary); one
``binary-expression`` node holds a whole run of binary operators.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Iterable, Sequence

from kcorpus.lexer import KEYWORD, LITERAL, NAME, OPERATOR, OTHER, PUNCTUATION, Token

INTERPRETIVE_LABELS = (
    "function-definition", "return-type", "parameter-list", "parameter",
    "compound-statement", "declaration", "if-statement", "condition",
    "then-branch", "else-branch", "while-statement", "do-statement",
    "for-statement", "for-clauses", "switch-statement", "case-clause",
    "return-statement", "expression-statement", "call-expression",
    "argument-list", "binary-expression", "unary-expression",
    "assignment-expression", "label-or-goto",
)
_LABEL_SET = frozenset(INTERPRETIVE_LABELS)

ASSIGN_OPS = frozenset({"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="})
BINARY_OPS = frozenset({
    "*", "/", "%", "+", "-", "<<", ">>", "<", ">", "<=", ">=", "==", "!=",
    "&", "^", "|", "&&", "||", "?", ":",
})
PREFIX_OPS = frozenset({"!", "~", "-", "+", "*", "&", "++", "--"})
MEMBER_OPS = frozenset({".", "->"})
TYPE_WORDS = frozenset({
    "struct", "union", "enum", "const", "volatile", "static", "extern",
    "register", "auto", "unsigned", "signed", "int", "char", "short", "long",
    "float", "double", "void", "_Bool", "typedef", "inline", "restrict",
    "_Atomic", "_Complex", "_Thread_local", "_Alignas", "_Noreturn",
    "_Static_assert",
})
# names that take a parenthesised argument in a function header without
# being the function itself
ATTRIBUTE_NAMES = frozenset({
    "__attribute__", "__attribute", "__acquires", "__releases", "__must_hold",
    "__printf", "__scanf", "__aligned", "__section", "__alloc_size",
    "__cond_acquires", "__cond_releases", "__no_sanitize_or_inline",
})
_OPEN = {"(": ")", "[": "]", "{": "}"}
_CLOSE = {")": "(", "]": "[", "}": "{"}


class StructureError(ValueError):
    def __init__(self, offset: int, msg: str):
        super().__init__(f"offset {offset}: {msg}")
        self.offset = offset


@dataclass(frozen=True)
class NetNode:
    id: int
    label: str | None = None
    token: Token | None = None

    @property
    def is_interpretive(self) -> bool:
        return self.label is not None


@dataclass(frozen=True)
class StructureNetwork:
    nodes: tuple[NetNode, ...]
    edges: tuple[tuple[int, int], ...]
    root: int = 0

    @property
    def n(self) -> int:
        return len(self.nodes)

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in self.nodes]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return adj

    def degrees(self) -> list[int]:
        deg = [0] * len(self.nodes)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def leaf_tokens(self) -> list[Token]:
        """Token nodes in left-to-right (preorder) traversal order."""
        adj = self.adjacency()
        seen = [False] * len(self.nodes)
        order = []
        stack = [self.root]
        seen[self.root] = True
        while stack:
            v = stack.pop()
            order.append(v)
            nxt = sorted(u for u in adj[v] if not seen[u])
            for u in nxt:
                seen[u] = True
            stack.extend(reversed(nxt))
        return [self.nodes[v].token for v in order if self.nodes[v].token is not None]

    def to_dict(self) -> dict:
        return {
            "nodes": [
                [nd.id, "interp", nd.label] if nd.label is not None else [nd.id, "token", nd.token.lexeme]
                for nd in self.nodes
            ],
            "edges": [list(e) for e in self.edges],
        }


class _Group:
    __slots__ = ("label", "children")

    def __init__(self, label: str, children: Iterable = ()):
        assert label in _LABEL_SET, label
        self.label = label
        self.children = list(children)


def _is(tok: Token, kind: str, lexeme: str) -> bool:
    return tok.kind == kind and tok.lexeme == lexeme


def _punct(tok: Token, lexeme: str) -> bool:
    return tok.kind == PUNCTUATION and tok.lexeme == lexeme


def match_groups(tokens: Sequence[Token]) -> list[int]:
    """Index of the partner of every bracket token (-1 for non-brackets)."""
    match = [-1] * len(tokens)
    stack: list[int] = []
    for i, tok in enumerate(tokens):
        if tok.kind != PUNCTUATION:
            continue
        if tok.lexeme in _OPEN:
            stack.append(i)
        elif tok.lexeme in _CLOSE:
            if not stack or tokens[stack[-1]].lexeme != _CLOSE[tok.lexeme]:
                raise StructureError(tok.offset, f"unbalanced {tok.lexeme!r}")
            j = stack.pop()
            match[i], match[j] = j, i
    if stack:
        tok = tokens[stack[-1]]
        raise StructureError(tok.offset, f"unclosed {tok.lexeme!r}")
    return match


def _leaves(item) -> Iterable[Token]:
    if isinstance(item, _Group):
        for child in item.children:
            yield from _leaves(child)
    else:
        yield item


class _Grouper:
    def __init__(self, tokens: Sequence[Token], expr_depth: int | None = None):
        self.t = tokens
        self.match = match_groups(tokens)
        self.expr_depth = expr_depth
        self._depth = 0

    # -- helpers ----------------------------------------------------------

    def _opens(self, i: int, lexeme: str = "(") -> bool:
        return _punct(self.t[i], lexeme)

    def _split(self, lo: int, hi: int, sep: str) -> list[tuple[int, int]]:
        """Split ``[lo, hi)`` at top-level ``sep`` punctuation."""
        parts = []
        start = j = lo
        while j < hi:
            tok = self.t[j]
            if tok.kind == PUNCTUATION and tok.lexeme in _OPEN:
                j = self.match[j] + 1
                continue
            if tok.kind == PUNCTUATION and tok.lexeme == sep:
                parts.append((start, j))
                start = j + 1
            j += 1
        parts.append((start, hi))
        return parts

    def _joined(self, parts: list[tuple[int, int]], fn) -> list:
        items: list = []
        for k, (a, b) in enumerate(parts):
            if k:
                items.append(self.t[a - 1])
            items.extend(fn(a, b))
        return items

    def _stmt_end(self, i: int, hi: int) -> int:
        """Index of the terminating ';' of the statement at ``i`` (or ``hi``)."""
        j = i
        while j < hi:
            tok = self.t[j]
            if tok.kind == PUNCTUATION:
                if tok.lexeme in _OPEN:
                    j = self.match[j] + 1
                    continue
                if tok.lexeme == ";":
                    return j
            j += 1
        return hi

    def _upto(self, j: int, hi: int) -> int:
        """One past ``j`` if ``j`` is inside the range, else ``hi``."""
        return j + 1 if j < hi else hi

    # -- function ---------------------------------------------------------

    def function(self) -> _Group:
        t = self.t
        n = len(t)
        root = _Group("function-definition")
        body = self.match[n - 1] if n and _punct(t[n - 1], "}") else -1
        head_end = body if body >= 0 else n

        name = -1
        fallback = -1
        i = 0
        while i < head_end:
            if self._opens(i):
                if i > 0 and t[i - 1].kind == NAME:
                    if t[i - 1].lexeme not in ATTRIBUTE_NAMES:
                        name = i - 1
                        break
                    if fallback < 0:
                        fallback = i - 1
                i = self.match[i] + 1
                continue
            i += 1
        if name < 0:
            name = fallback

        if name < 0:
            root.children.extend(t[:head_end])
        else:
            if name > 0:
                root.children.append(_Group("return-type", t[:name]))
            root.children.append(t[name])
            root.children.append(self.parameter_list(name + 1))
            root.children.extend(t[self.match[name + 1] + 1:head_end])
        if body >= 0:
            root.children.append(self.compound(body))
        return root

    def parameter_list(self, open_: int) -> _Group:
        close = self.match[open_]
        node = _Group("parameter-list", [self.t[open_]])
        for k, (a, b) in enumerate(self._split(open_ + 1, close, ",")):
            if k:
                node.children.append(self.t[a - 1])
            if b > a:
                node.children.append(_Group("parameter", self.t[a:b]))
        node.children.append(self.t[close])
        return node

    # -- statements -------------------------------------------------------

    def compound(self, open_: int) -> _Group:
        close = self.match[open_]
        node = _Group("compound-statement", [self.t[open_]])
        self.block(open_ + 1, close, node)
        node.children.append(self.t[close])
        return node

    def _is_case(self, i: int) -> bool:
        tok = self.t[i]
        return tok.kind == KEYWORD and tok.lexeme in ("case", "default")

    def _case_head(self, i: int, hi: int) -> tuple[_Group, int]:
        t = self.t
        clause = _Group("case-clause", [t[i]])
        j = i + 1
        while j < hi and not _is(t[j], OPERATOR, ":"):
            j = self.match[j] + 1 if t[j].kind == PUNCTUATION and t[j].lexeme in _OPEN else j + 1
        if t[i].lexeme == "case":
            clause.children.extend(self.expr(i + 1, j))
        else:
            clause.children.extend(t[i + 1:j])
        if j < hi:
            clause.children.append(t[j])
        return clause, self._upto(j, hi)

    def block(self, lo: int, hi: int, node: _Group) -> None:
        i = lo
        while i < hi:
            if self._is_case(i):
                clause, i = self._case_head(i, hi)
                while i < hi and not self._is_case(i):
                    items, i = self.statement(i, hi)
                    clause.children.extend(items)
                node.children.append(clause)
            else:
                items, i = self.statement(i, hi)
                node.children.extend(items)

    def statement(self, i: int, hi: int) -> tuple[list, int]:
        t = self.t
        tok = t[i]
        if tok.kind == PUNCTUATION:
            if tok.lexeme == "{":
                return [self.compound(i)], self.match[i] + 1
            return [tok], i + 1
        if tok.kind == OTHER:
            return [tok], i + 1
        if tok.kind == KEYWORD:
            handler = self._KEYWORD_STATEMENTS.get(tok.lexeme)
            if handler is not None:
                return handler(self, i, hi)
            if tok.lexeme in ("break", "continue"):
                end = self._stmt_end(i, hi)
                return list(t[i:self._upto(end, hi)]), self._upto(end, hi)
            if tok.lexeme == "else":
                return [tok], i + 1
            if tok.lexeme in ("case", "default"):
                clause, j = self._case_head(i, hi)
                return [clause], j
        if tok.kind == NAME and i + 1 < hi:
            nxt = t[i + 1]
            if _is(nxt, OPERATOR, ":"):
                return [_Group("label-or-goto", [tok, nxt])], i + 2
            if _punct(nxt, "(") and self._is_iterator_macro(i, hi):
                return self.macro_loop(i, hi)
        if self._is_declaration(i, hi):
            return self.declaration(i, hi)
        return self.expression_statement(i, hi)

    def _is_iterator_macro(self, i: int, hi: int) -> bool:
        after = self.match[i + 1] + 1
        if after >= hi:
            return False
        nxt = self.t[after]
        if nxt.kind in (NAME, LITERAL):
            return True
        if nxt.kind == KEYWORD:
            return nxt.lexeme not in ("sizeof", "_Alignof")
        return _punct(nxt, "{")

    def _is_declaration(self, i: int, hi: int) -> bool:
        t = self.t
        tok = t[i]
        if tok.kind == KEYWORD:
            return tok.lexeme in TYPE_WORDS
        if tok.kind != NAME or i + 1 >= hi:
            return False
        nxt = t[i + 1]
        if nxt.kind == NAME:
            return True
        j = i + 1
        while j < hi and _is(t[j], OPERATOR, "*"):
            j += 1
        if j == i + 1 or j + 1 >= hi or t[j].kind != NAME:
            return False
        after = t[j + 1]
        return (after.kind == PUNCTUATION and after.lexeme in (";", ",", "[", ")")) or _is(after, OPERATOR, "=")

    def _declarators(self, lo: int, hi: int) -> list:
        items: list = []
        for k, (a, b) in enumerate(self._split(lo, hi, ",")):
            if k:
                items.append(self.t[a - 1])
            eq = a
            while eq < b and not _is(self.t[eq], OPERATOR, "="):
                eq = self.match[eq] + 1 if self.t[eq].kind == PUNCTUATION and self.t[eq].lexeme in _OPEN else eq + 1
            items.extend(self.t[a:eq])
            if eq < b:
                items.append(self.t[eq])
                items.extend(self.expr(eq + 1, b))
        return items

    def declaration(self, i: int, hi: int) -> tuple[list, int]:
        end = self._stmt_end(i, hi)
        node = _Group("declaration", self._declarators(i, end))
        if end < hi:
            node.children.append(self.t[end])
        return [node], self._upto(end, hi)

    def expression_statement(self, i: int, hi: int) -> tuple[list, int]:
        end = self._stmt_end(i, hi)
        node = _Group("expression-statement", self.expr(i, end))
        if end < hi:
            node.children.append(self.t[end])
        return [node], self._upto(end, hi)

    def _condition(self, i: int, hi: int) -> tuple[_Group | None, int]:
        if i < hi and self._opens(i):
            close = self.match[i]
            return _Group("condition", [self.t[i], *self.expr(i + 1, close), self.t[close]]), close + 1
        return None, i

    def _body(self, i: int, hi: int) -> tuple[list, int]:
        if i >= hi:
            return [], i
        return self.statement(i, hi)

    def if_statement(self, i: int, hi: int) -> tuple[list, int]:
        node = _Group("if-statement", [self.t[i]])
        cond, j = self._condition(i + 1, hi)
        if cond is None:
            return [self.t[i]], i + 1
        node.children.append(cond)
        items, j = self._body(j, hi)
        node.children.append(_Group("then-branch", items))
        if j < hi and _is(self.t[j], KEYWORD, "else"):
            items, k = self._body(j + 1, hi)
            node.children.append(_Group("else-branch", [self.t[j], *items]))
            j = k
        return [node], j

    def while_statement(self, i: int, hi: int) -> tuple[list, int]:
        cond, j = self._condition(i + 1, hi)
        if cond is None:
            return [self.t[i]], i + 1
        items, j = self._body(j, hi)
        return [_Group("while-statement", [self.t[i], cond, *items])], j

    def do_statement(self, i: int, hi: int) -> tuple[list, int]:
        node = _Group("do-statement", [self.t[i]])
        items, j = self._body(i + 1, hi)
        node.children.extend(items)
        if j < hi and _is(self.t[j], KEYWORD, "while"):
            node.children.append(self.t[j])
            cond, j = self._condition(j + 1, hi)
            if cond is not None:
                node.children.append(cond)
            if j < hi and _punct(self.t[j], ";"):
                node.children.append(self.t[j])
                j += 1
        return [node], j

    def for_statement(self, i: int, hi: int) -> tuple[list, int]:
        if i + 1 >= hi or not self._opens(i + 1):
            return [self.t[i]], i + 1
        open_ = i + 1
        close = self.match[open_]
        clauses = _Group("for-clauses", [self.t[open_]])
        for k, (a, b) in enumerate(self._split(open_ + 1, close, ";")):
            if k:
                clauses.children.append(self.t[a - 1])
            if b > a and self._is_declaration(a, b):
                clauses.children.append(_Group("declaration", self._declarators(a, b)))
            else:
                clauses.children.extend(self.expr(a, b))
        clauses.children.append(self.t[close])
        items, j = self._body(close + 1, hi)
        return [_Group("for-statement", [self.t[i], clauses, *items])], j

    def macro_loop(self, i: int, hi: int) -> tuple[list, int]:
        """``list_for_each_entry(pos, head, member) body`` style iterators."""
        call = _Group("call-expression", [self.t[i], self.argument_list(i + 1)])
        items, j = self._body(self.match[i + 1] + 1, hi)
        return [_Group("for-statement", [call, *items])], j

    def switch_statement(self, i: int, hi: int) -> tuple[list, int]:
        cond, j = self._condition(i + 1, hi)
        if cond is None:
            return [self.t[i]], i + 1
        items, j = self._body(j, hi)
        return [_Group("switch-statement", [self.t[i], cond, *items])], j

    def return_statement(self, i: int, hi: int) -> tuple[list, int]:
        end = self._stmt_end(i, hi)
        node = _Group("return-statement", [self.t[i], *self.expr(i + 1, end)])
        if end < hi:
            node.children.append(self.t[end])
        return [node], self._upto(end, hi)

    def goto_statement(self, i: int, hi: int) -> tuple[list, int]:
        end = self._stmt_end(i, hi)
        stop = self._upto(end, hi)
        return [_Group("label-or-goto", self.t[i:stop])], stop

    _KEYWORD_STATEMENTS = {
        "if": if_statement,
        "while": while_statement,
        "do": do_statement,
        "for": for_statement,
        "switch": switch_statement,
        "return": return_statement,
        "goto": goto_statement,
    }

    # -- expressions ------------------------------------------------------

    def expr(self, lo: int, hi: int) -> list:
        limit = self.expr_depth
        if limit is None:
            return self._expr(lo, hi)
        if self._depth >= limit:
            return list(self.t[lo:hi])
        self._depth += 1
        try:
            items = self._expr(lo, hi)
        finally:
            self._depth -= 1
        if self._depth + 1 == limit:
            items = [_Group(it.label, _leaves(it)) if isinstance(it, _Group) else it for it in items]
        return items

    def _expr(self, lo: int, hi: int) -> list:
        if lo >= hi:
            return []
        parts = self._split(lo, hi, ",")
        if len(parts) > 1:
            return [_Group("binary-expression", self._joined(parts, self.expr))]
        t = self.t
        j = lo
        while j < hi:
            tok = t[j]
            if tok.kind == PUNCTUATION and tok.lexeme in _OPEN:
                j = self.match[j] + 1
                continue
            if tok.kind == OPERATOR and tok.lexeme in ASSIGN_OPS and j > lo:
                return [_Group("assignment-expression", [*self.binary(lo, j), tok, *self.expr(j + 1, hi)])]
            j += 1
        return self.binary(lo, hi)

    def _is_cast(self, open_: int, hi: int) -> bool:
        t = self.t
        close = self.match[open_]
        if close == open_ + 1 or close + 1 >= hi:
            return False
        inner = t[open_ + 1:close]
        typeish = all(
            tok.kind == NAME or (tok.kind == KEYWORD and tok.lexeme != "sizeof") or _is(tok, OPERATOR, "*")
            for tok in inner
        )
        if not typeish:
            return False
        if inner[0].kind == KEYWORD or _is(inner[-1], OPERATOR, "*"):
            return True
        nxt = t[close + 1]
        return nxt.kind in (NAME, LITERAL) or _is(nxt, KEYWORD, "sizeof")

    def binary(self, lo: int, hi: int) -> list:
        t = self.t
        splits = []
        operand = False
        after_sizeof = False
        j = lo
        while j < hi:
            tok = t[j]
            if tok.kind == PUNCTUATION and tok.lexeme in _OPEN:
                cast = tok.lexeme == "(" and not operand and not after_sizeof and self._is_cast(j, hi)
                j = self.match[j] + 1
                operand = not cast
                after_sizeof = False
                continue
            after_sizeof = tok.kind == KEYWORD and tok.lexeme in ("sizeof", "_Alignof")
            if tok.kind == OPERATOR:
                op = tok.lexeme
                if op in MEMBER_OPS:
                    operand = False
                elif op in ("++", "--"):
                    pass  # postfix keeps operand state; prefix leaves it unset
                elif operand and op in BINARY_OPS:
                    splits.append(j)
                    operand = False
                else:
                    operand = False
            elif tok.kind in (NAME, LITERAL):
                operand = True
            elif tok.kind == KEYWORD:
                operand = tok.lexeme not in ("sizeof", "_Alignof")
            j += 1
        if not splits:
            return self.unary(lo, hi)
        items: list = []
        start = lo
        for s in splits:
            items.extend(self.unary(start, s))
            items.append(t[s])
            start = s + 1
        items.extend(self.unary(start, hi))
        return [_Group("binary-expression", items)]

    def unary(self, lo: int, hi: int) -> list:
        t = self.t
        prefix: list = []
        i = lo
        while i < hi:
            tok = t[i]
            if tok.kind == OPERATOR and tok.lexeme in PREFIX_OPS:
                prefix.append(tok)
                i += 1
            elif tok.kind == KEYWORD and tok.lexeme in ("sizeof", "_Alignof"):
                prefix.append(tok)
                i += 1
            elif self._opens(i) and not (prefix and prefix[-1].kind == KEYWORD and prefix[-1].lexeme in ("sizeof", "_Alignof")) and self._is_cast(i, hi):
                close = self.match[i]
                prefix.extend(t[i:close + 1])
                i = close + 1
            else:
                break
        j = hi
        while j > i and t[j - 1].kind == OPERATOR and t[j - 1].lexeme in ("++", "--"):
            j -= 1
        postfix = list(t[j:hi])
        core = self.primary(i, j)
        if not prefix and not postfix:
            return core
        return [_Group("unary-expression", [*prefix, *core, *postfix])]

    def _callable(self, item) -> bool:
        if isinstance(item, _Group):
            return item.label == "call-expression"
        return item.kind == NAME or (item.kind == PUNCTUATION and item.lexeme in (")", "]"))

    def argument_list(self, open_: int) -> _Group:
        close = self.match[open_]
        parts = self._split(open_ + 1, close, ",")
        if len(parts) == 1 and parts[0][0] == parts[0][1]:
            inner = []
        else:
            inner = self._joined(parts, self.expr)
        return _Group("argument-list", [self.t[open_], *inner, self.t[close]])

    def primary(self, lo: int, hi: int) -> list:
        t = self.t
        items: list = []
        j = lo
        while j < hi:
            tok = t[j]
            if tok.kind == PUNCTUATION and tok.lexeme in _OPEN:
                close = self.match[j]
                if tok.lexeme == "(":
                    if items and self._callable(items[-1]):
                        items = [_Group("call-expression", [*items, self.argument_list(j)])]
                    elif j + 1 < close and _punct(t[j + 1], "{") and self.match[j + 1] == close - 1:
                        items.extend([tok, self.compound(j + 1), t[close]])
                    else:
                        items.extend([tok, *self.expr(j + 1, close), t[close]])
                elif tok.lexeme == "[":
                    items.extend([tok, *self.expr(j + 1, close), t[close]])
                else:
                    parts = self._split(j + 1, close, ",")
                    items.append(tok)
                    items.extend(self._joined(parts, self.expr))
                    items.append(t[close])
                j = close + 1
                continue
            items.append(tok)
            j += 1
        return items


def _flatten(root: _Group) -> StructureNetwork:
    nodes: list[NetNode] = []
    edges: list[tuple[int, int]] = []
    stack: list[tuple[object, int]] = [(root, -1)]
    while stack:
        item, parent = stack.pop()
        nid = len(nodes)
        if isinstance(item, _Group):
            nodes.append(NetNode(nid, label=item.label))
            stack.extend((child, nid) for child in reversed(item.children))
        else:
            nodes.append(NetNode(nid, token=item))
        if parent >= 0:
            edges.append((parent, nid))
    edges.sort()
    return StructureNetwork(tuple(nodes), tuple(edges), 0)


def parse_structure(tokens: Sequence[Token], expr_depth: int | None = None) -> StructureNetwork:
    """Group a function's tokens into a tree-shaped structure network.

    ``expr_depth`` caps how many expression nodes may nest: ``None`` groups
    expressions fully, ``1`` keeps only the outermost expression node of
    each statement and ``0`` leaves expression tokens flat under their
    statement.  Raises StructureError when brackets are unbalanced.
    """
    tokens = list(tokens)
    grouper = _Grouper(tokens, expr_depth)
    limit = sys.getrecursionlimit()
    if limit < 20000:
        sys.setrecursionlimit(20000)
    try:
        root = grouper.function()
    finally:
        sys.setrecursionlimit(limit)
    return _flatten(root)


def network_stats(net: StructureNetwork) -> tuple[int, int, float]:
    n = len(net.nodes)
    interp = sum(1 for nd in net.nodes if nd.label is not None)
    return n, len(net.edges), (interp / n if n else 0.0)


def dump_network(sample_id: str, net: StructureNetwork) -> dict:
    d = net.to_dict()
    return {"id": sample_id, **d}
