from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from kcorpus.lexer import tokenize
from kcorpus.structure import (
    INTERPRETIVE_LABELS,
    StructureError,
    dump_network,
    network_stats,
    parse_structure,
)

from conftest import ADD_CODE
from oracles import is_tree
from snippets import SNIPPETS


def check_tree(tokens, net):
    assert is_tree(net.n, net.edges)
    assert all(a != b for a, b in net.edges)
    assert len(set(net.edges)) == len(net.edges)
    assert [t.lexeme for t in net.leaf_tokens()] == [t.lexeme for t in tokens]
    deg = net.degrees()
    for node in net.nodes:
        if node.token is not None:
            assert deg[node.id] == 1 or net.n == 1
        else:
            assert node.label in INTERPRETIVE_LABELS


def labels(net):
    return Counter(node.label for node in net.nodes if node.label)


def test_add_network():
    toks = tokenize(ADD_CODE)
    net = parse_structure(toks)
    check_tree(toks, net)
    assert network_stats(net) == (24, 23, 8 / 24)
    assert labels(net) == Counter({
        "function-definition": 1, "return-type": 1, "parameter-list": 1,
        "parameter": 2, "compound-statement": 1, "return-statement": 1,
        "binary-expression": 1,
    })
    assert net.nodes[net.root].label == "function-definition"


def test_smallest_tree():
    net = parse_structure(tokenize("x"))
    assert network_stats(net) == (2, 1, 0.5)


def test_unbalanced_raises_with_offset():
    with pytest.raises(StructureError) as exc:
        parse_structure(tokenize("int f(void) { if (x) { y(); }"))
    assert exc.value.offset == 12


def test_if_while_shapes():
    code = "void f(void)\n{\n\tif (a)\n\t\tb();\n\telse\n\t\tc();\n\twhile (d)\n\t\te--;\n}\n"
    net = parse_structure(tokenize(code))
    got = labels(net)
    for lab in ("if-statement", "condition", "then-branch", "else-branch", "while-statement"):
        assert got[lab] >= 1


def test_switch_and_case_clauses():
    net = parse_structure(tokenize(SNIPPETS[6]))
    got = labels(net)
    assert got["switch-statement"] == 1 and got["case-clause"] == 2


def test_goto_label():
    net = parse_structure(tokenize(SNIPPETS[4]))
    assert labels(net)["label-or-goto"] == 2


def test_iterator_macro_is_loop():
    net = parse_structure(tokenize(SNIPPETS[16]))
    assert labels(net)["for-statement"] == 1


def test_sizeof_type_is_not_cast():
    net = parse_structure(tokenize("int f(void) { return sizeof(struct foo) * 2; }"))
    check_tree(tokenize("int f(void) { return sizeof(struct foo) * 2; }"), net)
    assert labels(net)["binary-expression"] == 1


@pytest.mark.parametrize("idx", range(len(SNIPPETS)))
def test_snippets_are_trees(idx):
    toks = tokenize(SNIPPETS[idx])
    check_tree(toks, parse_structure(toks))


def test_expr_depth_limits_nesting():
    code = "int f(int a) { return ((a + 1) * (a - 2)) << g(a, h(a)); }"
    toks = tokenize(code)
    full = parse_structure(toks)
    flat = parse_structure(toks, expr_depth=0)
    shallow = parse_structure(toks, expr_depth=1)
    for net in (full, flat, shallow):
        check_tree(toks, net)
    assert flat.n < shallow.n < full.n


def test_dump_network_shape():
    d = dump_network("ipc/x.c:0", parse_structure(tokenize("x")))
    assert d["id"] == "ipc/x.c:0"
    assert d["nodes"] == [[0, "interp", "function-definition"], [1, "token", "x"]]
    assert d["edges"] == [[0, 1]]


# -- properties -------------------------------------------------------------

_atom = st.sampled_from([
    "a", "b1", "0", "'c'", '"s"', "+", "-", "*", "&", "=", "+=", "->", ".", "?", ":",
    ",", ";", "!", "~", "++", "--", "<<", "==", "&&", "sizeof", "return", "if", "else",
    "while", "for", "do", "switch", "case", "default", "break", "goto", "int",
    "struct", "static", "const", "unsigned", "@", "...",
])


def _wrap(inner):
    return st.tuples(st.sampled_from(["()", "[]", "{}"]), inner).map(
        lambda p: p[0][0] + " " + p[1] + " " + p[0][1])


_soup = st.recursive(
    _atom,
    lambda inner: st.one_of(
        _wrap(inner),
        st.lists(inner, min_size=1, max_size=8).map(" ".join),
    ),
    max_leaves=60,
)


@settings(max_examples=300, deadline=None)
@given(_soup, st.sampled_from([None, 0, 1, 2]))
def test_random_balanced_soup_is_tree(body, depth):
    toks = tokenize("int f(int x) { " + body + " }")
    net = parse_structure(toks, expr_depth=depth)
    check_tree(toks, net)
    assert parse_structure(toks, expr_depth=depth).to_dict() == net.to_dict()


@settings(max_examples=200, deadline=None)
@given(_soup)
def test_random_soup_without_function_shape(body):
    toks = tokenize(body)
    check_tree(toks, parse_structure(toks))
