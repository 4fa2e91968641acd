import json
import textwrap

import pytest
from hypothesis import given, settings, strategies as st

from kcorpus.ingest import (
    BLOCK,
    LINE,
    CommentBlock,
    ConfigError,
    FunctionRecord,
    SourceFile,
    associate_comments,
    build_file_samples,
    classify_sample,
    extract_comments,
    extract_functions,
    ingest_repository,
    scan_repository,
    summary_line,
)

from conftest import write_repo


def src(text, path="ipc/x.c"):
    return SourceFile(path, path.split("/")[0], text)


def funcs_with_comments(text):
    f = src(text)
    return associate_comments(extract_functions(f), extract_comments(f), text)


# -- scan_repository --------------------------------------------------------

def test_scan_missing_root(tmp_path):
    with pytest.raises(ConfigError):
        list(scan_repository(tmp_path / "nope", ["ipc"]))


def test_scan_empty_dir(tmp_path):
    assert list(scan_repository(tmp_path, ["arch"])) == []


def test_scan_only_c_files(tmp_path):
    write_repo(tmp_path, {"ipc/a.c": "", "ipc/b.h": "", "ipc/c.c": ""})
    files = list(scan_repository(tmp_path, ["ipc"]))
    assert [f.path for f in files] == ["ipc/a.c", "ipc/c.c"]
    assert all(f.folder == "ipc" for f in files)


def test_scan_recurses_and_sorts(tmp_path):
    write_repo(tmp_path, {"kernel/z.c": "", "kernel/sched/a.c": "", "mm/b.c": ""})
    paths = [f.path for f in scan_repository(tmp_path, ["mm", "kernel"])]
    assert paths == sorted(paths)
    assert set(paths) == {"kernel/z.c", "kernel/sched/a.c", "mm/b.c"}


# -- extract_comments -------------------------------------------------------

def test_single_block_comment():
    [c] = extract_comments(src("int x; /* count */"))
    assert c.style == BLOCK and c.text == "count" and not c.is_doc
    assert c.span == (7, 18)


def test_comment_inside_string_ignored():
    assert extract_comments(src('char *s = "/* not a comment */";')) == []


def test_consecutive_line_comments_merge():
    text = "// first\n// second\nint x;\n"
    [c] = extract_comments(src(text))
    assert c.style == LINE
    assert c.text == "first\nsecond"
    assert c.span == (0, len("// first\n// second"))


def test_line_comments_split_by_blank_line():
    cs = extract_comments(src("// a\n\n// b\n"))
    assert [c.text for c in cs] == ["a", "b"]


def test_unterminated_block_comment_runs_to_eof():
    diags = []
    text = "int x; /* never closed\nint y;"
    [c] = extract_comments(src(text), diags)
    assert c.span == (7, len(text))
    assert diags


def test_doc_comment_decoration_stripped():
    text = "/**\n * foo - do a thing\n * @a: the a\n */\n"
    [c] = extract_comments(src(text))
    assert c.is_doc
    assert c.text == "foo - do a thing\n@a: the a"


def test_empty_block_is_not_doc():
    [c] = extract_comments(src("/**/ int x;"))
    assert not c.is_doc


def test_comment_text_roundtrip():
    c = CommentBlock((1, 5), BLOCK, "hi", False)
    assert CommentBlock.from_dict(json.loads(json.dumps(c.to_dict()))) == c


# -- extract_functions ------------------------------------------------------

def test_minimal_function():
    [r] = extract_functions(src("static int f(void) { return 0; }"))
    assert r.name == "f"
    assert r.line_count == 1
    assert r.code == "static int f(void) { return 0; }"


def test_prototype_not_a_record():
    text = "int g(int);\nint g(int x)\n{\n\treturn x;\n}\n"
    [r] = extract_functions(src(text))
    assert r.name == "g"
    assert r.code.startswith("int g(int x)")
    assert r.line_count == 4


def test_struct_and_initializer_not_records():
    text = textwrap.dedent("""\
        struct s { int a; };
        static const struct ops o = { .fn = f };
        int arr[] = { 1, 2 };
        void h(void) { if (x) { y(); } }
        """)
    assert [r.name for r in extract_functions(src(text))] == ["h"]


def test_multiline_signature_and_attributes():
    text = "static int __init\nfoo_init(struct a *a,\n\t int b)\n{\n\treturn 0;\n}\n"
    [r] = extract_functions(src(text))
    assert r.name == "foo_init"
    assert r.code.startswith("static int __init")


def test_braces_in_strings_and_comments_ignored():
    text = 'void f(void)\n{\n\tputs("}"); /* { */\n\tc = \'{\';\n}\nint g(void) { return 1; }\n'
    assert [r.name for r in extract_functions(src(text))] == ["f", "g"]


def test_unbalanced_trailing_candidate_discarded():
    diags = []
    text = "int ok(void) { return 1; }\nint bad(void) {\n\tif (x) {\n"
    recs = extract_functions(src(text), diags)
    assert [r.name for r in recs] == ["ok"]
    assert any("ipc/x.c" in str(d) for d in diags)


def test_preprocessor_branches_do_not_break_following_functions():
    text = textwrap.dedent("""\
        int a(int x)
        {
        #ifdef FOO
        \tif (x) {
        #else
        \tif (!x) {
        #endif
        \t\treturn 1;
        \t}
        \treturn 0;
        }

        int b(void)
        {
        \treturn 2;
        }
        """)
    names = [r.name for r in extract_functions(src(text))]
    assert "b" in names


def test_record_roundtrip():
    [r] = funcs_with_comments("/* hdr */\nint f(void)\n{\n\t// in\n\treturn 0;\n}\n")
    assert FunctionRecord.from_dict(json.loads(json.dumps(r.to_dict()))) == r


# -- associate_comments -----------------------------------------------------

def test_adjacent_header():
    text = "/* a comment that is 40 chars long ... */\n\nint f(void) { return 0; }"
    [r] = funcs_with_comments(text)
    assert r.header_comment is not None
    assert r.header_comment.text.startswith("a comment")


def test_stray_declaration_blocks_header():
    text = "/* about something */\n\nint stray;\nint f(void) { return 0; }"
    [r] = funcs_with_comments(text)
    assert r.header_comment is None


def test_internal_comments_in_order():
    text = "int f(void)\n{\n\t/* one */\n\tx();\n\t// two\n\treturn 0;\n}\n"
    [r] = funcs_with_comments(text)
    assert [c.text for c in r.internal_comments] == ["one", "two"]


def test_no_comment_claimed_twice():
    text = "/* h1 */\nint f(void) { /* in */ return 0; }\n/* h2 */\nint g(void) { return 1; }\n"
    recs = funcs_with_comments(text)
    spans = []
    for r in recs:
        if r.header_comment:
            spans.append(r.header_comment.span)
        spans.extend(c.span for c in r.internal_comments)
    assert len(spans) == len(set(spans)) == 3


# -- classify_sample --------------------------------------------------------

KDOC = textwrap.dedent("""\
    /**
     * add_two - add two ints
     * @a: first
     * @b: second
     *
     * Return: the sum
     */
    int add_two(int a, int b)
    {
    \t/* step one */
    \tint s = a;
    \t/* step two */
    \treturn s + b;
    }
    """)


def test_kdoc_is_gold_steps_sumry():
    [r] = funcs_with_comments(KDOC)
    labels = classify_sample(r)
    assert (labels.in_gold, labels.in_steps, labels.in_sumry) == (True, True, True)
    assert summary_line(r.header_comment) == "add two ints"


def test_no_header_all_false():
    [r] = funcs_with_comments("int f(void) { return 0; }")
    labels = classify_sample(r)
    assert not (labels.in_gold or labels.in_steps or labels.in_sumry)


def test_plain_header_sumry_only():
    [r] = funcs_with_comments("/* reset the counter */\nvoid f(void) { c = 0; }")
    labels = classify_sample(r)
    assert (labels.in_gold, labels.in_steps, labels.in_sumry) == (False, False, True)


def test_steps_threshold_knob():
    [r] = funcs_with_comments(KDOC)
    assert classify_sample(r, steps_threshold=2).in_steps
    assert not classify_sample(r, steps_threshold=3).in_steps


def test_spdx_header_is_not_a_summary():
    [r] = funcs_with_comments("// SPDX-License-Identifier: GPL-2.0\nint f(void) { return 0; }")
    assert not classify_sample(r).in_sumry


# -- build_file_samples -----------------------------------------------------

def test_file_with_one_commented_function():
    text = "/* one */\nint a(void) { return 1; }\nint b(void) { return 2; }\nint c(void) { return 3; }\n"
    recs = funcs_with_comments(text)
    [fs] = build_file_samples({"ipc/x.c": recs})
    assert len(fs.members) == 3
    assert all(rec.file == fs.path for rec, _ in fs.members)
    assert [h is not None for _, h in fs.members] == [True, False, False]


def test_file_without_comments_excluded():
    recs = funcs_with_comments("int a(void) { return 1; }\n")
    assert build_file_samples({"ipc/x.c": recs}) == []


# -- whole-repository properties --------------------------------------------

def test_ingest_fixture_repo(fixture_repo):
    res = ingest_repository(fixture_repo, ["ipc", "lib"])
    assert res.file_count == 2
    names = [s.record.name for s in res.samples]
    assert names == ["msg_add", "msg_reset", "msg_peek", "twice"]
    gold = [s.record.name for s in res.samples if s.labels.in_gold]
    assert gold == ["msg_add"]
    assert [f.path for f in res.file_samples] == ["ipc/msg.c"]
    counts = res.folder_counts()
    assert counts["ipc"]["overall"] == 3 and counts["lib"]["overall"] == 1


def test_ingest_parallel_matches_serial(fixture_repo):
    a = ingest_repository(fixture_repo, ["ipc", "lib"], workers=1)
    b = ingest_repository(fixture_repo, ["ipc", "lib"], workers=2)
    assert [s.to_dict() for s in a.samples] == [s.to_dict() for s in b.samples]


_fragment = st.sampled_from([
    "/* hdr */\n",
    "/**\n * f - doc\n * @x: x\n * Return: y\n */\n",
    "// note\n",
    "int v;\n",
    "\n",
    "int f{i}(int x)\n{{\n\treturn x;\n}}\n",
    "static void g{i}(void)\n{{\n\t/* step */\n\tif (a) {{\n\t\tb();\n\t}}\n}}\n",
    'const char *s{i} = "}} /* {{";\n',
    "#define M{i}(x) {{ x }}\n",
])


@settings(max_examples=60, deadline=None)
@given(st.lists(_fragment, max_size=12))
def test_record_invariants(parts):
    text = "".join(p.format(i=i) for i, p in enumerate(parts))
    f = src(text)
    comments = extract_comments(f)
    recs = associate_comments(extract_functions(f), comments, text)
    for c in comments:
        assert 0 <= c.span[0] < c.span[1] <= len(text)
        assert "/*" not in c.text and "*/" not in c.text
    for r in recs:
        assert text[r.span[0]:r.span[1]] == r.code
        assert r.code.rstrip().endswith("}")
        assert r.line_count >= 1
        labels = classify_sample(r)
        assert labels.in_sumry or not (labels.in_gold or labels.in_steps)
        assert classify_sample(r) == labels
    # functions never overlap
    for a, b in zip(recs, recs[1:]):
        assert a.span[1] <= b.span[0]
