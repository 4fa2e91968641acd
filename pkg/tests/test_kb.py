import random

import pytest
from hypothesis import given, settings, strategies as st

from kcorpus.ingest import BLOCK, CommentBlock, FunctionRecord
from kcorpus.kb import (
    KnowledgeBase,
    UnknownNameError,
    build_kb,
    kb_statistics,
    lookup,
    merge_kb,
    related_names,
)
from kcorpus.lexer import tokenize

from conftest import ADD_CODE


def record(name, code, header=None, start=0):
    comment = CommentBlock((0, 1), BLOCK, header, False) if header else None
    return FunctionRecord("ipc/x.c", "ipc", name, (start, start + len(code)), code, comment)


def add_kb():
    return build_kb([(record("add", ADD_CODE, "add two ints"), tokenize(ADD_CODE))])


def assert_symmetric(kb):
    for name, entry in kb.entries.items():
        assert name not in entry.relations
        assert entry.occurrence_count >= 1
        for other, count in entry.relations.items():
            assert count >= 1
            assert kb.entries[other].relations[name] == count


def test_add_fixture():
    kb = add_kb()
    assert sorted(kb.entries) == ["a", "add", "b"]
    assert kb.entries["add"].relations == {"a": 1, "b": 1}
    assert kb.entries["add"].meaning == "add two ints"
    assert kb.entries["a"].meaning is None
    assert kb.sample_count == 1
    assert_symmetric(kb)


def test_empty_corpus():
    kb = build_kb([])
    assert len(kb) == 0
    assert kb_statistics(kb) == (0, 0, 0.0)


def test_lookup():
    kb = add_kb()
    assert set(lookup(kb, "add").relations) == {"a", "b"}
    assert lookup(kb, "zzz") is None


def test_related_names():
    kb = add_kb()
    assert related_names(kb, "add", 10) == [("a", 1), ("b", 1)]
    assert related_names(kb, "add", 0) == []
    with pytest.raises(UnknownNameError):
        related_names(kb, "nope", 5)


def test_statistics_add_fixture():
    # a and b share the add function too, so each relates to both others
    assert kb_statistics(add_kb()) == (3, 1, 2.0)


def test_merge_identity():
    kb = add_kb()
    assert merge_kb(kb, KnowledgeBase()) == kb
    assert merge_kb(KnowledgeBase(), kb) == kb


def test_meaning_prefers_longer_then_smaller():
    code = "int f(void) { return 0; }"
    kb = build_kb([
        (record("f", code, "short"), tokenize(code)),
        (record("f", code, "a longer one", 100), tokenize(code)),
        (record("f", code, "b longer one", 200), tokenize(code)),
    ])
    assert kb.entries["f"].meaning == "a longer one"


def test_occurrence_is_per_function():
    code = "int f(int x) { return x + x * x; }"
    kb = build_kb([(record("f", code), tokenize(code))])
    assert kb.entries["x"].occurrence_count == 1
    assert kb.entries["x"].relations == {"f": 1}


def test_persist_roundtrip(tmp_path):
    kb = add_kb()
    kb.save(tmp_path / "kb.jsonl")
    assert KnowledgeBase.load(tmp_path / "kb.jsonl") == kb
    lines = (tmp_path / "kb.jsonl").read_text().splitlines()
    assert [line.split('"')[3] for line in lines] == ["a", "add", "b"]


# -- randomized corpora -----------------------------------------------------

NAMES = ["alloc", "free", "len", "buf", "ns", "msg", "sem", "shm", "ret", "err", "i", "id", "lock"]
HEADERS = [None, "free the thing", "take a lock", "count", "do the work carefully"]


def random_corpus(rng, size):
    out = []
    for k in range(size):
        used = rng.sample(NAMES, rng.randint(1, 6))
        fname = used[0]
        code = "int %s(void) { %s; }" % (fname, " + ".join(used[1:]) or "0")
        out.append((record(fname, code, rng.choice(HEADERS), k * 1000), tokenize(code)))
    return out


corpus_seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=50, deadline=None)
@given(corpus_seeds)
def test_merge_of_partition_equals_single_pass(seed):
    rng = random.Random(seed)
    corpus = random_corpus(rng, rng.randint(0, 25))
    cut = rng.randint(0, len(corpus))
    whole = build_kb(corpus)
    merged = merge_kb(build_kb(corpus[:cut]), build_kb(corpus[cut:]))
    assert merged == whole
    assert_symmetric(whole)
    assert_symmetric(merged)


@settings(max_examples=50, deadline=None)
@given(corpus_seeds)
def test_merge_commutative_associative(seed):
    rng = random.Random(seed)
    a, b, c = (build_kb(random_corpus(rng, rng.randint(0, 8))) for _ in range(3))
    assert merge_kb(a, b) == merge_kb(b, a)
    assert merge_kb(merge_kb(a, b), c) == merge_kb(a, merge_kb(b, c))


@settings(max_examples=25, deadline=None)
@given(corpus_seeds)
def test_roundtrip_random(tmp_path_factory, seed):
    rng = random.Random(seed)
    kb = build_kb(random_corpus(rng, rng.randint(0, 15)))
    path = tmp_path_factory.mktemp("kb") / "kb.jsonl"
    kb.save(path)
    assert KnowledgeBase.load(path) == kb
