"""Repository-wide store of name tokens.

Each entry records how many functions use the name, a meaning taken from
the header summary when the name is a function's own, and how many
functions it shares with every other name.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from kcorpus.ingest import FunctionRecord, summary_line
from kcorpus.lexer import NAME, Token


class UnknownNameError(KeyError):
    pass


@dataclass
class KbEntry:
    name: str
    meaning: str | None = None
    relations: dict[str, int] = field(default_factory=dict)
    occurrence_count: int = 0

    def to_dict(self) -> dict:
        d: dict = {"name": self.name}
        if self.meaning is not None:
            d["meaning"] = self.meaning
        d["occurrence_count"] = self.occurrence_count
        d["relations"] = [[k, self.relations[k]] for k in sorted(self.relations)]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "KbEntry":
        return cls(d["name"], d.get("meaning"), {k: c for k, c in d["relations"]}, d["occurrence_count"])


@dataclass
class KnowledgeBase:
    entries: dict[str, KbEntry] = field(default_factory=dict)
    sample_count: int = 0

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def save(self, path) -> None:
        """Write entries sorted by name, one JSON object per line.

        The sample count goes to a ``.meta.json`` sidecar so the entry file
        stays a plain keyed record list.
        """
        path = Path(path)
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            for name in sorted(self.entries):
                fh.write(json.dumps(self.entries[name].to_dict(), ensure_ascii=False) + "\n")
        meta_path(path).write_text(json.dumps({"sample_count": self.sample_count}) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "KnowledgeBase":
        path = Path(path)
        kb = cls()
        with path.open(encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    entry = KbEntry.from_dict(json.loads(line))
                    kb.entries[entry.name] = entry
        meta = meta_path(path)
        if meta.exists():
            kb.sample_count = json.loads(meta.read_text(encoding="utf-8"))["sample_count"]
        return kb


def meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def _better_meaning(a: str | None, b: str | None) -> str | None:
    """Longer text wins; equal lengths resolve to the lexicographically smaller."""
    if a is None:
        return b
    if b is None:
        return a
    if len(a) != len(b):
        return a if len(a) > len(b) else b
    return min(a, b)


def build_kb(samples: Iterable[tuple[FunctionRecord, list[Token]]]) -> KnowledgeBase:
    kb = KnowledgeBase()
    entries = kb.entries
    for record, tokens in samples:
        kb.sample_count += 1
        names = sorted({t.lexeme for t in tokens if t.kind == NAME})
        for name in names:
            entry = entries.get(name)
            if entry is None:
                entry = entries[name] = KbEntry(name)
            entry.occurrence_count += 1
        for a, b in itertools.combinations(names, 2):
            ra = entries[a].relations
            rb = entries[b].relations
            ra[b] = ra.get(b, 0) + 1
            rb[a] = rb.get(a, 0) + 1
        summary = summary_line(record.header_comment)
        if summary and record.name in entries:
            own = entries[record.name]
            own.meaning = _better_meaning(own.meaning, summary)
    return kb


def merge_kb(a: KnowledgeBase, b: KnowledgeBase) -> KnowledgeBase:
    """Combine knowledge bases built over disjoint sample sets."""
    out = KnowledgeBase(sample_count=a.sample_count + b.sample_count)
    for name in sorted(set(a.entries) | set(b.entries)):
        ea = a.entries.get(name)
        eb = b.entries.get(name)
        merged = KbEntry(name)
        for e in (ea, eb):
            if e is None:
                continue
            merged.occurrence_count += e.occurrence_count
            merged.meaning = _better_meaning(merged.meaning, e.meaning)
            for other, count in e.relations.items():
                merged.relations[other] = merged.relations.get(other, 0) + count
        out.entries[name] = merged
    return out


def lookup(kb: KnowledgeBase, name: str) -> KbEntry | None:
    return kb.entries.get(name)


def related_names(kb: KnowledgeBase, name: str, limit: int) -> list[tuple[str, int]]:
    entry = kb.entries.get(name)
    if entry is None:
        raise UnknownNameError(name)
    ranked = sorted(entry.relations.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:max(limit, 0)]


def kb_statistics(kb: KnowledgeBase) -> tuple[int, int, float]:
    """``(entries, entries with a meaning, mean number of distinct partners)``."""
    n = len(kb.entries)
    if not n:
        return 0, 0, 0.0
    with_meaning = sum(1 for e in kb.entries.values() if e.meaning)
    total = sum(len(e.relations) for e in kb.entries.values())
    return n, with_meaning, total / n
