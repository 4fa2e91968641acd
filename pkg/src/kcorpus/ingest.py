"""Repository walking, comment and function extraction, sample labelling.

Everything here works on raw source text: no preprocessing, no macro
expansion.  Offsets are character offsets into the decoded file text and
spans are half-open ``(start, end)`` pairs.
"""

from __future__ import annotations

import logging
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

log = logging.getLogger(__name__)

# Folder set used for the kernel tables.
DEFAULT_FOLDERS = (
    "arch", "block", "crypto", "certs", "fs", "ipc",
    "kernel", "lib", "mm", "net", "security", "virt",
)

# character classes produced by the scanner
CODE, COMMENT, LITERAL, DIRECTIVE = 0, 1, 2, 3

BLOCK = "block"
LINE = "line"

_CONTROL_WORDS = frozenset(
    {"if", "while", "for", "switch", "return", "sizeof", "do", "else", "case", "goto"}
)
_IDENT_CHARS = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_")


class ConfigError(Exception):
    """Bad repository root or folder configuration."""


@dataclass(frozen=True)
class SourceFile:
    path: str
    folder: str
    text: str


@dataclass(frozen=True)
class CommentBlock:
    span: tuple[int, int]
    style: str
    text: str
    is_doc: bool = False

    def to_dict(self) -> dict:
        return {"span": list(self.span), "style": self.style, "text": self.text, "is_doc": self.is_doc}

    @classmethod
    def from_dict(cls, d: dict) -> "CommentBlock":
        return cls(tuple(d["span"]), d["style"], d["text"], d["is_doc"])


@dataclass(frozen=True)
class FunctionRecord:
    file: str
    folder: str
    name: str
    span: tuple[int, int]
    code: str
    header_comment: CommentBlock | None = None
    internal_comments: tuple[CommentBlock, ...] = ()

    @property
    def line_count(self) -> int:
        return self.code.count("\n") + 1

    @property
    def sample_id(self) -> str:
        return f"{self.file}:{self.span[0]}"

    def to_dict(self) -> dict:
        return {
            "file": self.file,
            "folder": self.folder,
            "name": self.name,
            "span": list(self.span),
            "code": self.code,
            "header_comment": self.header_comment.to_dict() if self.header_comment else None,
            "internal_comments": [c.to_dict() for c in self.internal_comments],
            "line_count": self.line_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FunctionRecord":
        header = d.get("header_comment")
        return cls(
            file=d["file"],
            folder=d["folder"],
            name=d["name"],
            span=tuple(d["span"]),
            code=d["code"],
            header_comment=CommentBlock.from_dict(header) if header else None,
            internal_comments=tuple(CommentBlock.from_dict(c) for c in d.get("internal_comments", ())),
        )


@dataclass(frozen=True)
class SubsetLabels:
    in_gold: bool = False
    in_steps: bool = False
    in_sumry: bool = False
    file_group_id: str | None = None

    def to_dict(self) -> dict:
        return {
            "gold": self.in_gold,
            "steps": self.in_steps,
            "sumry": self.in_sumry,
            "file_group_id": self.file_group_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SubsetLabels":
        return cls(d["gold"], d["steps"], d["sumry"], d.get("file_group_id"))


@dataclass(frozen=True)
class Sample:
    """A labelled function record, i.e. one line of the dataset file."""

    record: FunctionRecord
    labels: SubsetLabels

    def to_dict(self) -> dict:
        d = self.record.to_dict()
        d["labels"] = self.labels.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Sample":
        return cls(FunctionRecord.from_dict(d), SubsetLabels.from_dict(d["labels"]))


@dataclass(frozen=True)
class FileSample:
    path: str
    members: tuple[tuple[FunctionRecord, CommentBlock | None], ...]

    def to_dict(self) -> dict:
        return {
            "file": self.path,
            "folder": self.members[0][0].folder,
            "members": [
                {
                    "name": rec.name,
                    "span": list(rec.span),
                    "code": rec.code,
                    "header_comment": header.to_dict() if header else None,
                    "line_count": rec.line_count,
                }
                for rec, header in self.members
            ],
        }


# --------------------------------------------------------------------------
# repository walking


def read_source(root: Path, path: Path) -> SourceFile:
    rel = path.relative_to(root).as_posix()
    text = path.read_bytes().decode("utf-8", errors="replace")
    return SourceFile(path=rel, folder=rel.split("/", 1)[0], text=text)


def scan_repository(root, folders: Iterable[str]) -> Iterator[SourceFile]:
    """Yield every ``.c`` file under ``root/<folder>`` in lexicographic path order."""
    root = Path(root)
    folders = list(folders)
    if not root.is_dir():
        raise ConfigError(f"repository root {str(root)!r} does not exist or is not a directory")
    if not folders:
        raise ConfigError("no folders selected")

    paths = []
    for folder in sorted(set(folders)):
        base = root / folder
        if not base.is_dir():
            continue
        for dirpath, dirnames, filenames in os.walk(base):
            dirnames.sort()
            for fn in filenames:
                if fn.endswith(".c"):
                    paths.append(Path(dirpath) / fn)
    paths.sort(key=lambda p: p.relative_to(root).as_posix())

    for path in paths:
        try:
            yield read_source(root, path)
        except OSError as exc:
            log.warning("skipping unreadable file %s: %s", path, exc)


# --------------------------------------------------------------------------
# lexical regions


def _note(diagnostics: list | None, msg: str) -> None:
    log.warning(msg)
    if diagnostics is not None:
        diagnostics.append(msg)


def scan_regions(text: str, path: str = "<text>", diagnostics: list | None = None):
    """Classify every character of ``text``.

    Returns ``(kinds, comments)`` where ``kinds`` is a bytearray holding one
    of CODE/COMMENT/LITERAL/DIRECTIVE per character and ``comments`` lists
    raw ``(start, end, style)`` triples in source order.
    """
    n = len(text)
    kinds = bytearray(n)
    comments = []
    i = 0
    line_start = True  # only whitespace seen since the last newline
    in_directive = False
    directive_start = 0

    while i < n:
        c = text[i]
        if c == "/" and i + 1 < n and text[i + 1] == "*":
            end = text.find("*/", i + 2)
            if end < 0:
                _note(diagnostics, f"{path}:{i}: unterminated block comment")
                end = n
            else:
                end += 2
            kinds[i:end] = b"\x01" * (end - i)
            comments.append((i, end, BLOCK))
            i = end
            line_start = False
            continue
        if c == "/" and i + 1 < n and text[i + 1] == "/":
            j = i + 2
            while j < n:
                if text[j] == "\n" and text[j - 1] != "\\":
                    break
                j += 1
            kinds[i:j] = b"\x01" * (j - i)
            comments.append((i, j, LINE))
            i = j
            continue
        if c == '"' or c == "'":
            j = i + 1
            while j < n:
                d = text[j]
                if d == "\\":
                    j += 2
                    continue
                if d == c:
                    j += 1
                    break
                if d == "\n":
                    if not in_directive:
                        _note(diagnostics, f"{path}:{i}: unterminated literal")
                    break
                j += 1
            j = min(j, n)
            kinds[i:j] = b"\x02" * (j - i)
            i = j
            line_start = False
            continue
        if c == "\n":
            if in_directive and text[i - 1] != "\\" and not (text[i - 1] == "\r" and text[i - 2 : i - 1] == "\\"):
                in_directive = False
                for k in range(directive_start, i):
                    if kinds[k] == CODE:
                        kinds[k] = DIRECTIVE
            line_start = True
            i += 1
            continue
        if c == "#" and line_start and not in_directive:
            in_directive = True
            directive_start = i
        if not c.isspace():
            line_start = False
        i += 1

    if in_directive:
        for k in range(directive_start, n):
            if kinds[k] == CODE:
                kinds[k] = DIRECTIVE
    return kinds, comments


def _clean_block(body: str) -> str:
    lines = []
    for line in body.split("\n"):
        s = line.strip()
        if s.startswith("*"):
            s = s[1:]
            if s.startswith(" "):
                s = s[1:]
        lines.append(s.rstrip())
    while lines and not lines[0]:
        lines.pop(0)
    while lines and not lines[-1]:
        lines.pop()
    return "\n".join(lines)


def _clean_line(body: str) -> str:
    lines = []
    for line in body.split("\n"):
        s = line.strip().lstrip("/")
        if s.startswith(" "):
            s = s[1:]
        lines.append(s.rstrip().rstrip("\\").rstrip())
    while lines and not lines[0]:
        lines.pop(0)
    while lines and not lines[-1]:
        lines.pop()
    return "\n".join(lines)


def _make_comment(text: str, start: int, end: int, style: str) -> CommentBlock:
    raw = text[start:end]
    if style == BLOCK:
        is_doc = raw.startswith("/**") and not raw.startswith("/**/")
        body = raw[2:-2] if raw.endswith("*/") and len(raw) >= 4 else raw[2:]
        if is_doc:
            body = body.lstrip("*")
        return CommentBlock((start, end), BLOCK, _clean_block(body), is_doc)
    return CommentBlock((start, end), LINE, _clean_line(raw), False)


def comments_from_regions(text: str, raw: list) -> list[CommentBlock]:
    """Build CommentBlocks, merging runs of line comments on adjacent lines."""
    merged = []
    for start, end, style in raw:
        if merged and style == LINE and merged[-1][2] == LINE:
            gap = text[merged[-1][1]:start]
            if gap.isspace() and gap.count("\n") == 1:
                merged[-1] = (merged[-1][0], end, LINE)
                continue
        merged.append((start, end, style))
    return [_make_comment(text, s, e, st) for s, e, st in merged]


def extract_comments(file: SourceFile, diagnostics: list | None = None) -> list[CommentBlock]:
    _, raw = scan_regions(file.text, file.path, diagnostics)
    return comments_from_regions(file.text, raw)


# --------------------------------------------------------------------------
# function matching


def _skip_ws_back(s: str, j: int) -> int:
    while j >= 0 and s[j].isspace():
        j -= 1
    return j


def _match_open_paren(s: str, close: int) -> int:
    depth = 0
    j = close
    while j >= 0:
        if s[j] == ")":
            depth += 1
        elif s[j] == "(":
            depth -= 1
            if depth == 0:
                return j
        elif s[j] in ";{}":
            return -1
        j -= 1
    return -1


def _function_head(text: str, masked: str, kinds: bytearray, brace: int):
    """Return ``(start, name)`` when the ``{`` at ``brace`` opens a function body."""
    j = _skip_ws_back(masked, brace - 1)
    while True:
        if j < 0 or masked[j] != ")":
            return None
        p = _match_open_paren(masked, j)
        if p < 0:
            return None
        k = _skip_ws_back(masked, p - 1)
        end = k + 1
        while k >= 0 and masked[k] in _IDENT_CHARS:
            k -= 1
        name = masked[k + 1:end]
        if not name or name[0].isdigit() or name in _CONTROL_WORDS:
            return None
        before = _skip_ws_back(masked, k)
        # trailing annotations such as __releases(x) or __attribute__((...))
        if name.startswith("__") and before >= 0 and masked[before] == ")":
            j = before
            continue
        break

    name_start = k + 1
    # walk back over the return type and storage words
    s = name_start - 1
    newline_seen = False
    while s >= 0:
        ch = masked[s]
        if kinds[s] != CODE or ch in ";{}":
            break
        if ch == "\n":
            if newline_seen:
                break  # blank line
            newline_seen = True
        elif not ch.isspace():
            newline_seen = False
        s -= 1
    start = s + 1
    while start < name_start and text[start].isspace():
        start += 1
    if "=" in masked[start:name_start]:
        return None
    return start, name


_DIRECTIVE_WORD = re.compile(r"#\s*([A-Za-z_]\w*)")
_PAIRS = {")": "(", "]": "[", "}": "{"}


def _balanced(masked: str, start: int, end: int) -> bool:
    stack = []
    for ch in masked[start:end]:
        if ch in "([{":
            stack.append(ch)
        elif ch in _PAIRS:
            if not stack or stack.pop() != _PAIRS[ch]:
                return False
    return not stack


def extract_functions(file: SourceFile, diagnostics: list | None = None, _regions=None) -> list[FunctionRecord]:
    """Find top-level function definitions by brace matching on comment- and
    string-blanked text.  Prototypes, initialisers and macro bodies never open
    a body at depth zero after a parameter list, so they are skipped."""
    text = file.text
    kinds, _ = _regions if _regions is not None else scan_regions(text, file.path, diagnostics)
    masked = "".join(ch if kinds[i] == CODE or ch == "\n" else " " for i, ch in enumerate(text))

    records = []
    depth = 0
    open_fn = None
    # brace depth follows the first branch of every #if/#else chain
    cond_stack: list[list] = []
    for i, ch in enumerate(masked):
        if kinds[i] == DIRECTIVE and (i == 0 or kinds[i - 1] != DIRECTIVE):
            m = _DIRECTIVE_WORD.match(text, i)
            word = m.group(1) if m else ""
            if word.startswith("if"):
                cond_stack.append([depth, None])
            elif word in ("else", "elif", "elifdef", "elifndef") and cond_stack:
                top = cond_stack[-1]
                if top[1] is None:
                    top[1] = depth
                depth = top[0]
            elif word == "endif" and cond_stack:
                top = cond_stack.pop()
                if top[1] is not None:
                    depth = top[1]
            continue
        if ch == "{":
            if depth == 0:
                head = _function_head(text, masked, kinds, i)
                open_fn = head
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth < 0:
                _note(diagnostics, f"{file.path}:{i}: unmatched closing brace")
                depth = 0
                open_fn = None
            elif depth == 0 and open_fn is not None:
                start, name = open_fn
                open_fn = None
                if not _balanced(masked, start, i + 1):
                    _note(diagnostics, f"{file.path}:{start}: brackets of {name!r} do not balance, skipped")
                    continue
                records.append(FunctionRecord(file.path, file.folder, name, (start, i + 1), text[start:i + 1]))
    if depth > 0 and open_fn is not None:
        _note(diagnostics, f"{file.path}:{open_fn[0]}: unbalanced braces, discarding trailing function {open_fn[1]!r}")
    return records


# --------------------------------------------------------------------------
# association and labels


def associate_comments(functions: list[FunctionRecord], comments: list[CommentBlock], text: str) -> list[FunctionRecord]:
    """Attach the header comment and internal comments of each function.

    ``text`` is the owning file's text; it is needed to check that only
    whitespace separates a header comment from its signature.
    """
    out = []
    ci = 0
    nc = len(comments)
    for fn in functions:
        start, end = fn.span
        while ci < nc and comments[ci].span[1] <= start:
            ci += 1
        header = None
        if ci > 0:
            cand = comments[ci - 1]
            if text[cand.span[1]:start].strip() == "":
                header = cand
        internal = []
        k = ci
        while k < nc and comments[k].span[0] < end:
            if comments[k].span[0] > start and comments[k].span[1] < end:
                internal.append(comments[k])
            k += 1
        out.append(replace(fn, header_comment=header, internal_comments=tuple(internal)))
    return out


_KDOC_NAME = re.compile(r"^\s*(?:(?:struct|union|enum|typedef)\s+)?[A-Za-z_]\w*\s*(?:\(\))?\s*(?:-+|:)\s*(.*)$")
_RETURN_LINE = re.compile(r"^(?:@?returns?\b|return\s+value)", re.IGNORECASE)


def summary_line(comment: CommentBlock | None) -> str:
    """First descriptive line of a header comment ("" when there is none).

    A kernel-doc lead line ``name() - text`` yields ``text``.
    """
    if comment is None:
        return ""
    for line in comment.text.split("\n"):
        s = line.strip()
        if not s:
            continue
        if s.startswith("@") or s.upper().startswith("SPDX-LICENSE-IDENTIFIER"):
            return ""
        if comment.is_doc:
            m = _KDOC_NAME.match(s)
            if m:
                return m.group(1).strip()
        return s
    return ""


def classify_sample(record: FunctionRecord, steps_threshold: int = 1) -> SubsetLabels:
    summary = summary_line(record.header_comment)
    in_sumry = bool(summary)
    in_gold = False
    if in_sumry and record.header_comment.is_doc:
        lines = [s.strip() for s in record.header_comment.text.split("\n")]
        has_param = any(s.startswith("@") for s in lines)
        has_return = any(_RETURN_LINE.match(s) for s in lines)
        in_gold = has_param and has_return
    in_steps = in_sumry and len(record.internal_comments) >= steps_threshold
    return SubsetLabels(in_gold=in_gold, in_steps=in_steps, in_sumry=in_sumry)


def build_file_samples(records_by_file: dict[str, list[FunctionRecord]]) -> list[FileSample]:
    samples = []
    for path in sorted(records_by_file):
        records = sorted(records_by_file[path], key=lambda r: r.span[0])
        if any(r.header_comment is not None for r in records):
            samples.append(FileSample(path, tuple((r, r.header_comment) for r in records)))
    return samples


# --------------------------------------------------------------------------
# pipeline


@dataclass
class IngestResult:
    samples: list[Sample] = field(default_factory=list)
    file_samples: list[FileSample] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    file_count: int = 0

    def folder_counts(self) -> dict[str, dict[str, int]]:
        counts: dict[str, dict[str, int]] = {}
        for s in self.samples:
            row = counts.setdefault(s.record.folder, {"files_scanned": 0, "overall": 0, "files": 0, "gold": 0, "steps": 0, "sumry": 0})
            row["overall"] += 1
            row["gold"] += s.labels.in_gold
            row["steps"] += s.labels.in_steps
            row["sumry"] += s.labels.in_sumry
        for fs in self.file_samples:
            counts[fs.members[0][0].folder]["files"] += 1
        return dict(sorted(counts.items()))


def ingest_file(source: SourceFile, steps_threshold: int = 1):
    """Extract and label the functions of one file.

    Returns ``(records, labels, diagnostics)``; pure, so safe to run in a
    worker process.
    """
    diagnostics: list[str] = []
    regions = scan_regions(source.text, source.path, diagnostics)
    comments = comments_from_regions(source.text, regions[1])
    functions = extract_functions(source, diagnostics, _regions=regions)
    records = associate_comments(functions, comments, source.text)
    labels = [classify_sample(r, steps_threshold) for r in records]
    return records, labels, diagnostics


def _ingest_star(args):
    return ingest_file(*args)


def ingest_repository(root, folders: Iterable[str] = DEFAULT_FOLDERS, steps_threshold: int = 1, workers: int = 1) -> IngestResult:
    sources = list(scan_repository(root, folders))
    jobs = [(s, steps_threshold) for s in sources]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_ingest_star, jobs, chunksize=8))
    else:
        results = [_ingest_star(j) for j in jobs]

    result = IngestResult(file_count=len(sources))
    by_file: dict[str, list[FunctionRecord]] = {}
    pending = []
    for source, (records, labels, diags) in zip(sources, results):
        result.diagnostics.extend(diags)
        by_file[source.path] = records
        pending.extend(zip(records, labels))

    result.file_samples = build_file_samples(by_file)
    grouped = {fs.path for fs in result.file_samples}
    for rec, lab in pending:
        if rec.file in grouped:
            lab = replace(lab, file_group_id=rec.file)
        result.samples.append(Sample(rec, lab))
    result.samples.sort(key=lambda s: (s.record.file, s.record.span[0]))
    return result
