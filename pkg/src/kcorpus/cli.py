"""Command-line pipeline: ingest -> analyze -> stats / kb / export.

Every stage reads and writes plain files under ``--out`` so stages can be
rerun independently.  Outputs are sorted and carry no timestamps, so a
rerun over unchanged input reproduces them byte for byte.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from kcorpus.complexity import UndefinedMetricError, analyze, mean_of
from kcorpus.ingest import DEFAULT_FOLDERS, ConfigError, FunctionRecord, ingest_repository
from kcorpus.kb import KnowledgeBase, build_kb, kb_statistics, merge_kb, related_names
from kcorpus.lexer import count_tokens, tokenize
from kcorpus.structure import StructureError, dump_network, parse_structure

log = logging.getLogger("kcorpus")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_MISSING = 4
EXIT_ABSENT_NAME = 5

SAMPLES = "samples.jsonl"
FILES = "files.jsonl"
INGEST_LOG = "ingest_log.json"
NETWORKS = "networks.jsonl"
METRICS = "metrics.jsonl"
ANALYZE_LOG = "analyze_log.json"
KB_FILE = "kb.jsonl"
SUBSETS = ("gold", "steps", "sumry", "files")

TABLE1_COLUMNS = ("Overall", "Files", "Gold", "Steps", "Sumry")
TABLE2_COLUMNS = (
    ("Token Num", "total"), ("Keyw Num", "keyword"), ("Name Num", "name"),
    ("Punc Num", "punctuation"), ("Operator Num", "operator"),
    ("Node Num", "n"), ("Max DC", "max_dc"), ("Mean Dist", "mean_distance"),
)


class MissingArtifact(Exception):
    def __init__(self, path: Path, stage: str):
        super().__init__(f"missing {path.name} in {path.parent}; run '{stage}' first")


# --------------------------------------------------------------------------
# file helpers


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False)


def write_jsonl(path: Path, records) -> int:
    tmp = path.with_name(path.name + ".tmp")
    count = 0
    with tmp.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(_dumps(rec) + "\n")
            count += 1
    os.replace(tmp, path)
    return count


def write_json(path: Path, obj) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(obj, ensure_ascii=False, indent=2) + "\n", encoding="utf-8", newline="\n")
    os.replace(tmp, path)


def write_text(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="\n")


def read_jsonl(path: Path, stage: str) -> list[dict]:
    if not path.exists():
        raise MissingArtifact(path, stage)
    with path.open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _folder_order(folders) -> list[str]:
    known = [f for f in DEFAULT_FOLDERS if f in folders]
    return known + sorted(set(folders) - set(DEFAULT_FOLDERS))


# --------------------------------------------------------------------------
# ingest


def cmd_ingest(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = ingest_repository(args.repo, args.folders, args.steps_threshold, args.workers)
    n = write_jsonl(out / SAMPLES, (s.to_dict() for s in result.samples))
    write_jsonl(out / FILES, (fs.to_dict() for fs in result.file_samples))
    write_json(out / INGEST_LOG, {
        "repo": str(args.repo),
        "folders": list(args.folders),
        "steps_threshold": args.steps_threshold,
        "files_scanned": result.file_count,
        "samples": n,
        "file_samples": len(result.file_samples),
        "per_folder": result.folder_counts(),
        "diagnostics": result.diagnostics,
    })
    log.info("ingested %d samples from %d files", n, result.file_count)
    print(f"{n} samples, {len(result.file_samples)} file samples -> {out}")
    return EXIT_OK


# --------------------------------------------------------------------------
# analyze


def analyze_sample(record: dict, expr_depth: int | None = None):
    """Tokenize, group and measure one dataset record.

    Returns ``(network_dump, metrics, error)``; pure, so it can run in a
    worker process.
    """
    sid = f"{record['file']}:{record['span'][0]}"
    tokens = tokenize(record["code"])
    counts = count_tokens(tokens)
    try:
        net = parse_structure(tokens, expr_depth)
    except StructureError as exc:
        return None, None, f"{sid}: {exc}"
    metrics = {"id": sid, "folder": record["folder"], "n": net.n, "edges": len(net.edges)}
    try:
        report = analyze(net)
    except UndefinedMetricError as exc:
        return dump_network(sid, net), None, f"{sid}: {exc}"
    metrics.update(max_dc=round(report.max_dc, 6), mean_distance=round(report.mean_distance, 6))
    metrics["tokens"] = counts.to_dict()
    return dump_network(sid, net), metrics, None


def _analyze_star(args):
    return analyze_sample(*args)


def _pool_map(fn, jobs, workers: int, chunksize: int = 4):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs, chunksize=chunksize))
    return [fn(j) for j in jobs]


def cmd_analyze(args) -> int:
    out = Path(args.out)
    records = read_jsonl(out / SAMPLES, "ingest")
    results = _pool_map(_analyze_star, [(r, args.expr_depth) for r in records], args.workers)
    errors = [err for _, _, err in results if err]
    write_jsonl(out / NETWORKS, (net for net, _, _ in results if net is not None))
    n = write_jsonl(out / METRICS, (m for _, m, _ in results if m is not None))
    write_json(out / ANALYZE_LOG, {"samples": len(records), "measured": n, "expr_depth": args.expr_depth, "errors": errors})
    print(f"{n} of {len(records)} samples measured -> {out}")
    return EXIT_OK


# --------------------------------------------------------------------------
# stats


def table1(samples: list[dict], files: list[dict]) -> dict:
    def avg(lines):
        return round(mean_of(lines), 2)

    subsets = {
        "Overall": samples,
        "Gold": [s for s in samples if s["labels"]["gold"]],
        "Steps": [s for s in samples if s["labels"]["steps"]],
        "Sumry": [s for s in samples if s["labels"]["sumry"]],
    }
    member_lines = [m["line_count"] for f in files for m in f["members"]]
    avg_length = {name: avg(s["line_count"] for s in rows) for name, rows in subsets.items()}
    avg_length["Files"] = avg(member_lines)
    sample_num = {name: len(rows) for name, rows in subsets.items()}
    sample_num["Files"] = len(files)

    folders = {}
    for folder in _folder_order({s["folder"] for s in samples} | {f["folder"] for f in files}):
        row = {name: sum(1 for s in rows if s["folder"] == folder) for name, rows in subsets.items()}
        row["Files"] = sum(1 for f in files if f["folder"] == folder)
        folders[folder] = {c: row[c] for c in TABLE1_COLUMNS}
    return {
        "columns": list(TABLE1_COLUMNS),
        "avg_length": {c: avg_length[c] for c in TABLE1_COLUMNS},
        "sample_num": {c: sample_num[c] for c in TABLE1_COLUMNS},
        "folders": folders,
    }


def _table2_row(label: str, metrics: list[dict]) -> dict:
    row = {"row": label, "samples": len(metrics)}
    for _, key in TABLE2_COLUMNS:
        if key in ("n", "max_dc", "mean_distance"):
            vals = [m[key] for m in metrics]
        else:
            vals = [m["tokens"][key] for m in metrics]
        row[key] = round(mean_of(vals), 6)
    return row


def table2(metrics: list[dict]) -> dict:
    rows = [_table2_row("Overall", metrics)]
    for folder in _folder_order({m["folder"] for m in metrics}):
        rows.append(_table2_row(folder, [m for m in metrics if m["folder"] == folder]))
    return {"columns": [c for c, _ in TABLE2_COLUMNS], "rows": rows}


def render_table1(t: dict) -> str:
    cols = t["columns"]
    lines = [f"{'':<12}" + "".join(f"{c:>10}" for c in cols)]
    lines.append(f"{'Avg Length':<12}" + "".join(f"{t['avg_length'][c]:>10.2f}" for c in cols))
    lines.append(f"{'Sample Num':<12}" + "".join(f"{t['sample_num'][c]:>10d}" for c in cols))
    for folder, row in t["folders"].items():
        lines.append(f"{folder:<12}" + "".join(f"{row[c]:>10d}" for c in cols))
    return "\n".join(lines) + "\n"


def render_table2(t: dict) -> str:
    lines = [f"{'':<16}" + "".join(f"{c:>14}" for c in t["columns"])]
    for row in t["rows"]:
        lines.append(f"{row['row']:<16}" + "".join(f"{row[key]:>14.2f}" for _, key in TABLE2_COLUMNS))
    return "\n".join(lines) + "\n"


def cmd_stats(args) -> int:
    out = Path(args.out)
    wanted = ("1", "2") if args.table == "all" else (args.table,)
    if "1" in wanted:
        t1 = table1(read_jsonl(out / SAMPLES, "ingest"), read_jsonl(out / FILES, "ingest"))
        write_json(out / "table1.json", t1)
        text = render_table1(t1)
        write_text(out / "table1.txt", text)
        print(text, end="")
    if "2" in wanted:
        t2 = table2(read_jsonl(out / METRICS, "analyze"))
        write_json(out / "table2.json", t2)
        text = render_table2(t2)
        write_text(out / "table2.txt", text)
        print(text, end="")
    return EXIT_OK


# --------------------------------------------------------------------------
# knowledge base


def _kb_shard(records: list[dict]) -> KnowledgeBase:
    samples = ((FunctionRecord.from_dict(r), tokenize(r["code"])) for r in records)
    return build_kb(samples)


def cmd_kb_build(args) -> int:
    out = Path(args.out)
    records = read_jsonl(out / SAMPLES, "ingest")
    workers = max(args.workers, 1)
    shards = [records[i::workers] for i in range(workers)]
    kb = KnowledgeBase()
    for part in _pool_map(_kb_shard, shards, workers, chunksize=1):
        kb = merge_kb(kb, part)
    kb.save(out / KB_FILE)
    entries, with_meaning, mean_rel = kb_statistics(kb)
    print(f"{entries} entries, {with_meaning} with meaning, mean relations {mean_rel:.2f} -> {out / KB_FILE}")
    return EXIT_OK


def cmd_kb_query(args) -> int:
    path = Path(args.out) / KB_FILE
    if not path.exists():
        raise MissingArtifact(path, "kb build")
    kb = KnowledgeBase.load(path)
    entry = kb.entries.get(args.name)
    if entry is None:
        print(f"{args.name}: not in knowledge base", file=sys.stderr)
        return EXIT_ABSENT_NAME
    print(f"name: {entry.name}")
    print(f"meaning: {entry.meaning if entry.meaning is not None else '-'}")
    print(f"occurrences: {entry.occurrence_count}")
    print(f"relations: {len(entry.relations)}")
    for other, count in related_names(kb, args.name, args.limit):
        print(f"  {other}\t{count}")
    return EXIT_OK


# --------------------------------------------------------------------------
# export


def cmd_export(args) -> int:
    out = Path(args.out)
    target = out / f"subset_{args.subset}.jsonl"
    if args.subset == "files":
        n = write_jsonl(target, read_jsonl(out / FILES, "ingest"))
    else:
        samples = read_jsonl(out / SAMPLES, "ingest")
        n = write_jsonl(target, (s for s in samples if s["labels"][args.subset]))
    print(f"{n} {args.subset} records -> {target}")
    return EXIT_OK


# --------------------------------------------------------------------------


def _folders(text: str) -> list[str]:
    folders = [f.strip() for f in text.split(",") if f.strip()]
    if not folders:
        raise argparse.ArgumentTypeError("folder list is empty")
    return folders


def _expr_depth(text: str) -> int | None:
    if text == "full":
        return None
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("expression depth must be >= 0 or 'full'")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="artifact directory (default: %(default)s)")
    common.add_argument("--workers", type=int, default=1, help="worker processes (default: %(default)s)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="kcorpus", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="extract labelled function samples")
    p.add_argument("--repo", required=True, help="repository root")
    p.add_argument("--folders", type=_folders, default=list(DEFAULT_FOLDERS),
                   help="comma-separated top-level folders (default: the 12 kernel folders)")
    p.add_argument("--steps-threshold", type=int, default=1,
                   help="internal comments needed for the steps subset (default: %(default)s)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("analyze", parents=[common], help="build structure networks and metrics")
    p.add_argument("--expr-depth", type=_expr_depth, default=None,
                   help="max nesting of expression nodes, or 'full' (default: full)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("stats", parents=[common], help="print dataset and network tables")
    p.add_argument("--table", choices=("1", "2", "all"), default="all")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("kb", help="knowledge base")
    kb_sub = p.add_subparsers(dest="kb_command", required=True)
    q = kb_sub.add_parser("build", parents=[common], help="build the knowledge base from samples")
    q.set_defaults(func=cmd_kb_build)
    q = kb_sub.add_parser("query", parents=[common], help="look up a name")
    q.add_argument("--name", required=True)
    q.add_argument("--limit", type=int, default=20)
    q.set_defaults(func=cmd_kb_query)

    p = sub.add_parser("export", parents=[common], help="write one subset as a standalone file")
    p.add_argument("--subset", required=True, choices=SUBSETS)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingArtifact as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING


if __name__ == "__main__":
    sys.exit(main())
