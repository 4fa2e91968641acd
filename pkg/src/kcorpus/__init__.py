"""Mine a C repository into function/comment samples, structure networks,
complexity metrics and a name-token knowledge base."""

from kcorpus.complexity import (
    ComplexityReport,
    UndefinedMetricError,
    all_pairs_shortest_paths,
    analyze,
    degree_centrality,
    max_degree_centrality,
    mean_distance,
)
from kcorpus.ingest import (
    CommentBlock,
    ConfigError,
    FileSample,
    FunctionRecord,
    SourceFile,
    SubsetLabels,
    associate_comments,
    build_file_samples,
    classify_sample,
    extract_comments,
    extract_functions,
    scan_repository,
)
from kcorpus.kb import (
    KbEntry,
    KnowledgeBase,
    UnknownNameError,
    build_kb,
    kb_statistics,
    lookup,
    merge_kb,
    related_names,
)
from kcorpus.lexer import Token, TokenCounts, count_tokens, tokenize
from kcorpus.structure import StructureError, StructureNetwork, network_stats, parse_structure

__version__ = "0.1.0"
