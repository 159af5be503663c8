"""Benchmark kernels, input generators and correctness digests."""

from thrillette.bench.digest import (
    canonical,
    item_hash,
    multiset_digest,
    sequence_digest,
)
from thrillette.bench.generators import (
    gen_graph,
    gen_points,
    gen_records,
    gen_text,
)
from thrillette.bench.kernels import (
    POINT_SERIALIZER,
    RECORD_SERIALIZER,
    run_kmeans,
    run_pagerank,
    run_sleep,
    run_terasort,
    run_wordcount,
)

__all__ = [
    "POINT_SERIALIZER",
    "RECORD_SERIALIZER",
    "canonical",
    "gen_graph",
    "gen_points",
    "gen_records",
    "gen_text",
    "item_hash",
    "multiset_digest",
    "run_kmeans",
    "run_pagerank",
    "run_sleep",
    "run_terasort",
    "run_wordcount",
    "sequence_digest",
]
