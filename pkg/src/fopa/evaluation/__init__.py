"""Metrics, score maps, composite selection, FLOP counting, and timing."""

from .bench import BenchReport, benchmark, bench_fopa, bench_sopa, enumeration_agreement, median_time, param_memory_mb, speedup
from .flops import CountingError, FlopCount, count_flops, enumeration_to_dense_ratio, layer_flops, trace_flops
from .metrics import ConfusionCounts, MetricError, bacc_from_counts, f1_and_bacc, f1_from_counts
from .predict import (
    Pick,
    evaluate,
    fopa_annotated_scores,
    fopa_map,
    fopa_score_maps,
    select_composites,
    sopa_annotated_scores,
    sopa_enumerate_map,
)

__all__ = [
    "BenchReport",
    "ConfusionCounts",
    "CountingError",
    "FlopCount",
    "MetricError",
    "Pick",
    "bacc_from_counts",
    "bench_fopa",
    "bench_sopa",
    "benchmark",
    "count_flops",
    "enumeration_agreement",
    "enumeration_to_dense_ratio",
    "evaluate",
    "f1_and_bacc",
    "f1_from_counts",
    "fopa_annotated_scores",
    "fopa_map",
    "fopa_score_maps",
    "layer_flops",
    "median_time",
    "param_memory_mb",
    "select_composites",
    "sopa_annotated_scores",
    "sopa_enumerate_map",
    "speedup",
    "trace_flops",
]
