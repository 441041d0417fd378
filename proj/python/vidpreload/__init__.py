"""Computation-aware short-video preloading.

Thin wrapper over the C++ core. Plans are lists of (video, chunk, variant)
tuples in download order; times are milliseconds and sizes bytes.
"""

from ._core import (
    EmptyFeed,
    Error,
    Feed,
    InfeasibleAllPruned,
    InvalidManifest,
    InvalidPlan,
    ParseError,
    SpaceTooLarge,
    TraceMismatch,
    evaluate,
    load_manifest,
    parse_manifest,
    plan,
    ratio_pct,
    run_cli,
    search_space_size,
    simulate,
    synthetic_feed,
)

__all__ = [
    "EmptyFeed",
    "Error",
    "Feed",
    "InfeasibleAllPruned",
    "InvalidManifest",
    "InvalidPlan",
    "ParseError",
    "SpaceTooLarge",
    "TraceMismatch",
    "evaluate",
    "load_manifest",
    "parse_manifest",
    "plan",
    "ratio_pct",
    "run_cli",
    "search_space_size",
    "simulate",
    "synthetic_feed",
]
