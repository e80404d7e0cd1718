"""Commonsense-axiom evaluation harness for NLI (Python bindings).

The heavy lifting lives in the C++ core; this package re-exports it.
Instances are dicts with id, premise, hypothesis and label keys.
"""

from ._axeval import (
    DatasetError,
    LedgerError,
    MetricsError,
    PreconditionError,
    PromptError,
    binarize_consistency,
    binarize_helpfulness,
    build_report,
    class_accuracy,
    class_distribution,
    consistency_score,
    factuality_summary,
    load_dataset,
    net_consistently_correct_rate,
    parse_axiom,
    parse_label,
    parse_rating,
    render_prompt,
    report_to_markdown,
    run_experiment,
    sample_stratified,
)

__all__ = [
    "DatasetError",
    "LedgerError",
    "MetricsError",
    "PreconditionError",
    "PromptError",
    "binarize_consistency",
    "binarize_helpfulness",
    "build_report",
    "class_accuracy",
    "class_distribution",
    "consistency_score",
    "factuality_summary",
    "load_dataset",
    "net_consistently_correct_rate",
    "parse_axiom",
    "parse_label",
    "parse_rating",
    "render_prompt",
    "report_to_markdown",
    "run_experiment",
    "sample_stratified",
]
