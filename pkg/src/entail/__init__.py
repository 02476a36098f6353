"""entail: universal text classification through binary entailment.

Any labeled text classification task is harmonized into a shared
format, cleaned of probable label noise, verbalized into hypotheses,
and reformatted into binary (premise, hypothesis) pairs that a single
entailment scorer can answer. Zero-shot classification, evaluation and
held-out planning all run over that one representation.
"""

from .cleaning import (
    CleaningConfig,
    CleaningReport,
    Flag,
    LogisticFit,
    clean,
    downsample,
    embed,
    find_label_issues,
    fit_logistic,
    out_of_fold_probs,
    predict_proba,
)
from .core import (
    DataError,
    EntailError,
    HypothesisCatalog,
    LabeledDataset,
    LabeledExample,
    NLIDataset,
    NLIRecord,
    PairScore,
    Prediction,
    TransportError,
    UsageError,
    read_jsonl,
    validate_dataset,
    write_jsonl,
)
from .engine import (
    ClassificationRequest,
    FileBackend,
    HttpBackend,
    MockBackend,
    ScoringBackend,
    classify,
    file_backend,
    http_backend,
    mock_backend,
    pair_digest,
    save_score_file,
)
from .evaluate import (
    EvalReport,
    RunSpec,
    Summary,
    aggregate_reports,
    compute_metrics_nli_binary,
    evaluate_dataset,
    load_report,
    load_summary,
    plan_heldout_runs,
    save_runspecs,
)
from .harmonize import IngestReport, IngestSpec, ingest, load_ingest_spec, train_test_split
from .nli_format import (
    concat_train,
    format_nli_testset,
    format_nli_trainset,
    merge_nli_labels,
    read_nli_jsonl,
    write_nli_jsonl,
)
from .reporting import emit_bar_chart, emit_table, write_report_artifacts
from .seeds import derive_seed
from .synthetic import SyntheticCorpus, make_synthetic_corpus
from .verbalize import (
    build_catalog,
    load_catalog,
    render_template,
    sample_incorrect_hypothesis,
    save_catalog,
)

__version__ = "0.1.0"

__all__ = [
    "ClassificationRequest",
    "CleaningConfig",
    "CleaningReport",
    "DataError",
    "EntailError",
    "EvalReport",
    "FileBackend",
    "Flag",
    "HttpBackend",
    "HypothesisCatalog",
    "IngestReport",
    "IngestSpec",
    "LabeledDataset",
    "LabeledExample",
    "LogisticFit",
    "MockBackend",
    "NLIDataset",
    "NLIRecord",
    "PairScore",
    "Prediction",
    "RunSpec",
    "ScoringBackend",
    "Summary",
    "SyntheticCorpus",
    "TransportError",
    "UsageError",
    "aggregate_reports",
    "build_catalog",
    "classify",
    "clean",
    "compute_metrics_nli_binary",
    "concat_train",
    "derive_seed",
    "downsample",
    "embed",
    "emit_bar_chart",
    "emit_table",
    "evaluate_dataset",
    "file_backend",
    "find_label_issues",
    "fit_logistic",
    "format_nli_testset",
    "format_nli_trainset",
    "http_backend",
    "ingest",
    "load_catalog",
    "load_ingest_spec",
    "load_report",
    "load_summary",
    "make_synthetic_corpus",
    "merge_nli_labels",
    "mock_backend",
    "out_of_fold_probs",
    "pair_digest",
    "plan_heldout_runs",
    "predict_proba",
    "read_jsonl",
    "read_nli_jsonl",
    "render_template",
    "sample_incorrect_hypothesis",
    "save_catalog",
    "save_runspecs",
    "save_score_file",
    "train_test_split",
    "validate_dataset",
    "write_jsonl",
    "write_nli_jsonl",
    "write_report_artifacts",
]
