"""Model server and desk-scale fine-tuning for the entail wire protocol."""

from .app import DEFAULT_MAX_BATCH, create_app
from .finetune import FinetuneConfig, build_tokenizer, finetune
from .scoring import DEFAULT_MAX_LENGTH, EntailmentScorer, resolve_label_merge

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_MAX_BATCH",
    "DEFAULT_MAX_LENGTH",
    "EntailmentScorer",
    "FinetuneConfig",
    "build_tokenizer",
    "create_app",
    "finetune",
    "resolve_label_merge",
]
