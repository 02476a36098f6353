"""Model wrapper: entailment logits and sentence embeddings.

Loads any sequence-classification checkpoint (a Hugging Face model id
or a local directory) and reconciles its label head to the binary
{entailment, not_entailment} convention. Three-way NLI heads are
merged by marginalization: not_entailment = logsumexp(neutral,
contradiction). Inference runs in eval mode with gradients off, so
identical inputs produce identical outputs.
"""

from __future__ import annotations

import torch

DEFAULT_MAX_LENGTH = 512


def resolve_label_merge(id2label: dict[int, str]) -> tuple[int, tuple[int, ...]]:
    """Return (entailment index, indices merged into not_entailment).

    Accepts any capitalization. Exactly one label must contain
    "entail" without a leading not/non; every other label folds into
    not_entailment.
    """
    entail = [
        i
        for i, name in id2label.items()
        if "entail" in name.lower() and not name.lower().startswith(("not", "non"))
    ]
    if len(entail) != 1:
        raise ValueError(
            f"cannot reconcile label mapping {id2label}: need exactly one "
            f"entailment label, found {len(entail)}"
        )
    ent = entail[0]
    rest = tuple(sorted(i for i in id2label if i != ent))
    if not rest:
        raise ValueError(f"label mapping {id2label} has no non-entailment label")
    return ent, rest


class EntailmentScorer:
    """Tokenize (premise, hypothesis) pairs, run the model, merge logits."""

    def __init__(self, model_id: str, max_length: int = DEFAULT_MAX_LENGTH):
        from transformers import AutoModelForSequenceClassification, AutoTokenizer

        self.model_id = model_id
        self.max_length = max_length
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = AutoModelForSequenceClassification.from_pretrained(model_id)
        self.model.eval()
        id2label = {int(i): str(name) for i, name in self.model.config.id2label.items()}
        self.entail_index, self.merge_indices = resolve_label_merge(id2label)

    def score_pairs(
        self, premises: list[str], hypotheses: list[str]
    ) -> list[tuple[float, float]]:
        """Return one (entailment, not_entailment) logit pair per input pair."""
        if len(premises) != len(hypotheses):
            raise ValueError(
                f"{len(premises)} premises but {len(hypotheses)} hypotheses"
            )
        if not premises:
            return []
        encoded = self.tokenizer(
            premises,
            hypotheses,
            padding=True,
            truncation=True,
            max_length=self.max_length,
            return_tensors="pt",
        )
        with torch.inference_mode():
            logits = self.model(**encoded).logits
        entail = logits[:, self.entail_index]
        merged = torch.logsumexp(logits[:, list(self.merge_indices)], dim=1)
        return [(float(e), float(m)) for e, m in zip(entail, merged)]

    def embed_texts(self, texts: list[str]) -> list[list[float]]:
        """Mean-pooled final hidden states, one vector per text."""
        if not texts:
            return []
        encoded = self.tokenizer(
            texts,
            padding=True,
            truncation=True,
            max_length=self.max_length,
            return_tensors="pt",
        )
        with torch.inference_mode():
            out = self.model(**encoded, output_hidden_states=True)
        hidden = out.hidden_states[-1]
        mask = encoded["attention_mask"].unsqueeze(-1).to(hidden.dtype)
        pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1.0)
        return [[float(x) for x in row] for row in pooled]
