"""Desk-scale fine-tuning of a sequence-pair entailment classifier.

Trains a small transformer encoder from scratch on a binary NLI pair
file (the format the entail formatter emits: header line, then records
with premise / hypothesis / label, 0 = entailment). The checkpoint it
writes is a regular sequence-classification model directory that
``entail_sidecar.serve`` can load.

The defaults are sized for thousands of pairs on a CPU; they make no
attempt to match full-scale encoder fine-tuning recipes.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import random
import sys
from dataclasses import dataclass
from pathlib import Path

import torch
from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, processors
from transformers import (
    BertConfig,
    BertForSequenceClassification,
    PreTrainedTokenizerFast,
)

from entail import DataError, read_nli_jsonl

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
ID2LABEL = {0: "entailment", 1: "not_entailment"}


@dataclass(frozen=True)
class FinetuneConfig:
    epochs: int = 8
    batch_size: int = 16
    lr: float = 1e-3
    seed: int = 42
    max_length: int = 128
    hidden_size: int = 64
    num_layers: int = 2
    num_heads: int = 2
    intermediate_size: int = 128
    # The pair format makes every marginal feature uninformative (each
    # premise appears once entailed and once not), so a from-scratch
    # encoder sits on a loss plateau until it finds the premise and
    # hypothesis interaction. Wide init and no dropout get it off the
    # plateau reliably; the transformers default init (0.02) does not.
    init_range: float = 0.1
    dropout: float = 0.0


def build_tokenizer(texts: list[str]) -> PreTrainedTokenizerFast:
    """Whole-word tokenizer whose vocabulary is exactly the tokens seen
    in ``texts`` (after BERT normalization), so nothing in the training
    set maps to [UNK]."""
    normalizer = normalizers.BertNormalizer(lowercase=True)
    pre = pre_tokenizers.BertPreTokenizer()
    seen: set[str] = set()
    for text in texts:
        for token, _ in pre.pre_tokenize_str(normalizer.normalize_str(text)):
            seen.add(token)
    vocab = {token: i for i, token in enumerate(SPECIALS + sorted(seen))}

    tk = Tokenizer(models.WordPiece(vocab, unk_token="[UNK]", max_input_chars_per_word=100))
    tk.normalizer = normalizer
    tk.pre_tokenizer = pre
    tk.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B:1 [SEP]:1",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    return PreTrainedTokenizerFast(
        tokenizer_object=tk,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
        model_input_names=["input_ids", "token_type_ids", "attention_mask"],
    )


def finetune(
    train_path: str | Path, out_dir: str | Path, config: FinetuneConfig | None = None
) -> dict:
    """Train on an NLI pair file and write a servable checkpoint.

    Returns the training report (also written to
    ``out_dir/finetune_report.json``).
    """
    config = config or FinetuneConfig()
    ds = read_nli_jsonl(train_path)
    if not ds.records:
        raise DataError(f"{train_path}: no training pairs")

    premises = [rec.premise for rec in ds.records]
    hypotheses = [rec.hypothesis for rec in ds.records]
    labels = torch.tensor([rec.label for rec in ds.records], dtype=torch.long)

    tokenizer = build_tokenizer(premises + hypotheses)
    torch.manual_seed(config.seed)
    model = BertForSequenceClassification(
        BertConfig(
            vocab_size=len(tokenizer),
            hidden_size=config.hidden_size,
            num_hidden_layers=config.num_layers,
            num_attention_heads=config.num_heads,
            intermediate_size=config.intermediate_size,
            max_position_embeddings=config.max_length,
            num_labels=2,
            initializer_range=config.init_range,
            hidden_dropout_prob=config.dropout,
            attention_probs_dropout_prob=config.dropout,
            id2label=ID2LABEL,
            label2id={name: i for i, name in ID2LABEL.items()},
            pad_token_id=tokenizer.pad_token_id,
        )
    )

    encoded = tokenizer(
        premises,
        hypotheses,
        padding=True,
        truncation=True,
        max_length=config.max_length,
        return_tensors="pt",
    )

    optimizer = torch.optim.AdamW(model.parameters(), lr=config.lr)
    rng = random.Random(config.seed)
    order = list(range(len(ds.records)))
    history: list[float] = []
    model.train()
    for epoch in range(config.epochs):
        rng.shuffle(order)
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = torch.tensor(order[start : start + config.batch_size])
            out = model(
                input_ids=encoded["input_ids"][batch],
                token_type_ids=encoded["token_type_ids"][batch],
                attention_mask=encoded["attention_mask"][batch],
                labels=labels[batch],
            )
            optimizer.zero_grad()
            out.loss.backward()
            optimizer.step()
            total += float(out.loss.detach()) * len(batch)
        history.append(total / len(order))

    model.eval()
    with torch.inference_mode():
        logits = model(**encoded).logits
    train_accuracy = float((logits.argmax(dim=1) == labels).float().mean())

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    report = {
        "train_file": str(train_path),
        "pairs": len(ds.records),
        "vocab_size": len(tokenizer),
        "config": dataclasses.asdict(config),
        "loss_per_epoch": history,
        "train_accuracy": train_accuracy,
    }
    with (out_dir / "finetune_report.json").open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    return report


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--train", required=True, help="NLI pair JSONL file")
    parser.add_argument("--out", required=True, help="checkpoint directory")
    defaults = FinetuneConfig()
    parser.add_argument("--epochs", type=int, default=defaults.epochs)
    parser.add_argument("--batch-size", type=int, default=defaults.batch_size)
    parser.add_argument("--lr", type=float, default=defaults.lr)
    parser.add_argument("--seed", type=int, default=defaults.seed)
    parser.add_argument("--max-length", type=int, default=defaults.max_length)
    parser.add_argument("--hidden-size", type=int, default=defaults.hidden_size)
    args = parser.parse_args(argv)

    config = FinetuneConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        seed=args.seed,
        max_length=args.max_length,
        hidden_size=args.hidden_size,
    )
    try:
        report = finetune(args.train, args.out, config)
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for epoch, loss in enumerate(report["loss_per_epoch"], start=1):
        print(f"epoch {epoch}: loss {loss:.4f}")
    print(
        f"trained on {report['pairs']} pairs, train accuracy "
        f"{report['train_accuracy']:.3f}, checkpoint at {args.out}"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
