"""Masked-LM finetuning with a plain, seeded training loop.

The corpus file holds one sentence per line; lines with tab-separated fields
(as written by upstream corpus generators) contribute their first field.  The
loop does standard dynamic MLM masking at the model's subword level: each
epoch, ``mask_rate`` of content tokens are chosen per sentence (at least one),
of which 80% become [MASK], 10% a random token, 10% stay unchanged; only the
chosen positions contribute to the loss.

Determinism: one Python RNG (masking, shuffling) and torch's global seed are
both derived from ``seed``; batches run on CPU in seeded-shuffle order, so the
same corpus and seed reproduce the same loss curve.
"""

from __future__ import annotations

import logging
import random
from typing import List, Sequence

import torch

logger = logging.getLogger(__name__)


def read_corpus(path) -> List[str]:
    sentences: List[str] = []
    with open(path, "r", encoding="utf-8") as handle:
        for raw_line in handle:
            line = raw_line.rstrip("\r\n")
            if not line.strip():
                continue
            text = line.split("\t", 1)[0].strip()
            if text:
                sentences.append(text)
    if not sentences:
        raise ValueError(f"{path}: corpus contains no sentences")
    return sentences


def _mask_batch(input_ids, special_mask, mask_token_id, vocab_size, rate, rng):
    """Labels for chosen positions, -100 elsewhere; inputs masked in place."""
    labels = torch.full_like(input_ids, -100)
    for row in range(input_ids.size(0)):
        candidates = [
            col
            for col in range(input_ids.size(1))
            if not special_mask[row, col]
        ]
        if not candidates:
            continue
        count = max(1, round(rate * len(candidates)))
        chosen = rng.sample(candidates, min(count, len(candidates)))
        for col in chosen:
            labels[row, col] = input_ids[row, col]
            roll = rng.random()
            if roll < 0.8:
                input_ids[row, col] = mask_token_id
            elif roll < 0.9:
                input_ids[row, col] = rng.randrange(vocab_size)
            # else: keep the original token
    return labels


def validate_hyperparams(epochs: int, lr: float, mask_rate: float, batch_size: int) -> None:
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if not (0.0 < mask_rate < 1.0):
        raise ValueError("mask_rate must be in (0, 1)")
    if lr <= 0:
        raise ValueError("lr must be > 0")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")


def train_mlm(
    model,
    tokenizer,
    sentences: Sequence[str],
    epochs: int,
    lr: float,
    mask_rate: float,
    seed: int,
    batch_size: int = 16,
    device: str = "cpu",
) -> List[float]:
    """Run the loop; returns the mean loss of each epoch, in order."""
    validate_hyperparams(epochs, lr, mask_rate, batch_size)
    sentences = list(sentences)
    if not sentences:
        raise ValueError("no sentences to train on")

    rng = random.Random(seed)
    torch.manual_seed(seed)
    model.to(device)
    model.train()
    optimizer = torch.optim.AdamW(model.parameters(), lr=lr)
    vocab_size = model.config.vocab_size
    mask_token_id = tokenizer.mask_token_id
    if mask_token_id is None:
        raise ValueError("tokenizer has no [MASK] token")

    order = list(range(len(sentences)))
    epoch_losses: List[float] = []
    for epoch in range(1, epochs + 1):
        rng.shuffle(order)
        total_loss = 0.0
        batches = 0
        for start in range(0, len(order), batch_size):
            batch_sentences = [sentences[i] for i in order[start : start + batch_size]]
            encoding = tokenizer(
                batch_sentences,
                return_tensors="pt",
                padding=True,
                truncation=True,
                max_length=model.config.max_position_embeddings,
                return_special_tokens_mask=True,
            )
            input_ids = encoding["input_ids"].to(device)
            attention_mask = encoding["attention_mask"].to(device)
            special_mask = encoding["special_tokens_mask"].bool() | ~attention_mask.bool().cpu()
            labels = _mask_batch(
                input_ids, special_mask, mask_token_id, vocab_size, mask_rate, rng
            )
            output = model(input_ids=input_ids, attention_mask=attention_mask, labels=labels)
            output.loss.backward()
            optimizer.step()
            optimizer.zero_grad()
            total_loss += output.loss.item()
            batches += 1
        mean_loss = total_loss / batches
        epoch_losses.append(mean_loss)
        logger.info("epoch %d/%d: loss=%.6f", epoch, epochs, mean_loss)
    model.eval()
    return epoch_losses


def finetune(
    base_model: str,
    corpus_path,
    out_dir: str,
    epochs: int = 2,
    lr: float = 1e-5,
    mask_rate: float = 0.15,
    seed: int = 13,
    batch_size: int = 16,
    device: str = "cpu",
) -> List[float]:
    """Finetune ``base_model`` on the corpus file and save to ``out_dir``.

    Returns per-epoch mean losses.  The output directory is loadable by
    ``serve --model``.
    """
    from .model import load_model

    validate_hyperparams(epochs, lr, mask_rate, batch_size)
    sentences = read_corpus(corpus_path)
    tokenizer, model = load_model(base_model, device)
    losses = train_mlm(
        model,
        tokenizer,
        sentences,
        epochs=epochs,
        lr=lr,
        mask_rate=mask_rate,
        seed=seed,
        batch_size=batch_size,
        device=device,
    )
    tokenizer.save_pretrained(out_dir)
    model.save_pretrained(out_dir)
    return losses
