"""Pseudo-log-likelihood sentence scoring with a masked LM.

A sentence's score is the average, over its N content tokens (the model's own
subword count — specials excluded), of the log-probability the model assigns
each true token when that position is replaced by [MASK].  "Exact" mode runs
one masked copy per position (batched up to ``max_batch`` copies per forward);
"approximate" mode runs a single unmasked forward pass and reads every
position's log-probability from it, which is cheaper but not the definition.

Sentences are scored independently of one another, so results never depend on
how a request batches them.  Model access is serialized with a lock; scoring
never mutates model state.
"""

from __future__ import annotations

import math
import threading
from typing import List, Sequence, Tuple

import torch

EXACT_MODE = "exact-per-position-masking"
APPROXIMATE_MODE = "single-pass-approximate"


class SentenceTooLong(ValueError):
    """The sentence encodes to more positions than the model supports."""


class MaskedLMScorer:
    def __init__(self, tokenizer, model, device: str = "cpu", max_batch: int = 64, exact: bool = True):
        if max_batch < 1:
            raise ValueError("max_batch must be >= 1")
        self.tokenizer = tokenizer
        self.model = model.to(device)
        self.model.eval()
        self.device = device
        self.max_batch = max_batch
        self.exact = exact
        self._lock = threading.Lock()
        if tokenizer.mask_token_id is None:
            raise ValueError("tokenizer has no [MASK] token; not a masked-LM tokenizer")

    @property
    def mode(self) -> str:
        return EXACT_MODE if self.exact else APPROXIMATE_MODE

    def score_many(self, sentences: Sequence[str]) -> List[Tuple[float, int]]:
        """[(average log-probability, content token count), ...] in input order."""
        return [self.score_sentence(sentence) for sentence in sentences]

    def score_sentence(self, sentence: str) -> Tuple[float, int]:
        if not sentence or not sentence.strip():
            raise ValueError("sentence must be non-empty")
        encoding = self.tokenizer(sentence, return_special_tokens_mask=True)
        input_ids = encoding["input_ids"]
        limit = getattr(self.model.config, "max_position_embeddings", None)
        if limit is not None and len(input_ids) > limit:
            raise SentenceTooLong(
                f"sentence encodes to {len(input_ids)} positions, model supports {limit}"
            )
        content_positions = [
            index
            for index, is_special in enumerate(encoding["special_tokens_mask"])
            if not is_special
        ]
        if not content_positions:
            raise ValueError("sentence has no content tokens")

        ids = torch.tensor(input_ids, dtype=torch.long, device=self.device)
        with self._lock, torch.no_grad():
            if self.exact:
                log_probs = self._exact_log_probs(ids, content_positions)
            else:
                log_probs = self._approximate_log_probs(ids, content_positions)

        value = sum(log_probs) / len(log_probs)
        if not math.isfinite(value):
            raise RuntimeError("model produced a non-finite score")
        return value, len(content_positions)

    def _exact_log_probs(self, ids: torch.Tensor, positions: List[int]) -> List[float]:
        mask_id = self.tokenizer.mask_token_id
        log_probs: List[float] = []
        for start in range(0, len(positions), self.max_batch):
            chunk = positions[start : start + self.max_batch]
            batch = ids.unsqueeze(0).repeat(len(chunk), 1)
            rows = torch.arange(len(chunk), device=self.device)
            cols = torch.tensor(chunk, dtype=torch.long, device=self.device)
            true_ids = batch[rows, cols].clone()
            batch[rows, cols] = mask_id
            logits = self.model(input_ids=batch).logits
            selected = torch.log_softmax(logits[rows, cols], dim=-1)
            log_probs.extend(selected[rows, true_ids].tolist())
        return log_probs

    def _approximate_log_probs(self, ids: torch.Tensor, positions: List[int]) -> List[float]:
        logits = self.model(input_ids=ids.unsqueeze(0)).logits[0]
        cols = torch.tensor(positions, dtype=torch.long, device=self.device)
        selected = torch.log_softmax(logits[cols], dim=-1)
        true_ids = ids[cols]
        rows = torch.arange(len(positions), device=self.device)
        return selected[rows, true_ids].tolist()
