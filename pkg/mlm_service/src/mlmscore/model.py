"""Model loading and the self-contained demo model.

The service scores with any masked LM loadable through
``AutoModelForMaskedLM.from_pretrained`` — a local directory or a hub id.
Because this repository ships no pretrained weights, ``build_demo_model``
constructs and trains a tiny word-level BERT on a synthetic corpus of color
facts; it exists so the whole stack can be exercised on a laptop with no
network access, not as a usable language model.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Tuple

import torch
from transformers import (
    AutoModelForMaskedLM,
    AutoTokenizer,
    BertConfig,
    BertForMaskedLM,
    BertTokenizerFast,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ServiceConfig:
    """Everything the scoring service needs to run."""

    model: str  # local directory or hub id
    device: str = "cpu"
    max_batch: int = 64  # masked copies per forward pass
    exact: bool = True  # per-position masking; False = single-pass approximation
    port: int = 8100
    host: str = "127.0.0.1"

    def __post_init__(self):
        if self.max_batch < 1:
            raise ValueError("max_batch must be >= 1")
        if not self.model or not self.model.strip():
            raise ValueError("model identifier must be non-empty")
        if not (0 < self.port < 65536):
            raise ValueError("port must be in 1..65535")


def load_model(identifier: str, device: str = "cpu"):
    """Load (tokenizer, model) from a directory or hub id; model in eval mode."""
    tokenizer = AutoTokenizer.from_pretrained(identifier)
    model = AutoModelForMaskedLM.from_pretrained(identifier)
    model.to(device)
    model.eval()
    return tokenizer, model


# -- demo model ----------------------------------------------------------------

_COLOR_FACTS = [
    ("sky", "blue"),
    ("ocean", "blue"),
    ("sea", "blue"),
    ("grass", "green"),
    ("leaf", "green"),
    ("frog", "green"),
    ("sun", "yellow"),
    ("banana", "yellow"),
    ("corn", "yellow"),
    ("blood", "red"),
    ("rose", "red"),
    ("brick", "red"),
    ("snow", "white"),
    ("cloud", "white"),
    ("milk", "white"),
    ("coal", "black"),
    ("crow", "black"),
    ("night", "black"),
]

_FILLER_SENTENCES = [
    "people work at the office .",
    "people aim to finish jobs at work .",
    "cable connects to the television .",
    "rain falls from the clouds .",
    "the child plays in the park .",
    "a dog runs in the garden .",
    "music sounds pleasant to everyone .",
    "water flows down the river .",
]


def demo_training_sentences() -> List[str]:
    """The synthetic corpus the demo model is trained on."""
    sentences = []
    for noun, color in _COLOR_FACTS:
        sentences.extend(
            [
                f"the {noun} is {color} .",
                f"a {noun} looks {color} .",
                f"everyone says the {noun} is {color} .",
                f"that {noun} seemed very {color} today .",
            ]
        )
    sentences.extend(_FILLER_SENTENCES)
    return sentences


def _demo_vocab(sentences: List[str]) -> dict:
    words = sorted({word for sentence in sentences for word in sentence.split()})
    tokens = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + words
    return {token: index for index, token in enumerate(tokens)}


def build_demo_model(
    out_dir: str,
    seed: int = 0,
    epochs: int = 200,
    lr: float = 1e-3,
    mask_rate: float = 0.15,
) -> Tuple[BertTokenizerFast, BertForMaskedLM]:
    """Train the tiny demo masked LM from scratch and save it to ``out_dir``.

    The directory is loadable by ``load_model`` / ``serve --model``.
    """
    from .finetune import train_mlm  # local import: finetune pulls no extras

    sentences = demo_training_sentences()
    vocab = _demo_vocab(sentences)
    tokenizer = BertTokenizerFast(vocab=vocab, do_lower_case=True)

    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=64,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=128,
        max_position_embeddings=48,
        pad_token_id=vocab["[PAD]"],
    )
    model = BertForMaskedLM(config)
    losses = train_mlm(
        model,
        tokenizer,
        sentences,
        epochs=epochs,
        lr=lr,
        mask_rate=mask_rate,
        seed=seed,
        batch_size=16,
        device="cpu",
    )
    logger.info("demo model trained: first epoch loss %.4f, last %.4f", losses[0], losses[-1])

    tokenizer.save_pretrained(out_dir)
    model.save_pretrained(out_dir)
    return tokenizer, model
