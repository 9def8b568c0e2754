"""Masked-LM sentence scoring over HTTP, plus MLM finetuning."""

from .api import ModelHolder, create_app
from .finetune import finetune, read_corpus, train_mlm
from .model import ServiceConfig, build_demo_model, demo_training_sentences, load_model
from .scoring import (
    APPROXIMATE_MODE,
    EXACT_MODE,
    MaskedLMScorer,
    SentenceTooLong,
)

__all__ = [
    "APPROXIMATE_MODE",
    "EXACT_MODE",
    "MaskedLMScorer",
    "ModelHolder",
    "SentenceTooLong",
    "ServiceConfig",
    "build_demo_model",
    "create_app",
    "demo_training_sentences",
    "finetune",
    "load_model",
    "read_corpus",
    "train_mlm",
]
