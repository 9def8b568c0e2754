"""Sentence scoring: the average-log-probability contract and two backends.

A scorer maps a batch of sentences to scores, each score being the mean
log-probability of the sentence's tokens with the token count used for the
mean reported back. Two implementations live here:

* OracleScorer — a deterministic unigram frequency table. No model, no
  network; exists so every search-layer behavior can be tested exactly.
* RemoteScorer — an HTTP client for the scoring wire protocol
  (POST /v1/score), batching, retrying once on transport failure, and
  mapping every failure mode to a distinct exception.

Log-probabilities are floored at -30 per token so out-of-vocabulary junk
cannot produce infinities.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Protocol, Sequence

import httpx

LOG_FLOOR = -30.0
_TOKEN_RE = re.compile(r"[\w']+|[^\w\s]")

_batch_counter = itertools.count(1)


def tokenize(text: str) -> List[str]:
    """Lowercased word + punctuation tokens ("The sky is blue." -> 5 tokens)."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class ScoreRequest:
    sentences: tuple
    batch_id: str = ""

    def __post_init__(self):
        if not self.sentences:
            raise ValueError("a score request needs at least one sentence")
        sentences = tuple(self.sentences)
        for s in sentences:
            if not isinstance(s, str) or not s.strip():
                raise ValueError("every sentence must be a non-empty string")
        object.__setattr__(self, "sentences", sentences)
        if not self.batch_id:
            object.__setattr__(self, "batch_id", f"batch-{next(_batch_counter)}")


@dataclass(frozen=True)
class Score:
    value: float
    tokens_scored: int


class Scorer(Protocol):
    def score(self, request: ScoreRequest) -> List[Score]:
        ...


def score(scorer: Scorer, request: ScoreRequest) -> List[Score]:
    """One Score per request sentence, in request order."""
    return scorer.score(request)


def score_answer_sentence(scorer: Scorer, question: str, answer: str) -> Score:
    """Score the concatenation "<question> <answer>" as a single sentence."""
    if not question or not question.strip():
        raise ValueError("question must be non-empty")
    if not answer or not answer.strip():
        raise ValueError("answer must be non-empty")
    return score(scorer, ScoreRequest((f"{question} {answer}",)))[0]


@dataclass(frozen=True)
class FrequencyTable:
    probabilities: Dict[str, float]
    default_prob: float = 1e-6

    def __post_init__(self):
        if not (0.0 < self.default_prob <= 1.0):
            raise ValueError("default_prob must be in (0, 1]")
        for token, p in self.probabilities.items():
            if not (0.0 < p <= 1.0):
                raise ValueError(f"probability for {token!r} out of (0, 1]: {p}")

    def prob(self, token: str) -> float:
        return self.probabilities.get(token, self.default_prob)

    @classmethod
    def from_file(cls, path, default_prob: float = 1e-6) -> "FrequencyTable":
        probs: Dict[str, float] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for line_number, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 2:
                    raise ValueError(
                        f"{path}: line {line_number}: expected token<TAB>probability"
                    )
                probs[parts[0]] = float(parts[1])
        if not probs:
            raise ValueError(f"{path}: no probability rows")
        return cls(probs, default_prob)


def oracle_from_corpus(text_stream: Iterable[str]) -> FrequencyTable:
    """Unigram table with add-one smoothing over a token stream.

    Seen tokens get (count + 1) / (total + vocab); unseen tokens fall back to
    1 / (total + vocab + 1).
    """
    counts: Dict[str, int] = {}
    total = 0
    for chunk in text_stream:
        for token in tokenize(chunk):
            counts[token] = counts.get(token, 0) + 1
            total += 1
    if total == 0:
        raise ValueError("empty corpus: nothing to count")
    denom = total + len(counts)
    probs = {token: (c + 1) / denom for token, c in counts.items()}
    return FrequencyTable(probs, default_prob=1.0 / (denom + 1))


class OracleScorer:
    """Deterministic scorer backed by a unigram FrequencyTable."""

    def __init__(self, table: FrequencyTable):
        self.table = table

    @classmethod
    def from_file(cls, path, default_prob: float = 1e-6) -> "OracleScorer":
        return cls(FrequencyTable.from_file(path, default_prob))

    def score(self, request: ScoreRequest) -> List[Score]:
        results = []
        for sentence in request.sentences:
            tokens = tokenize(sentence)
            if not tokens:
                raise ValueError(f"sentence has no tokens: {sentence!r}")
            logs = [max(math.log(self.table.prob(t)), LOG_FLOOR) for t in tokens]
            results.append(Score(value=sum(logs) / len(logs), tokens_scored=len(logs)))
        return results


# -- remote client ------------------------------------------------------------


class ScorerError(Exception):
    """Base class for remote scoring failures."""


class TransportFailure(ScorerError):
    """The service could not be reached (after one retry)."""


class MalformedReply(ScorerError):
    """The service answered with something that is not a valid reply."""


class LengthMismatch(ScorerError):
    """Reply arrays do not line up with the request's sentence count."""


class RequestRejected(ScorerError):
    """The service rejected the request as malformed (HTTP 400)."""


class ServiceUnavailable(ScorerError):
    """The service is up but cannot score right now (HTTP 503)."""


class RemoteScorer:
    """Client for the /v1/score wire protocol.

    Requests are chunked to ``max_batch`` sentences, sent sequentially, and
    stitched back together in order. A transport error is retried once
    before giving up.
    """

    def __init__(
        self,
        base_url: str,
        max_batch: int = 64,
        timeout: float = 30.0,
        client: Optional[httpx.Client] = None,
    ):
        if max_batch < 1:
            raise ValueError("max_batch must be >= 1")
        self.base_url = base_url.rstrip("/")
        self.max_batch = max_batch
        self._client = client or httpx.Client(timeout=timeout)

    def close(self):
        self._client.close()

    def score(self, request: ScoreRequest) -> List[Score]:
        results: List[Score] = []
        sentences = list(request.sentences)
        for chunk_index in range(0, len(sentences), self.max_batch):
            chunk = sentences[chunk_index:chunk_index + self.max_batch]
            chunk_id = f"{request.batch_id}.{chunk_index // self.max_batch}"
            results.extend(self._score_chunk(chunk_id, chunk))
        return results

    def _post(self, body: dict) -> httpx.Response:
        url = f"{self.base_url}/v1/score"
        last_error = None
        for _ in range(2):  # one attempt + one retry
            try:
                return self._client.post(url, json=body)
            except httpx.HTTPError as exc:
                last_error = exc
        raise TransportFailure(f"could not reach {url}: {last_error}") from last_error

    def _score_chunk(self, chunk_id: str, sentences: List[str]) -> List[Score]:
        response = self._post({"id": chunk_id, "sentences": sentences})
        if response.status_code == 400:
            raise RequestRejected(_error_text(response))
        if response.status_code == 503:
            raise ServiceUnavailable(_error_text(response))
        if response.status_code != 200:
            raise MalformedReply(f"unexpected status {response.status_code}")
        try:
            payload = response.json()
        except (json.JSONDecodeError, ValueError) as exc:
            raise MalformedReply(f"reply is not JSON: {exc}") from exc
        if not isinstance(payload, dict):
            raise MalformedReply("reply is not a JSON object")
        if payload.get("id") != chunk_id:
            raise MalformedReply(
                f"reply id {payload.get('id')!r} does not match request id {chunk_id!r}"
            )
        scores = payload.get("scores")
        tokens = payload.get("tokens")
        if not isinstance(scores, list) or not isinstance(tokens, list):
            raise MalformedReply("reply must carry 'scores' and 'tokens' arrays")
        if len(scores) != len(sentences) or len(tokens) != len(sentences):
            raise LengthMismatch(
                f"sent {len(sentences)} sentences, got {len(scores)} scores / {len(tokens)} token counts"
            )
        out = []
        for value, n in zip(scores, tokens):
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                raise MalformedReply(f"non-finite or non-numeric score: {value!r}")
            if not isinstance(n, int) or isinstance(n, bool) or n < 1:
                raise MalformedReply(f"bad token count: {n!r}")
            out.append(Score(value=float(value), tokens_scored=n))
        return out


def _error_text(response: httpx.Response) -> str:
    try:
        payload = response.json()
        if isinstance(payload, dict) and "error" in payload:
            return str(payload["error"])
    except (json.JSONDecodeError, ValueError):
        pass
    return f"HTTP {response.status_code}"


def make_scorer(spec: str) -> Scorer:
    """Build a scorer from a CLI-style selector.

    "oracle:<table path>" -> OracleScorer; "remote:<base URL>" -> RemoteScorer.
    """
    kind, sep, arg = spec.partition(":")
    if not sep or not arg:
        raise ValueError(f"scorer selector must be oracle:<path> or remote:<url>, got {spec!r}")
    if kind == "oracle":
        return OracleScorer.from_file(arg)
    if kind == "remote":
        return RemoteScorer(arg)
    raise ValueError(f"unknown scorer kind {kind!r} in {spec!r}")
