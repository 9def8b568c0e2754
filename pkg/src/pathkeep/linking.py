"""Deterministic lexical entity linking: question text -> graph nodes.

Longest-match n-gram linking with rule-based lemmatization. Both sides are
lemmatized — question tokens and graph labels — so "jobs" finds a "job" node
and a "finish_jobs" label is found by "finish job". No learned components,
no randomness: the same question over the same graph always links the same.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Optional

from .kg import KnowledgeGraph, NodeId


class NoLinkableEntitiesError(ValueError):
    """The question contains no n-gram that maps to a graph node."""


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset:
    text = resources.files("pathkeep.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


@dataclass(frozen=True)
class LinkConfig:
    max_ngram: int = 4
    stopwords: frozenset = field(default_factory=default_stopwords)
    max_mentions: Optional[int] = None


@dataclass(frozen=True)
class EntityMention:
    surface: str
    start: int
    end: int
    node: NodeId

    @property
    def span(self):
        return (self.start, self.end)


@dataclass(frozen=True)
class LinkResult:
    question: str
    mentions: tuple

    def node_ids(self) -> tuple:
        return tuple(m.node for m in self.mentions)

    def to_record(self, graph: KnowledgeGraph) -> dict:
        return {
            "question": self.question,
            "mentions": [
                {
                    "surface": m.surface,
                    "start": m.start,
                    "end": m.end,
                    "node_label": graph.label_of(m.node),
                }
                for m in self.mentions
            ],
        }


# Words the suffix rules must leave alone (false -ing/-s/-es candidates).
_KEEP_AS_IS = frozenset(
    """
    anything bring ceiling clothes during evening everything king lens
    morning news nothing ring series sibling sing something species spring
    string thing wing
    """.split()
)

# Small irregular map; extend as needed.
_IRREGULAR = {
    "children": "child",
    "cookies": "cookie",
    "does": "do",
    "feet": "foot",
    "geese": "goose",
    "goes": "go",
    "going": "go",
    "men": "man",
    "mice": "mouse",
    "movies": "movie",
    "shoes": "shoe",
    "teeth": "tooth",
    "women": "woman",
}

_VOWELS = set("aeiou")


def _restore_e(stem: str) -> str:
    # consonant-vowel-consonant endings usually dropped an "e" ("mak" -> "make")
    if (
        len(stem) >= 3
        and stem[-1] not in _VOWELS
        and stem[-1] not in "wxy"
        and stem[-2] in _VOWELS
        and stem[-3] not in _VOWELS
    ):
        return stem + "e"
    return stem


def _undouble(stem: str) -> str:
    if len(stem) >= 2 and stem[-1] == stem[-2] and stem[-1] not in "lsz":
        return stem[:-1]
    return stem


def _strip_participle(stem: str) -> str:
    # "runn" -> "run" (never also re-adding an e), "mak" -> "make"
    undoubled = _undouble(stem)
    if undoubled != stem:
        return undoubled
    return _restore_e(stem)


def lemmatize(token: str) -> str:
    """Reduce one lowercase token to a crude lemma via suffix stripping."""
    w = token
    if w.endswith("'s"):
        w = w[:-2]
    elif w.endswith("s'"):
        w = w[:-1]
    if not w or w in _KEEP_AS_IS:
        return w
    if w in _IRREGULAR:
        return _IRREGULAR[w]
    if w.endswith("ies") and len(w) >= 5:
        return w[:-3] + "y"
    if w.endswith("es") and len(w) >= 4:
        if w[-3] in "sxz" or w.endswith(("ches", "shes")):
            return w[:-2]
        if w.endswith("oes") and len(w) >= 5:
            return w[:-2]
        # plain noun + s ("notes" -> "note")
        return w[:-1]
    if w.endswith("s") and len(w) >= 3 and not w.endswith(("ss", "us", "is")):
        return w[:-1]
    if w.endswith("ing") and len(w) > 5:
        return _strip_participle(w[:-3])
    if w.endswith("ied") and len(w) > 4:
        return w[:-3] + "y"
    if w.endswith("ed") and len(w) > 4 and not w.endswith("eed"):
        return _strip_participle(w[:-2])
    return w


def lemma_key(label: str) -> str:
    """Lemma form of a (possibly multi-word) normalized graph label."""
    return "_".join(lemmatize(part) for part in label.split("_") if part)


_TOKEN_RE = re.compile(r"[\w']+")


class EntityLinker:
    """Caches the per-graph label indexes used by extract_entities."""

    def __init__(self, graph: KnowledgeGraph):
        self.graph = graph
        self._exact = {}
        self._by_lemma = {}
        for label in graph.labels():
            self._exact[label] = graph.node_id(label)
            key = lemma_key(label)
            bucket = self._by_lemma.setdefault(key, [])
            bucket.append(label)
        for bucket in self._by_lemma.values():
            bucket.sort()

    def resolve(self, raw_key: str) -> Optional[NodeId]:
        """Match an underscore-joined n-gram against the vocabulary.

        Exact label match wins; otherwise the lemma index decides, breaking
        label collisions lexicographically.
        """
        node = self._exact.get(raw_key)
        if node is not None:
            return node
        bucket = self._by_lemma.get(lemma_key(raw_key))
        if bucket:
            return self._exact[bucket[0]]
        return None


def _normalize_question(question: str) -> str:
    return re.sub(r"\s+", " ", question.strip())


def extract_entities(
    question: str,
    graph: KnowledgeGraph,
    config: Optional[LinkConfig] = None,
    linker: Optional[EntityLinker] = None,
) -> LinkResult:
    """Link the informative entities of a question to graph nodes.

    Scans n-grams from config.max_ngram down to 1, leftmost first. A matched
    n-gram claims its tokens, so longer matches shadow the shorter matches
    they contain. Stopwords never match as single tokens. Multi-token
    n-grams only span tokens separated by exactly one space.

    Raises NoLinkableEntitiesError when nothing links.
    """
    if not question or not question.strip():
        raise ValueError("question must be non-empty")
    config = config or LinkConfig()
    if linker is None:
        linker = EntityLinker(graph)
    text = _normalize_question(question)
    tokens = [(m.group(0), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]

    claimed = set()
    found = []  # (start_token_index, mention)
    for n in range(max(config.max_ngram, 1), 0, -1):
        for i in range(0, len(tokens) - n + 1):
            window = range(i, i + n)
            if any(j in claimed for j in window):
                continue
            words = [tokens[j][0].lower() for j in window]
            if n == 1 and words[0] in config.stopwords:
                continue
            # multi-word matches may not bridge punctuation or extra spaces
            if any(
                tokens[j + 1][1] - tokens[j][2] != 1
                or text[tokens[j][2]:tokens[j + 1][1]] != " "
                for j in range(i, i + n - 1)
            ):
                continue
            node = linker.resolve("_".join(words))
            if node is None:
                continue
            claimed.update(window)
            start, end = tokens[i][1], tokens[i + n - 1][2]
            found.append((i, EntityMention(text[start:end], start, end, node)))

    found.sort(key=lambda item: item[0])
    mentions = []
    seen_nodes = set()
    for _, mention in found:
        if mention.node in seen_nodes:
            continue
        seen_nodes.add(mention.node)
        mentions.append(mention)
        if config.max_mentions is not None and len(mentions) >= config.max_mentions:
            break
    if not mentions:
        raise NoLinkableEntitiesError(f"no linkable entities in question: {text!r}")
    return LinkResult(question=text, mentions=tuple(mentions))
