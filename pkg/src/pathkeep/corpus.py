"""Training-corpus generation: path sentences with deterministic masking.

For each (question, gold answer) pair, every simple path from a linked
question entity to the gold node (up to a hop limit, either edge direction)
is rendered as a sentence. Sentences are deduplicated, capped, and masked:
a seeded RNG picks max(1, round(rate * token_count)) whitespace-token
positions and replaces them with the literal "[MASK]". The same seed always
produces byte-identical output files.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

from .kg import KnowledgeGraph, NodeId, ReasoningPath, normalize_label
from .linking import EntityLinker, LinkConfig, NoLinkableEntitiesError, extract_entities
from .verbalize import render_path

MASK_TOKEN = "[MASK]"


@dataclass(frozen=True)
class QAPair:
    question: str
    gold_answer: str


@dataclass(frozen=True)
class CorpusSentence:
    text: str
    masked_text: str
    masked_positions: tuple
    source: tuple = ()  # (pair index, path) when generated from a QA pair


@dataclass(frozen=True)
class CorpusConfig:
    seed: int
    max_hops: int = 3
    max_sentences: int = 20000
    mask_rate: float = 0.15

    def __post_init__(self):
        if self.max_hops < 1:
            raise ValueError("max_hops must be >= 1")
        if self.max_sentences < 1:
            raise ValueError("max_sentences must be >= 1")
        if not (0.0 < self.mask_rate < 1.0):
            raise ValueError("mask_rate must be in (0, 1)")


@dataclass
class CorpusReport:
    pairs: int = 0
    skipped: int = 0  # question or gold answer did not link
    zero_paths: int = 0
    sentences: int = 0

    def as_text(self) -> str:
        return "\n".join(
            f"{k}={getattr(self, k)}" for k in ("pairs", "skipped", "zero_paths", "sentences")
        )


def find_paths_between(
    graph: KnowledgeGraph,
    sources: Sequence[NodeId],
    target: NodeId,
    max_hops: int,
) -> List[ReasoningPath]:
    """All simple paths (1..max_hops edges, either direction) into ``target``.

    Output order is deterministic: sources in given order, then depth-first
    following the graph's neighbor ordering. Paths are unscored. A source
    equal to the target contributes nothing (zero-length paths are not
    paths). Unknown target -> KeyError.
    """
    graph.label_of(target)  # validates the node id
    results: List[ReasoningPath] = []
    seen_sources = set()
    for source in sources:
        if source in seen_sources:
            continue
        seen_sources.add(source)
        if source == target:
            continue
        stack = [graph.seed_path(source)]
        while stack:
            path = stack.pop()
            if len(path.steps) >= max_hops:
                continue
            visited = set(path.node_ids())
            extensions = []
            for edge in graph.neighbors(path.terminal_node, "both"):
                direction = "forward" if edge.head == path.terminal_node else "reverse"
                nxt = edge.tail if direction == "forward" else edge.head
                if nxt in visited:
                    continue
                grown = path.extended(edge, direction)
                if nxt == target:
                    results.append(grown)
                    continue  # a simple path cannot leave and re-enter the target
                extensions.append(grown)
            # LIFO stack: push in reverse so neighbors are explored in order
            stack.extend(reversed(extensions))
    return results


def mask_tokens(sentence: str, rate: float, rng: random.Random) -> CorpusSentence:
    """Mask max(1, round(rate * N)) of the sentence's whitespace tokens."""
    if not sentence or not sentence.strip():
        raise ValueError("sentence must be non-empty")
    if not (0.0 < rate < 1.0):
        raise ValueError("rate must be in (0, 1)")
    tokens = sentence.split()
    n = len(tokens)
    count = max(1, round(rate * n))
    positions = tuple(sorted(rng.sample(range(n), count)))
    masked = list(tokens)
    for position in positions:
        masked[position] = MASK_TOKEN
    return CorpusSentence(
        text=" ".join(tokens),
        masked_text=" ".join(masked),
        masked_positions=positions,
    )


def unmask(masked_text: str, masked_positions: Sequence[int], original_tokens: Sequence[str]) -> str:
    """Undo mask_tokens given the original tokens at the masked positions."""
    tokens = masked_text.split(" ")
    for position, token in zip(masked_positions, original_tokens):
        tokens[position] = token
    return " ".join(tokens)


def generate_corpus(
    pairs: Sequence[QAPair],
    graph: KnowledgeGraph,
    config: CorpusConfig,
    link_config: Optional[LinkConfig] = None,
) -> Tuple[List[CorpusSentence], CorpusReport]:
    """Render and mask every question-entity -> gold-answer path sentence.

    Pairs whose question or gold answer cannot be linked are skipped (and
    counted); duplicate sentence texts are dropped before the max_sentences
    cap is applied. Deterministic for a fixed seed.
    """
    if not pairs:
        raise ValueError("no QA pairs given")
    report = CorpusReport(pairs=len(pairs))
    linker = EntityLinker(graph)
    chosen: List[Tuple[str, tuple]] = []  # (text, source)
    seen_texts = set()
    for pair_index, pair in enumerate(pairs):
        gold_label = normalize_label(pair.gold_answer)
        if not graph.has_node(gold_label):
            report.skipped += 1
            continue
        try:
            link = extract_entities(pair.question, graph, link_config, linker=linker)
        except NoLinkableEntitiesError:
            report.skipped += 1
            continue
        target = graph.node_id(gold_label)
        paths = find_paths_between(graph, link.node_ids(), target, config.max_hops)
        if not paths:
            report.zero_paths += 1
            continue
        for path in paths:
            text = render_path(path).text
            if text in seen_texts:
                continue
            seen_texts.add(text)
            chosen.append((text, (pair_index, path)))

    chosen = chosen[: config.max_sentences]
    rng = random.Random(config.seed)
    sentences = []
    for text, source in chosen:
        masked = mask_tokens(text, config.mask_rate, rng)
        sentences.append(
            CorpusSentence(
                text=masked.text,
                masked_text=masked.masked_text,
                masked_positions=masked.masked_positions,
                source=source,
            )
        )
    report.sentences = len(sentences)
    return sentences, report


def read_qa_pairs(lines: Iterable[str]) -> List[QAPair]:
    """Parse question<TAB>answer_label lines."""
    pairs = []
    for line_number, raw_line in enumerate(lines, start=1):
        line = raw_line.rstrip("\r\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise ValueError(f"line {line_number}: expected question<TAB>answer_label")
        pairs.append(QAPair(parts[0].strip(), parts[1].strip()))
    if not pairs:
        raise ValueError("QA file contains no pairs")
    return pairs


def write_corpus(sentences: Sequence[CorpusSentence], path) -> None:
    """One record per line: text<TAB>masked_text<TAB>comma-joined positions."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in sentences:
            positions = ",".join(str(p) for p in s.masked_positions)
            fh.write(f"{s.text}\t{s.masked_text}\t{positions}\n")


def read_corpus_texts(lines: Iterable[str]) -> List[str]:
    """Plain sentence texts from a corpus file (first column)."""
    texts = []
    for line_number, raw_line in enumerate(lines, start=1):
        line = raw_line.rstrip("\n")
        if not line.strip():
            continue
        texts.append(line.split("\t")[0])
    return texts
