"""Beam-pruned multi-hop answer search over the knowledge graph.

Starting from the question's linked entities, the frontier grows one hop at
a time. Every candidate extension is scored by the configured scorer on the
full prompt "<question> <terminal> , because <path statement>", the frontier
keeps the K best cumulative paths, and every surviving path of length >= 1
nominates its terminal node as an answer. Ordering is total everywhere
(score desc, then terminal label, then statement text) so a search is
reproducible down to the byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from .kg import KnowledgeGraph, NodeId, ReasoningPath
from .linking import EntityLinker, LinkConfig, extract_entities
from .scoring import Score, ScoreRequest, Scorer, score
from .verbalize import Statement, build_prompt, render_path


@dataclass(frozen=True)
class SearchConfig:
    max_hops: int = 3
    beam_width: int = 100
    direction: str = "both"  # "out" | "both"
    answers_returned: Optional[int] = None  # None -> all

    def __post_init__(self):
        if self.max_hops < 1:
            raise ValueError("max_hops must be >= 1")
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.direction not in ("out", "both"):
            raise ValueError("direction must be 'out' or 'both'")
        if self.answers_returned is not None and self.answers_returned < 1:
            raise ValueError("answers_returned must be >= 1 when set")

    def as_dict(self) -> dict:
        return {
            "max_hops": self.max_hops,
            "beam_width": self.beam_width,
            "direction": self.direction,
            "answers_returned": self.answers_returned,
        }


@dataclass
class Frontier:
    hop: int
    paths: List[ReasoningPath] = field(default_factory=list)
    statement_texts: List[str] = field(default_factory=list)  # aligned with paths


@dataclass(frozen=True)
class Answer:
    entity: NodeId
    path: ReasoningPath
    statement: Statement
    score: float

    @property
    def label(self) -> str:
        return self.path.terminal_label


def _order_key(path: ReasoningPath, statement_text: str):
    return (-path.cumulative, path.terminal_label, statement_text)


def expand_hop(
    frontier: Frontier,
    graph: KnowledgeGraph,
    scorer: Scorer,
    question: str,
    config: SearchConfig,
) -> Frontier:
    """Grow every frontier path by one admissible edge, score, prune to K.

    Admissible means: direction allowed by the config and the new endpoint
    not already on the path. All candidate prompts go to the scorer in one
    batched request; a scorer failure aborts the hop (nothing partial is
    kept). An empty candidate set is a legal dead end.
    """
    if frontier.hop >= config.max_hops:
        raise ValueError(f"frontier already at hop {frontier.hop} of {config.max_hops}")
    skeletons = []  # (candidate path, statement text, prompt text)
    for path in frontier.paths:
        terminal = path.terminal_node
        visited = set(path.node_ids())
        for edge in graph.neighbors(terminal, config.direction):
            direction = "forward" if edge.head == terminal else "reverse"
            nxt = edge.tail if direction == "forward" else edge.head
            if nxt in visited:
                continue
            candidate = path.extended(edge, direction)
            prompt = build_prompt(question, candidate)
            skeletons.append((path, candidate, prompt))
    if not skeletons:
        return Frontier(hop=frontier.hop + 1)

    request = ScoreRequest(tuple(prompt.text for _, _, prompt in skeletons))
    hop_scores: Sequence[Score] = score(scorer, request)

    scored = []
    for (parent, candidate, prompt), hop_score in zip(skeletons, hop_scores):
        final = candidate.with_scores(parent.per_hop_scores + (hop_score.value,))
        scored.append((final, prompt.statement.text))
    scored.sort(key=lambda item: _order_key(item[0], item[1]))
    kept = scored[: config.beam_width]
    return Frontier(
        hop=frontier.hop + 1,
        paths=[p for p, _ in kept],
        statement_texts=[t for _, t in kept],
    )


def search(
    question: str,
    graph: KnowledgeGraph,
    scorer: Scorer,
    config: Optional[SearchConfig] = None,
    link_config: Optional[LinkConfig] = None,
    linker: Optional[EntityLinker] = None,
) -> List[Answer]:
    """Rank answer entities for a question.

    Returns answers best-first, deduplicated by entity (each entity keeps
    its best-scoring path). The question's own linked entities never appear
    as answers. Returns an empty list when the graph offers no usable path
    ("no answer found"); raises NoLinkableEntitiesError when the question
    cannot even be linked.
    """
    config = config or SearchConfig()
    link = extract_entities(question, graph, link_config, linker=linker)
    question_text = link.question
    question_nodes = set(link.node_ids())

    frontier = Frontier(hop=0, paths=[graph.seed_path(n) for n in link.node_ids()])
    best: dict = {}  # terminal node -> (path, statement_text)
    for _ in range(config.max_hops):
        frontier = expand_hop(frontier, graph, scorer, question_text, config)
        if not frontier.paths:
            break
        for path, statement_text in zip(frontier.paths, frontier.statement_texts):
            terminal = path.terminal_node
            if terminal in question_nodes:
                continue
            incumbent = best.get(terminal)
            if incumbent is None or _order_key(path, statement_text) < _order_key(*incumbent):
                best[terminal] = (path, statement_text)

    ranked = sorted(best.values(), key=lambda item: _order_key(*item))
    if config.answers_returned is not None:
        ranked = ranked[: config.answers_returned]
    return [
        Answer(
            entity=path.terminal_node,
            path=path,
            statement=render_path(path),
            score=path.cumulative,
        )
        for path, _ in ranked
    ]


def predict_answer(answers: Sequence[Answer]) -> Answer:
    """The single best answer under the global ordering rule."""
    if not answers:
        raise ValueError("no answers to choose from")
    return min(answers, key=lambda a: (-a.score, a.label, a.statement.text))


def answer_record(
    question: str,
    answers: Sequence[Answer],
    config: SearchConfig,
    run_config: Optional[dict] = None,
) -> dict:
    """The serializable result record for one question."""
    record = {
        "question": question,
        "config": dict(config.as_dict(), **(run_config or {})),
    }
    if not answers:
        record.update({"answer_label": None, "error": "no answer found", "answers": []})
        return record
    top = answers[0]
    record.update(
        {
            "answer_label": top.label,
            "score": top.score,
            "path": _path_record(top.path),
            "statement_text": top.statement.text,
            "answers": [
                {
                    "answer_label": a.label,
                    "score": a.score,
                    "path": _path_record(a.path),
                    "statement_text": a.statement.text,
                }
                for a in answers
            ],
        }
    )
    return record


def _path_record(path: ReasoningPath) -> list:
    return [
        {
            "head": edge.head_label,
            "relation": edge.relation.canonical_name,
            "tail": edge.tail_label,
            "direction": direction,
            "hop_score": hop_score,
        }
        for (edge, direction), hop_score in zip(path.steps, path.per_hop_scores)
    ]
