"""Render edges and paths as plain-English statements and answer prompts.

A one-edge clause is "<head> <surface> <tail>" (or the inverse phrase when
the edge is walked tail-to-head). Multi-hop paths join their clauses with
", " and capitalize only the first character. An answer prompt glues a
question, a candidate answer and the path statement together:

    <question> <candidate>, because <statement>
"""

from __future__ import annotations

from dataclasses import dataclass

from .kg import Edge, ReasoningPath


@dataclass(frozen=True)
class Statement:
    text: str
    source_edges: tuple
    directions: tuple  # "forward" | "reverse" per edge

    @property
    def clause_count(self) -> int:
        return len(self.source_edges)


@dataclass(frozen=True)
class ClozePrompt:
    question: str
    candidate: str
    statement: Statement
    text: str


def label_text(label: str) -> str:
    return label.replace("_", " ")


def _capitalize(text: str) -> str:
    return text[0].upper() + text[1:] if text else text


def _clause(edge: Edge, reverse: bool) -> str:
    if reverse:
        return f"{label_text(edge.tail_label)} {edge.relation.inverse_surface_text} {label_text(edge.head_label)}"
    return f"{label_text(edge.head_label)} {edge.relation.surface_text} {label_text(edge.tail_label)}"


def render_triplet(edge: Edge, reverse: bool = False) -> Statement:
    """One edge -> one capitalized clause."""
    return Statement(
        text=_capitalize(_clause(edge, reverse)),
        source_edges=(edge,),
        directions=("reverse" if reverse else "forward",),
    )


def render_path(path: ReasoningPath) -> Statement:
    """Comma-join the path's clauses; only the first one is capitalized."""
    if not path.steps:
        raise ValueError("cannot render an empty path")
    clauses = [_clause(edge, direction == "reverse") for edge, direction in path.steps]
    return Statement(
        text=_capitalize(", ".join(clauses)),
        source_edges=tuple(edge for edge, _ in path.steps),
        directions=tuple(direction for _, direction in path.steps),
    )


def build_prompt(question: str, path: ReasoningPath) -> ClozePrompt:
    """Prompt for scoring a candidate answer (the path's terminal node)."""
    if not path.steps:
        raise ValueError("cannot build a prompt from an empty path")
    statement = render_path(path)
    candidate = label_text(path.terminal_label)
    return ClozePrompt(
        question=question,
        candidate=candidate,
        statement=statement,
        text=f"{question} {candidate}, because {statement.text}",
    )
