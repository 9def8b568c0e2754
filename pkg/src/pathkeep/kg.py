"""Knowledge graph storage: relation merging, ingestion, adjacency, snapshots.

The graph is a directed multi-relational edge set over normalized string
labels. Construction happens once (from an assertion dump or a small fixture
file); after that the graph is immutable and safe to share across threads.

Relation names are canonicalized through a merge table: a handful of
near-synonymous relation families collapse to one canonical relation each,
everything else passes through with an auto-generated surface template. The
phrase templates live in a TSV file whose SHA-256 is embedded in every graph
snapshot so a snapshot can be tied to the template vocabulary it was built
with.
"""

from __future__ import annotations

import hashlib
import json
import re
import struct
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from typing import Iterable, Iterator, Optional, Sequence

NodeId = int

_DIRECTIONS = ("out", "in", "both")

# Relation families that collapse to a single canonical relation. Keys are
# normalized relation keys (lowercase, alphanumeric only).
_MERGE_GROUPS = {
    "antonym": ("antonym", "distinctfrom"),
    "atlocation": ("atlocation", "locatednear"),
    "causes": ("causes", "causesdesire", "motivatedby", "motivatedbygoal"),
    "relatedto": ("relatedto", "similarto", "synonym"),
    "isa": ("isa", "instanceof", "definedas"),
}

_MEMBER_TO_CANONICAL = {
    member: canonical
    for canonical, members in _MERGE_GROUPS.items()
    for member in members
}


class IngestError(ValueError):
    """A data problem in an input stream (optionally tied to a line number)."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        super().__init__(message)
        self.line_number = line_number


class EmptyGraphError(IngestError):
    """The input produced a graph with no edges."""


class SnapshotError(ValueError):
    """A graph snapshot is unreadable or inconsistent."""


@dataclass(frozen=True)
class RelationType:
    canonical_name: str
    surface_text: str
    inverse_surface_text: str


@dataclass(frozen=True)
class Edge:
    head: NodeId
    relation: RelationType
    tail: NodeId
    weight: float
    head_label: str
    tail_label: str


@dataclass(frozen=True)
class ReasoningPath:
    """A simple (cycle-free) walk through the graph, with optional hop scores.

    ``steps`` holds (edge, direction) pairs where direction is "forward"
    (head -> tail) or "reverse" (tail -> head). ``cumulative`` is always the
    plain sum of ``per_hop_scores``; ``with_scores`` recomputes it.
    """

    origin: NodeId
    origin_label: str
    steps: tuple = ()
    per_hop_scores: tuple = ()
    cumulative: float = 0.0

    def node_ids(self) -> tuple:
        ids = [self.origin]
        for edge, direction in self.steps:
            ids.append(edge.tail if direction == "forward" else edge.head)
        return tuple(ids)

    def node_labels(self) -> tuple:
        labels = [self.origin_label]
        for edge, direction in self.steps:
            labels.append(edge.tail_label if direction == "forward" else edge.head_label)
        return tuple(labels)

    @property
    def terminal_node(self) -> NodeId:
        if not self.steps:
            return self.origin
        edge, direction = self.steps[-1]
        return edge.tail if direction == "forward" else edge.head

    @property
    def terminal_label(self) -> str:
        if not self.steps:
            return self.origin_label
        edge, direction = self.steps[-1]
        return edge.tail_label if direction == "forward" else edge.head_label

    def __len__(self) -> int:
        return len(self.steps)

    def extended(self, edge: Edge, direction: str) -> "ReasoningPath":
        """Grow the walk by one edge; scores are left untouched."""
        if direction not in ("forward", "reverse"):
            raise ValueError(f"bad direction flag: {direction!r}")
        return replace(self, steps=self.steps + ((edge, direction),))

    def with_scores(self, per_hop_scores: Sequence[float]) -> "ReasoningPath":
        scores = tuple(float(s) for s in per_hop_scores)
        if len(scores) != len(self.steps):
            raise ValueError("one score per step required")
        return replace(self, per_hop_scores=scores, cumulative=float(sum(scores)))


def _relation_key(name: str) -> str:
    return re.sub(r"[^a-z0-9]", "", name.lower())


_CAMEL_BOUNDARY = re.compile(r"(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])")


def _split_relation_name(name: str) -> str:
    """"UsedFor" / "used for" / "used_for" all become "used_for"."""
    spaced = _CAMEL_BOUNDARY.sub("_", name)
    spaced = re.sub(r"[\s/\-]+", "_", spaced).strip("_")
    spaced = re.sub(r"_+", "_", spaced)
    return spaced.lower()


class TemplateTable:
    """Phrase templates for relations, keyed by canonical name.

    File format: one header line, then tab-separated
    canonical_name / surface_text / inverse_surface_text rows.
    """

    def __init__(self, rows: Sequence[RelationType], version_hash: str):
        self.rows = {r.canonical_name: r for r in rows}
        self.by_key = {_relation_key(r.canonical_name): r for r in rows}
        self.version_hash = version_hash

    @classmethod
    def from_bytes(cls, data: bytes) -> "TemplateTable":
        version_hash = hashlib.sha256(data).hexdigest()
        rows = []
        for i, line in enumerate(data.decode("utf-8").splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            if line.startswith("canonical_name\t"):
                continue  # header
            parts = line.split("\t")
            if len(parts) != 3:
                raise IngestError(f"template table line {i}: expected 3 columns", i)
            canonical, surface, inverse = (p.strip() for p in parts)
            if not canonical or not surface or not inverse:
                raise IngestError(f"template table line {i}: empty field", i)
            rows.append(RelationType(canonical, surface, inverse))
        if not rows:
            raise IngestError("template table has no rows")
        return cls(rows, version_hash)

    @classmethod
    def from_path(cls, path) -> "TemplateTable":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


@lru_cache(maxsize=1)
def default_templates() -> TemplateTable:
    data = resources.files("pathkeep.data").joinpath("templates.tsv").read_bytes()
    return TemplateTable.from_bytes(data)


def merge_relation(raw_relation: str, table: Optional[TemplateTable] = None) -> RelationType:
    """Map any relation URI or name to its canonical RelationType.

    Total over non-empty strings: merged families hit the template table,
    other known names hit their table row, and anything else passes through
    with a mechanical "is <split name>" surface.
    """
    if not raw_relation or not raw_relation.strip():
        raise ValueError("relation name must be non-empty")
    table = table or default_templates()
    name = raw_relation.strip()
    if name.startswith("/r/"):
        name = name[len("/r/"):]
    key = _relation_key(name)
    if not key:
        raise ValueError(f"relation name has no usable characters: {raw_relation!r}")
    canonical_key = _MEMBER_TO_CANONICAL.get(key, key)
    known = table.by_key.get(canonical_key)
    if known is not None:
        return known
    canonical = _split_relation_name(name)
    words = canonical.split("_")
    phrase = " ".join(words)
    surface = phrase if words[0] == "is" else f"is {phrase}"
    return RelationType(canonical, surface, f"is the inverse-{canonical} of")


def normalize_label(label: str) -> str:
    return re.sub(r"\s+", "_", label.strip().lower())


def _parse_concept_uri(uri: str):
    """Return (language, normalized label) or None when the URI is malformed.

    Accepts "/c/<lang>/<term>" with optional trailing sense segments
    ("/c/en/car/n/wn/artifact" keeps just "car").
    """
    if not uri.startswith("/c/"):
        return None
    parts = uri.split("/")
    if len(parts) < 4 or not parts[2] or not parts[3]:
        return None
    label = normalize_label(parts[3])
    if not label:
        return None
    return parts[2], label


@dataclass
class IngestConfig:
    strict: bool = False
    language: str = "en"
    min_weight: float = 0.01


@dataclass
class IngestReport:
    total: int = 0
    kept: int = 0
    non_english: int = 0
    malformed: int = 0
    dedup: int = 0
    self_loops: int = 0

    def as_text(self) -> str:
        return "\n".join(
            f"{k}={getattr(self, k)}"
            for k in ("total", "kept", "non_english", "malformed", "dedup", "self_loops")
        )


class KnowledgeGraph:
    """Immutable directed multi-relational graph over normalized labels."""

    def __init__(
        self,
        labels: Sequence[str],
        edges: Sequence[Edge],
        template_hash: str,
    ):
        self._labels = list(labels)
        self._index = {label: i for i, label in enumerate(self._labels)}
        if len(self._index) != len(self._labels):
            raise ValueError("duplicate labels in node table")
        self.template_hash = template_hash
        self._out = [[] for _ in self._labels]
        self._in = [[] for _ in self._labels]
        self.relation_counts: dict = {}
        for edge in edges:
            self._out[edge.head].append(edge)
            self._in[edge.tail].append(edge)
            name = edge.relation.canonical_name
            self.relation_counts[name] = self.relation_counts.get(name, 0) + 1
        for node in range(len(self._labels)):
            self._out[node].sort(key=lambda e: (e.relation.canonical_name, e.tail_label))
            self._in[node].sort(key=lambda e: (e.relation.canonical_name, e.head_label))
        self._edge_count = len(edges)

    # -- lookups ------------------------------------------------------------

    @property
    def node_count(self) -> int:
        return len(self._labels)

    @property
    def edge_count(self) -> int:
        return self._edge_count

    def labels(self) -> Iterator[str]:
        return iter(self._labels)

    def has_node(self, label: str) -> bool:
        return label in self._index

    def node_id(self, label: str) -> NodeId:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"unknown node label: {label!r}") from None

    def label_of(self, node: NodeId) -> str:
        self._check_node(node)
        return self._labels[node]

    def _check_node(self, node: NodeId) -> None:
        if not isinstance(node, int) or isinstance(node, bool) or not (0 <= node < len(self._labels)):
            raise KeyError(f"unknown node id: {node!r}")

    def neighbors(self, node: NodeId, direction: str = "both"):
        """Edges incident to ``node``, deterministically ordered.

        Each direction's edges are sorted by (relation canonical name,
        neighbor label); "both" is out edges followed by in edges.
        """
        self._check_node(node)
        if direction not in _DIRECTIONS:
            raise ValueError(f"direction must be one of {_DIRECTIONS}, got {direction!r}")
        if direction == "out":
            return list(self._out[node])
        if direction == "in":
            return list(self._in[node])
        return list(self._out[node]) + list(self._in[node])

    def seed_path(self, node: NodeId) -> ReasoningPath:
        self._check_node(node)
        return ReasoningPath(origin=node, origin_label=self._labels[node])

    def stats(self) -> dict:
        return {
            "node_count": self.node_count,
            "edge_count": self.edge_count,
            "relations": dict(sorted(self.relation_counts.items())),
        }

    def edges(self) -> Iterator[Edge]:
        for adjacency in self._out:
            yield from adjacency

    # -- serialization --------------------------------------------------------

    _MAGIC = b"PKSNAP01"

    def serialize(self) -> bytes:
        """Canonical binary form: same graph content -> same bytes."""
        out = [self._MAGIC, self.template_hash.encode("ascii")]

        def put_str(s: str):
            raw = s.encode("utf-8")
            out.append(struct.pack("<I", len(raw)))
            out.append(raw)

        relations = sorted(
            {e.relation for e in self.edges()},
            key=lambda r: r.canonical_name,
        )
        rel_index = {r: i for i, r in enumerate(relations)}
        all_edges = sorted(
            self.edges(),
            key=lambda e: (e.head, e.relation.canonical_name, e.tail_label),
        )
        out.append(struct.pack("<III", len(self._labels), len(relations), len(all_edges)))
        for label in self._labels:
            put_str(label)
        for rel in relations:
            put_str(rel.canonical_name)
            put_str(rel.surface_text)
            put_str(rel.inverse_surface_text)
        for e in all_edges:
            out.append(struct.pack("<IIId", e.head, rel_index[e.relation], e.tail, e.weight))
        return b"".join(out)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.serialize())

    @classmethod
    def deserialize(cls, data: bytes, check_templates: bool = True) -> "KnowledgeGraph":
        view = memoryview(data)
        pos = 0

        def take(n: int) -> bytes:
            nonlocal pos
            if pos + n > len(view):
                raise SnapshotError("snapshot truncated")
            chunk = view[pos:pos + n].tobytes()
            pos += n
            return chunk

        def take_str() -> str:
            (n,) = struct.unpack("<I", take(4))
            return take(n).decode("utf-8")

        if take(len(cls._MAGIC)) != cls._MAGIC:
            raise SnapshotError("not a graph snapshot (bad magic)")
        template_hash = take(64).decode("ascii")
        if check_templates and template_hash != default_templates().version_hash:
            raise SnapshotError(
                "snapshot was built with a different relation template table; "
                "re-ingest or pass check_templates=False"
            )
        n_nodes, n_rels, n_edges = struct.unpack("<III", take(12))
        labels = [take_str() for _ in range(n_nodes)]
        relations = [
            RelationType(take_str(), take_str(), take_str()) for _ in range(n_rels)
        ]
        edges = []
        for _ in range(n_edges):
            head, rel_i, tail, weight = struct.unpack("<IIId", take(16 + 4))
            if rel_i >= n_rels or head >= n_nodes or tail >= n_nodes:
                raise SnapshotError("snapshot references unknown node or relation")
            edges.append(
                Edge(head, relations[rel_i], tail, weight, labels[head], labels[tail])
            )
        if pos != len(view):
            raise SnapshotError("snapshot has trailing bytes")
        return cls(labels, edges, template_hash)

    @classmethod
    def load(cls, path, check_templates: bool = True) -> "KnowledgeGraph":
        with open(path, "rb") as fh:
            return cls.deserialize(fh.read(), check_templates=check_templates)


class _GraphBuilder:
    """Accumulates normalized edges; node ids follow first appearance."""

    def __init__(self, template_hash: str):
        self.labels: list = []
        self.index: dict = {}
        self.edges: list = []
        self.seen: set = set()
        self.template_hash = template_hash

    def node(self, label: str) -> int:
        node = self.index.get(label)
        if node is None:
            node = len(self.labels)
            self.index[label] = node
            self.labels.append(label)
        return node

    def add(self, head_label: str, relation: RelationType, tail_label: str, weight: float) -> bool:
        key = (head_label, relation.canonical_name, tail_label)
        if key in self.seen:
            return False
        self.seen.add(key)
        head = self.node(head_label)
        tail = self.node(tail_label)
        self.edges.append(Edge(head, relation, tail, weight, head_label, tail_label))
        return True

    def build(self) -> KnowledgeGraph:
        return KnowledgeGraph(self.labels, self.edges, self.template_hash)


def _assertion_weight(metadata_field: str, minimum: float) -> float:
    try:
        meta = json.loads(metadata_field)
        weight = float(meta.get("weight", 1.0))
    except (ValueError, TypeError, AttributeError):
        weight = 1.0
    return max(weight, minimum)


def ingest_conceptnet(
    assertion_stream: Iterable[str],
    config: Optional[IngestConfig] = None,
    table: Optional[TemplateTable] = None,
):
    """Build a graph from assertion dump lines.

    Each line needs >= 5 tab-separated fields: assertion URI, relation URI,
    start URI, end URI, JSON metadata. Only edges whose two endpoints are in
    the configured language are kept; labels are normalized; self-loops and
    duplicate (head, relation, tail) triples are dropped and counted.

    Returns (KnowledgeGraph, IngestReport). In strict mode the first
    malformed line aborts with its line number.
    """
    config = config or IngestConfig()
    table = table or default_templates()
    report = IngestReport()
    builder = _GraphBuilder(table.version_hash)

    def malformed(line_number: int, why: str):
        report.malformed += 1
        if config.strict:
            raise IngestError(f"line {line_number}: {why}", line_number)

    for line_number, raw_line in enumerate(assertion_stream, start=1):
        report.total += 1
        line = raw_line.rstrip("\r\n")
        if not line.strip():
            malformed(line_number, "blank line")
            continue
        fields = line.split("\t")
        if len(fields) < 5:
            malformed(line_number, f"expected >=5 tab-separated fields, got {len(fields)}")
            continue
        relation_uri = fields[1].strip()
        if not relation_uri:
            malformed(line_number, "empty relation field")
            continue
        start = _parse_concept_uri(fields[2].strip())
        end = _parse_concept_uri(fields[3].strip())
        if start is None or end is None:
            malformed(line_number, "unparseable concept URI")
            continue
        if start[0] != config.language or end[0] != config.language:
            report.non_english += 1
            continue
        head_label, tail_label = start[1], end[1]
        if head_label == tail_label:
            report.self_loops += 1
            continue
        relation = merge_relation(relation_uri, table)
        weight = _assertion_weight(fields[4], config.min_weight)
        if builder.add(head_label, relation, tail_label, weight):
            report.kept += 1
        else:
            report.dedup += 1

    if not builder.edges:
        raise EmptyGraphError("ingest produced an empty graph (no edges kept)")
    return builder.build(), report


def load_fixture(
    tsv_stream: Iterable[str],
    table: Optional[TemplateTable] = None,
):
    """Build a graph from 3-column head<TAB>relation<TAB>tail lines.

    Labels are expected pre-normalized; relation names go through
    merge_relation. Duplicate triples collapse to one edge; self-loops are
    dropped. Returns (KnowledgeGraph, IngestReport).
    """
    table = table or default_templates()
    report = IngestReport()
    builder = _GraphBuilder(table.version_hash)
    for line_number, raw_line in enumerate(tsv_stream, start=1):
        report.total += 1
        line = raw_line.rstrip("\r\n")
        fields = line.split("\t")
        if len(fields) != 3:
            raise IngestError(
                f"line {line_number}: expected 3 tab-separated columns, got {len(fields)}",
                line_number,
            )
        head_label = normalize_label(fields[0])
        tail_label = normalize_label(fields[2])
        relation_name = fields[1].strip()
        if not head_label or not tail_label or not relation_name:
            raise IngestError(f"line {line_number}: empty column", line_number)
        if head_label == tail_label:
            report.self_loops += 1
            continue
        relation = merge_relation(relation_name, table)
        if builder.add(head_label, relation, tail_label, 1.0):
            report.kept += 1
        else:
            report.dedup += 1
    if not builder.edges:
        raise EmptyGraphError("fixture contains no edges")
    return builder.build(), report


def demo_graph_path():
    """Path of the small bundled demo fixture (people/work/office...)."""
    return resources.files("pathkeep.data").joinpath("demo_graph.tsv")


def demo_oracle_path():
    """Path of the probability table tuned for the bundled demo fixture."""
    return resources.files("pathkeep.data").joinpath("demo_oracle.tsv")
