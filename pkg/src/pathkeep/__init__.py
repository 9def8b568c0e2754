"""Multi-hop commonsense question answering over a ConceptNet-style graph."""

from .kg import (
    Edge,
    EmptyGraphError,
    IngestConfig,
    IngestError,
    IngestReport,
    KnowledgeGraph,
    NodeId,
    ReasoningPath,
    RelationType,
    SnapshotError,
    TemplateTable,
    default_templates,
    demo_graph_path,
    demo_oracle_path,
    ingest_conceptnet,
    load_fixture,
    merge_relation,
    normalize_label,
)
from .linking import (
    EntityLinker,
    EntityMention,
    LinkConfig,
    LinkResult,
    NoLinkableEntitiesError,
    extract_entities,
    lemmatize,
)
from .verbalize import ClozePrompt, Statement, build_prompt, render_path, render_triplet
from .scoring import (
    LOG_FLOOR,
    FrequencyTable,
    LengthMismatch,
    MalformedReply,
    OracleScorer,
    RemoteScorer,
    RequestRejected,
    Score,
    ScoreRequest,
    Scorer,
    ScorerError,
    ServiceUnavailable,
    TransportFailure,
    make_scorer,
    oracle_from_corpus,
    score,
    score_answer_sentence,
    tokenize,
)
from .api import create_app
from .search import Answer, Frontier, SearchConfig, answer_record, expand_hop, predict_answer, search
from .corpus import (
    MASK_TOKEN,
    CorpusConfig,
    CorpusReport,
    CorpusSentence,
    QAPair,
    find_paths_between,
    generate_corpus,
    mask_tokens,
    read_corpus_texts,
    read_qa_pairs,
    unmask,
    write_corpus,
)

__version__ = "0.1.0"
