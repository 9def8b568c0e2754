import pytest

from pathkeep import KnowledgeGraph, OracleScorer, load_fixture
from pathkeep.kg import demo_graph_path, demo_oracle_path


def graph_from_edges(triples) -> KnowledgeGraph:
    """Build a graph from (head, relation, tail) tuples."""
    lines = [f"{h}\t{r}\t{t}" for h, r, t in triples]
    graph, _ = load_fixture(lines)
    return graph


@pytest.fixture(scope="session")
def demo_graph() -> KnowledgeGraph:
    with open(demo_graph_path(), "r", encoding="utf-8") as fh:
        graph, _ = load_fixture(fh)
    return graph


@pytest.fixture(scope="session")
def demo_scorer() -> OracleScorer:
    return OracleScorer.from_file(demo_oracle_path())


@pytest.fixture()
def cable_graph() -> KnowledgeGraph:
    return graph_from_edges(
        [
            ("cable", "isa", "television"),
            ("cable", "requiredfor", "television"),
            ("television", "isa", "home_entertainment_equipment"),
            ("television", "relatedto", "movie"),
            ("movie", "relatedto", "popcorn"),
        ]
    )
