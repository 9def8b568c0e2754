"""Command-line surface: ingest, answer, corpus, score, serve.

Every option can also come from an environment variable (PATHKEEP_ prefix,
e.g. PATHKEEP_GRAPH) or a JSON config file passed with --config; explicit
flags win over the environment, which wins over the config file, which wins
over built-in defaults.

Exit codes: 0 success (including "no answer found"), 1 data error, 2 usage
error, 3 scorer/transport error.
"""

from __future__ import annotations

import gzip
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import click

from .corpus import CorpusConfig, generate_corpus, read_qa_pairs, write_corpus
from .kg import IngestConfig, IngestError, KnowledgeGraph, SnapshotError, ingest_conceptnet, load_fixture
from .linking import NoLinkableEntitiesError
from .scoring import ScorerError, make_scorer, score_answer_sentence
from .search import SearchConfig, answer_record, predict_answer, search

EXIT_DATA_ERROR = 1
EXIT_USAGE = 2
EXIT_SCORER = 3


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


# config keys are flag names; these flags store under a different parameter name
_CONFIG_ALIASES = {"scorer": "scorer_spec", "graph": "graph_path", "max": "max_sentences"}


def _load_config_file(ctx, param, value):
    """--config callback: JSON object {option_name: default} for all commands."""
    if not value:
        return None
    try:
        with open(value, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise click.UsageError(f"config file not found: {value}")
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"config file {value} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise click.UsageError(f"config file {value} must hold a JSON object")
    defaults = {}
    for key, entry in data.items():
        key = key.replace("-", "_")
        defaults[_CONFIG_ALIASES.get(key, key)] = entry
    ctx.default_map = {cmd: defaults for cmd in ("ingest", "answer", "corpus", "score", "serve")}
    return value


@click.group()
@click.option(
    "--config",
    type=click.Path(),
    callback=_load_config_file,
    expose_value=False,
    is_eager=True,
    envvar="PATHKEEP_CONFIG",
    help="JSON file with default option values.",
)
def main():
    """Knowledge-graph question answering over a ConceptNet-style graph."""


def _open_text(path: str):
    with open(path, "rb") as probe:
        magic = probe.read(2)
    if magic == b"\x1f\x8b":
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, "r", encoding="utf-8")


@main.command()
@click.argument("dump", required=False, type=click.Path(exists=True, dir_okay=False))
@click.option("--fixture", type=click.Path(exists=True, dir_okay=False), envvar="PATHKEEP_FIXTURE",
              help="3-column head/relation/tail TSV instead of an assertion dump.")
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False), envvar="PATHKEEP_OUTPUT",
              help="Where to write the graph snapshot.")
@click.option("--strict", is_flag=True, envvar="PATHKEEP_STRICT",
              help="Abort on the first malformed dump line.")
def ingest(dump: Optional[str], fixture: Optional[str], output: str, strict: bool):
    """Build a graph snapshot from an assertion dump or a fixture TSV."""
    if (dump is None) == (fixture is None):
        raise click.UsageError("give exactly one input: a dump path or --fixture")
    try:
        if fixture is not None:
            with _open_text(fixture) as fh:
                graph, report = load_fixture(fh)
        else:
            with _open_text(dump) as fh:
                graph, report = ingest_conceptnet(fh, IngestConfig(strict=strict))
    except IngestError as exc:
        _fail(str(exc), EXIT_DATA_ERROR)
    graph.save(output)
    click.echo(report.as_text())
    click.echo(f"nodes={graph.node_count}")
    click.echo(f"edges={graph.edge_count}")


def _load_graph(path: str) -> KnowledgeGraph:
    try:
        return KnowledgeGraph.load(path)
    except FileNotFoundError:
        raise click.UsageError(f"graph snapshot not found: {path}")
    except SnapshotError as exc:
        _fail(str(exc), EXIT_DATA_ERROR)


def _build_scorer(selector: str):
    try:
        return make_scorer(selector)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    except FileNotFoundError as exc:
        raise click.UsageError(f"scorer table not found: {exc.filename}")


def _search_options(fn):
    fn = click.option("--graph", "graph_path", required=True, envvar="PATHKEEP_GRAPH",
                      type=click.Path(), help="Graph snapshot path.")(fn)
    fn = click.option("--scorer", "scorer_spec", required=True, envvar="PATHKEEP_SCORER",
                      help="oracle:<table path> or remote:<base URL>.")(fn)
    fn = click.option("--hops", default=3, show_default=True, envvar="PATHKEEP_HOPS",
                      help="Maximum path length.")(fn)
    fn = click.option("--beam", default=100, show_default=True, envvar="PATHKEEP_BEAM",
                      help="Paths kept per hop.")(fn)
    fn = click.option("--direction", default="both", show_default=True, envvar="PATHKEEP_DIRECTION",
                      type=click.Choice(["out", "both"]), help="Edge directions to walk.")(fn)
    return fn


def _pretty_block(record: dict) -> str:
    lines = [f"question: {record['question']}"]
    if record.get("answer_label") is None:
        lines.append(f"answer: (none) — {record.get('error', 'no answer found')}")
        return "\n".join(lines)
    for rank, ans in enumerate(record["answers"], start=1):
        chain = [ans["path"][0]["head"] if ans["path"][0]["direction"] == "forward" else ans["path"][0]["tail"]]
        for hop in ans["path"]:
            chain.append(hop["tail"] if hop["direction"] == "forward" else hop["head"])
        lines.append(f"answer[{rank}]: {ans['answer_label']}  (score {ans['score']:.6f})")
        lines.append(f"  chain: {' -> '.join(chain)}")
        lines.append(f"  because: {ans['statement_text']}")
    return "\n".join(lines)


@main.command()
@click.argument("question", required=False)
@click.option("--batch", type=click.Path(exists=True, dir_okay=False), envvar="PATHKEEP_BATCH",
              help="File with one question per line.")
@_search_options
@click.option("--top", default=1, show_default=True, envvar="PATHKEEP_TOP",
              help="How many ranked answers per question.")
@click.option("--workers", default=1, show_default=True, envvar="PATHKEEP_WORKERS",
              help="Concurrent questions in batch mode.")
@click.option("--pretty", is_flag=True, envvar="PATHKEEP_PRETTY", help="Human-readable blocks.")
@click.option("-o", "--output", type=click.Path(dir_okay=False), envvar="PATHKEEP_OUTPUT",
              help="Write records here instead of stdout.")
def answer(question, batch, graph_path, scorer_spec, hops, beam, direction, top, workers, pretty, output):
    """Answer one question, or a whole file of them."""
    if (question is None) == (batch is None):
        raise click.UsageError("give exactly one of QUESTION or --batch")
    if question is not None and not question.strip():
        raise click.UsageError("question must be non-empty")
    if top < 1:
        raise click.UsageError("--top must be >= 1")
    graph = _load_graph(graph_path)
    scorer = _build_scorer(scorer_spec)
    try:
        config = SearchConfig(max_hops=hops, beam_width=beam, direction=direction, answers_returned=top)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    run_config = {"graph": graph_path, "scorer": scorer_spec}

    def run_one(q: str) -> dict:
        try:
            answers = search(q, graph, scorer, config)
        except NoLinkableEntitiesError as exc:
            return {"question": q, "answer_label": None, "error": str(exc),
                    "answers": [], "config": dict(config.as_dict(), **run_config)}
        return answer_record(q, answers, config, run_config)

    if question is not None:
        try:
            answers = search(question, graph, scorer, config)
        except NoLinkableEntitiesError as exc:
            _fail(str(exc), EXIT_DATA_ERROR)
        except ScorerError as exc:
            _fail(str(exc), EXIT_SCORER)
        records = [answer_record(question, answers, config, run_config)]
    else:
        with open(batch, "r", encoding="utf-8") as fh:
            questions = [line.strip() for line in fh if line.strip()]
        try:
            if workers > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    records = list(pool.map(run_one, questions))
            else:
                records = [run_one(q) for q in questions]
        except ScorerError as exc:
            _fail(str(exc), EXIT_SCORER)

    rendered = [
        _pretty_block(r) if pretty else json.dumps(r, ensure_ascii=False)
        for r in records
    ]
    text = "\n".join(rendered) + "\n"
    if output:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@main.command()
@click.argument("qa_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--graph", "graph_path", required=True, envvar="PATHKEEP_GRAPH", type=click.Path())
@click.option("--seed", required=True, type=int, envvar="PATHKEEP_SEED",
              help="RNG seed for masking (required: outputs must be reproducible).")
@click.option("--hops", default=3, show_default=True, envvar="PATHKEEP_HOPS")
@click.option("--max", "max_sentences", default=20000, show_default=True, envvar="PATHKEEP_MAX",
              help="Sentence cap after dedup.")
@click.option("--mask-rate", default=0.15, show_default=True, envvar="PATHKEEP_MASK_RATE")
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False), envvar="PATHKEEP_OUTPUT")
def corpus(qa_file, graph_path, seed, hops, max_sentences, mask_rate, output):
    """Generate a masked training corpus from question/answer pairs."""
    try:
        config = CorpusConfig(seed=seed, max_hops=hops, max_sentences=max_sentences, mask_rate=mask_rate)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    graph = _load_graph(graph_path)
    try:
        with open(qa_file, "r", encoding="utf-8") as fh:
            pairs = read_qa_pairs(fh)
        sentences, report = generate_corpus(pairs, graph, config)
    except ValueError as exc:
        _fail(str(exc), EXIT_DATA_ERROR)
    write_corpus(sentences, output)
    click.echo(report.as_text())


@main.command()
@click.argument("question")
@click.argument("answer")
@click.option("--scorer", "scorer_spec", required=True, envvar="PATHKEEP_SCORER",
              help="oracle:<table path> or remote:<base URL>.")
def score(question, answer, scorer_spec):
    """Score "<question> <answer>" as one sentence; prints the value."""
    if not question.strip():
        raise click.UsageError("question must be non-empty")
    if not answer.strip():
        raise click.UsageError("answer must be non-empty")
    scorer = _build_scorer(scorer_spec)
    try:
        result = score_answer_sentence(scorer, question, answer)
    except ScorerError as exc:
        _fail(str(exc), EXIT_SCORER)
    click.echo(f"{result.value:.6f}")


@main.command()
@click.option("--graph", "graph_path", required=True, envvar="PATHKEEP_GRAPH", type=click.Path())
@click.option("--scorer", "scorer_spec", required=True, envvar="PATHKEEP_SCORER")
@click.option("--host", default="127.0.0.1", show_default=True, envvar="PATHKEEP_HOST")
@click.option("--port", default=8000, show_default=True, envvar="PATHKEEP_PORT")
@click.option("--hops", default=3, show_default=True, envvar="PATHKEEP_HOPS")
@click.option("--beam", default=100, show_default=True, envvar="PATHKEEP_BEAM")
@click.option("--direction", default="both", show_default=True,
              type=click.Choice(["out", "both"]), envvar="PATHKEEP_DIRECTION")
def serve(graph_path, scorer_spec, host, port, hops, beam, direction):
    """Serve the graph + scorer over HTTP (answer, link, score endpoints)."""
    import uvicorn

    from .api import create_app

    try:
        defaults = SearchConfig(max_hops=hops, beam_width=beam, direction=direction)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    graph = _load_graph(graph_path)
    scorer = _build_scorer(scorer_spec)
    uvicorn.run(create_app(graph, scorer, defaults), host=host, port=port)


if __name__ == "__main__":
    main()
