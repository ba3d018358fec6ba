"""Command-line interface.

Exit codes are stable so scripts can branch on them:
  0  success (evaluate: gate passed; refine: converged)
  2  evaluate: gate failed
  3  refine: iteration budget exhausted (best-so-far is printed)
  4  refine: session failed or answers were unavailable
  5  configuration or input errors
"""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click
import yaml

from .clarifier import AnswerSource, ClarifyingQuestion, select_covering
from .config import ConfigError, ProjectConfig, default_config, load_config
from .core import (
    CHARACTERISTICS,
    Characteristic,
    Requirement,
    compute_quality,
    report_to_dict,
    unfulfilled,
)
from .corpus import (
    builtin_baseline,
    load_corpus,
    render_report,
    report_to_dict as corpus_report_to_dict,
    run_corpus,
)
from .evaluator import evaluate, gate
from .gateway import ParsedTable, render_table
from .orchestrator import (
    Orchestrator,
    RefinementSession,
    SessionLogWriter,
    SessionMode,
    SessionStatus,
)
from .ragstore import HashedBagEmbedder, VectorIndex, ingest_files
from . import clarifier

EXIT_GATE_FAILED = 2
EXIT_EXHAUSTED = 3
EXIT_FAILED = 4
EXIT_ERROR = 5


class AnswerBook:
    """Answers file: maps characteristic names or exact question texts to answers."""

    def __init__(self, mapping: dict):
        self._by_question: dict[str, str] = {}
        self._by_target: dict[str, str] = {}
        for key, value in (mapping or {}).items():
            key_text = str(key).strip()
            answer = str(value).strip()
            if not answer:
                continue
            try:
                target = Characteristic.from_name(key_text)
                self._by_target[target.value] = answer
            except ValueError:
                self._by_question[key_text] = answer

    @classmethod
    def load(cls, path: str | Path) -> "AnswerBook":
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"answers file {path} must be a mapping")
        return cls(data)

    def provider(self, question: ClarifyingQuestion) -> str | None:
        if question.text in self._by_question:
            return self._by_question[question.text]
        return self._by_target.get(question.target.value)


class CliState:
    def __init__(self, config_path, overrides, max_iter, as_json):
        self.config_path = config_path
        self.overrides = overrides
        self.max_iter = max_iter
        self.as_json = as_json
        self._project: ProjectConfig | None = None

    def project(self) -> ProjectConfig:
        if self._project is None:
            project = (
                load_config(self.config_path) if self.config_path else default_config()
            )
            for override in self.overrides:
                role, _, name = override.partition("=")
                if not name:
                    raise ConfigError(
                        f"--backend expects ROLE=NAME, got {override!r}"
                    )
                project = project.with_role(role.strip(), name.strip())
            if self.max_iter is not None:
                if self.max_iter < 1:
                    raise ConfigError("--max-iter must be >= 1")
                project = replace(project, max_iterations=self.max_iter)
            self._project = project
        return self._project


def _fail(message: str, code: int = EXIT_ERROR):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
@click.option(
    "--config", "config_path", type=click.Path(path_type=Path), default=None,
    help="Project config file (YAML); defaults to the offline backend.",
)
@click.option(
    "--backend", "overrides", multiple=True, metavar="ROLE=NAME",
    help="Rebind a role (evaluator/clarifier/answerer/rewriter) to a backend.",
)
@click.option("--max-iter", type=int, default=None, help="Iteration budget override.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.pass_context
def main(ctx, config_path, overrides, max_iter, as_json):
    """Raise the quality of natural-language software requirements."""
    ctx.obj = CliState(config_path, overrides, max_iter, as_json)


def _verdict_table(report) -> ParsedTable:
    rows = []
    for characteristic in CHARACTERISTICS:
        verdict = report.verdicts[characteristic]
        rows.append(
            (
                characteristic.value,
                verdict.detail,
                "Yes" if verdict.fulfilled else "No",
            )
        )
    return ParsedTable(
        header=("Feature Name", "Feature Detail", "Fulfilled (yes/no)"), rows=rows
    )


@main.command("evaluate")
@click.argument("text")
@click.pass_obj
def evaluate_cmd(state: CliState, text: str):
    """Judge one requirement against the nine characteristics."""
    try:
        project = state.project()
        requirement = Requirement(id="cli", text=text)
        report = evaluate(
            requirement,
            project.roles.evaluator,
            project.conformance_standard_configured,
            engine=project.engine(),
        )
    except Exception as exc:
        _fail(str(exc))
    score = compute_quality(report)
    passed = gate(report, project.gate)
    if state.as_json:
        click.echo(
            json.dumps(
                {
                    "report": report_to_dict(report),
                    "score": score.value,
                    "fulfilled": score.fulfilled_count,
                    "assessed": score.assessed_count,
                    "gate_passed": passed,
                }
            )
        )
    else:
        click.echo(render_table(_verdict_table(report)))
        click.echo(
            f"score: {score.value} "
            f"({score.fulfilled_count}/{score.assessed_count} assessed)"
        )
        click.echo(f"gate: {'PASS' if passed else 'FAIL'}")
    sys.exit(0 if passed else EXIT_GATE_FAILED)


@main.command("ask")
@click.argument("text")
@click.pass_obj
def ask_cmd(state: CliState, text: str):
    """Print the clarifying questions a requirement needs (no rewriting)."""
    try:
        project = state.project()
        engine = project.engine()
        requirement = Requirement(id="cli", text=text)
        report = evaluate(
            requirement,
            project.roles.evaluator,
            project.conformance_standard_configured,
            engine=engine,
        )
        missing = unfulfilled(report)
        if not missing:
            if state.as_json:
                click.echo(json.dumps({"questions": [], "selected": []}))
            else:
                click.echo("requirement already passes; no questions needed")
            return
        questions = clarifier.generate_questions(
            requirement, missing, project.roles.clarifier, engine=engine
        )
        selected = select_covering(questions, missing)
    except Exception as exc:
        _fail(str(exc))
    if state.as_json:
        click.echo(
            json.dumps(
                {
                    "questions": [clarifier.question_to_dict(q) for q in questions],
                    "selected": [q.id for q in selected],
                }
            )
        )
    else:
        table = ParsedTable(
            header=("Feature Name", "Suggested Questions"),
            rows=[(q.target.value, q.text) for q in selected],
        )
        click.echo(render_table(table))


def _print_leaves(session: RefinementSession, as_json: bool, log_path: Path | None):
    leaves = []
    for requirement in session.leaves.values():
        score = session.score_of(requirement.id)
        leaves.append(
            {
                "id": requirement.id,
                "text": requirement.text,
                "pattern_id": session.pattern_ids.get(requirement.id),
                "score": score,
                "gate_passed": session.passed.get(requirement.id),
                "split_index": requirement.split_index,
            }
        )
    if as_json:
        click.echo(
            json.dumps(
                {
                    "session_id": session.id,
                    "status": session.status.value,
                    "iterations": session.iterations_completed,
                    "leaves": leaves,
                    "log_path": str(log_path) if log_path else None,
                }
            )
        )
        return
    for leaf in leaves:
        pattern = leaf["pattern_id"] or "-"
        score = f"{leaf['score']:.1f}" if leaf["score"] is not None else "?"
        click.echo(f"[{pattern}] score {score}: {leaf['text']}")
    click.echo(f"status: {session.status.value}")
    if log_path:
        click.echo(f"session log: {log_path}")


@main.command("refine")
@click.argument("text")
@click.option(
    "--answers", "answers_path", type=click.Path(exists=True, path_type=Path),
    default=None, help="YAML answers file; switches refine to automatic mode.",
)
@click.option(
    "--mode", type=click.Choice([m.value for m in SessionMode]), default=None,
    help="Override the automatic/interactive choice.",
)
@click.option(
    "--log-dir", type=click.Path(path_type=Path), default=Path("sessions"),
    show_default=True, help="Directory for the append-only session log.",
)
@click.pass_obj
def refine_cmd(state: CliState, text, answers_path, mode, log_dir):
    """Run the full refinement loop on one requirement."""
    try:
        project = state.project()
        book = AnswerBook.load(answers_path) if answers_path else None
        session_mode = (
            SessionMode(mode)
            if mode
            else (SessionMode.AUTOMATIC if book else SessionMode.INTERACTIVE)
        )
        orchestrator = build_orchestrator(
            project, answer_provider=book.provider if book else None
        )
        session = orchestrator.new_session(text, session_mode)
        log_path = Path(log_dir) / f"{session.id}.jsonl"
        writer = SessionLogWriter(log_path, session)
        session.attach_sink(writer.append)
    except Exception as exc:
        _fail(str(exc))

    try:
        orchestrator.run(session)
        while session.status is SessionStatus.AWAITING_ANSWERS:
            unanswered = [
                x for _, x in session.pending_exchanges() if not x.answered
            ]
            if session.mode is not SessionMode.INTERACTIVE:
                click.echo("unanswered questions remain:", err=True)
                for exchange in unanswered:
                    click.echo(
                        f"  [{exchange.question.target.value}] "
                        f"{exchange.question.text}",
                        err=True,
                    )
                _fail("provide answers (see --answers) and rerun", EXIT_FAILED)
            for exchange in unanswered:
                suggestion = session.suggestions.get(exchange.question.id, {})
                prompt_text = (
                    f"[{exchange.question.target.value}] {exchange.question.text}"
                )
                answer = click.prompt(
                    prompt_text, default=suggestion.get("answer"), type=str
                )
                orchestrator.attach_answer(
                    session, exchange.question.id, answer, AnswerSource.STAKEHOLDER
                )
            orchestrator.run(session)
    except click.Abort:
        writer.close()
        _fail("aborted while answering questions", EXIT_FAILED)
    except Exception as exc:
        writer.close()
        _fail(str(exc), EXIT_FAILED)
    writer.close()

    _print_leaves(session, state.as_json, log_path)
    if session.status is SessionStatus.CONVERGED:
        sys.exit(0)
    if session.status is SessionStatus.EXHAUSTED:
        sys.exit(EXIT_EXHAUSTED)
    sys.exit(EXIT_FAILED)


@main.command("ingest")
@click.argument("documents", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
@click.option(
    "--index", "index_path", type=click.Path(path_type=Path), default=None,
    help="Where to write the index (defaults to rag.index_path from the config).",
)
@click.pass_obj
def ingest_cmd(state: CliState, documents, index_path):
    """Chunk, embed, and index context documents for grounded answering."""
    try:
        project = state.project()
        rag = project.rag
        chunk_size = rag.chunk_size if rag else 800
        overlap = rag.overlap if rag else 200
        dimension = rag.dimension if rag else 512
        target = index_path or (rag.index_path if rag else None)
        if target is None:
            raise ConfigError("no index path: pass --index or configure rag.index_path")
        index = VectorIndex(HashedBagEmbedder(dimension))
        chunks = ingest_files(index, documents, chunk_size=chunk_size, overlap=overlap)
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        index.save(target)
    except Exception as exc:
        _fail(str(exc))
    message = {
        "documents": len(documents),
        "chunks": chunks,
        "dimension": index.dimension,
        "index_path": str(target),
    }
    if state.as_json:
        click.echo(json.dumps(message))
    else:
        click.echo(
            f"ingested {len(documents)} document(s) -> {chunks} chunks "
            f"(dim {index.dimension}) -> {target}"
        )


@main.command("corpus")
@click.argument(
    "corpus_path", required=False,
    type=click.Path(exists=True, path_type=Path), default=None,
)
@click.option(
    "--out", "out_path", type=click.Path(path_type=Path), default=None,
    help="Also write the report as JSON to this path.",
)
@click.pass_obj
def corpus_cmd(state: CliState, corpus_path, out_path):
    """Score every variant of every corpus entry (bundled baseline by default)."""
    try:
        project = state.project()
        entries = load_corpus(corpus_path) if corpus_path else builtin_baseline()
        report = run_corpus(project, entries)
    except Exception as exc:
        _fail(str(exc))
    payload = corpus_report_to_dict(report)
    if out_path:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        Path(out_path).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    if state.as_json:
        click.echo(json.dumps(payload))
    else:
        click.echo(render_report(report), nl=False)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option(
    "--log-dir", type=click.Path(path_type=Path), default=Path("sessions"),
    show_default=True,
)
@click.option(
    "--ui-dir", type=click.Path(path_type=Path), default=Path("frontend/dist"),
    show_default=True, help="Static review-UI build to mount at / when present.",
)
@click.pass_obj
def serve_cmd(state: CliState, host, port, log_dir, ui_dir):
    """Run the HTTP API (and the review UI, when its build is present)."""
    import uvicorn

    from .service import create_app

    try:
        project = state.project()
        static_dir = ui_dir if Path(ui_dir).is_dir() else None
        app = create_app(project, log_dir=log_dir, static_dir=static_dir)
    except Exception as exc:
        _fail(str(exc))
    uvicorn.run(app, host=host, port=port)


def build_orchestrator(project: ProjectConfig, *, answer_provider=None) -> Orchestrator:
    """Wire an orchestrator from a project config (shared by CLI and service)."""
    rag_index = None
    rag_k = 4
    if project.rag is not None:
        rag_k = project.rag.k
        if project.rag.index_path and Path(project.rag.index_path).is_file():
            rag_index = VectorIndex.load(
                project.rag.index_path, HashedBagEmbedder(project.rag.dimension)
            )
    return Orchestrator(
        project.roles,
        policy=project.gate,
        patterns=project.patterns,
        max_iterations=project.max_iterations,
        standard_configured=project.conformance_standard_configured,
        rag_index=rag_index,
        rag_k=rag_k,
        answer_provider=answer_provider,
        engine=project.engine(),
    )


if __name__ == "__main__":
    main()
