"""Clarifying questions for unfulfilled characteristics, and their answers."""

from __future__ import annotations

import logging
import re
import uuid
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Iterable, Sequence

import httpx

from . import prompts
from .core import CHARACTERISTICS, Characteristic, Requirement
from .gateway import BackendConfig, Responder, complete_table
from .prompting import PromptSpec

logger = logging.getLogger(__name__)


class CoverageError(Exception):
    """Some characteristics ended up with no question."""

    def __init__(self, uncovered: Iterable[Characteristic]):
        self.uncovered = frozenset(uncovered)
        names = ", ".join(c.value for c in CHARACTERISTICS if c in self.uncovered)
        super().__init__(f"no question covers: {names}")


class AlreadyAnsweredError(Exception):
    """Answers are write-once; open a new exchange to revise."""


class AnswerSource(Enum):
    STAKEHOLDER = "stakeholder"
    RAG = "rag"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class ClarifyingQuestion:
    id: str
    requirement_id: str
    target: Characteristic
    text: str

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("question text must be non-empty")


@dataclass(frozen=True)
class ClarificationExchange:
    """A question plus, once attached, its immutable answer and provenance."""

    question: ClarifyingQuestion
    answer: str | None = None
    source: AnswerSource | None = None
    provenance: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "provenance", tuple(self.provenance))
        if self.answer is None:
            if self.source is not None or self.provenance:
                raise ValueError("unanswered exchanges carry no source or provenance")
        else:
            if not self.answer.strip():
                raise ValueError("answers must be non-empty")
            if self.source is None:
                raise ValueError("answered exchanges must name their source")
            if self.source is AnswerSource.RAG and not self.provenance:
                raise ValueError("rag answers require provenance chunk ids")
            if self.source is not AnswerSource.RAG and self.provenance:
                raise ValueError("provenance is only valid for rag answers")

    @property
    def answered(self) -> bool:
        return self.answer is not None


def attach_answer(
    exchange: ClarificationExchange,
    answer: str,
    source: AnswerSource,
    provenance: Sequence[str] = (),
) -> ClarificationExchange:
    """Return the exchange with its answer set; answering twice is an error."""
    if exchange.answered:
        raise AlreadyAnsweredError(
            f"exchange for question {exchange.question.id} already has an answer"
        )
    if not answer or not answer.strip():
        raise ValueError("answer must be non-empty")
    return replace(
        exchange, answer=answer, source=source, provenance=tuple(provenance)
    )


_QUESTION_SPLIT_RE = re.compile(r"[^?]*\?")


def _split_cell(cell: str) -> list[str]:
    """Cells may pack several questions; split on '?' boundaries."""
    pieces = [p.strip() for p in _QUESTION_SPLIT_RE.findall(cell)]
    pieces = [p for p in pieces if p.strip(".¿ ")]
    if pieces:
        return pieces
    remainder = cell.strip()
    return [remainder] if remainder and remainder.strip(".") else []


def question_prompt(requirement: Requirement, missing: set[Characteristic]) -> PromptSpec:
    return PromptSpec(
        instruction=prompts.question_instruction(missing),
        context=prompts.CHARACTERISTIC_DEFINITIONS,
        input=requirement.text,
        output_format=prompts.QUESTION_FORMAT,
    )


def generate_questions(
    requirement: Requirement,
    missing: set[Characteristic],
    backend: BackendConfig,
    *,
    engine: Responder | None = None,
    transport: httpx.BaseTransport | None = None,
    warning_sink: Callable[[str], None] | None = None,
) -> list[ClarifyingQuestion]:
    """Ask the backend for questions targeting the missing characteristics.

    Rows naming characteristics outside ``missing`` are dropped with a
    warning (passed to ``warning_sink`` for the session audit). The result is
    guaranteed to cover every missing characteristic, or a
    :class:`CoverageError` is raised.
    """
    if not missing:
        raise ValueError("missing characteristics must be non-empty")

    def warn(message: str) -> None:
        logger.warning("%s", message)
        if warning_sink is not None:
            warning_sink(message)

    table, _ = complete_table(
        backend,
        question_prompt(requirement, missing),
        prompts.QUESTION_HEADER,
        engine=engine,
        transport=transport,
    )

    questions: list[ClarifyingQuestion] = []
    for name, cell in table.rows:
        try:
            target = Characteristic.from_name(name)
        except ValueError:
            warn(f"dropped question row naming unknown characteristic {name!r}")
            continue
        if target not in missing:
            warn(
                f"dropped question row for {target.value}: not among the "
                f"missing characteristics"
            )
            continue
        for text in _split_cell(cell):
            questions.append(
                ClarifyingQuestion(
                    id=uuid.uuid4().hex,
                    requirement_id=requirement.id,
                    target=target,
                    text=text,
                )
            )

    uncovered = set(missing) - {q.target for q in questions}
    if uncovered:
        raise CoverageError(uncovered)
    return questions


def select_covering(
    questions: Sequence[ClarifyingQuestion], missing: set[Characteristic]
) -> list[ClarifyingQuestion]:
    """Greedy minimal cover: canonical characteristic order, first question wins."""
    selected: list[ClarifyingQuestion] = []
    chosen_ids: set[str] = set()
    uncovered: set[Characteristic] = set()
    for characteristic in CHARACTERISTICS:
        if characteristic not in missing:
            continue
        pick = next(
            (
                q
                for q in questions
                if q.target is characteristic and q.id not in chosen_ids
            ),
            None,
        )
        if pick is None:
            uncovered.add(characteristic)
            continue
        selected.append(pick)
        chosen_ids.add(pick.id)
    if uncovered:
        raise CoverageError(uncovered)
    return selected


# -- serialization helpers --


def question_to_dict(question: ClarifyingQuestion) -> dict:
    return {
        "id": question.id,
        "requirement_id": question.requirement_id,
        "target": question.target.value,
        "text": question.text,
    }


def question_from_dict(data: dict) -> ClarifyingQuestion:
    return ClarifyingQuestion(
        id=data["id"],
        requirement_id=data["requirement_id"],
        target=Characteristic.from_name(data["target"]),
        text=data["text"],
    )


def exchange_to_dict(exchange: ClarificationExchange) -> dict:
    return {
        "question": question_to_dict(exchange.question),
        "answer": exchange.answer,
        "source": exchange.source.value if exchange.source else None,
        "provenance": list(exchange.provenance),
    }


def exchange_from_dict(data: dict) -> ClarificationExchange:
    return ClarificationExchange(
        question=question_from_dict(data["question"]),
        answer=data.get("answer"),
        source=AnswerSource(data["source"]) if data.get("source") else None,
        provenance=tuple(data.get("provenance", ())),
    )
