"""Producing improved requirement expressions constrained by wording patterns.

The backend is asked for a machine-checkable line protocol (one requirement
per line, prefixed by its pattern id); each candidate's first sentence is
validated against the declared pattern before anything is accepted. The
remainder of a multi-sentence candidate is treated as qualifying clauses.
"""

from __future__ import annotations

import logging
import re
import uuid
from dataclasses import dataclass
from typing import Sequence

import httpx

from . import prompts
from .clarifier import ClarificationExchange
from .core import Origin, Requirement
from .gateway import BackendConfig, Responder, complete
from .patterns import (
    PatternMatch,
    RequirementPattern,
    builtin_patterns,
    first_sentence,
    load_patterns,
    match_pattern,
    parse_pattern_file,
)
from .prompting import PromptSpec, render

__all__ = [
    "RewriteResult",
    "RewriteNonconformingError",
    "rewrite",
    "rewrite_prompt",
    "match_pattern",
    "PatternMatch",
    "RequirementPattern",
    "builtin_patterns",
    "load_patterns",
    "parse_pattern_file",
]

logger = logging.getLogger(__name__)

_CANDIDATE_LINE_RE = re.compile(r"^\s*([A-Za-z][\w.-]*)\s*:\s*(.+?)\s*$")

_RETRY_REMINDER = (
    "Every line must start with a format id from the Proposed formats, a colon, "
    "and a requirement that follows that format exactly."
)


class RewriteNonconformingError(Exception):
    """The backend's candidates failed pattern validation, retry included."""

    def __init__(self, message: str, raw_completion: str = ""):
        super().__init__(message)
        self.raw_completion = raw_completion


@dataclass(frozen=True)
class RewriteResult:
    requirements: tuple[Requirement, ...]
    pattern_ids: tuple[str, ...]
    rationale: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "requirements", tuple(self.requirements))
        object.__setattr__(self, "pattern_ids", tuple(self.pattern_ids))
        if not self.requirements:
            raise ValueError("a rewrite must produce at least one requirement")
        if len(self.requirements) != len(self.pattern_ids):
            raise ValueError("one pattern id per requirement is required")


def rewrite_prompt(
    requirement: Requirement,
    exchanges: Sequence[ClarificationExchange],
    patterns: Sequence[RequirementPattern],
) -> PromptSpec:
    qa_pairs = [(x.question.text, x.answer or "") for x in exchanges]
    return PromptSpec(
        instruction=prompts.REWRITE_INSTRUCTION,
        context=prompts.rewrite_context(patterns),
        input=prompts.rewrite_input(requirement.text, qa_pairs),
        output_format=prompts.REWRITE_FORMAT,
    )


def _parse_candidates(
    text: str, pattern_ids: set[str]
) -> tuple[list[tuple[str, str]], list[str]]:
    candidates: list[tuple[str, str]] = []
    rationale: list[str] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        match = _CANDIDATE_LINE_RE.match(line)
        if match and match.group(1) in pattern_ids:
            candidates.append((match.group(1), match.group(2)))
        else:
            rationale.append(line.strip())
    return candidates, rationale


def rewrite(
    requirement: Requirement,
    exchanges: Sequence[ClarificationExchange],
    patterns: Sequence[RequirementPattern],
    backend: BackendConfig,
    *,
    engine: Responder | None = None,
    transport: httpx.BaseTransport | None = None,
) -> RewriteResult:
    """Rewrite one requirement from its answered question set.

    Every selected exchange must already be answered. Candidates that fail
    validation against their declared pattern trigger one retry with a
    format reminder; persistent nonconformance raises, carrying the raw
    completion text.
    """
    if not patterns:
        raise ValueError("at least one wording pattern is required")
    if not exchanges:
        raise ValueError("a rewrite needs at least one answered exchange")
    unanswered = [x for x in exchanges if not x.answered]
    if unanswered:
        raise ValueError(
            f"{len(unanswered)} selected exchange(s) are still unanswered"
        )

    by_id = {pattern.id: pattern for pattern in patterns}
    prompt = render(rewrite_prompt(requirement, exchanges, patterns))

    failure = ""
    completion_text = ""
    for round_no in range(2):
        completion = complete(backend, prompt, engine=engine, transport=transport)
        completion_text = completion.text
        candidates, rationale = _parse_candidates(completion.text, set(by_id))
        if not candidates:
            failure = "no candidate lines matched the 'PATTERN_ID: text' protocol"
        else:
            failed = [
                (pid, text)
                for pid, text in candidates
                if not match_pattern(first_sentence(text), by_id[pid])
            ]
            if not failed:
                return _build_result(requirement, candidates, rationale)
            failure = "; ".join(
                f"candidate does not follow {pid}: {text[:60]!r}"
                for pid, text in failed
            )
        if round_no == 0:
            logger.warning(
                "rewrite of %s nonconforming, retrying: %s", requirement.id, failure
            )
            prompt = (
                render(rewrite_prompt(requirement, exchanges, patterns))
                + "\n\n"
                + _RETRY_REMINDER
            )

    raise RewriteNonconformingError(
        f"rewrite of requirement {requirement.id} failed validation: {failure}",
        raw_completion=completion_text,
    )


def _build_result(
    requirement: Requirement,
    candidates: Sequence[tuple[str, str]],
    rationale: Sequence[str],
) -> RewriteResult:
    many = len(candidates) > 1
    requirements = tuple(
        Requirement(
            id=uuid.uuid4().hex,
            text=text,
            origin=Origin.FRAMEWORK_REWRITE,
            parent_id=requirement.id,
            split_index=(index if many else None),
        )
        for index, (_, text) in enumerate(candidates, start=1)
    )
    return RewriteResult(
        requirements=requirements,
        pattern_ids=tuple(pid for pid, _ in candidates),
        rationale="\n".join(rationale),
    )


def result_to_dict(result: RewriteResult) -> dict:
    from .core import requirement_to_dict

    return {
        "requirements": [requirement_to_dict(r) for r in result.requirements],
        "pattern_ids": list(result.pattern_ids),
        "rationale": result.rationale,
    }


def result_from_dict(data: dict) -> RewriteResult:
    from .core import requirement_from_dict

    return RewriteResult(
        requirements=tuple(requirement_from_dict(r) for r in data["requirements"]),
        pattern_ids=tuple(data["pattern_ids"]),
        rationale=data.get("rationale", ""),
    )
