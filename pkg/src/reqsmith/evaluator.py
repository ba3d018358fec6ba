"""Judging a requirement against the nine characteristics, and the quality gate."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import httpx

from . import prompts
from .core import (
    CHARACTERISTICS,
    Characteristic,
    CharacteristicReport,
    Requirement,
    Verdict,
    compute_quality,
    unfulfilled,
)
from .gateway import BackendConfig, Responder, TableParseError, complete_table
from .prompting import PromptSpec

logger = logging.getLogger(__name__)


class EvaluationError(Exception):
    """The backend's verdict table could not be turned into a report."""

    def __init__(self, message: str, raw_completion: str = ""):
        super().__init__(message)
        self.raw_completion = raw_completion


class GateKind(Enum):
    ALL_ASSESSED = "all_assessed"
    THRESHOLD = "threshold"


@dataclass(frozen=True)
class GatePolicy:
    """When is a requirement good enough to stop refining.

    ``all_assessed`` demands every assessed characteristic fulfilled;
    ``threshold`` accepts a quality score at or above the given percentage,
    provided every ``mandatory`` characteristic is fulfilled.
    """

    kind: GateKind = GateKind.ALL_ASSESSED
    threshold: float | None = None
    mandatory: frozenset[Characteristic] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "mandatory", frozenset(self.mandatory))
        if self.kind is GateKind.THRESHOLD:
            if self.threshold is None:
                raise ValueError("threshold policy requires a threshold")
            if not 0 < self.threshold <= 100:
                raise ValueError("threshold must be in (0, 100]")
        elif self.threshold is not None:
            raise ValueError("all_assessed policy takes no threshold")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "threshold": self.threshold,
            "mandatory": [c.value for c in CHARACTERISTICS if c in self.mandatory],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GatePolicy":
        return cls(
            kind=GateKind(data["kind"]),
            threshold=data.get("threshold"),
            mandatory=frozenset(
                Characteristic.from_name(n) for n in data.get("mandatory", [])
            ),
        )


def evaluation_prompt(requirement: Requirement) -> PromptSpec:
    return PromptSpec(
        instruction=prompts.EVALUATION_INSTRUCTION,
        context=prompts.CHARACTERISTIC_DEFINITIONS,
        input=requirement.text,
        output_format=prompts.EVALUATION_FORMAT,
    )


def evaluate(
    requirement: Requirement,
    backend: BackendConfig,
    standard_configured: bool = False,
    *,
    engine: Responder | None = None,
    transport: httpx.BaseTransport | None = None,
) -> CharacteristicReport:
    """Judge one requirement; every one of the nine verdicts must come back.

    Missing or unknown rows are an :class:`EvaluationError` (carrying the raw
    completion for audit), never silently defaulted. Conforming is excluded
    from the assessed set unless a conformance standard is configured.
    """
    if not requirement.text.strip():
        raise ValueError("requirement text must be non-empty")

    try:
        table, completion = complete_table(
            backend,
            evaluation_prompt(requirement),
            prompts.EVALUATION_HEADER,
            engine=engine,
            transport=transport,
        )
    except TableParseError as exc:
        raise EvaluationError(
            f"evaluation failed: {exc}",
            raw_completion=getattr(exc, "raw_completion", ""),
        ) from exc

    verdicts: dict[Characteristic, Verdict] = {}
    for name, detail, fulfilled_text in table.rows:
        try:
            characteristic = Characteristic.from_name(name)
        except ValueError:
            raise EvaluationError(
                f"verdict table names unknown characteristic {name!r}",
                raw_completion=completion.text,
            ) from None
        if characteristic in verdicts:
            raise EvaluationError(
                f"verdict table repeats characteristic {name!r}",
                raw_completion=completion.text,
            )
        flag = fulfilled_text.strip().lower()
        if flag.startswith("yes"):
            fulfilled = True
        elif flag.startswith("no"):
            fulfilled = False
        else:
            raise EvaluationError(
                f"row {name!r} has non yes/no verdict {fulfilled_text!r}",
                raw_completion=completion.text,
            )
        verdicts[characteristic] = Verdict(fulfilled=fulfilled, detail=detail)

    missing = [c.value for c in CHARACTERISTICS if c not in verdicts]
    if missing:
        raise EvaluationError(
            f"verdict table lacks rows for: {', '.join(missing)}",
            raw_completion=completion.text,
        )

    assessed = set(CHARACTERISTICS)
    if not standard_configured:
        assessed.discard(Characteristic.CONFORMING)

    return CharacteristicReport(
        requirement_id=requirement.id,
        verdicts=verdicts,
        assessed=frozenset(assessed),
        backend_id=completion.backend_id,
    )


def gate(report: CharacteristicReport, policy: GatePolicy) -> bool:
    """Decide whether the report clears the configured quality bar."""
    if policy.kind is GateKind.ALL_ASSESSED:
        return not unfulfilled(report)
    score = compute_quality(report)
    if score.value < (policy.threshold or 0):
        return False
    return all(report.verdicts[c].fulfilled for c in policy.mandatory)
