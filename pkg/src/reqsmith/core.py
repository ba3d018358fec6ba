"""Shared domain types and the fulfilled-characteristics quality metric.

Everything here is a pure value type or a pure function; no I/O, no backend
calls. The quality score of a requirement evaluation is the percentage of
assessed characteristics whose verdict is fulfilled, rounded half-up to one
decimal place.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from typing import Iterable, Mapping


class Origin(Enum):
    """How a requirement expression came to exist."""

    AUTHORED = "authored"
    GENERIC_REWRITE = "generic_rewrite"
    FRAMEWORK_REWRITE = "framework_rewrite"


class Characteristic(Enum):
    """The nine well-formedness characteristics, in canonical order."""

    NECESSARY = "Necessary"
    APPROPRIATE = "Appropriate"
    UNAMBIGUOUS = "Unambiguous"
    COMPLETE = "Complete"
    SINGULAR = "Singular"
    FEASIBLE = "Feasible"
    VERIFIABLE = "Verifiable"
    CORRECT = "Correct"
    CONFORMING = "Conforming"

    @classmethod
    def from_name(cls, name: str) -> "Characteristic":
        """Resolve a characteristic from its display name, case-insensitively."""
        wanted = name.strip().lower()
        for member in cls:
            if member.value.lower() == wanted:
                return member
        raise ValueError(f"unknown characteristic name: {name!r}")


#: All nine characteristics in canonical order.
CHARACTERISTICS: tuple[Characteristic, ...] = tuple(Characteristic)


@dataclass(frozen=True)
class Requirement:
    """A natural-language requirement expression with identity and lineage.

    ``parent_id`` is set exactly when the requirement was produced by a
    rewrite (generic or framework); ``split_index`` is set exactly when one
    requirement was split into several siblings.
    """

    id: str
    text: str
    origin: Origin = Origin.AUTHORED
    parent_id: str | None = None
    split_index: int | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("requirement id must be non-empty")
        if not self.text or not self.text.strip():
            raise ValueError("requirement text must be non-empty")
        if self.origin is Origin.AUTHORED and self.parent_id is not None:
            raise ValueError("authored requirements must not have a parent_id")
        if self.origin is not Origin.AUTHORED and self.parent_id is None:
            raise ValueError(f"{self.origin.value} requirements require a parent_id")
        if self.split_index is not None and self.split_index < 1:
            raise ValueError("split_index is 1-based")


@dataclass(frozen=True)
class Verdict:
    """One characteristic's judgement: fulfilled or not, with a short rationale."""

    fulfilled: bool
    detail: str


@dataclass(frozen=True, eq=True)
class CharacteristicReport:
    """Verdicts for all nine characteristics of one requirement.

    ``verdicts`` always carries all nine entries; ``assessed`` names the
    subset that actually counts toward the quality score. Whether Conforming
    is assessed is decided by the evaluator from the project configuration
    (a report cannot know that by itself), so this type only checks the
    structural invariants.
    """

    requirement_id: str
    verdicts: Mapping[Characteristic, Verdict]
    assessed: frozenset[Characteristic]
    backend_id: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "verdicts", dict(self.verdicts))
        object.__setattr__(self, "assessed", frozenset(self.assessed))
        missing = set(CHARACTERISTICS) - set(self.verdicts)
        extra = set(self.verdicts) - set(CHARACTERISTICS)
        if missing or extra:
            raise ValueError(
                f"report must carry exactly the nine characteristics "
                f"(missing={sorted(c.value for c in missing)}, "
                f"extra={sorted(c.value for c in extra)})"
            )
        if not self.assessed:
            raise ValueError("assessed set must be non-empty")
        if not self.assessed <= set(CHARACTERISTICS):
            raise ValueError("assessed must be a subset of the nine characteristics")

    def verdict(self, characteristic: Characteristic) -> Verdict:
        return self.verdicts[characteristic]


@dataclass(frozen=True)
class QualityScore:
    """Percentage of assessed characteristics fulfilled, one decimal place."""

    value: float
    fulfilled_count: int
    assessed_count: int

    def __post_init__(self) -> None:
        if self.assessed_count < 1:
            raise ValueError("assessed_count must be >= 1")
        if not 0 <= self.fulfilled_count <= self.assessed_count:
            raise ValueError("fulfilled_count must be within [0, assessed_count]")
        expected = _percentage(self.fulfilled_count, self.assessed_count)
        if self.value != expected:
            raise ValueError(
                f"value {self.value} does not match "
                f"{self.fulfilled_count}/{self.assessed_count} -> {expected}"
            )


def _percentage(fulfilled: int, assessed: int) -> float:
    scaled = (Decimal(fulfilled) * 100 / Decimal(assessed)).quantize(
        Decimal("0.1"), rounding=ROUND_HALF_UP
    )
    return float(scaled)


def compute_quality(report: CharacteristicReport) -> QualityScore:
    """Score a report: percent of assessed characteristics fulfilled."""
    assessed = len(report.assessed)
    fulfilled = sum(1 for c in report.assessed if report.verdicts[c].fulfilled)
    return QualityScore(
        value=_percentage(fulfilled, assessed),
        fulfilled_count=fulfilled,
        assessed_count=assessed,
    )


def aggregate_quality(scores: Iterable[QualityScore | float]) -> float:
    """Arithmetic mean of score values, rounded half-up to two decimals."""
    values = [
        Decimal(str(s.value if isinstance(s, QualityScore) else float(s)))
        for s in scores
    ]
    if not values:
        raise ValueError("no scores to aggregate")
    mean = (sum(values) / len(values)).quantize(
        Decimal("0.01"), rounding=ROUND_HALF_UP
    )
    return float(mean)


def unfulfilled(report: CharacteristicReport) -> set[Characteristic]:
    """Assessed characteristics whose verdict is not fulfilled."""
    return {c for c in report.assessed if not report.verdicts[c].fulfilled}


# -- serialization helpers (used by the session log and the HTTP service) --


def requirement_to_dict(req: Requirement) -> dict:
    return {
        "id": req.id,
        "text": req.text,
        "origin": req.origin.value,
        "parent_id": req.parent_id,
        "split_index": req.split_index,
    }


def requirement_from_dict(data: Mapping) -> Requirement:
    return Requirement(
        id=data["id"],
        text=data["text"],
        origin=Origin(data["origin"]),
        parent_id=data.get("parent_id"),
        split_index=data.get("split_index"),
    )


def report_to_dict(report: CharacteristicReport) -> dict:
    return {
        "requirement_id": report.requirement_id,
        "backend_id": report.backend_id,
        "assessed": [c.value for c in CHARACTERISTICS if c in report.assessed],
        "verdicts": {
            c.value: {"fulfilled": v.fulfilled, "detail": v.detail}
            for c, v in ((c, report.verdicts[c]) for c in CHARACTERISTICS)
        },
    }


def report_from_dict(data: Mapping) -> CharacteristicReport:
    return CharacteristicReport(
        requirement_id=data["requirement_id"],
        backend_id=data["backend_id"],
        assessed=frozenset(Characteristic.from_name(n) for n in data["assessed"]),
        verdicts={
            Characteristic.from_name(name): Verdict(
                fulfilled=bool(v["fulfilled"]), detail=v["detail"]
            )
            for name, v in data["verdicts"].items()
        },
    )
