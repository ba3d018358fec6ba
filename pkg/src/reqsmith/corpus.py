"""Corpus harness: evaluate requirement variants side by side.

A corpus file is line-oriented (tab-separated) so diffs stay reviewable:

    id<TAB>variant<TAB>text[<TAB>verdicts]

``variant`` labels like RO (original), RG (generic rewrite), RM/RM2
(framework rewrites) group the per-variant scores into per-origin means.
The optional ``verdicts`` column is a string of Y/N letters in canonical
characteristic order (8 letters leave Conforming unassessed, 9 assess it);
rows that carry verdicts are scored directly from them instead of calling a
judge, which keeps recorded baselines reproducible offline forever. A text
of ``-`` marks wording that was never recorded.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .core import (
    CHARACTERISTICS,
    Characteristic,
    CharacteristicReport,
    Origin,
    Requirement,
    Verdict,
    aggregate_quality,
    compute_quality,
)
from .evaluator import evaluate
from .gateway import Responder
from .config import ProjectConfig

logger = logging.getLogger(__name__)

PLACEHOLDER_TEXT = "-"


class CorpusError(Exception):
    pass


@dataclass(frozen=True)
class VariantSpec:
    label: str
    text: str
    verdicts: str | None = None  # Y/N letters, canonical order


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    variants: tuple[VariantSpec, ...]

    def __post_init__(self) -> None:
        if not self.variants:
            raise ValueError(f"corpus entry {self.id!r} has no variants")
        labels = [v.label for v in self.variants]
        if len(set(labels)) != len(labels):
            raise ValueError(f"corpus entry {self.id!r} repeats a variant label")
        if len(self.variants) > 1 and "RO" not in labels:
            raise ValueError(
                f"corpus entry {self.id!r} has variants but no RO original"
            )

    @property
    def text(self) -> str:
        for variant in self.variants:
            if variant.label == "RO":
                return variant.text
        return self.variants[0].text


def origin_class(label: str) -> str:
    """Group variant labels into origin classes for the aggregate means."""
    upper = label.upper()
    if upper == "RO":
        return Origin.AUTHORED.value
    if upper.startswith("RG"):
        return Origin.GENERIC_REWRITE.value
    if upper.startswith("RM"):
        return Origin.FRAMEWORK_REWRITE.value
    return label


def parse_corpus(content: str) -> list[CorpusEntry]:
    rows: dict[str, list[VariantSpec]] = {}
    for line_no, raw in enumerate(content.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) not in (3, 4):
            raise CorpusError(
                f"line {line_no}: expected 3 or 4 tab-separated fields, "
                f"got {len(fields)}"
            )
        entry_id, variant, text = (f.strip() for f in fields[:3])
        verdicts = fields[3].strip() if len(fields) == 4 else None
        if not entry_id or not variant:
            raise CorpusError(f"line {line_no}: id and variant must be non-empty")
        if verdicts is not None:
            if len(verdicts) not in (8, 9) or set(verdicts.upper()) - set("YN"):
                raise CorpusError(
                    f"line {line_no}: verdicts must be 8 or 9 Y/N letters"
                )
        rows.setdefault(entry_id, []).append(
            VariantSpec(label=variant, text=text, verdicts=verdicts)
        )
    return [CorpusEntry(id=eid, variants=tuple(vs)) for eid, vs in rows.items()]


def load_corpus(path: str | Path) -> list[CorpusEntry]:
    return parse_corpus(Path(path).read_text(encoding="utf-8"))


def builtin_baseline() -> list[CorpusEntry]:
    """The recorded three-requirement baseline shipped with the engine."""
    content = (
        resources.files("reqsmith.data")
        .joinpath("baseline_corpus.tsv")
        .read_text("utf-8")
    )
    return parse_corpus(content)


def report_from_verdict_string(
    requirement_id: str, verdicts: str
) -> CharacteristicReport:
    letters = verdicts.upper()
    mapping = {}
    for characteristic, letter in zip(CHARACTERISTICS, letters.ljust(9, "N")):
        mapping[characteristic] = Verdict(
            fulfilled=letter == "Y", detail="recorded verdict"
        )
    assessed = set(CHARACTERISTICS[: len(letters)])
    return CharacteristicReport(
        requirement_id=requirement_id,
        verdicts=mapping,
        assessed=frozenset(assessed),
        backend_id="recorded",
    )


@dataclass(frozen=True)
class VariantResult:
    entry_id: str
    label: str
    text: str
    report: CharacteristicReport | None
    score: float | None
    error: str | None = None


@dataclass(frozen=True)
class CorpusReport:
    results: tuple[VariantResult, ...]
    aggregates: dict[str, float] = field(default_factory=dict)

    def scores_for_class(self, origin: str) -> list[float]:
        return [
            r.score
            for r in self.results
            if r.score is not None and origin_class(r.label) == origin
        ]


def run_corpus(
    config: ProjectConfig,
    entries: list[CorpusEntry],
    *,
    engine: Responder | None = None,
) -> CorpusReport:
    """Score every variant of every entry; per-entry failures don't stop the run."""
    results: list[VariantResult] = []
    shared_engine = engine if engine is not None else config.engine()
    for entry in entries:
        for variant in entry.variants:
            rid = f"{entry.id}/{variant.label}"
            try:
                if variant.verdicts:
                    report = report_from_verdict_string(rid, variant.verdicts)
                else:
                    if variant.text == PLACEHOLDER_TEXT:
                        raise CorpusError(
                            "no recorded text to judge and no recorded verdicts"
                        )
                    requirement = Requirement(id=rid, text=variant.text)
                    report = evaluate(
                        requirement,
                        config.roles.evaluator,
                        config.conformance_standard_configured,
                        engine=shared_engine,
                    )
                results.append(
                    VariantResult(
                        entry_id=entry.id,
                        label=variant.label,
                        text=variant.text,
                        report=report,
                        score=compute_quality(report).value,
                    )
                )
            except Exception as exc:
                logger.warning("corpus entry %s failed: %s", rid, exc)
                results.append(
                    VariantResult(
                        entry_id=entry.id,
                        label=variant.label,
                        text=variant.text,
                        report=None,
                        score=None,
                        error=str(exc),
                    )
                )

    report = CorpusReport(results=tuple(results))
    aggregates: dict[str, float] = {}
    for origin in dict.fromkeys(origin_class(r.label) for r in results):
        scores = report.scores_for_class(origin)
        if scores:
            aggregates[origin] = aggregate_quality(scores)
    return CorpusReport(results=tuple(results), aggregates=aggregates)


def render_report(report: CorpusReport) -> str:
    """Text table: characteristics as rows, entry/variant columns, then scores."""
    columns = [r for r in report.results]
    if not columns:
        return "(empty corpus)\n"
    header = ["Characteristic"] + [f"{r.entry_id}/{r.label}" for r in columns]
    body: list[list[str]] = []
    for characteristic in CHARACTERISTICS:
        row = [characteristic.value]
        for result in columns:
            if result.report is None:
                row.append("!")
            elif characteristic not in result.report.assessed:
                row.append("-")
            else:
                row.append(
                    "Yes" if result.report.verdicts[characteristic].fulfilled else "No"
                )
        body.append(row)
    score_row = ["% fulfilled"] + [
        f"{r.score:.1f}" if r.score is not None else "error" for r in columns
    ]
    body.append(score_row)

    widths = [
        max(len(header[i]), *(len(row[i]) for row in body))
        for i in range(len(header))
    ]
    lines = [
        " | ".join(cell.ljust(widths[i]) for i, cell in enumerate(header)),
        "-+-".join("-" * w for w in widths),
    ]
    for row in body:
        lines.append(" | ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    lines.append("")
    for origin, mean in report.aggregates.items():
        lines.append(f"mean({origin}) = {mean:.2f}")
    failures = [r for r in report.results if r.error]
    for result in failures:
        lines.append(f"error {result.entry_id}/{result.label}: {result.error}")
    return "\n".join(lines) + "\n"


def report_to_dict(report: CorpusReport) -> dict:
    from .core import report_to_dict as _report_to_dict

    return {
        "results": [
            {
                "entry_id": r.entry_id,
                "variant": r.label,
                "text": r.text,
                "score": r.score,
                "origin_class": origin_class(r.label),
                "report": _report_to_dict(r.report) if r.report else None,
                "error": r.error,
            }
            for r in report.results
        ],
        "aggregates": dict(report.aggregates),
    }
