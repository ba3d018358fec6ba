"""Sentence patterns for requirement wording, with anchor-based matching.

A pattern is a template like ``The <entity> shall <action verb> <object>
<measurable outcome>.`` Matching is surface syntax only: the literal anchors
must appear in order, the spans between them bind to the slots, and every
slot must end up non-empty. Adjacent slots with no literal between them are
resolved word-wise: each slot but the last takes one word, the last takes
the remainder. Deep parsing of English is deliberately out of scope; it
would make conformance judgments non-reproducible.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable

_SLOT_RE = re.compile(r"<([^<>]+)>")


@dataclass(frozen=True)
class PatternToken:
    kind: str  # "lit" | "slot"
    value: str


@dataclass(frozen=True)
class RequirementPattern:
    """A named template whose anchors and slots drive conformance checks."""

    id: str
    template: str
    anchor_grammar: tuple[PatternToken, ...] = ()

    def __post_init__(self) -> None:
        if not self.id.strip():
            raise ValueError("pattern id must be non-empty")
        grammar = self.anchor_grammar or parse_template(self.template)
        if not any(tok.kind == "slot" for tok in grammar):
            raise ValueError(f"pattern {self.id!r} has no slots")
        object.__setattr__(self, "anchor_grammar", tuple(grammar))

    @property
    def slot_names(self) -> tuple[str, ...]:
        return tuple(t.value for t in self.anchor_grammar if t.kind == "slot")


def parse_template(template: str) -> tuple[PatternToken, ...]:
    """Split a template into alternating literal anchors and slot names."""
    tokens: list[PatternToken] = []
    pos = 0
    for match in _SLOT_RE.finditer(template):
        literal = template[pos : match.start()]
        if literal:
            tokens.append(PatternToken("lit", literal))
        tokens.append(PatternToken("slot", match.group(1).strip()))
        pos = match.end()
    tail = template[pos:]
    if tail:
        tokens.append(PatternToken("lit", tail))
    return tuple(tokens)


@dataclass(frozen=True)
class PatternMatch:
    """Match result; truthy iff the text conforms to the pattern."""

    matched: bool
    slots: dict[str, str]

    def __bool__(self) -> bool:
        return self.matched


_NO_MATCH = PatternMatch(False, {})


def _normalize(grammar: Iterable[PatternToken]) -> list[tuple[str, object]]:
    """Fold whitespace-only literals between slots into slot runs."""
    normalized: list[tuple[str, object]] = []
    run: list[str] = []
    for token in grammar:
        if token.kind == "slot":
            run.append(token.value)
            continue
        if run and token.value.strip() == "":
            # a bare space between adjacent slots: stay inside the run
            continue
        if run:
            normalized.append(("run", tuple(run)))
            run = []
        normalized.append(("lit", token.value))
    if run:
        normalized.append(("run", tuple(run)))
    return normalized


def match_pattern(text: str, pattern: RequirementPattern) -> PatternMatch:
    """Check ``text`` against ``pattern``; binds the spans between anchors."""
    if not text.strip():
        raise ValueError("text must be non-empty")
    t = text.strip()
    elements = _normalize(pattern.anchor_grammar)
    slots: dict[str, str] = {}
    pos = 0

    for index, (kind, value) in enumerate(elements):
        if kind == "lit":
            lit = str(value)
            if index == len(elements) - 1:
                # final literal anchors at the very end of the text
                if not t.endswith(lit) or pos > len(t) - len(lit):
                    return _NO_MATCH
                pos = len(t)
            else:
                if not t.startswith(lit, pos):
                    return _NO_MATCH
                pos += len(lit)
            continue

        names = list(value)  # type: ignore[arg-type]
        # find the terminator literal, if any
        terminator: str | None = None
        terminator_last = False
        if index + 1 < len(elements) and elements[index + 1][0] == "lit":
            terminator = str(elements[index + 1][1])
            terminator_last = index + 1 == len(elements) - 1
        if terminator is None:
            span = t[pos:]
            pos = len(t)
        elif terminator_last:
            if not t.endswith(terminator):
                return _NO_MATCH
            end = len(t) - len(terminator)
            if end < pos:
                return _NO_MATCH
            span = t[pos:end]
            pos = end
        else:
            end = t.find(terminator, pos)
            if end < 0:
                return _NO_MATCH
            span = t[pos:end]
            pos = end

        span = span.strip()
        if not span:
            return _NO_MATCH
        if len(names) == 1:
            slots[names[0]] = span
        else:
            words = span.split()
            if len(words) < len(names):
                return _NO_MATCH
            for i, name in enumerate(names[:-1]):
                slots[name] = words[i]
            slots[names[-1]] = " ".join(words[len(names) - 1 :])

    if pos != len(t):
        return _NO_MATCH
    if any(not v for v in slots.values()):
        return _NO_MATCH
    return PatternMatch(True, slots)


# -- sentence helpers shared by the matcher and the rule-based judge --

_BOUNDARY_RE = re.compile(r"\.(?=\s|$)")


def split_sentences(text: str) -> list[str]:
    """Split on periods that end a sentence; decimal points and 'e.g.' survive."""
    t = text.strip()
    sentences: list[str] = []
    start = 0
    for match in _BOUNDARY_RE.finditer(t):
        end = match.end()
        rest = t[end:].lstrip()
        if rest and not (rest[0].isupper() or rest[0] in "\"'("):
            continue
        sentence = t[start:end].strip()
        if sentence:
            sentences.append(sentence)
        start = end
    tail = t[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def first_sentence(text: str) -> str:
    sentences = split_sentences(text)
    return sentences[0] if sentences else text.strip()


# -- pattern files --


def parse_pattern_file(content: str) -> list[RequirementPattern]:
    """Blocks separated by blank lines: first line the id, second the template."""
    patterns: list[RequirementPattern] = []
    block: list[str] = []
    for raw in content.splitlines() + [""]:
        line = raw.strip()
        if line.startswith("#"):
            continue
        if line:
            block.append(line)
            continue
        if block:
            if len(block) < 2:
                raise ValueError(
                    f"pattern block {block[0]!r} needs an id line and a template line"
                )
            patterns.append(
                RequirementPattern(id=block[0], template=" ".join(block[1:]))
            )
            block = []
    if not patterns:
        raise ValueError("pattern file contains no patterns")
    return patterns


def load_patterns(path: str | Path) -> list[RequirementPattern]:
    return parse_pattern_file(Path(path).read_text(encoding="utf-8"))


def builtin_patterns() -> list[RequirementPattern]:
    """The two patterns shipped with the engine (ids F1 and F2)."""
    content = (
        resources.files("reqsmith.data").joinpath("patterns.txt").read_text("utf-8")
    )
    return parse_pattern_file(content)
