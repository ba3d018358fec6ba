"""Prompt assembly from the four standard elements, with shot injection.

A prompt is a deterministic concatenation of labeled sections in the fixed
order instruction, context, example shots, input, output format. Omitted
elements produce no section. Templates with ``{placeholder}`` slots can be
loaded from a directory, one UTF-8 file per template.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path


class ShotMode(Enum):
    ZERO_SHOT = "zero_shot"
    ONE_SHOT = "one_shot"
    FEW_SHOT = "few_shot"


@dataclass(frozen=True)
class ExampleShot:
    """One worked example: what goes in, what should come out."""

    demo_input: str
    demo_output: str

    def __post_init__(self) -> None:
        if not self.demo_input.strip() or not self.demo_output.strip():
            raise ValueError("example shots require non-empty input and output")


@dataclass(frozen=True)
class PromptSpec:
    instruction: str
    context: str | None = None
    input: str | None = None
    output_format: str | None = None
    shots: tuple[ExampleShot, ...] = ()

    def __post_init__(self) -> None:
        if not self.instruction.strip():
            raise ValueError("instruction must be non-empty")
        object.__setattr__(self, "shots", tuple(self.shots))


LABEL_INSTRUCTION = "Instruction:"
LABEL_CONTEXT = "Context:"
LABEL_INPUT = "Input:"
LABEL_OUTPUT_FORMAT = "Output format:"

_SHOT_LABEL_RE = re.compile(r"^Example (\d+) (input|output):$")


def render(spec: PromptSpec) -> str:
    """Render the prompt: labeled sections in fixed order, omitted ones absent."""
    parts = [f"{LABEL_INSTRUCTION}\n{spec.instruction}"]
    if spec.context is not None:
        parts.append(f"{LABEL_CONTEXT}\n{spec.context}")
    for i, shot in enumerate(spec.shots, start=1):
        parts.append(
            f"Example {i} input:\n{shot.demo_input}\n"
            f"Example {i} output:\n{shot.demo_output}"
        )
    if spec.input is not None:
        parts.append(f"{LABEL_INPUT}\n{spec.input}")
    if spec.output_format is not None:
        parts.append(f"{LABEL_OUTPUT_FORMAT}\n{spec.output_format}")
    return "\n\n".join(parts)


def shot_mode(spec: PromptSpec) -> ShotMode:
    if len(spec.shots) == 0:
        return ShotMode.ZERO_SHOT
    if len(spec.shots) == 1:
        return ShotMode.ONE_SHOT
    return ShotMode.FEW_SHOT


@dataclass
class PromptSections:
    """A rendered prompt split back into its elements.

    Used by the deterministic offline backend to understand what it is being
    asked; content lines that exactly equal a section label are not supported.
    """

    instruction: str = ""
    context: str | None = None
    input: str | None = None
    output_format: str | None = None
    shots: list[tuple[str, str]] = field(default_factory=list)


def split_sections(prompt: str) -> PromptSections:
    """Inverse of :func:`render` for well-formed prompts."""
    sections = PromptSections()
    current: str | None = None
    buffers: dict[str, list[str]] = {}
    shot_parts: dict[tuple[int, str], list[str]] = {}

    for line in prompt.splitlines():
        if line == LABEL_INSTRUCTION:
            current = "instruction"
            buffers[current] = []
            continue
        if line == LABEL_CONTEXT:
            current = "context"
            buffers[current] = []
            continue
        if line == LABEL_INPUT:
            current = "input"
            buffers[current] = []
            continue
        if line == LABEL_OUTPUT_FORMAT:
            current = "output_format"
            buffers[current] = []
            continue
        shot_match = _SHOT_LABEL_RE.match(line)
        if shot_match:
            current = f"shot:{shot_match.group(1)}:{shot_match.group(2)}"
            shot_parts[(int(shot_match.group(1)), shot_match.group(2))] = []
            continue
        if current is None:
            continue
        if current.startswith("shot:"):
            _, num, side = current.split(":")
            shot_parts[(int(num), side)].append(line)
        else:
            buffers[current].append(line)

    def _collect(key: str) -> str | None:
        if key not in buffers:
            return None
        return "\n".join(buffers[key]).strip("\n").rstrip()

    sections.instruction = _collect("instruction") or ""
    sections.context = _collect("context")
    sections.input = _collect("input")
    sections.output_format = _collect("output_format")
    indices = sorted({num for num, _ in shot_parts})
    for num in indices:
        demo_in = "\n".join(shot_parts.get((num, "input"), [])).strip()
        demo_out = "\n".join(shot_parts.get((num, "output"), [])).strip()
        sections.shots.append((demo_in, demo_out))
    return sections


@dataclass(frozen=True)
class PromptTemplate:
    """A named body with ``{placeholder}`` slots; rendering requires all of them."""

    name: str
    body: str
    required_placeholders: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "required_placeholders", frozenset(self.required_placeholders)
        )

    def render(self, **bindings: str) -> str:
        missing = self.required_placeholders - set(bindings)
        if missing:
            raise KeyError(
                f"template {self.name!r} missing bindings: {sorted(missing)}"
            )
        return self.body.format(**bindings)


def placeholders_in(body: str) -> frozenset[str]:
    names = set()
    for _, name, _, _ in string.Formatter().parse(body):
        if name:
            names.add(name)
    return frozenset(names)


def load_templates(directory: str | Path) -> dict[str, PromptTemplate]:
    """Load every file in ``directory`` as a template named after its stem."""
    directory = Path(directory)
    templates: dict[str, PromptTemplate] = {}
    for path in sorted(directory.iterdir()):
        if not path.is_file():
            continue
        body = path.read_text(encoding="utf-8")
        templates[path.stem] = PromptTemplate(
            name=path.stem, body=body, required_placeholders=placeholders_in(body)
        )
    return templates
