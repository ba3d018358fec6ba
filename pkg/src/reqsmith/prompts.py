"""The fixed prompt texts the pipeline sends to its model backends.

Each stage uses one instruction string; the offline rule-based backend
dispatches on these same strings, so they are defined once here. All calls
are self-contained: the characteristic definitions travel in the context
element of every evaluation prompt instead of relying on chat history.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .core import CHARACTERISTICS, Characteristic

EVALUATION_INSTRUCTION = "Verify that the requirement meets these characteristics."

EVALUATION_HEADER = ("Feature Name", "Feature Detail", "Fulfilled (yes/no)")

EVALUATION_FORMAT = (
    "Your answer should be only a table with the columns "
    "[Feature Name, Feature Detail, Fulfilled (yes/no)]"
)

QUESTION_INSTRUCTION_PREFIX = (
    "Define questions whose answers help to comply with the missing characteristics"
)

QUESTION_HEADER = ("Feature Name", "Suggested Questions")

QUESTION_FORMAT = (
    "Your answer should only be a table with the columns "
    "[Feature Name, Suggested Questions]"
)

ANSWER_INSTRUCTION = "Answer the question using only the provided context."

REWRITE_INSTRUCTION = (
    "Improve the requirement using the answers to questions. The improved "
    "requirement must be expressed according to the Proposed Format."
)

REWRITE_FORMAT = (
    "Return one improved requirement per line. Prefix each line with the id of "
    "the format it follows and a colon, for example: F1: The system shall ... "
    "Respond with the requirement lines only."
)

CHARACTERISTIC_DEFINITIONS = "\n".join(
    [
        "Well-formed requirements have these characteristics:",
        "- Necessary: states a capability or constraint the stakeholders actually need.",
        "- Appropriate: sits at the right level of abstraction for the system it belongs to.",
        "- Unambiguous: admits exactly one interpretation.",
        "- Complete: needs no additional information to be understood and implemented.",
        "- Singular: states exactly one capability or constraint.",
        "- Feasible: can be realized within technical and project constraints.",
        "- Verifiable: compliance can be shown by inspection, analysis, demonstration, or test.",
        "- Correct: accurately reflects the stakeholder need it traces to.",
        "- Conforming: follows the organization's approved patterns and style rules.",
    ]
)


def question_instruction(missing: Iterable[Characteristic]) -> str:
    """Instruction naming the characteristics the questions must address."""
    ordered = [c for c in CHARACTERISTICS if c in set(missing)]
    if not ordered:
        raise ValueError("at least one missing characteristic is required")
    names = [c.value.lower() for c in ordered]
    if len(names) == 1:
        joined = names[0]
    else:
        joined = ", ".join(names[:-1]) + " and " + names[-1]
    return f'{QUESTION_INSTRUCTION_PREFIX}: "{joined}".'


def parse_question_instruction(instruction: str) -> list[str]:
    """Recover the characteristic names quoted by :func:`question_instruction`."""
    start = instruction.find('"')
    end = instruction.rfind('"')
    if start < 0 or end <= start:
        return []
    quoted = instruction[start + 1 : end]
    parts: list[str] = []
    for chunk in quoted.split(","):
        for piece in chunk.split(" and "):
            piece = piece.strip()
            if piece:
                parts.append(piece)
    return parts


def rewrite_input(requirement_text: str, qa_pairs: Sequence[tuple[str, str]]) -> str:
    """Original text plus numbered question/answer pairs, one per line."""
    lines = [f'Requirement: "{requirement_text}"', "Questions and answers:"]
    for i, (question, answer) in enumerate(qa_pairs, start=1):
        lines.append(f"Q{i}-{_one_line(question)}")
        lines.append(f"A{i}-{_one_line(answer)}")
    return "\n".join(lines)


def rewrite_context(patterns: Sequence) -> str:
    """Pattern templates labeled by their ids."""
    lines = ["Proposed formats:"]
    for pattern in patterns:
        lines.append(f"{pattern.id}- {pattern.template}")
    return "\n".join(lines)


def parse_rewrite_input(text: str) -> tuple[str, list[tuple[str, str]]]:
    """Inverse of :func:`rewrite_input`."""
    requirement = ""
    questions: dict[int, str] = {}
    answers: dict[int, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if line.startswith('Requirement: "') and line.endswith('"'):
            requirement = line[len('Requirement: "') : -1]
        elif len(line) > 2 and line[0] in "QA" and "-" in line:
            label, _, body = line.partition("-")
            if label[1:].isdigit():
                index = int(label[1:])
                if label[0] == "Q":
                    questions[index] = body.strip()
                else:
                    answers[index] = body.strip()
    pairs = [
        (questions[i], answers.get(i, ""))
        for i in sorted(questions)
        if answers.get(i, "")
    ]
    return requirement, pairs


def parse_rewrite_context(text: str) -> list[tuple[str, str]]:
    """Inverse of :func:`rewrite_context`: list of (pattern id, template)."""
    found: list[tuple[str, str]] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.endswith(":"):
            continue
        head, sep, template = line.partition("- ")
        if sep and head and " " not in head:
            found.append((head, template.strip()))
    return found


def _one_line(text: str) -> str:
    return " ".join(text.split())
