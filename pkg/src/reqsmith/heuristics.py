"""Deterministic rule-based stand-in for the language-model backends.

Live assistants are not reproducible, so every pipeline stage can instead be
served by this engine: it recognizes the stage from the prompt's instruction
and answers with the same table/line formats a real backend is asked for.
Same prompt in, byte-identical text out, every time.

The judging rules are intentionally shallow surface checks (vague-term
lexicon, pronouns, clause-level conjunctions, measurability markers); they
exist to make the whole pipeline testable offline, not to rival a real
reviewer.
"""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .core import CHARACTERISTICS, Characteristic, Verdict
from .patterns import (
    RequirementPattern,
    builtin_patterns,
    first_sentence,
    match_pattern,
    split_sentences,
)
from . import prompts
from .prompting import split_sections

MODALS = ("shall", "must", "will", "should", "can", "may")

_MODAL_RE = re.compile(r"\b(?:%s)\b" % "|".join(MODALS), re.IGNORECASE)

_PRONOUN_RE = re.compile(r"\b(he|she|it|they)\b", re.IGNORECASE)

_WITHIN_RE = re.compile(r"\bwithin\s+\d", re.IGNORECASE)

_NUMBER_UNIT_RE = re.compile(
    r"\b\d+(?:\.\d+)?\s*(?:%|percent|seconds?|minutes?|hours?|days?|weeks?|"
    r"ms|milliseconds?|kb|mb|gb|items?|records?|entries|users?|requests?|"
    r"pages?|characters?|errors?|transactions?)\b",
    re.IGNORECASE,
)

_FORMAT_TOKENS_RE = re.compile(
    r"\b(?:pdf|csv|xml|json|html|xlsx|yaml)\b", re.IGNORECASE
)

#: Base-form verbs that, straight after "and"/"or", signal a second capability.
COORDINATED_VERBS = frozenset(
    """support allow enable provide generate display export import send receive
    create update delete have be notify store log report print cancel validate
    process produce maintain track handle perform render load save search filter
    sort calculate compute return accept reject archive schedule""".split()
)

_CONJUNCTION_RE = re.compile(r"\b(and|or)\s+([A-Za-z][\w-]*)")

_REQUIREMENT_SHAPE_RE = re.compile(
    r"^\s*(?:the|a|an)\s+(?P<subject>.+?)\s+(?:shall|must|will|should|can|may)\s+"
    r"(?P<predicate>.+?)\s*$",
    re.IGNORECASE | re.DOTALL,
)

_DEFINITION_RE = re.compile(r'^"([^"]+)"\s+(?:means|refers to)\s+(.+?)\.?$')

_SPLIT_AFFIRMATIVE_RE = re.compile(r"^\s*yes\b", re.IGNORECASE)

STOPWORDS = frozenset(
    """a an the of to in on for and or is are be been was were should must shall
    will can may what which how when where who whose why does do did this that
    these those it its with as by at from after if not no yes any all each
    every there here their them they he she his her you your we our us i me my
    has have had would could might about into over under between against
    than then so such only very more most less least also just e g eg etc""".split()
)


def content_words(text: str) -> set[str]:
    """Lowercased, crudely de-pluralized tokens minus stopwords."""
    words = set()
    for token in re.findall(r"[a-z0-9][a-z0-9'-]*", text.lower()):
        token = token.strip("'-")
        if not token or token in STOPWORDS:
            continue
        if len(token) > 3 and token.endswith("s") and not token.endswith("ss"):
            token = token[:-1]
        words.add(token)
    return words


def load_lexicon(path: str | Path) -> list[str]:
    """Read a vague-term lexicon: one term per line, ``#`` comments."""
    terms = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            terms.append(line)
    return terms


def default_lexicon() -> list[str]:
    content = (
        resources.files("reqsmith.data").joinpath("vague_terms.txt").read_text("utf-8")
    )
    return [
        line.strip()
        for line in content.splitlines()
        if line.strip() and not line.strip().startswith("#")
    ]


#: One fixed clarifying question per characteristic, so offline runs repeat.
QUESTION_TEMPLATES: dict[Characteristic, str] = {
    Characteristic.NECESSARY: "Which stakeholder need does this requirement trace to?",
    Characteristic.APPROPRIATE: (
        "Is the requirement stated at the right level for the system, "
        "or does it belong to a subsystem?"
    ),
    Characteristic.UNAMBIGUOUS: (
        "Which terms in the requirement need a precise definition, "
        "and what does each one mean?"
    ),
    Characteristic.COMPLETE: (
        "What additional details (inputs, outputs, scope) must the "
        "requirement state to stand alone?"
    ),
    Characteristic.SINGULAR: (
        "Should this requirement be split into separate single-function "
        "requirements?"
    ),
    Characteristic.FEASIBLE: (
        "What technical or project constraints could prevent implementing "
        "this requirement?"
    ),
    Characteristic.VERIFIABLE: (
        "What measurable criterion confirms this requirement is satisfied?"
    ),
    Characteristic.CORRECT: (
        "Does the requirement text accurately state the intended need, "
        "and if not, what should it say?"
    ),
    Characteristic.CONFORMING: (
        "Which approved requirement pattern should this requirement follow?"
    ),
}

_TEMPLATE_TO_CHARACTERISTIC = {v: k for k, v in QUESTION_TEMPLATES.items()}


class HeuristicError(Exception):
    """The rule engine cannot serve the given prompt."""


class HeuristicEngine:
    """Rule engine behind the ``heuristic`` backend kind.

    ``lexicon`` is the vague-term list (defaults to the bundled file) and
    ``patterns`` the wording patterns used both for Conforming verdicts and
    for rewriting (defaults to the bundled F1/F2 pair). Holds no mutable
    state; safe to share between threads.
    """

    def __init__(
        self,
        lexicon: Sequence[str] | None = None,
        patterns: Sequence[RequirementPattern] | None = None,
    ) -> None:
        self.lexicon = tuple(lexicon if lexicon is not None else default_lexicon())
        self.patterns = tuple(patterns if patterns is not None else builtin_patterns())
        self._lexicon_res = [
            re.compile(r"(?<!\w)" + re.escape(term) + r"(?!\w)", re.IGNORECASE)
            for term in self.lexicon
        ]

    # -- dispatch ---------------------------------------------------------

    def respond(self, prompt: str) -> str:
        sections = split_sections(prompt)
        instruction = sections.instruction
        if instruction.startswith(prompts.EVALUATION_INSTRUCTION):
            return self._respond_evaluation(sections.input or "")
        if instruction.startswith(prompts.QUESTION_INSTRUCTION_PREFIX):
            return self._respond_questions(instruction)
        if instruction.startswith(prompts.ANSWER_INSTRUCTION):
            return self._respond_answer(sections.context or "", sections.input or "")
        if instruction.startswith(prompts.REWRITE_INSTRUCTION.split(".")[0]):
            return self._respond_rewrite(sections.input or "", sections.context or "")
        raise HeuristicError(
            f"no rule for instruction: {instruction.splitlines()[0][:80]!r}"
        )

    # -- evaluation -------------------------------------------------------

    def judge(self, text: str) -> dict[Characteristic, Verdict]:
        """Apply the fixed rule table; returns all nine verdicts."""
        if not text.strip():
            raise ValueError("requirement text must be non-empty")

        verdicts: dict[Characteristic, Verdict] = {}

        vague = self._find_vague_term(text)
        pronoun = _PRONOUN_RE.search(text)
        if vague:
            verdicts[Characteristic.UNAMBIGUOUS] = Verdict(
                False, f'vague term "{vague}" leaves the meaning open'
            )
        elif pronoun:
            verdicts[Characteristic.UNAMBIGUOUS] = Verdict(
                False, f'unresolved pronoun "{pronoun.group(1)}"'
            )
        else:
            verdicts[Characteristic.UNAMBIGUOUS] = Verdict(
                True, "no vague terms or unresolved pronouns"
            )

        singular_problem = self._find_singular_problem(text)
        if singular_problem:
            verdicts[Characteristic.SINGULAR] = Verdict(False, singular_problem)
        else:
            verdicts[Characteristic.SINGULAR] = Verdict(
                True, "states a single capability"
            )

        evidence = self._find_measurable_evidence(text)
        if evidence:
            verdicts[Characteristic.VERIFIABLE] = Verdict(
                True, f'measurable evidence present: "{evidence}"'
            )
        else:
            verdicts[Characteristic.VERIFIABLE] = Verdict(
                False, "no quantity, deadline or output format to test against"
            )

        shape = _REQUIREMENT_SHAPE_RE.match(text)
        has_object = bool(shape and len(shape.group("predicate").split()) >= 2)
        if not has_object:
            verdicts[Characteristic.COMPLETE] = Verdict(
                False, "no object or outcome follows the action"
            )
        elif not evidence:
            verdicts[Characteristic.COMPLETE] = Verdict(
                False, "lacks the measurable outcome needed to stand alone"
            )
        else:
            verdicts[Characteristic.COMPLETE] = Verdict(
                True, "action, object and measurable outcome are all present"
            )

        conforming_id = self._matching_pattern_id(text)
        if conforming_id:
            verdicts[Characteristic.CONFORMING] = Verdict(
                True, f"matches pattern {conforming_id}"
            )
        else:
            verdicts[Characteristic.CONFORMING] = Verdict(
                False, "matches no configured wording pattern"
            )

        verdicts[Characteristic.NECESSARY] = Verdict(True, "traces to the stated need")
        verdicts[Characteristic.APPROPRIATE] = Verdict(
            True, "stated at the system level"
        )
        verdicts[Characteristic.FEASIBLE] = Verdict(
            True, "nothing suggests this cannot be built"
        )
        verdicts[Characteristic.CORRECT] = Verdict(
            True, "consistent with the stated need"
        )
        return verdicts

    def _find_vague_term(self, text: str) -> str | None:
        for term, regex in zip(self.lexicon, self._lexicon_res):
            if regex.search(text):
                return term
        return None

    def _find_singular_problem(self, text: str) -> str | None:
        for match in _CONJUNCTION_RE.finditer(text):
            follower = match.group(2).lower()
            if follower in COORDINATED_VERBS or follower in MODALS:
                return (
                    f'joins two capabilities with '
                    f'"{match.group(1)} {match.group(2)}"'
                )
        normative = [s for s in split_sentences(text) if _MODAL_RE.search(s)]
        if len(normative) > 1:
            return "contains several normative sentences"
        return None

    def _find_measurable_evidence(self, text: str) -> str | None:
        for regex in (_WITHIN_RE, _NUMBER_UNIT_RE, _FORMAT_TOKENS_RE):
            match = regex.search(text)
            if match:
                start = match.start()
                return text[start : start + 24].split(",")[0].strip()
        return None

    def _matching_pattern_id(self, text: str) -> str | None:
        sentence = first_sentence(text)
        for pattern in self.patterns:
            if match_pattern(sentence, pattern):
                return pattern.id
        return None

    def _respond_evaluation(self, requirement_text: str) -> str:
        if not requirement_text.strip():
            raise HeuristicError("evaluation prompt carries no requirement text")
        verdicts = self.judge(requirement_text)
        lines = [
            "| " + " | ".join(prompts.EVALUATION_HEADER) + " |",
            "| --- | --- | --- |",
        ]
        for characteristic in CHARACTERISTICS:
            verdict = verdicts[characteristic]
            lines.append(
                f"| {characteristic.value} | {verdict.detail} | "
                f"{'Yes' if verdict.fulfilled else 'No'} |"
            )
        return "\n".join(lines)

    # -- clarifying questions ----------------------------------------------

    def _respond_questions(self, instruction: str) -> str:
        names = prompts.parse_question_instruction(instruction)
        targets = []
        for name in names:
            try:
                targets.append(Characteristic.from_name(name))
            except ValueError:
                continue
        if not targets:
            raise HeuristicError("question prompt names no known characteristics")
        lines = [
            "| " + " | ".join(prompts.QUESTION_HEADER) + " |",
            "| --- | --- |",
        ]
        for characteristic in CHARACTERISTICS:
            if characteristic in targets:
                lines.append(
                    f"| {characteristic.value} | "
                    f"{QUESTION_TEMPLATES[characteristic]} |"
                )
        return "\n".join(lines)

    # -- grounded answers ---------------------------------------------------

    def _respond_answer(self, context: str, question: str) -> str:
        """Extract context sentences sharing at least two content words."""
        cleaned = re.sub(r"\[chunk [^\]]*\]", " ", context)
        wanted = content_words(question)
        picked: list[str] = []
        for sentence in split_sentences(cleaned):
            if len(content_words(sentence) & wanted) >= 2:
                if sentence not in picked:
                    picked.append(sentence)
        return " ".join(picked)

    # -- rewriting ----------------------------------------------------------

    def _respond_rewrite(self, input_block: str, context_block: str) -> str:
        original, qa_pairs = prompts.parse_rewrite_input(input_block)
        if not original:
            raise HeuristicError("rewrite prompt carries no requirement text")
        declared = prompts.parse_rewrite_context(context_block)
        pattern_id = next(
            (pid for pid, template in declared if template.startswith("The ")),
            declared[0][0] if declared else "F1",
        )

        subject, predicate = self._parse_shape(original)

        substitutions: list[tuple[str, str]] = []
        qualifiers: list[str] = []
        split_requested = False
        for question, answer in qa_pairs:
            target = _TEMPLATE_TO_CHARACTERISTIC.get(question)
            asks_split = target is Characteristic.SINGULAR or "split" in question.lower()
            if asks_split and _SPLIT_AFFIRMATIVE_RE.match(answer):
                split_requested = True
                continue
            leftover: list[str] = []
            for sentence in split_sentences(answer):
                definition = _DEFINITION_RE.match(sentence)
                if definition:
                    substitutions.append((definition.group(1), definition.group(2)))
                else:
                    leftover.append(sentence)
            if leftover:
                qualifiers.append(_as_clause(" ".join(leftover)))

        for term, replacement in substitutions:
            predicate = re.sub(
                r"(?<!\w)" + re.escape(term) + r"(?!\w)",
                replacement,
                predicate,
                flags=re.IGNORECASE,
            )

        if split_requested:
            parts = self._split_predicate(predicate)
        else:
            parts = [predicate]

        if len(parts) == 1:
            sentence = self._assemble(subject, parts[0], qualifiers)
            return f"{pattern_id}: {sentence}"

        lines = []
        attached: dict[int, list[str]] = {i: [] for i in range(len(parts))}
        for clause in qualifiers:
            overlaps = [
                len(content_words(clause) & content_words(part)) for part in parts
            ]
            best = max(range(len(parts)), key=lambda i: (overlaps[i], -i))
            attached[best].append(clause)
        for i, part in enumerate(parts):
            lines.append(f"{pattern_id}: {self._assemble(subject, part, attached[i])}")
        return "\n".join(lines)

    @staticmethod
    def _parse_shape(text: str) -> tuple[str, str]:
        stripped = text.strip().rstrip(".")
        shape = _REQUIREMENT_SHAPE_RE.match(stripped)
        if shape:
            return shape.group("subject"), shape.group("predicate").strip()
        clause = stripped[0].lower() + stripped[1:] if stripped else stripped
        return "system", f"ensure that {clause}"

    @staticmethod
    def _split_predicate(predicate: str) -> list[str]:
        for match in _CONJUNCTION_RE.finditer(predicate):
            follower = match.group(2).lower()
            if follower in COORDINATED_VERBS or follower in MODALS:
                left = predicate[: match.start()].rstrip(" ,")
                right = predicate[match.start(2) :].strip()
                if left and right:
                    return [left, right]
        return [predicate]

    @staticmethod
    def _assemble(subject: str, predicate: str, qualifiers: Iterable[str]) -> str:
        sentence = f"The {subject} shall {predicate}"
        for clause in qualifiers:
            if clause.lower() in sentence.lower():
                continue
            sentence += f", {clause}"
        return sentence + "."


def _as_clause(sentence: str) -> str:
    clause = sentence.strip().rstrip(".")
    if not clause:
        return clause
    head = clause.split()[0]
    if head.isupper() and len(head) > 1:
        return clause
    return clause[0].lower() + clause[1:]


def heuristic_judge(
    requirement_text: str,
    patterns: Sequence[RequirementPattern] | None = None,
    lexicon: Sequence[str] | None = None,
) -> dict[Characteristic, Verdict]:
    """Module-level convenience over :meth:`HeuristicEngine.judge`."""
    return HeuristicEngine(lexicon=lexicon, patterns=patterns).judge(requirement_text)
