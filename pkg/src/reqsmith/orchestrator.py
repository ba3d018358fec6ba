"""The agent that drives evaluate → gate → ask → answer → rewrite iterations.

A session is event-sourced: every state change is appended to the session's
event list and folded into derived state through one transition function,
so replaying a persisted log reproduces the live state exactly. One session
has a single writer; distinct sessions share nothing.
"""

from __future__ import annotations

import json
import logging
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import httpx

from .clarifier import (
    AlreadyAnsweredError,
    AnswerSource,
    ClarificationExchange,
    ClarifyingQuestion,
    attach_answer,
    exchange_from_dict,
    exchange_to_dict,
    generate_questions,
    question_from_dict,
    question_to_dict,
    select_covering,
)
from .core import (
    CharacteristicReport,
    Origin,
    Requirement,
    compute_quality,
    report_from_dict,
    report_to_dict,
    requirement_from_dict,
    requirement_to_dict,
    unfulfilled,
)
from .evaluator import GatePolicy, evaluate, gate
from .gateway import Responder, RoleBindings
from .patterns import RequirementPattern, builtin_patterns
from .ragstore import VectorIndex
from .rewriter import rewrite

logger = logging.getLogger(__name__)

LOG_FORMAT_NAME = "refinement-session-log"
LOG_FORMAT_VERSION = 1


class SessionMode(Enum):
    AUTOMATIC = "automatic"
    INTERACTIVE = "interactive"


class SessionStatus(Enum):
    RUNNING = "running"
    AWAITING_ANSWERS = "awaiting_answers"
    CONVERGED = "converged"
    EXHAUSTED = "exhausted"
    FAILED = "failed"


class EventKind(Enum):
    EVALUATED = "evaluated"
    GATED = "gated"
    QUESTIONS_GENERATED = "questions_generated"
    ANSWER_ATTACHED = "answer_attached"
    REWRITTEN = "rewritten"
    SPLIT = "split"
    ERROR = "error"


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    timestamp: str
    kind: EventKind
    payload: dict

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "timestamp": self.timestamp,
            "kind": self.kind.value,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessionEvent":
        return cls(
            seq=data["seq"],
            timestamp=data["timestamp"],
            kind=EventKind(data["kind"]),
            payload=data["payload"],
        )


class SessionLogCorruption(Exception):
    """The event sequence has a gap or is otherwise unreplayable."""


class InvalidSessionState(Exception):
    """The requested operation is not legal in the session's current status."""


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class RefinementSession:
    """Append-only record of one requirement's journey through the pipeline.

    All mutation goes through :meth:`emit`; :meth:`apply` is the single fold
    function shared by the live path and replay.
    """

    def __init__(
        self,
        session_id: str,
        root: Requirement,
        mode: SessionMode,
        policy: GatePolicy,
        max_iterations: int,
    ) -> None:
        if max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        self.id = session_id
        self.root = root
        self.mode = mode
        self.policy = policy
        self.max_iterations = max_iterations

        self.events: list[SessionEvent] = []
        self.all_requirements: dict[str, Requirement] = {root.id: root}
        self.leaves: dict[str, Requirement] = {root.id: root}
        self.reports: dict[str, CharacteristicReport] = {}
        self.passed: dict[str, bool] = {}
        self.pending: dict[str, list[ClarificationExchange]] = {}
        self.pattern_ids: dict[str, str] = {}
        self.rewrite_cycles: set[int] = set()
        self.fatal_error: dict | None = None
        # transient hints for interactive answering; not part of replayed state
        self.suggestions: dict[str, dict] = {}
        self._sink: Callable[[SessionEvent], None] | None = None

    def attach_sink(self, sink: Callable[[SessionEvent], None] | None) -> None:
        """Forward every future event to ``sink`` (e.g. a log writer)."""
        self._sink = sink

    # -- state queries --

    @property
    def status(self) -> SessionStatus:
        if self.fatal_error is not None:
            return SessionStatus.FAILED
        if self.leaves and all(self.passed.get(rid) for rid in self.leaves):
            return SessionStatus.CONVERGED
        if self.has_unanswered_pending():
            return SessionStatus.AWAITING_ANSWERS
        if len(self.rewrite_cycles) >= self.max_iterations:
            return SessionStatus.EXHAUSTED
        return SessionStatus.RUNNING

    @property
    def iterations_completed(self) -> int:
        return len(self.rewrite_cycles)

    def has_unanswered_pending(self) -> bool:
        return any(
            not exchange.answered
            for exchanges in self.pending.values()
            for exchange in exchanges
        )

    def pending_exchanges(self) -> list[tuple[str, ClarificationExchange]]:
        """(leaf id, exchange) pairs for every pending exchange, in order."""
        pairs = []
        for rid, exchanges in self.pending.items():
            for exchange in exchanges:
                pairs.append((rid, exchange))
        return pairs

    def find_exchange(self, exchange_id: str) -> tuple[str, ClarificationExchange]:
        for rid, exchange in self.pending_exchanges():
            if exchange.question.id == exchange_id:
                return rid, exchange
        raise KeyError(f"no pending exchange {exchange_id!r}")

    def score_of(self, requirement_id: str) -> float | None:
        report = self.reports.get(requirement_id)
        return compute_quality(report).value if report else None

    def snapshot(self) -> dict:
        """Canonical view of the folded state, for replay-equality checks."""
        return {
            "status": self.status.value,
            "iterations_completed": self.iterations_completed,
            "all_requirements": [
                requirement_to_dict(r) for r in self.all_requirements.values()
            ],
            "leaves": [requirement_to_dict(r) for r in self.leaves.values()],
            "reports": {
                rid: report_to_dict(report)
                for rid, report in sorted(self.reports.items())
            },
            "passed": dict(sorted(self.passed.items())),
            "pending": {
                rid: [exchange_to_dict(x) for x in exchanges]
                for rid, exchanges in sorted(self.pending.items())
            },
            "pattern_ids": dict(sorted(self.pattern_ids.items())),
            "scores": {
                rid: self.score_of(rid) for rid in sorted(self.reports)
            },
        }

    # -- event handling --

    def emit(self, kind: EventKind, payload: dict) -> SessionEvent:
        event = SessionEvent(
            seq=len(self.events) + 1,
            timestamp=_now(),
            kind=kind,
            payload=payload,
        )
        self.events.append(event)
        self.apply(event)
        if self._sink is not None:
            self._sink(event)
        return event

    def apply(self, event: SessionEvent) -> None:
        payload = event.payload
        kind = event.kind
        if kind is EventKind.EVALUATED:
            report = report_from_dict(payload["report"])
            self.reports[report.requirement_id] = report
        elif kind is EventKind.GATED:
            self.passed[payload["requirement_id"]] = bool(payload["passed"])
        elif kind is EventKind.QUESTIONS_GENERATED:
            rid = payload["requirement_id"]
            selected = set(payload["selected_ids"])
            self.pending[rid] = [
                ClarificationExchange(question=question_from_dict(q))
                for q in payload["questions"]
                if q["id"] in selected
            ]
        elif kind is EventKind.ANSWER_ATTACHED:
            rid = payload["requirement_id"]
            exchange = exchange_from_dict(payload["exchange"])
            exchanges = self.pending.get(rid, [])
            for i, existing in enumerate(exchanges):
                if existing.question.id == exchange.question.id:
                    exchanges[i] = exchange
                    break
            else:
                raise SessionLogCorruption(
                    f"answer for unknown exchange {exchange.question.id!r}"
                )
        elif kind in (EventKind.REWRITTEN, EventKind.SPLIT):
            rid = payload["requirement_id"]
            self.rewrite_cycles.add(int(payload["iteration"]))
            self.pending.pop(rid, None)
            if payload["accepted"]:
                self.leaves.pop(rid, None)
                for req_data, pattern_id in zip(
                    payload["requirements"], payload["pattern_ids"]
                ):
                    child = requirement_from_dict(req_data)
                    self.all_requirements[child.id] = child
                    self.leaves[child.id] = child
                    self.pattern_ids[child.id] = pattern_id
        elif kind is EventKind.ERROR:
            if payload.get("fatal"):
                self.fatal_error = payload
        else:  # pragma: no cover - enum is closed
            raise SessionLogCorruption(f"unknown event kind {kind!r}")


def replay(
    events: Sequence[SessionEvent],
    *,
    session_id: str,
    root: Requirement,
    mode: SessionMode,
    policy: GatePolicy,
    max_iterations: int,
) -> RefinementSession:
    """Fold a monotone event sequence back into session state."""
    session = RefinementSession(
        session_id=session_id,
        root=root,
        mode=mode,
        policy=policy,
        max_iterations=max_iterations,
    )
    expected = 1
    for event in events:
        if event.seq != expected:
            raise SessionLogCorruption(
                f"event seq {event.seq} where {expected} was expected"
            )
        expected += 1
        session.events.append(event)
        session.apply(event)
    return session


def accept_if_improved(
    old_report: CharacteristicReport, new_report: CharacteristicReport
) -> bool:
    """Non-strict improvement check between two reports of the same scope."""
    if old_report.assessed != new_report.assessed:
        raise ValueError("reports assess different characteristic sets")
    return compute_quality(new_report).value >= compute_quality(old_report).value


class _StageFailure(Exception):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


#: Answer lookup used in automatic mode; return None to leave unanswered.
AnswerProvider = Callable[[ClarifyingQuestion], str | None]


class Orchestrator:
    """Drives sessions through the four-stage loop until the gate passes.

    ``answer_provider`` feeds automatic mode (e.g. an answers file); when a
    vector index is configured, grounded answers are tried first and
    unanswerable questions fall through. In interactive mode every selected
    question awaits a human, with grounded answers offered as suggestions.
    """

    def __init__(
        self,
        backends: RoleBindings,
        *,
        policy: GatePolicy | None = None,
        patterns: Sequence[RequirementPattern] | None = None,
        max_iterations: int = 3,
        standard_configured: bool = False,
        rag_index: VectorIndex | None = None,
        rag_k: int = 4,
        answer_provider: AnswerProvider | None = None,
        answer_source: AnswerSource = AnswerSource.STAKEHOLDER,
        engine: Responder | None = None,
        transport: httpx.BaseTransport | None = None,
        stage_retries: int = 0,
        event_sink: Callable[[SessionEvent], None] | None = None,
    ) -> None:
        self.backends = backends
        self.policy = policy or GatePolicy()
        self.patterns = tuple(patterns if patterns is not None else builtin_patterns())
        self.max_iterations = max_iterations
        self.standard_configured = standard_configured
        self.rag_index = rag_index
        self.rag_k = rag_k
        self.answer_provider = answer_provider
        self.answer_source = answer_source
        self.engine = engine
        self.transport = transport
        self.stage_retries = stage_retries
        self.event_sink = event_sink

    # -- session lifecycle --

    def new_session(
        self,
        requirement: Requirement | str,
        mode: SessionMode = SessionMode.AUTOMATIC,
    ) -> RefinementSession:
        if isinstance(requirement, str):
            requirement = Requirement(
                id=uuid.uuid4().hex, text=requirement, origin=Origin.AUTHORED
            )
        session = RefinementSession(
            session_id=uuid.uuid4().hex,
            root=requirement,
            mode=mode,
            policy=self.policy,
            max_iterations=self.max_iterations,
        )
        session._sink = self.event_sink
        return session

    def run(self, session: RefinementSession) -> SessionStatus:
        """Advance until converged, exhausted, failed, or answers are needed."""
        while True:
            status = session.status
            runnable = status is SessionStatus.RUNNING or (
                status is SessionStatus.AWAITING_ANSWERS
                and not session.has_unanswered_pending()
            )
            if not runnable:
                return status
            self.run_iteration(session)

    def run_iteration(self, session: RefinementSession) -> SessionStatus:
        """One full cycle: evaluate, gate, ask, answer, rewrite, re-evaluate."""
        status = session.status
        if status not in (SessionStatus.RUNNING, SessionStatus.AWAITING_ANSWERS):
            raise InvalidSessionState(f"cannot advance a {status.value} session")
        if status is SessionStatus.AWAITING_ANSWERS and session.has_unanswered_pending():
            raise InvalidSessionState("selected exchanges are still unanswered")
        cycle = session.iterations_completed + 1
        try:
            self._run_cycle(session, cycle)
        except _StageFailure as failure:
            logger.error("session %s failed at stage %s", session.id, failure.stage)
        return session.status

    def attach_answer(
        self,
        session: RefinementSession,
        exchange_id: str,
        answer: str,
        source: AnswerSource = AnswerSource.STAKEHOLDER,
        provenance: Sequence[str] = (),
    ) -> ClarificationExchange:
        """Answer one pending exchange (write-once) and record the event."""
        rid, exchange = session.find_exchange(exchange_id)
        answered = attach_answer(exchange, answer, source, provenance)
        session.emit(
            EventKind.ANSWER_ATTACHED,
            {
                "iteration": session.iterations_completed + 1,
                "requirement_id": rid,
                "exchange": exchange_to_dict(answered),
            },
        )
        return answered

    # -- the cycle --

    def _stage(self, session, cycle: int, stage: str, fn):
        for attempt in range(self.stage_retries + 1):
            try:
                return fn()
            except (AlreadyAnsweredError, InvalidSessionState):
                raise
            except Exception as exc:
                fatal = attempt == self.stage_retries
                session.emit(
                    EventKind.ERROR,
                    {
                        "iteration": cycle,
                        "stage": stage,
                        "message": str(exc),
                        "fatal": fatal,
                    },
                )
                if fatal:
                    raise _StageFailure(stage, exc) from exc
        raise AssertionError("unreachable")

    def _evaluate_and_gate(self, session, cycle: int, requirement: Requirement) -> None:
        report = self._stage(
            session,
            cycle,
            "evaluate",
            lambda: evaluate(
                requirement,
                self.backends.evaluator,
                self.standard_configured,
                engine=self.engine,
                transport=self.transport,
            ),
        )
        session.emit(
            EventKind.EVALUATED,
            {
                "iteration": cycle,
                "report": report_to_dict(report),
                "score": compute_quality(report).value,
            },
        )
        passed = gate(report, self.policy)
        session.emit(
            EventKind.GATED,
            {
                "iteration": cycle,
                "requirement_id": requirement.id,
                "passed": passed,
                "score": compute_quality(report).value,
                "policy": self.policy.to_dict(),
            },
        )

    def _run_cycle(self, session: RefinementSession, cycle: int) -> None:
        for requirement in list(session.leaves.values()):
            if requirement.id not in session.reports:
                self._evaluate_and_gate(session, cycle, requirement)

        failing = [
            requirement
            for requirement in session.leaves.values()
            if not session.passed.get(requirement.id)
        ]
        if not failing:
            return

        for requirement in failing:
            if not session.pending.get(requirement.id):
                self._generate_questions(session, cycle, requirement)
            self._route_answers(session, cycle, requirement)

        if session.has_unanswered_pending():
            return

        for requirement in failing:
            self._rewrite_leaf(session, cycle, requirement)

    def _generate_questions(
        self, session, cycle: int, requirement: Requirement
    ) -> None:
        report = session.reports[requirement.id]
        missing = unfulfilled(report)
        warnings: list[str] = []
        questions = self._stage(
            session,
            cycle,
            "clarify",
            lambda: generate_questions(
                requirement,
                missing,
                self.backends.clarifier,
                engine=self.engine,
                transport=self.transport,
                warning_sink=warnings.append,
            ),
        )
        selected = select_covering(questions, missing)
        session.emit(
            EventKind.QUESTIONS_GENERATED,
            {
                "iteration": cycle,
                "requirement_id": requirement.id,
                "questions": [question_to_dict(q) for q in questions],
                "selected_ids": [q.id for q in selected],
                "warnings": warnings,
            },
        )

    def _route_answers(self, session, cycle: int, requirement: Requirement) -> None:
        rag_ready = self.rag_index is not None and len(self.rag_index) > 0
        for exchange in list(session.pending.get(requirement.id, [])):
            if exchange.answered:
                continue
            question = exchange.question
            if session.mode is SessionMode.INTERACTIVE:
                if rag_ready and question.id not in session.suggestions:
                    suggestion = self._stage(
                        session,
                        cycle,
                        "answer",
                        lambda q=question: self.rag_index.answer_question(
                            q,
                            self.rag_k,
                            self.backends.answerer,
                            engine=self.engine,
                            transport=self.transport,
                        ),
                    )
                    if suggestion.answered:
                        session.suggestions[question.id] = {
                            "answer": suggestion.answer,
                            "provenance": list(suggestion.provenance),
                        }
                continue

            answered: ClarificationExchange | None = None
            if rag_ready:
                candidate = self._stage(
                    session,
                    cycle,
                    "answer",
                    lambda q=question: self.rag_index.answer_question(
                        q,
                        self.rag_k,
                        self.backends.answerer,
                        engine=self.engine,
                        transport=self.transport,
                    ),
                )
                if candidate.answered:
                    answered = candidate
            if answered is None and self.answer_provider is not None:
                text = self.answer_provider(question)
                if text and text.strip():
                    answered = attach_answer(exchange, text, self.answer_source)
            if answered is not None:
                session.emit(
                    EventKind.ANSWER_ATTACHED,
                    {
                        "iteration": cycle,
                        "requirement_id": requirement.id,
                        "exchange": exchange_to_dict(answered),
                    },
                )

    def _rewrite_leaf(self, session, cycle: int, requirement: Requirement) -> None:
        exchanges = session.pending.get(requirement.id, [])
        old_report = session.reports[requirement.id]
        result = self._stage(
            session,
            cycle,
            "rewrite",
            lambda: rewrite(
                requirement,
                exchanges,
                self.patterns,
                self.backends.rewriter,
                engine=self.engine,
                transport=self.transport,
            ),
        )
        child_reports = [
            self._stage(
                session,
                cycle,
                "evaluate",
                lambda c=child: evaluate(
                    c,
                    self.backends.evaluator,
                    self.standard_configured,
                    engine=self.engine,
                    transport=self.transport,
                ),
            )
            for child in result.requirements
        ]
        accepted = all(
            accept_if_improved(old_report, child_report)
            for child_report in child_reports
        )
        kind = EventKind.SPLIT if len(result.requirements) >= 2 else EventKind.REWRITTEN
        session.emit(
            kind,
            {
                "iteration": cycle,
                "requirement_id": requirement.id,
                "accepted": accepted,
                "requirements": [
                    requirement_to_dict(r) for r in result.requirements
                ],
                "pattern_ids": list(result.pattern_ids),
                "rationale": result.rationale,
                "child_scores": [
                    compute_quality(r).value for r in child_reports
                ],
            },
        )
        if not accepted:
            return
        for child, child_report in zip(result.requirements, child_reports):
            session.emit(
                EventKind.EVALUATED,
                {
                    "iteration": cycle,
                    "report": report_to_dict(child_report),
                    "score": compute_quality(child_report).value,
                },
            )
            session.emit(
                EventKind.GATED,
                {
                    "iteration": cycle,
                    "requirement_id": child.id,
                    "passed": gate(child_report, self.policy),
                    "score": compute_quality(child_report).value,
                    "policy": self.policy.to_dict(),
                },
            )


# -- log persistence ---------------------------------------------------------


def _header_dict(session: RefinementSession) -> dict:
    return {
        "format": LOG_FORMAT_NAME,
        "version": LOG_FORMAT_VERSION,
        "session_id": session.id,
        "mode": session.mode.value,
        "policy": session.policy.to_dict(),
        "max_iterations": session.max_iterations,
        "root": requirement_to_dict(session.root),
    }


class SessionLogWriter:
    """Appends one JSON line per event under a versioned header line."""

    def __init__(self, path: str | Path, session: RefinementSession):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", encoding="utf-8")
        self._fh.write(json.dumps(_header_dict(session)) + "\n")
        self._fh.flush()

    def append(self, event: SessionEvent) -> None:
        self._fh.write(json.dumps(event.to_dict()) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def save_session(session: RefinementSession, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(_header_dict(session)) + "\n")
        for event in session.events:
            fh.write(json.dumps(event.to_dict()) + "\n")
    return path


def load_session(path: str | Path) -> RefinementSession:
    """Replay a persisted event log back into a session."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise SessionLogCorruption(f"{path}: empty session log")
    header = json.loads(lines[0])
    if header.get("format") != LOG_FORMAT_NAME:
        raise SessionLogCorruption(f"{path}: not a session log")
    if header.get("version") != LOG_FORMAT_VERSION:
        raise SessionLogCorruption(
            f"{path}: unsupported log version {header.get('version')!r}"
        )
    events = [SessionEvent.from_dict(json.loads(line)) for line in lines[1:] if line]
    return replay(
        events,
        session_id=header["session_id"],
        root=requirement_from_dict(header["root"]),
        mode=SessionMode(header["mode"]),
        policy=GatePolicy.from_dict(header["policy"]),
        max_iterations=header["max_iterations"],
    )
