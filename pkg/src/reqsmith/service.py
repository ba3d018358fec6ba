"""HTTP API over refinement sessions; the review UI is a pure client of it.

Sessions created here behave identically to CLI sessions: both paths drive
the same orchestrator, so the event logs agree modulo ids and timestamps.
All mutations of one session serialize through a per-session lock.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .clarifier import AlreadyAnsweredError, AnswerSource
from .config import ProjectConfig, default_config
from .core import report_to_dict, requirement_to_dict
from .cli import build_orchestrator
from .orchestrator import (
    EventKind,
    Orchestrator,
    RefinementSession,
    SessionLogWriter,
    SessionMode,
    SessionStatus,
)


class CreateSessionBody(BaseModel):
    requirement: str
    mode: str = "interactive"


class AnswerBody(BaseModel):
    exchange_id: str
    answer: str
    source: str = "stakeholder"


@dataclass
class _Handle:
    session: RefinementSession
    lock: threading.Lock
    writer: SessionLogWriter | None = None


def _leaf_view(session: RefinementSession, requirement) -> dict:
    report = session.reports.get(requirement.id)
    parent = None
    if requirement.parent_id and requirement.parent_id in session.all_requirements:
        parent_req = session.all_requirements[requirement.parent_id]
        parent_report = session.reports.get(parent_req.id)
        parent = {
            "requirement": requirement_to_dict(parent_req),
            "score": session.score_of(parent_req.id),
            "report": report_to_dict(parent_report) if parent_report else None,
        }
    return {
        "requirement": requirement_to_dict(requirement),
        "score": session.score_of(requirement.id),
        "gate_passed": session.passed.get(requirement.id),
        "pattern_id": session.pattern_ids.get(requirement.id),
        "report": report_to_dict(report) if report else None,
        "parent": parent,
    }


def _summary(session: RefinementSession) -> dict:
    return {
        "id": session.id,
        "status": session.status.value,
        "mode": session.mode.value,
        "iterations_completed": session.iterations_completed,
        "max_iterations": session.max_iterations,
        "root": requirement_to_dict(session.root),
        "leaves": [_leaf_view(session, leaf) for leaf in session.leaves.values()],
        "pending_questions": sum(
            1 for _, x in session.pending_exchanges() if not x.answered
        ),
        "score_history": [
            {
                "seq": event.seq,
                "requirement_id": event.payload["requirement_id"],
                "score": event.payload["score"],
            }
            for event in session.events
            if event.kind is EventKind.GATED
        ],
    }


def create_app(
    project: ProjectConfig | None = None,
    *,
    log_dir: str | Path | None = None,
    static_dir: str | Path | None = None,
) -> FastAPI:
    project = project or default_config()
    orchestrator: Orchestrator = build_orchestrator(project)
    app = FastAPI(title="reqsmith", version="0.1.0")
    sessions: dict[str, _Handle] = {}
    app.state.sessions = sessions

    def handle_of(session_id: str) -> _Handle:
        handle = sessions.get(session_id)
        if handle is None:
            raise HTTPException(status_code=404, detail="unknown session id")
        return handle

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        if not body.requirement.strip():
            raise HTTPException(status_code=422, detail="requirement must be non-empty")
        try:
            mode = SessionMode(body.mode)
        except ValueError:
            raise HTTPException(
                status_code=422, detail=f"unknown mode {body.mode!r}"
            ) from None
        session = orchestrator.new_session(body.requirement, mode)
        writer = None
        if log_dir is not None:
            writer = SessionLogWriter(Path(log_dir) / f"{session.id}.jsonl", session)
            session.attach_sink(writer.append)
        handle = _Handle(session=session, lock=threading.Lock(), writer=writer)
        sessions[session.id] = handle
        with handle.lock:
            orchestrator.run(session)
        return _summary(session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return _summary(handle_of(session_id).session)

    @app.get("/sessions/{session_id}/questions")
    def get_questions(session_id: str, status: str = "pending") -> list[dict]:
        if status != "pending":
            raise HTTPException(
                status_code=422, detail="only status=pending is supported"
            )
        session = handle_of(session_id).session
        views = []
        for rid, exchange in session.pending_exchanges():
            if exchange.answered:
                continue
            suggestion = session.suggestions.get(exchange.question.id, {})
            views.append(
                {
                    "exchange_id": exchange.question.id,
                    "requirement_id": rid,
                    "target": exchange.question.target.value,
                    "text": exchange.question.text,
                    "suggested_answer": suggestion.get("answer"),
                    "provenance": suggestion.get("provenance", []),
                }
            )
        return views

    @app.post("/sessions/{session_id}/answers")
    def post_answer(session_id: str, body: AnswerBody) -> dict:
        handle = handle_of(session_id)
        if not body.answer.strip():
            raise HTTPException(status_code=422, detail="answer must be non-empty")
        try:
            source = AnswerSource(body.source)
        except ValueError:
            raise HTTPException(
                status_code=422, detail=f"unknown answer source {body.source!r}"
            ) from None
        with handle.lock:
            session = handle.session
            try:
                rid, exchange = session.find_exchange(body.exchange_id)
            except KeyError:
                raise HTTPException(
                    status_code=404, detail="unknown exchange id"
                ) from None
            if exchange.answered:
                raise HTTPException(
                    status_code=409, detail="exchange already answered"
                )
            try:
                orchestrator.attach_answer(
                    session, body.exchange_id, body.answer, source
                )
            except AlreadyAnsweredError:
                raise HTTPException(
                    status_code=409, detail="exchange already answered"
                ) from None
        return {
            "exchange_id": body.exchange_id,
            "requirement_id": rid,
            "status": session.status.value,
        }

    @app.post("/sessions/{session_id}/advance")
    def advance(session_id: str) -> dict:
        handle = handle_of(session_id)
        with handle.lock:
            session = handle.session
            status = session.status
            if status in (
                SessionStatus.CONVERGED,
                SessionStatus.EXHAUSTED,
                SessionStatus.FAILED,
            ):
                raise HTTPException(
                    status_code=409, detail=f"session already {status.value}"
                )
            if (
                status is SessionStatus.AWAITING_ANSWERS
                and session.has_unanswered_pending()
            ):
                raise HTTPException(
                    status_code=409, detail="answers are still pending"
                )
            orchestrator.run(session)
        return _summary(session)

    @app.get("/sessions/{session_id}/leaves")
    def get_leaves(session_id: str) -> list[dict]:
        session = handle_of(session_id).session
        return [_leaf_view(session, leaf) for leaf in session.leaves.values()]

    @app.get("/sessions/{session_id}/events")
    def get_events(session_id: str, offset: int = 0, limit: int = 100) -> dict:
        if offset < 0 or limit < 1:
            raise HTTPException(
                status_code=422, detail="offset must be >= 0 and limit >= 1"
            )
        session = handle_of(session_id).session
        window = session.events[offset : offset + limit]
        return {
            "total": len(session.events),
            "offset": offset,
            "limit": limit,
            "events": [event.to_dict() for event in window],
        }

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
