"""Uniform access to model backends, plus parsing of their table outputs.

Two backend kinds exist: ``http_chat`` talks to any chat-completion-style
HTTP provider (the wire layout is remappable per provider), ``heuristic``
dispatches to the deterministic rule engine. Pipeline stages ask for
structured tables; real backends do not always comply, so `complete_table`
re-issues the request a bounded number of times with a format reminder.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol, Sequence

import httpx

from .heuristics import HeuristicEngine
from .prompting import PromptSpec, render

logger = logging.getLogger(__name__)


class GatewayError(Exception):
    """Base class for backend and parsing failures."""


class ConfigurationError(GatewayError):
    pass


class BackendUnreachableError(GatewayError):
    pass


class ProviderError(GatewayError):
    def __init__(self, message: str, status_code: int | None = None, body: str = ""):
        super().__init__(message)
        self.status_code = status_code
        self.body_excerpt = body[:500]


class TableParseError(GatewayError):
    pass


class TableNotFoundError(TableParseError):
    pass


class BackendKind(Enum):
    HTTP_CHAT = "http_chat"
    HEURISTIC = "heuristic"


@dataclass(frozen=True)
class WireFormat:
    """Dotted paths into the request/response JSON of a chat provider.

    Integer segments index into lists; the defaults fit the common
    ``choices[0].message.content`` layout.
    """

    model_path: str = "model"
    messages_path: str = "messages"
    temperature_path: str = "temperature"
    response_text_path: str = "choices.0.message.content"


@dataclass(frozen=True)
class BackendConfig:
    id: str
    kind: BackendKind
    endpoint: str | None = None
    model_name: str | None = None
    auth_env_var: str | None = None
    temperature: float | None = None
    request_timeout: float = 30.0
    max_retries: int = 2
    wire: WireFormat = field(default_factory=WireFormat)

    def __post_init__(self) -> None:
        if self.kind is BackendKind.HTTP_CHAT:
            if not self.endpoint or not self.model_name:
                raise ValueError("http_chat backends require endpoint and model_name")
        if self.temperature is not None and self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.request_timeout <= 0:
            raise ValueError("request_timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass(frozen=True)
class Completion:
    text: str
    backend_id: str
    latency: float
    attempt: int


class Responder(Protocol):
    """Anything that can turn a prompt into text (the heuristic engine does)."""

    def respond(self, prompt: str) -> str: ...


_default_engine: HeuristicEngine | None = None


def _get_default_engine() -> HeuristicEngine:
    global _default_engine
    if _default_engine is None:
        _default_engine = HeuristicEngine()
    return _default_engine


def _set_path(obj: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = obj
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value


def _get_path(obj, dotted: str):
    node = obj
    for part in dotted.split("."):
        if isinstance(node, list):
            node = node[int(part)]
        elif isinstance(node, dict):
            node = node[part]
        else:
            raise KeyError(dotted)
    return node


def complete(
    config: BackendConfig,
    prompt: str,
    *,
    engine: Responder | None = None,
    transport: httpx.BaseTransport | None = None,
) -> Completion:
    """Run one completion against the configured backend."""
    if not prompt or not prompt.strip():
        raise ValueError("prompt must be non-empty")

    started = time.monotonic()
    if config.kind is BackendKind.HEURISTIC:
        responder = engine if engine is not None else _get_default_engine()
        text = responder.respond(prompt)
        return Completion(
            text=text,
            backend_id=config.id,
            latency=time.monotonic() - started,
            attempt=1,
        )
    return _complete_http(config, prompt, started, transport)


def _complete_http(
    config: BackendConfig,
    prompt: str,
    started: float,
    transport: httpx.BaseTransport | None,
) -> Completion:
    headers = {}
    if config.auth_env_var:
        secret = os.environ.get(config.auth_env_var, "")
        if not secret:
            raise ConfigurationError(
                f"backend {config.id!r}: environment variable "
                f"{config.auth_env_var!r} is not set"
            )
        headers["Authorization"] = f"Bearer {secret}"

    body: dict = {}
    _set_path(body, config.wire.model_path, config.model_name)
    _set_path(body, config.wire.messages_path, [{"role": "user", "content": prompt}])
    temperature = config.temperature if config.temperature is not None else 0.0
    _set_path(body, config.wire.temperature_path, temperature)

    attempts = config.max_retries + 1
    last_error: Exception | None = None
    with httpx.Client(
        timeout=config.request_timeout, transport=transport, headers=headers
    ) as client:
        for attempt in range(1, attempts + 1):
            try:
                response = client.post(config.endpoint, json=body)
            except httpx.TransportError as exc:
                logger.warning(
                    "backend %s transport error on attempt %d/%d: %s",
                    config.id, attempt, attempts, exc,
                )
                last_error = exc
                continue
            if response.status_code < 200 or response.status_code >= 300:
                raise ProviderError(
                    f"backend {config.id!r} returned HTTP {response.status_code}",
                    status_code=response.status_code,
                    body=response.text,
                )
            try:
                text = _get_path(response.json(), config.wire.response_text_path)
            except (KeyError, IndexError, ValueError) as exc:
                raise ProviderError(
                    f"backend {config.id!r} response lacks text at "
                    f"{config.wire.response_text_path!r}: {exc}"
                ) from exc
            return Completion(
                text=str(text),
                backend_id=config.id,
                latency=time.monotonic() - started,
                attempt=attempt,
            )
    raise BackendUnreachableError(
        f"backend {config.id!r} unreachable after {attempts} attempts: {last_error}"
    )


# -- table handling ---------------------------------------------------------


@dataclass(frozen=True)
class ParsedTable:
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "header", tuple(self.header))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        if not self.header:
            raise ValueError("table header must be non-empty")
        for row in self.rows:
            if len(row) != len(self.header):
                raise ValueError(
                    f"row {row!r} has {len(row)} cells, header has {len(self.header)}"
                )


def _cells(line: str) -> list[str]:
    stripped = line.strip()
    if stripped.startswith("|"):
        stripped = stripped[1:]
    if stripped.endswith("|"):
        stripped = stripped[:-1]
    return [cell.strip() for cell in stripped.split("|")]


def _is_separator(cells: Sequence[str]) -> bool:
    return all(cell and set(cell) <= set(":- ") for cell in cells)


def parse_table(text: str, expected_header: Sequence[str]) -> ParsedTable:
    """Find the first pipe table whose header matches (case-insensitively).

    Separator rows are ignored; a data row with the wrong number of cells is
    an error naming the row. Column order is part of the contract, so a
    reordered header never matches.
    """
    if not expected_header:
        raise ValueError("expected_header must be non-empty")
    wanted = [h.strip().lower() for h in expected_header]

    lines = text.splitlines()
    for i, line in enumerate(lines):
        if "|" not in line:
            continue
        cells = _cells(line)
        if [c.lower() for c in cells] != wanted:
            continue
        rows: list[tuple[str, ...]] = []
        for data_line in lines[i + 1 :]:
            if "|" not in data_line:
                break
            data_cells = _cells(data_line)
            if _is_separator(data_cells):
                continue
            if len(data_cells) != len(wanted):
                raise TableParseError(
                    f"table row {data_line.strip()!r} has {len(data_cells)} cells, "
                    f"expected {len(wanted)}"
                )
            rows.append(tuple(data_cells))
        return ParsedTable(header=tuple(expected_header), rows=tuple(rows))

    raise TableNotFoundError(
        f"no table with header {list(expected_header)!r} found in completion"
    )


def render_table(table: ParsedTable) -> str:
    """Render a pipe table; inverse of :func:`parse_table` for clean cells."""
    for row in (table.header, *table.rows):
        for cell in row:
            if "|" in cell or len(cell.splitlines()) > 1:
                raise ValueError(f"cell {cell!r} cannot contain '|' or line breaks")
            if cell != cell.strip():
                raise ValueError(f"cell {cell!r} has leading/trailing whitespace")
    lines = ["| " + " | ".join(table.header) + " |"]
    lines.append("| " + " | ".join("---" for _ in table.header) + " |")
    for row in table.rows:
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines)


#: How often a malformed completion may be re-requested with a reminder.
FORMAT_RETRIES = 2

_FORMAT_REMINDER = "Respond with the table only."


def complete_table(
    config: BackendConfig,
    spec: PromptSpec,
    expected_header: Sequence[str],
    *,
    engine: Responder | None = None,
    transport: httpx.BaseTransport | None = None,
) -> tuple[ParsedTable, Completion]:
    """Complete a prompt and parse the demanded table, retrying on bad format.

    Each retry repeats the output-format section verbatim and appends a
    one-sentence reminder; after ``FORMAT_RETRIES`` retries the parse error
    propagates with the raw completion attached for audit.
    """
    prompt = render(spec)
    last_error: TableParseError | None = None
    completion: Completion | None = None
    for round_no in range(FORMAT_RETRIES + 1):
        completion = complete(config, prompt, engine=engine, transport=transport)
        try:
            return parse_table(completion.text, expected_header), completion
        except TableParseError as exc:
            last_error = exc
            logger.warning(
                "backend %s returned a malformed table (round %d): %s",
                config.id, round_no + 1, exc,
            )
            reminder = (spec.output_format or "") + "\n" + _FORMAT_REMINDER
            prompt = render(spec) + "\n\n" + reminder.strip()
    assert last_error is not None and completion is not None
    last_error.raw_completion = completion.text  # type: ignore[attr-defined]
    raise last_error


@dataclass(frozen=True)
class RoleBindings:
    """Which backend serves each pipeline stage."""

    evaluator: BackendConfig
    clarifier: BackendConfig
    answerer: BackendConfig
    rewriter: BackendConfig

    @classmethod
    def uniform(cls, config: BackendConfig) -> "RoleBindings":
        return cls(config, config, config, config)

    def for_role(self, role: str) -> BackendConfig:
        try:
            return getattr(self, role)
        except AttributeError:
            raise KeyError(f"unknown backend role: {role!r}") from None
