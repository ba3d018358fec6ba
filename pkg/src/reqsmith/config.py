"""Project configuration: backends, role bindings, gate, patterns, lexicon, RAG.

One YAML document configures a project. Secrets are referenced by
environment-variable name, never inlined. Without a file, the defaults wire
every role to the deterministic offline backend so the whole pipeline works
with no credentials at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .evaluator import GateKind, GatePolicy
from .core import Characteristic
from .gateway import BackendConfig, BackendKind, RoleBindings, WireFormat
from .heuristics import HeuristicEngine, default_lexicon, load_lexicon
from .patterns import RequirementPattern, builtin_patterns, load_patterns
from .ragstore import (
    DEFAULT_CHUNK_SIZE,
    DEFAULT_DIMENSION,
    DEFAULT_OVERLAP,
    DEFAULT_TOP_K,
)

ROLES = ("evaluator", "clarifier", "answerer", "rewriter")


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RagSettings:
    chunk_size: int = DEFAULT_CHUNK_SIZE
    overlap: int = DEFAULT_OVERLAP
    k: int = DEFAULT_TOP_K
    dimension: int = DEFAULT_DIMENSION
    index_path: Path | None = None


@dataclass(frozen=True)
class ProjectConfig:
    backends: dict[str, BackendConfig]
    roles: RoleBindings
    gate: GatePolicy = field(default_factory=GatePolicy)
    patterns: tuple[RequirementPattern, ...] = ()
    lexicon: tuple[str, ...] = ()
    rag: RagSettings | None = None
    conformance_standard_configured: bool = False
    max_iterations: int = 3

    def engine(self) -> HeuristicEngine:
        return HeuristicEngine(lexicon=self.lexicon, patterns=self.patterns)

    def with_role(self, role: str, backend_name: str) -> "ProjectConfig":
        if role not in ROLES:
            raise ConfigError(f"unknown backend role {role!r}")
        if backend_name not in self.backends:
            raise ConfigError(f"unknown backend {backend_name!r}")
        return replace(
            self,
            roles=replace(self.roles, **{role: self.backends[backend_name]}),
        )


def default_config() -> ProjectConfig:
    offline = BackendConfig(id="offline", kind=BackendKind.HEURISTIC)
    return ProjectConfig(
        backends={"offline": offline},
        roles=RoleBindings.uniform(offline),
        patterns=tuple(builtin_patterns()),
        lexicon=tuple(default_lexicon()),
    )


def _parse_backend(name: str, data: dict) -> BackendConfig:
    try:
        kind = BackendKind(data.get("kind", "heuristic"))
    except ValueError:
        raise ConfigError(
            f"backend {name!r}: unknown kind {data.get('kind')!r}"
        ) from None
    wire = WireFormat(**data.get("wire", {}))
    try:
        return BackendConfig(
            id=name,
            kind=kind,
            endpoint=data.get("endpoint"),
            model_name=data.get("model_name"),
            auth_env_var=data.get("auth_env_var"),
            temperature=data.get("temperature"),
            request_timeout=float(data.get("request_timeout", 30.0)),
            max_retries=int(data.get("max_retries", 2)),
            wire=wire,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"backend {name!r}: {exc}") from exc


def _parse_gate(data: dict) -> GatePolicy:
    try:
        return GatePolicy(
            kind=GateKind(data.get("kind", "all_assessed")),
            threshold=data.get("threshold"),
            mandatory=frozenset(
                Characteristic.from_name(n) for n in data.get("mandatory", [])
            ),
        )
    except ValueError as exc:
        raise ConfigError(f"gate: {exc}") from exc


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base / path


def load_config(path: str | Path) -> ProjectConfig:
    """Load and validate a project config; referenced files must exist."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    base = path.parent

    backends = {
        name: _parse_backend(name, spec or {})
        for name, spec in (data.get("backends") or {"offline": {}}).items()
    }

    roles_data = data.get("roles") or {}
    role_map = {}
    for role in ROLES:
        name = roles_data.get(role)
        if name is None:
            if len(backends) == 1:
                name = next(iter(backends))
            else:
                raise ConfigError(f"role {role!r} is not bound to a backend")
        if name not in backends:
            raise ConfigError(f"role {role!r} bound to unknown backend {name!r}")
        role_map[role] = backends[name]
    roles = RoleBindings(**role_map)

    if "patterns_path" in data and data["patterns_path"]:
        patterns_path = _resolve(base, data["patterns_path"])
        if not patterns_path.is_file():
            raise ConfigError(f"patterns_path does not exist: {patterns_path}")
        patterns = tuple(load_patterns(patterns_path))
    else:
        patterns = tuple(builtin_patterns())

    if "lexicon_path" in data and data["lexicon_path"]:
        lexicon_path = _resolve(base, data["lexicon_path"])
        if not lexicon_path.is_file():
            raise ConfigError(f"lexicon_path does not exist: {lexicon_path}")
        lexicon = tuple(load_lexicon(lexicon_path))
    else:
        lexicon = tuple(default_lexicon())

    rag = None
    if data.get("rag"):
        rag_data = data["rag"]
        index_path = rag_data.get("index_path")
        rag = RagSettings(
            chunk_size=int(rag_data.get("chunk_size", DEFAULT_CHUNK_SIZE)),
            overlap=int(rag_data.get("overlap", DEFAULT_OVERLAP)),
            k=int(rag_data.get("k", DEFAULT_TOP_K)),
            dimension=int(rag_data.get("dimension", DEFAULT_DIMENSION)),
            index_path=_resolve(base, index_path) if index_path else None,
        )
        if rag.chunk_size <= rag.overlap:
            raise ConfigError("rag.chunk_size must exceed rag.overlap")

    max_iterations = int(data.get("max_iterations", 3))
    if max_iterations < 1:
        raise ConfigError("max_iterations must be >= 1")

    return ProjectConfig(
        backends=backends,
        roles=roles,
        gate=_parse_gate(data.get("gate") or {}),
        patterns=patterns,
        lexicon=lexicon,
        rag=rag,
        conformance_standard_configured=bool(
            data.get("conformance_standard_configured", False)
        ),
        max_iterations=max_iterations,
    )
