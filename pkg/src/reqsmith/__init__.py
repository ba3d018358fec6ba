"""reqsmith: iterative quality refinement for natural-language requirements."""

from .core import (
    CHARACTERISTICS,
    Characteristic,
    CharacteristicReport,
    Origin,
    QualityScore,
    Requirement,
    Verdict,
    aggregate_quality,
    compute_quality,
    unfulfilled,
)
from .evaluator import GateKind, GatePolicy, evaluate, gate
from .gateway import BackendConfig, BackendKind, Completion, ParsedTable, complete, parse_table
from .heuristics import HeuristicEngine, heuristic_judge
from .orchestrator import (
    Orchestrator,
    RefinementSession,
    SessionMode,
    SessionStatus,
    accept_if_improved,
    load_session,
    replay,
    save_session,
)
from .patterns import RequirementPattern, builtin_patterns, match_pattern
from .prompting import ExampleShot, PromptSpec, PromptTemplate, ShotMode, render, shot_mode
from .ragstore import HashedBagEmbedder, VectorIndex, chunk_document
from .rewriter import RewriteResult, rewrite

__version__ = "0.1.0"
