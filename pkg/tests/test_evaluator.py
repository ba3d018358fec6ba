from __future__ import annotations

from types import SimpleNamespace

import pytest

from reqsmith.core import (
    CHARACTERISTICS,
    Characteristic,
    Requirement,
    compute_quality,
    unfulfilled,
)
from reqsmith.evaluator import (
    EvaluationError,
    GateKind,
    GatePolicy,
    evaluate,
    gate,
)

from conftest import (
    INVENTORY_REQ,
    RECORDED_EVAL_ROWS,
    ScriptedResponder,
    as_pipe_table,
)

EVAL_HEADER = ("Feature Name", "Feature Detail", "Fulfilled (yes/no)")


@pytest.fixture
def inventory():
    return Requirement(id="r1", text=INVENTORY_REQ)


def test_recorded_judge_output_becomes_report(inventory, heuristic_backend, eval_table_text):
    responder = ScriptedResponder(eval_table_text)
    report = evaluate(inventory, heuristic_backend, engine=responder)
    assert unfulfilled(report) == {
        Characteristic.UNAMBIGUOUS,
        Characteristic.COMPLETE,
        Characteristic.VERIFIABLE,
    }
    assert compute_quality(report).value == 62.5
    assert Characteristic.CONFORMING not in report.assessed
    assert len(report.verdicts) == 9


def test_heuristic_evaluation_flags_ambiguity(inventory, heuristic_backend):
    report = evaluate(inventory, heuristic_backend)
    assert report.verdicts[Characteristic.UNAMBIGUOUS].fulfilled is False
    again = evaluate(inventory, heuristic_backend)
    assert report == again  # deterministic


def test_standard_configured_includes_conforming(inventory, heuristic_backend):
    report = evaluate(inventory, heuristic_backend, standard_configured=True)
    assert Characteristic.CONFORMING in report.assessed
    report = evaluate(inventory, heuristic_backend, standard_configured=False)
    assert Characteristic.CONFORMING not in report.assessed


def test_blank_requirement_text_is_rejected(heuristic_backend):
    duck = SimpleNamespace(id="x", text="   ")
    with pytest.raises(ValueError):
        evaluate(duck, heuristic_backend)


def test_missing_row_is_an_error_not_a_default(inventory, heuristic_backend):
    table = as_pipe_table(EVAL_HEADER, RECORDED_EVAL_ROWS[:-1])  # Conforming dropped
    responder = ScriptedResponder(table, table, table)
    with pytest.raises(EvaluationError, match="Conforming"):
        evaluate(inventory, heuristic_backend, engine=responder)


def test_unknown_characteristic_is_an_error(inventory, heuristic_backend):
    rows = RECORDED_EVAL_ROWS[:-1] + [("Sparkly", "NA", "Yes")]
    table = as_pipe_table(EVAL_HEADER, rows)
    responder = ScriptedResponder(table, table, table)
    with pytest.raises(EvaluationError, match="Sparkly"):
        evaluate(inventory, heuristic_backend, engine=responder)


def test_non_yes_no_verdict_is_an_error(inventory, heuristic_backend):
    rows = [(n, d, "Maybe") if n == "Singular" else (n, d, f) for n, d, f in RECORDED_EVAL_ROWS]
    table = as_pipe_table(EVAL_HEADER, rows)
    responder = ScriptedResponder(table, table, table)
    with pytest.raises(EvaluationError, match="Singular"):
        evaluate(inventory, heuristic_backend, engine=responder)


def test_parse_failure_carries_raw_completion(inventory, heuristic_backend):
    responder = ScriptedResponder("junk", "junk", "junk")
    with pytest.raises(EvaluationError) as exc_info:
        evaluate(inventory, heuristic_backend, engine=responder)
    assert exc_info.value.raw_completion == "junk"


def test_recovery_retry_succeeds_after_one_bad_round(
    inventory, heuristic_backend, eval_table_text
):
    responder = ScriptedResponder("oops", eval_table_text)
    report = evaluate(inventory, heuristic_backend, engine=responder)
    assert compute_quality(report).value == 62.5


# -- gate --


def _report(letters: str):
    from test_core import report_from_letters

    return report_from_letters(letters)


def test_all_assessed_gate_fails_with_unfulfilled():
    assert gate(_report("YYNNYYNY"), GatePolicy()) is False


def test_all_assessed_gate_passes_full_marks():
    assert gate(_report("YYYYYYYY"), GatePolicy()) is True
    assert gate(
        _report("YYYYYYYY"),
        GatePolicy(kind=GateKind.THRESHOLD, threshold=50.0),
    ) is True


def test_gate_equivalent_to_perfect_score():
    for letters in ("YYNNYYNY", "YYYYYYYY", "YNNNNYNN"):
        report = _report(letters)
        assert gate(report, GatePolicy()) == (compute_quality(report).value == 100.0)


def test_threshold_gate_at_boundary():
    # recorded original cancel-order column scores 75.0
    report = _report("YYNNYYYY")
    assert compute_quality(report).value == 75.0
    assert gate(report, GatePolicy(kind=GateKind.THRESHOLD, threshold=75.0)) is True
    assert gate(report, GatePolicy(kind=GateKind.THRESHOLD, threshold=75.1)) is False


def test_threshold_gate_enforces_mandatory():
    report = _report("YYNYYYYY")  # 87.5 with Unambiguous unmet
    policy = GatePolicy(
        kind=GateKind.THRESHOLD,
        threshold=80.0,
        mandatory=frozenset({Characteristic.UNAMBIGUOUS}),
    )
    assert gate(report, policy) is False
    ok = GatePolicy(kind=GateKind.THRESHOLD, threshold=80.0)
    assert gate(report, ok) is True


def test_policy_validation():
    with pytest.raises(ValueError):
        GatePolicy(kind=GateKind.THRESHOLD)
    with pytest.raises(ValueError):
        GatePolicy(kind=GateKind.THRESHOLD, threshold=0)
    with pytest.raises(ValueError):
        GatePolicy(kind=GateKind.ALL_ASSESSED, threshold=50.0)


def test_policy_dict_round_trip():
    policy = GatePolicy(
        kind=GateKind.THRESHOLD,
        threshold=75.0,
        mandatory=frozenset({Characteristic.SINGULAR}),
    )
    assert GatePolicy.from_dict(policy.to_dict()) == policy
