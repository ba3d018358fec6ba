from __future__ import annotations

import httpx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from reqsmith.gateway import (
    BackendConfig,
    BackendKind,
    BackendUnreachableError,
    ConfigurationError,
    ParsedTable,
    ProviderError,
    TableNotFoundError,
    TableParseError,
    WireFormat,
    complete,
    complete_table,
    parse_table,
    render_table,
)
from reqsmith.prompting import PromptSpec
from reqsmith import prompts

from conftest import (
    BROWSER_REQ,
    RECORDED_EVAL_ROWS,
    RECORDED_QUESTION_ROWS,
    ScriptedResponder,
    as_pipe_table,
)

EVAL_HEADER = ("Feature Name", "Feature Detail", "Fulfilled (yes/no)")
QUESTION_HEADER = ("Feature Name", "Suggested Questions")


# -- parse_table / render_table --


def test_parse_recorded_eval_table(eval_table_text):
    table = parse_table(eval_table_text, EVAL_HEADER)
    assert len(table.rows) == 9
    by_name = {row[0]: row for row in table.rows}
    assert by_name["Unambiguous"][1] == "Clearly defines the function"
    assert by_name["Unambiguous"][2] == "No"


def test_parse_recorded_question_table(question_table_text):
    table = parse_table(question_table_text, QUESTION_HEADER)
    assert len(table.rows) == 3
    assert table.rows[0][0] == "Unambiguous"
    assert "PDF, CSV" in table.rows[0][1]


def test_parse_table_ignores_surrounding_prose(eval_table_text):
    text = "Sure! Here is the table you asked for:\n\n" + eval_table_text + "\nDone."
    table = parse_table(text, EVAL_HEADER)
    assert len(table.rows) == 9


def test_parse_table_is_case_insensitive_on_header(eval_table_text):
    table = parse_table(eval_table_text.replace("Feature Name", "FEATURE NAME"), EVAL_HEADER)
    assert len(table.rows) == 9


def test_parse_table_without_pipes_errors():
    with pytest.raises(TableNotFoundError):
        parse_table("no table here, sorry", EVAL_HEADER)


def test_parse_table_reordered_header_errors(eval_table_text):
    reordered = as_pipe_table(
        ("Feature Detail", "Feature Name", "Fulfilled (yes/no)"),
        [(d, n, f) for n, d, f in RECORDED_EVAL_ROWS],
    )
    with pytest.raises(TableNotFoundError):
        parse_table(reordered, EVAL_HEADER)


def test_parse_table_row_arity_mismatch_names_row():
    bad = as_pipe_table(EVAL_HEADER, [("Necessary", "Yes")])
    with pytest.raises(TableParseError, match="Necessary"):
        parse_table(bad, EVAL_HEADER)


def test_round_trip_recorded_tables(eval_table_text, question_table_text):
    for text, header in (
        (eval_table_text, EVAL_HEADER),
        (question_table_text, QUESTION_HEADER),
    ):
        table = parse_table(text, header)
        assert parse_table(render_table(table), header) == table


cell = (
    st.text(
        alphabet=st.characters(blacklist_characters="|", blacklist_categories=("Cs",)),
        max_size=12,
    )
    .map(str.strip)
    .filter(lambda s: len(s.splitlines()) <= 1)
)


@given(
    header=st.lists(cell.filter(bool), min_size=1, max_size=4, unique_by=str.lower),
    body=st.lists(st.integers(0, 5), min_size=0, max_size=5),
)
def test_round_trip_random_tables(header, body):
    rows = tuple(
        tuple(f"r{i}c{j}" for j in range(len(header))) for i in body
    )
    table = ParsedTable(header=tuple(header), rows=rows)
    assert parse_table(render_table(table), header) == table


def test_render_table_rejects_pipes_in_cells():
    with pytest.raises(ValueError):
        render_table(ParsedTable(header=("a|b",), rows=()))


def test_parsed_table_validates_arity():
    with pytest.raises(ValueError):
        ParsedTable(header=("a", "b"), rows=(("only",),))


# -- backend config --


def test_http_chat_requires_endpoint_and_model():
    with pytest.raises(ValueError):
        BackendConfig(id="x", kind=BackendKind.HTTP_CHAT)
    BackendConfig(
        id="x", kind=BackendKind.HTTP_CHAT, endpoint="http://api", model_name="m"
    )


def test_heuristic_needs_neither(heuristic_backend):
    assert heuristic_backend.endpoint is None


# -- complete: heuristic --


def test_heuristic_eval_completion_is_deterministic(heuristic_backend):
    prompt = "\n".join(
        [
            "Instruction:",
            prompts.EVALUATION_INSTRUCTION,
            "",
            "Input:",
            BROWSER_REQ,
        ]
    )
    first = complete(heuristic_backend, prompt)
    second = complete(heuristic_backend, prompt)
    assert first.text == second.text
    table = parse_table(first.text, EVAL_HEADER)
    verdicts = {row[0]: row[2] for row in table.rows}
    assert verdicts["Unambiguous"] == "No"
    assert verdicts["Singular"] == "No"
    assert verdicts["Verifiable"] == "No"


def test_empty_prompt_rejected(heuristic_backend):
    with pytest.raises(ValueError):
        complete(heuristic_backend, "   ")


def test_missing_auth_secret_fails_before_network(monkeypatch):
    monkeypatch.delenv("REQSMITH_TEST_KEY", raising=False)

    def explode(request):  # any network use is a bug
        raise AssertionError("transport must not be touched")

    config = BackendConfig(
        id="remote",
        kind=BackendKind.HTTP_CHAT,
        endpoint="http://api.example/chat",
        model_name="m1",
        auth_env_var="REQSMITH_TEST_KEY",
    )
    with pytest.raises(ConfigurationError):
        complete(config, "hello", transport=httpx.MockTransport(explode))


# -- complete: http --


def _remote_config(**overrides):
    base = dict(
        id="remote",
        kind=BackendKind.HTTP_CHAT,
        endpoint="http://api.example/chat",
        model_name="m1",
        auth_env_var="REQSMITH_TEST_KEY",
        max_retries=2,
        request_timeout=5,
    )
    base.update(overrides)
    return BackendConfig(**base)


def test_http_chat_success_and_request_shape(monkeypatch):
    monkeypatch.setenv("REQSMITH_TEST_KEY", "sk-test")
    seen = {}

    def handler(request):
        seen["json"] = request.read()
        seen["auth"] = request.headers.get("authorization")
        import json

        body = json.loads(seen["json"])
        seen["body"] = body
        return httpx.Response(
            200, json={"choices": [{"message": {"content": "fine."}}]}
        )

    completion = complete(
        _remote_config(), "judge this", transport=httpx.MockTransport(handler)
    )
    assert completion.text == "fine."
    assert completion.attempt == 1
    assert seen["auth"] == "Bearer sk-test"
    assert seen["body"]["model"] == "m1"
    assert seen["body"]["messages"] == [{"role": "user", "content": "judge this"}]
    assert seen["body"]["temperature"] == 0  # defaults to 0 for http_chat


def test_http_chat_retries_transport_failures(monkeypatch):
    monkeypatch.setenv("REQSMITH_TEST_KEY", "sk-test")
    calls = {"n": 0}

    def handler(request):
        calls["n"] += 1
        if calls["n"] == 1:
            raise httpx.ConnectError("boom")
        return httpx.Response(200, json={"choices": [{"message": {"content": "ok"}}]})

    completion = complete(
        _remote_config(), "x", transport=httpx.MockTransport(handler)
    )
    assert completion.attempt == 2
    assert calls["n"] == 2


def test_http_chat_unreachable_after_retries(monkeypatch):
    monkeypatch.setenv("REQSMITH_TEST_KEY", "sk-test")

    def handler(request):
        raise httpx.ConnectError("down")

    with pytest.raises(BackendUnreachableError):
        complete(_remote_config(max_retries=1), "x", transport=httpx.MockTransport(handler))


def test_http_chat_provider_error_carries_status(monkeypatch):
    monkeypatch.setenv("REQSMITH_TEST_KEY", "sk-test")

    def handler(request):
        return httpx.Response(500, text="server on fire")

    with pytest.raises(ProviderError) as exc_info:
        complete(_remote_config(), "x", transport=httpx.MockTransport(handler))
    assert exc_info.value.status_code == 500
    assert "fire" in exc_info.value.body_excerpt


def test_http_chat_custom_wire_mapping(monkeypatch):
    monkeypatch.setenv("REQSMITH_TEST_KEY", "sk-test")

    def handler(request):
        import json

        body = json.loads(request.read())
        assert body["engine"] == "m1"
        assert body["conversation"]["turns"][0]["content"] == "x"
        return httpx.Response(200, json={"output": {"text": "mapped"}})

    config = _remote_config(
        wire=WireFormat(
            model_path="engine",
            messages_path="conversation.turns",
            temperature_path="sampling.temperature",
            response_text_path="output.text",
        )
    )
    completion = complete(config, "x", transport=httpx.MockTransport(handler))
    assert completion.text == "mapped"


# -- complete_table format recovery --


def test_complete_table_retries_with_reminder(heuristic_backend, eval_table_text):
    responder = ScriptedResponder("not a table at all", eval_table_text)
    spec = PromptSpec(
        instruction="anything",
        output_format=prompts.EVALUATION_FORMAT,
    )
    table, completion = complete_table(
        heuristic_backend, spec, EVAL_HEADER, engine=responder
    )
    assert len(table.rows) == 9
    assert len(responder.prompts) == 2
    assert "Respond with the table only." in responder.prompts[1]
    assert prompts.EVALUATION_FORMAT in responder.prompts[1]


def test_complete_table_gives_up_with_raw_completion(heuristic_backend):
    responder = ScriptedResponder("junk", "more junk", "final junk")
    spec = PromptSpec(instruction="anything", output_format="a table")
    with pytest.raises(TableParseError) as exc_info:
        complete_table(heuristic_backend, spec, EVAL_HEADER, engine=responder)
    assert exc_info.value.raw_completion == "final junk"
    assert not responder.responses  # exactly three attempts
