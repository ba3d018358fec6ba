from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from reqsmith.prompting import (
    ExampleShot,
    PromptSpec,
    PromptTemplate,
    ShotMode,
    load_templates,
    placeholders_in,
    render,
    shot_mode,
    split_sections,
)

from conftest import INVENTORY_REQ


def test_render_three_sections_in_order():
    spec = PromptSpec(
        instruction="Verify that the requirement meets these characteristics.",
        input=INVENTORY_REQ,
        output_format=(
            "Your answer should be only a table with the columns "
            "[Feature Name, Feature Detail, Fulfilled (yes/no)]"
        ),
    )
    text = render(spec)
    i = text.index("Instruction:")
    j = text.index("Input:")
    k = text.index("Output format:")
    assert i < j < k
    assert "Context:" not in text
    assert INVENTORY_REQ in text


def test_render_instruction_only_is_label_plus_text():
    spec = PromptSpec(instruction="Do the thing.")
    assert render(spec) == "Instruction:\nDo the thing."


def test_render_two_shots_between_context_and_input():
    spec = PromptSpec(
        instruction="inst",
        context="CTX",
        input="FINAL QUESTION",
        shots=(
            ExampleShot("DEMO ONE", "ANSWER ONE"),
            ExampleShot("DEMO TWO", "ANSWER TWO"),
        ),
    )
    text = render(spec)
    assert text.count("Example") == 4  # two input labels, two output labels
    assert text.index("CTX") < text.index("DEMO ONE") < text.index("FINAL QUESTION")
    assert text.index("DEMO ONE") < text.index("ANSWER ONE") < text.index("DEMO TWO")


def test_render_is_deterministic():
    spec = PromptSpec(instruction="a", context="b", input="c")
    assert render(spec) == render(spec)


def test_render_never_reorders_sections():
    spec = PromptSpec(instruction="a", context="b", input="c", output_format="d")
    text = render(spec)
    order = [
        text.index("Instruction:"),
        text.index("Context:"),
        text.index("Input:"),
        text.index("Output format:"),
    ]
    assert order == sorted(order)


def test_shot_mode_classification():
    zero = PromptSpec(instruction="x")
    one = PromptSpec(instruction="x", shots=(ExampleShot("a", "b"),))
    five = PromptSpec(instruction="x", shots=tuple(ExampleShot(f"a{i}", "b") for i in range(5)))
    assert shot_mode(zero) is ShotMode.ZERO_SHOT
    assert shot_mode(one) is ShotMode.ONE_SHOT
    assert shot_mode(five) is ShotMode.FEW_SHOT


def test_empty_instruction_rejected():
    with pytest.raises(ValueError):
        PromptSpec(instruction="  ")


def test_empty_shot_rejected():
    with pytest.raises(ValueError):
        ExampleShot("", "out")


_LABELS = {"Instruction:", "Context:", "Input:", "Output format:"}

section_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="\r"),
    min_size=1,
    max_size=40,
).filter(
    lambda s: s.strip()
    and s == s.strip()
    and s.split("\n") == s.splitlines()  # no exotic line separators
    and not any(line in _LABELS or line.startswith("Example ") for line in s.splitlines())
)


@given(
    st.tuples(section_text, section_text),
    st.tuples(
        st.none() | section_text,
        st.none() | section_text,
    ),
)
def test_render_distinguishes_differing_specs(instructions, extras):
    inst_a, inst_b = instructions
    context, input_ = extras
    spec_a = PromptSpec(instruction=inst_a, context=context, input=input_)
    spec_b = PromptSpec(instruction=inst_b, context=context, input=input_)
    if inst_a != inst_b:
        assert render(spec_a) != render(spec_b)
    # presence differences also change the output
    spec_c = PromptSpec(instruction=inst_a, context=context, input=None)
    if input_ is not None:
        assert render(spec_a) != render(spec_c)


@given(section_text, st.none() | section_text, st.none() | section_text)
def test_split_sections_inverts_render(instruction, context, input_):
    spec = PromptSpec(instruction=instruction, context=context, input=input_)
    sections = split_sections(render(spec))
    assert sections.instruction == instruction
    assert sections.context == context
    assert sections.input == input_


def test_split_sections_recovers_shots():
    spec = PromptSpec(
        instruction="inst",
        shots=(ExampleShot("first in", "first out"), ExampleShot("second in", "second out")),
    )
    sections = split_sections(render(spec))
    assert sections.shots == [("first in", "first out"), ("second in", "second out")]


def test_template_renders_with_all_placeholders():
    template = PromptTemplate(
        name="greet", body="Hello {name}, rate {thing}.", required_placeholders={"name", "thing"}
    )
    assert template.render(name="a", thing="b") == "Hello a, rate b."


def test_template_missing_placeholder_fails():
    template = PromptTemplate(
        name="greet", body="Hello {name}.", required_placeholders={"name"}
    )
    with pytest.raises(KeyError):
        template.render()


def test_placeholders_in_finds_names():
    assert placeholders_in("a {x} b {y} {x}") == frozenset({"x", "y"})


def test_load_templates_from_directory(tmp_path):
    (tmp_path / "judge.txt").write_text("Judge {req} now.", encoding="utf-8")
    (tmp_path / "ask.txt").write_text("Ask about {req} and {gap}.", encoding="utf-8")
    templates = load_templates(tmp_path)
    assert set(templates) == {"judge", "ask"}
    assert templates["ask"].required_placeholders == {"req", "gap"}
    assert templates["judge"].render(req="R") == "Judge R now."
