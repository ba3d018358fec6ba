from __future__ import annotations

import pytest

from reqsmith.gateway import BackendConfig, BackendKind

# The three sample requirements the bundled baseline corpus records.
INVENTORY_REQ = (
    "The system must allow the inventory manager to generate a list of "
    "missing products."
)
BROWSER_REQ = (
    "The system will have a user-friendly interface and support all common "
    "browsers."
)
CANCEL_REQ = "A customer can cancel an order if he has not yet received it."

# The recorded framework rewrite of the inventory requirement.
IMPROVED_INVENTORY_REQ = (
    "When the inventory manager or authorized personnel request a missing "
    "products list, the system shall generate a report that includes "
    "out-of-stock items and products below a predefined threshold, providing "
    "details such as product name, current quantity, supplier, and "
    "recommended reorder date. The list shall be available in PDF and CSV "
    "formats, as well as an on-screen display, and shall support filtering "
    "by category, supplier, and stock status, with sorting by priority."
)

# A recorded evaluator verdict table for the inventory requirement.
RECORDED_EVAL_ROWS = [
    ("Necessary", "Essential for inventory management", "Yes"),
    ("Appropriate", "At the correct level for system requirements", "Yes"),
    ("Unambiguous", "Clearly defines the function", "No"),
    ("Complete", "Contains all necessary information", "No"),
    ("Singular", "Addresses only one function", "Yes"),
    ("Feasible", "Achievable with existing technology", "Yes"),
    ("Verifiable", "Testable via inspection or system validation", "No"),
    ("Correct", "Accurately describes the needed function", "Yes"),
    ("Conforming", "Follows standard requirement guidelines", "No"),
]

# A recorded question table for the same requirement's gaps.
RECORDED_QUESTION_ROWS = [
    (
        "Unambiguous",
        "What format should the generated list follow (e.g., PDF, CSV, "
        "on-screen display)?",
    ),
    ("Complete", "Should the system allow filtering or sorting the missing product list?"),
    ("Verifiable", "What criteria will be used to confirm the list is correctly generated?"),
]


def as_pipe_table(header, rows, separator=True):
    lines = ["| " + " | ".join(header) + " |"]
    if separator:
        lines.append("| " + " | ".join("---" for _ in header) + " |")
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines)


class ScriptedResponder:
    """Replays canned responses in order; records the prompts it saw."""

    def __init__(self, *responses):
        self.responses = list(responses)
        self.prompts: list[str] = []

    def respond(self, prompt: str) -> str:
        self.prompts.append(prompt)
        if not self.responses:
            raise AssertionError("scripted responder ran out of responses")
        outcome = self.responses.pop(0)
        if isinstance(outcome, Exception):
            raise outcome
        if callable(outcome):
            return outcome(prompt)
        return outcome


@pytest.fixture
def heuristic_backend():
    return BackendConfig(id="offline", kind=BackendKind.HEURISTIC)


@pytest.fixture
def eval_table_text():
    return as_pipe_table(
        ("Feature Name", "Feature Detail", "Fulfilled (yes/no)"), RECORDED_EVAL_ROWS
    )


@pytest.fixture
def question_table_text():
    return as_pipe_table(
        ("Feature Name", "Suggested Questions"), RECORDED_QUESTION_ROWS
    )
