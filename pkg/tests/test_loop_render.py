from __future__ import annotations

import pytest

from mabex.loop import RecipientModel, merge_clauses, render_explanation
from mabex.loop.records import Cause, ExplanationIR

FIG2_IR = ExplanationIR(
    kind="event",
    subject_clause="entering is disallowed",
    causes=(
        Cause(
            reason_clause="other cars are passing the obstacle in the opposite direction.",
            subject_clause="entering is disallowed",
            provenance="scenario CarEnteringDisallowedWhenCarPassing, step 1.0",
            support=(3,),
        ),
        Cause(
            reason_clause="a priority vehicle is registered for passing the obstacle.",
            subject_clause="entering is disallowed",
            provenance="scenario EnteringDisallowedForOtherPriorityVehicle, step 1.0",
            support=(3,),
        ),
    ),
)

SINGLE_IR = ExplanationIR(
    kind="event",
    subject_clause="entering is allowed",
    causes=(
        Cause(
            reason_clause="there is no indication to disallow it.",
            subject_clause="entering is allowed",
            provenance="scenario CarEnteringAllowedDefault, step 1",
            support=(3,),
        ),
    ),
)

END_USER = RecipientModel(recipient_id="u", audience="end_user")
ENGINEER = RecipientModel(recipient_id="e", audience="engineer")
MACHINE = RecipientModel(recipient_id="m", audience="machine", format="structured")


def test_two_causes_merge_into_the_reported_sentence():
    assert render_explanation(FIG2_IR, END_USER) == (
        "Entering is disallowed because other cars are passing the obstacle in "
        "the opposite direction and a priority vehicle is registered for "
        "passing the obstacle"
    )


def test_single_cause_keeps_fragment_verbatim():
    assert render_explanation(SINGLE_IR, END_USER) == (
        "Entering is allowed because there is no indication to disallow it."
    )


def test_engineer_gets_provenance_lines():
    text = render_explanation(FIG2_IR, ENGINEER)
    assert "CarEnteringDisallowedWhenCarPassing" in text
    assert "EnteringDisallowedForOtherPriorityVehicle" in text
    assert "history #3" in text
    assert text.splitlines()[0] == render_explanation(FIG2_IR, END_USER)


def test_end_user_output_never_contains_scenario_identifiers():
    text = render_explanation(FIG2_IR, END_USER)
    assert "CarEntering" not in text
    assert "scenario" not in text
    assert "#" not in text


def test_machine_recipient_gets_the_ir_verbatim():
    payload = render_explanation(FIG2_IR, MACHINE)
    assert payload == FIG2_IR.to_dict()
    assert payload["causes"][0]["provenance"].startswith("scenario")


def test_rendering_is_pure():
    first = render_explanation(FIG2_IR, END_USER)
    second = render_explanation(FIG2_IR, END_USER)
    assert first == second


def test_verbosity_depth_bounds_tree_causes():
    ir = ExplanationIR(
        kind="event",
        subject_clause="the light is red",
        causes=(
            Cause("the crossing is green.", "the light is red", "tree t, node a", depth=1),
            Cause("a pedestrian is crossing.", "the light is red", "tree t, node b", depth=2),
        ),
    )
    shallow = render_explanation(ir, RecipientModel(recipient_id="s", verbosity_depth=1))
    deep = render_explanation(ir, RecipientModel(recipient_id="d", verbosity_depth=2))
    assert shallow == "The light is red because the crossing is green."
    assert "pedestrian" in deep


def test_bare_clause_renders_as_standalone_sentence():
    ir = ExplanationIR(
        kind="event",
        subject_clause="register",
        causes=(
            Cause(
                reason_clause=(
                    "when approaching an obstacle, the car must register at the "
                    "obstacle control"
                ),
                subject_clause=None,
                provenance="scenario CarRegistersAtObstacle, step 1",
            ),
        ),
    )
    assert render_explanation(ir, END_USER) == (
        "When approaching an obstacle, the car must register at the obstacle control"
    )


def test_future_renderings():
    now = ExplanationIR(kind="future", subject_clause="p", steps=0, horizon=4,
                        causes=(Cause("it is executable now", None, "look-ahead"),))
    later = ExplanationIR(
        kind="future", subject_clause="p", steps=2, horizon=4,
        witness_labels=("a", "b"),
        causes=(Cause("it becomes executable after 2 environment steps", None, "look-ahead"),),
    )
    unknown = ExplanationIR(kind="future", subject_clause="p", steps=None, horizon=3,
                            causes=(Cause("no path", None, "look-ahead"),))
    assert render_explanation(now, END_USER) == "Possible now."
    assert render_explanation(later, END_USER) == (
        "Possible after 2 environment steps (for example: a, b)."
    )
    assert render_explanation(unknown, END_USER) == (
        "Not reachable within 3 environment steps."
    )


@pytest.mark.parametrize(
    "clauses,expected",
    [
        (["a."], "a."),
        (["a.", "b."], "a and b"),
        (["a", "b", "c."], "a and b and c"),
        ([], ""),
    ],
)
def test_merge_clause_rules(clauses, expected):
    assert merge_clauses(clauses) == expected


def test_recipient_model_rejects_zero_verbosity():
    with pytest.raises(ValueError):
        RecipientModel(recipient_id="x", verbosity_depth=0)
