from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from mabex.sml import (
    AlternativeStep,
    MessageStep,
    ParseError,
    parse_expression,
    parse_pattern,
    parse_specification,
    pretty_print,
)
from mabex.sml.ast import Scenario, ScenarioSpec, iter_steps
from mabex.sml.exprs import And, Contains, Eq, InstanceOf, IsEmpty, Lit, Not, Or, PathRef

EXPECTED_NAMES = [
    "CarRegistersAtObstacle",
    "CarEnteringAllowedDefault",
    "CarEnteringDisallowedWhenCarPassing",
    "EnteringDisallowedForOtherPriorityVehicle",
    "SetPriorityForEmergencyVehicle",
]


class TestCaseStudySpec:
    def test_scenario_names(self, listing_spec):
        assert [s.name for s in listing_spec.scenarios] == EXPECTED_NAMES

    def test_single_bindings_clause(self, listing_spec):
        with_bindings = [s for s in listing_spec.scenarios if s.bindings]
        assert len(with_bindings) == 1
        assert with_bindings[0].bindings == (("oc", ("cp", "obstacleCtrl")),)

    def test_constraint_counts(self, listing_spec):
        interrupt = [
            c for s in listing_spec.scenarios for c in s.constraints if c.kind == "interrupt"
        ]
        forbidden = [
            c
            for s in listing_spec.scenarios
            for _, step in iter_steps(s)
            if isinstance(step, AlternativeStep)
            for c in step.constraints
            if c.kind == "forbidden"
        ]
        assert len(interrupt) == 1
        assert len(forbidden) == 2

    def test_five_annotations_attached_verbatim(self, listing_spec):
        annotations = [
            step.annotation
            for s in listing_spec.scenarios
            for _, step in iter_steps(s)
            if step.annotation is not None
        ]
        assert len(annotations) == 5
        assert (
            "entering is allowed because there is no indication to disallow it."
            in annotations
        )
        assert (
            "car registered is a priority vehicle because it is an emergency vehicle."
            in annotations
        )

    def test_modalities(self, listing_spec):
        register = listing_spec.scenarios[0].body[1]
        assert isinstance(register, MessageStep)
        assert register.strict and register.urgency == "requested"
        priority_add = listing_spec.scenarios[4].body[1].body[0]
        assert priority_add.strict and priority_add.urgency == "committed"
        assert priority_add.receiver_path == ("oc", "registeredPriorityVehicles")
        assert priority_add.message == "add"

    def test_guard_structure(self, listing_spec):
        guard = listing_spec.scenarios[2].body[1].guard
        assert isinstance(guard, Or)
        assert len(guard.operands) == 2
        assert all(isinstance(op, And) for op in guard.operands)

    def test_round_trip(self, listing_spec):
        assert parse_specification(pretty_print(listing_spec)) == listing_spec


def test_empty_input_gives_empty_spec():
    assert parse_specification("") == ScenarioSpec(())


def test_unbalanced_brace_reports_expected_set():
    with pytest.raises(ParseError) as excinfo:
        parse_specification("guarantee scenario X {")
    assert "}" in excinfo.value.expected


def test_unknown_modality_keyword():
    with pytest.raises(ParseError):
        parse_specification("guarantee scenario X { urgent a -> b.m() }")


def test_duplicate_scenario_names_rejected():
    text = "guarantee scenario X { a -> b.m() }\nguarantee scenario X { a -> b.m() }"
    with pytest.raises(ParseError, match="duplicate scenario name"):
        parse_specification(text)


def test_dangling_annotation_rejected():
    text = "guarantee scenario X { a -> b.m()\n// @EX: dangling\n}"
    with pytest.raises(ParseError, match="annotation"):
        parse_specification(text)


def test_annotation_attaches_to_alternative():
    text = (
        "guarantee scenario X { a -> b.m()\n"
        "// @EX: guarded branch\n"
        "alternative [true] { a -> b.n() }\n"
        "}"
    )
    spec = parse_specification(text)
    alt = spec.scenarios[0].body[1]
    assert isinstance(alt, AlternativeStep)
    assert alt.annotation == "guarded branch"


def test_plain_comments_are_ignored():
    spec = parse_specification("// just a note\nguarantee scenario X { a -> b.m() }")
    assert spec.scenarios[0].body[0].annotation is None


def test_parsing_is_pure(listing_text):
    assert parse_specification(listing_text) == parse_specification(listing_text)


class TestExpressions:
    def test_and_binds_tighter_than_or(self):
        expr = parse_expression("a == L1 && x.isEmpty() || b == L2")
        assert isinstance(expr, Or)
        assert isinstance(expr.operands[0], And)

    def test_not_and_predicates(self):
        expr = parse_expression("!oc.passingL2.isEmpty()")
        assert expr == Not(IsEmpty(PathRef(("oc", "passingL2"))))

    def test_contains_and_instanceof(self):
        expr = parse_expression("r.coll.contains(car) && car instanceOf EmergencyVehicle")
        assert expr == And(
            (
                Contains(PathRef(("r", "coll")), PathRef(("car",))),
                InstanceOf(PathRef(("car",)), "EmergencyVehicle"),
            )
        )

    def test_literals(self):
        assert parse_expression("x == 3") == Eq(PathRef(("x",)), Lit(3))
        assert parse_expression('x == "hi"') == Eq(PathRef(("x",)), Lit("hi"))
        assert parse_expression("true") == Lit(True)

    def test_unknown_predicate_rejected(self):
        with pytest.raises(ParseError, match="unknown predicate"):
            parse_expression("a.b.frobnicate()")


class TestPatterns:
    def test_full_pattern(self):
        p = parse_pattern("oc -> c1.enteringAllowed()")
        assert (p.sender, p.receiver, p.message, p.args) == ("oc", "c1", "enteringAllowed", ())

    def test_wildcards_and_bare_message(self):
        p = parse_pattern("*.enteringDisallowed")
        assert p.sender == "*" and p.receiver == "*" and p.args is None
        q = parse_pattern("enteringDisallowed")
        assert q.message == "enteringDisallowed"

    def test_collection_message(self):
        p = parse_pattern("oc -> oc.registeredPriorityVehicles.add(c3)")
        assert p.receiver == "oc"
        assert p.message == "registeredPriorityVehicles.add"
        assert p.args == ("c3",)


# -- generated round-trip property ------------------------------------------------

_IDENT = st.from_regex(r"[a-z][a-zA-Z0-9_]{0,6}", fullmatch=True).filter(
    lambda s: s
    not in {
        "guarantee",
        "assumption",
        "scenario",
        "bindings",
        "constraints",
        "alternative",
        "strict",
        "requested",
        "committed",
        "forbidden",
        "interrupt",
        "instanceOf",
        "true",
        "false",
        "isEmpty",
        "contains",
        "node",
    }
)


def _exprs(depth: int):
    path = st.lists(_IDENT, min_size=1, max_size=3).map(lambda xs: PathRef(tuple(xs)))
    leaf = st.one_of(
        path,
        st.booleans().map(Lit),
        st.integers(min_value=0, max_value=99).map(Lit),
        path.map(lambda p: IsEmpty(PathRef(p.segments + ("coll",)))),
    )
    if depth == 0:
        return leaf
    sub = _exprs(depth - 1)
    return st.one_of(
        leaf,
        sub.map(Not),
        st.tuples(sub, sub).map(lambda t: And(t)),
        st.tuples(sub, sub).map(lambda t: Or(t)),
        st.tuples(path, sub).map(lambda t: Eq(*t)),
        path.map(lambda p: InstanceOf(p, "Klass")),
        st.tuples(path, sub).map(lambda t: Contains(PathRef(t[0].segments + ("coll",)), t[1])),
    )


def _message_steps():
    return st.builds(
        MessageStep,
        sender=_IDENT,
        receiver_path=st.lists(_IDENT, min_size=1, max_size=2).map(tuple),
        message=_IDENT,
        args=st.lists(_exprs(0), max_size=2).map(tuple),
        strict=st.booleans(),
        urgency=st.sampled_from(["none", "requested", "committed"]),
        annotation=st.one_of(st.none(), st.just("a fragment because of a reason.")),
    )


def _steps(depth: int):
    if depth == 0:
        return _message_steps()
    from mabex.sml.ast import Constraint

    constraints = st.lists(
        st.builds(
            Constraint,
            kind=st.sampled_from(["forbidden", "interrupt"]),
            sender=_IDENT,
            receiver_path=st.lists(_IDENT, min_size=1, max_size=2).map(tuple),
            message=_IDENT,
            args=st.just(()),
        ),
        max_size=2,
    ).map(tuple)
    alternative = st.builds(
        AlternativeStep,
        guard=_exprs(1),
        body=st.lists(_steps(depth - 1), min_size=1, max_size=3).map(tuple),
        constraints=constraints,
        annotation=st.none(),
    )
    return st.one_of(_message_steps(), alternative)


@st.composite
def _specs(draw):
    n = draw(st.integers(min_value=0, max_value=3))
    scenarios = []
    for i in range(n):
        from mabex.sml.ast import Constraint

        scenarios.append(
            Scenario(
                kind=draw(st.sampled_from(["guarantee", "assumption"])),
                name=f"S{i}_{draw(_IDENT)}",
                bindings=draw(
                    st.lists(
                        st.tuples(_IDENT, st.lists(_IDENT, min_size=1, max_size=2).map(tuple)),
                        max_size=2,
                    ).map(tuple)
                ),
                body=draw(st.lists(_steps(2), min_size=1, max_size=4).map(tuple)),
                constraints=draw(
                    st.lists(
                        st.builds(
                            Constraint,
                            kind=st.sampled_from(["forbidden", "interrupt"]),
                            sender=_IDENT,
                            receiver_path=st.lists(_IDENT, min_size=1, max_size=2).map(tuple),
                            message=_IDENT,
                            args=st.just(()),
                        ),
                        max_size=2,
                    ).map(tuple)
                ),
            )
        )
    return ScenarioSpec(tuple(scenarios))


@settings(max_examples=60, deadline=None)
@given(_specs())
def test_pretty_print_round_trip(spec):
    printed = pretty_print(spec)
    assert parse_specification(printed) == spec
