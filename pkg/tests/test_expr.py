"""Expression language: grammar, printer fixpoint, protected evaluation."""

import numpy as np
import pytest

from fafsp.expr import (ACCESSORS, Acc, Bin, Num, NodeLimitExceeded,
                        ParseError, UnknownAccessor, evaluate, parse, to_source)


def test_single_accessor():
    prog = parse("due")
    assert prog.root == Acc("due")
    assert prog.n_nodes == 1


def test_parse_error_position_and_expected():
    with pytest.raises(ParseError) as e:
        parse("min(due,")
    assert e.value.pos == 8
    assert e.value.expected


def test_unknown_accessor():
    with pytest.raises(UnknownAccessor) as e:
        parse("foo + pt")
    assert e.value.name == "foo"
    assert "due" in e.value.expected


def test_node_limit():
    src = "1" + " + 1" * 600
    with pytest.raises(NodeLimitExceeded):
        parse(src)


def test_trailing_input_rejected():
    with pytest.raises(ParseError, match="trailing"):
        parse("due due")


def test_accessor_is_not_callable():
    with pytest.raises(ParseError):
        parse("due(1)")


def test_arity_errors():
    with pytest.raises(ParseError):
        parse("abs(1, 2)")
    with pytest.raises(ParseError):
        parse("min(1)")
    with pytest.raises(ParseError):      # if() wants a comparison first
        parse("if(1, 2, 3)")


def test_precedence_and_associativity():
    cols = {}
    assert evaluate(parse("2 + 3*4"), cols, 1)[0] == 14.0
    assert evaluate(parse("2 - 3 - 1"), cols, 1)[0] == -2.0
    assert evaluate(parse("-2*3"), cols, 1)[0] == -6.0
    assert evaluate(parse("(2 - 3) - 1"), cols, 1)[0] == -2.0
    assert evaluate(parse("2 - (3 - 1)"), cols, 1)[0] == 0.0


@pytest.mark.parametrize("src", [
    "due - now + 0.5*pt + setup",
    "min(due, arrival + work_rem) + pt",
    "if(slack < 0, due + pt, slack*2 - setup)",
    "-(due + pt)/(1 + queue)",
    "--due",
    "sqrt(abs(slack)) + exp(0 - wait/10)",
    "max(pt, setup, 1.5)",
    "due*1000000 + max(avail, now) + setup + pt",
])
def test_print_parse_fixpoint(src):
    prog = parse(src)
    printed = to_source(prog)
    again = parse(printed)
    assert again.root == prog.root
    assert to_source(again) == printed          # printing is idempotent


def test_round_trip_preserves_shape_not_just_value():
    # right-nested addition must not silently re-associate
    prog = parse("1 + (2 + 3)")
    assert parse(to_source(prog)).root == prog.root
    assert prog.root == Bin("+", Num(1.0), Bin("+", Num(2.0), Num(3.0)))


def test_protected_division():
    cols = {"due": np.array([10.0]), "util": np.array([0.0])}
    assert evaluate(parse("due/util"), cols, 1)[0] == 0.0
    assert evaluate(parse("1/0"), cols, 1)[0] == 0.0


def test_protected_log_and_sqrt():
    assert evaluate(parse("log(0)"), {}, 1)[0] == 0.0
    assert evaluate(parse("log(0 - 3)"), {}, 1)[0] == 0.0
    assert evaluate(parse("sqrt(0 - 4)"), {}, 1)[0] == 0.0
    assert evaluate(parse("sqrt(9)"), {}, 1)[0] == 3.0


def test_overflow_passes_through():
    out = evaluate(parse("exp(exp(exp(9)))"), {}, 1)
    assert np.isinf(out[0])


def test_if_vectorized():
    cols = {"slack": np.array([-1.0, 2.0, 0.0])}
    out = evaluate(parse("if(slack < 0, 100, slack)"), cols, 3)
    assert out.tolist() == [100.0, 2.0, 0.0]


def test_vector_evaluation_matches_scalar():
    src = "due - now + 0.5*pt + setup"
    cols = {
        "due": np.array([10.0, 20.0]),
        "now": np.array([3.0, 3.0]),
        "pt": np.array([4.0, 2.0]),
        "setup": np.array([1.0, 0.0]),
    }
    out = evaluate(parse(src), cols, 2)
    assert out.tolist() == [10 - 3 + 2 + 1, 20 - 3 + 1 + 0]


def test_number_formats():
    assert evaluate(parse("1.5e2"), {}, 1)[0] == 150.0
    assert evaluate(parse("2E-1"), {}, 1)[0] == pytest.approx(0.2)


def test_every_accessor_parses():
    for name in ACCESSORS:
        assert parse(name).root == Acc(name)
