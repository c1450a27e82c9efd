import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nhgeo.errors import ExprEvalError, ExprSyntaxError
from nhgeo.expr import (
    DualNumber,
    add,
    compile_jet,
    const,
    eval_dual,
    evaluate,
    gradient,
    mul,
    parse,
    to_source,
    var,
)

DIM = 3

# -- random expressions on a domain where every node is defined ---------------

_leaf = st.one_of(
    st.sampled_from([f"x{i + 1}" for i in range(DIM)]),
    st.integers(-3, 3).map(str),
    st.floats(-2.5, 2.5, allow_nan=False).map(lambda v: repr(round(v, 3))),
)


def _extend(children):
    return st.one_of(
        st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        st.tuples(st.sampled_from(["sin", "cos"]), children).map(lambda t: f"{t[0]}({t[1]})"),
        children.map(lambda a: f"exp(sin({a}))"),
        children.map(lambda a: f"sqrt(1 + ({a})^2)"),
        st.tuples(children, children).map(lambda t: f"({t[0]}) / (2 + cos({t[1]}))"),
        st.tuples(children, st.integers(0, 3)).map(lambda t: f"({t[0]})^{t[1]}"),
        children.map(lambda a: f"(1 + ({a})^2)^-1"),
        children.map(lambda a: f"-({a})"),
    )


expressions = st.recursive(_leaf, _extend, max_leaves=8)
points = st.lists(st.floats(-1.5, 1.5, allow_nan=False), min_size=DIM, max_size=DIM)


def fd_gradient(e, x, h=1e-5):
    """Independent oracle: fourth-order central differences of plain evaluation."""
    out = np.empty(len(x))
    for d in range(len(x)):
        def f(s):
            y = list(x)
            y[d] += s
            return evaluate(e, y)

        out[d] = (8 * (f(h) - f(-h)) - (f(2 * h) - f(-2 * h))) / (12 * h)
    return out


# -- examples -------------------------------------------------------------------


def test_parse_examples():
    assert evaluate(parse("x1*sin(x3) + 2", 3), [2, 0, 0]) == 2.0
    assert evaluate(parse("x2", 5), [9, 7, 1, 1, 1]) == 7.0
    assert evaluate(parse("-x3", 6), [1, 2, 3, 4, 5, 6]) == -3.0


def test_eval_examples():
    assert evaluate(parse("7", 2), [123.0, -4.0]) == 7.0
    assert evaluate(parse("exp(x1)", 1), [0.0]) == 1.0
    assert evaluate(parse("x1^2 + x3^2 + 1", 5), [1, 0, 2, 0, 0]) == 6.0


def test_eval_dual_examples():
    d = eval_dual(parse("x1*x2", 2), [3, 5], 0)
    assert (d.value, d.derivative) == (15.0, 5.0)
    d = eval_dual(parse("sin(x1)", 1), [0.0], 0)
    assert (d.value, d.derivative) == (0.0, 1.0)
    x = [0.3, -1.2, 2.5]
    d = eval_dual(parse("-x3", 3), x, 2)
    assert d.value == -2.5 and d.derivative == -1.0
    assert np.allclose(fd_gradient(parse("-x3", 3), x), [0, 0, -1], atol=1e-8)


def test_operator_precedence():
    assert evaluate(parse("-x1^2", 1), [3.0]) == -9.0
    assert evaluate(parse("2 + 3*x1 - 4/x2", 2), [2.0, 8.0]) == 7.5
    assert evaluate(parse("x1^-2", 1), [2.0]) == 0.25
    assert evaluate(parse("1e-3*x1", 1), [2.0]) == 0.002
    assert evaluate(parse(".5 + 3.", 1), [0.0]) == 3.5
    assert evaluate(parse("x1 - x2 - x3", 3), [1, 2, 3]) == -4.0
    assert evaluate(parse("x1 / x2 / x3", 3), [8, 2, 2]) == 2.0


def test_programmatic_builders():
    e = add(mul(const(2.0), var(0)), var(1))
    assert evaluate(e, [3.0, 4.0]) == 10.0
    assert e.variables() == {0, 1}
    assert not e.is_constant() and const(1.0).is_constant()


# -- properties -------------------------------------------------------------------


@settings(max_examples=1000, deadline=None)
@given(expressions, points)
def test_dual_matches_finite_differences(src, x):
    e = parse(src, DIM)
    g = gradient(e, x)
    ref = fd_gradient(e, x)
    scale = 1.0 + np.abs(ref).max() + abs(evaluate(e, x))
    assert np.abs(g - ref).max() <= 1e-6 * scale


@settings(max_examples=300, deadline=None)
@given(st.lists(expressions, min_size=1, max_size=4), points)
def test_compiled_jet_matches_reference(srcs, x):
    nodes = [parse(s, DIM) for s in srcs]
    vals, grads = compile_jet(nodes, DIM)(np.array(x))
    for k, e in enumerate(nodes):
        v = evaluate(e, x)
        g = gradient(e, x)
        assert vals[k] == pytest.approx(v, rel=1e-12, abs=1e-12)
        assert np.allclose(grads[k], g, rtol=1e-12, atol=1e-12)


@settings(max_examples=300, deadline=None)
@given(expressions, points)
def test_source_round_trip(src, x):
    e = parse(src, DIM)
    text = to_source(e)
    again = parse(text, DIM)
    assert to_source(again) == text
    assert evaluate(again, x) == evaluate(e, x)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 5), st.floats(-5, 5))
def test_dual_arithmetic(a, da, b, db):
    u, v = DualNumber(a, da), DualNumber(b, db)
    assert (u * v).derivative == pytest.approx(da * b + a * db, abs=1e-12)
    assert (u / v).derivative == pytest.approx((da * b - a * db) / b**2, rel=1e-12, abs=1e-12)
    assert (u - v).value == a - b
    assert u.exp().derivative == pytest.approx(math.exp(a) * da, rel=1e-12, abs=1e-300)


# -- errors -------------------------------------------------------------------------


@pytest.mark.parametrize(
    "src, pos",
    [
        ("x1 +", 4),
        ("2*(x1", 5),
        ("x4", 0),
        ("x1^1.5", 3),
        ("x1^x2", 3),
        ("foo(x1)", 0),
        ("x1 x2", 3),
        ("sin x1", 4),
        ("2^3^2", 3),
        ("", 0),
    ],
)
def test_syntax_errors_report_position(src, pos):
    with pytest.raises(ExprSyntaxError) as info:
        parse(src, 3)
    assert info.value.position == pos
    assert f"position {pos}" in str(info.value)


@pytest.mark.parametrize(
    "src, x, msg",
    [
        ("1/x1", [0.0], "division by zero"),
        ("x1^-1", [0.0], "division by zero"),
        ("sqrt(x1)", [-1.0], "sqrt domain"),
        ("exp(x1)", [1000.0], "exp overflow"),
    ],
)
def test_evaluation_errors_on_every_path(src, x, msg):
    e = parse(src, 1)
    jet = compile_jet([e], 1)
    for call in (lambda: evaluate(e, x), lambda: eval_dual(e, x, 0), lambda: jet(np.array(x))):
        with pytest.raises(ExprEvalError, match=msg):
            call()


def test_sqrt_derivative_at_zero_is_an_error():
    e = parse("sqrt(x1)", 1)
    assert evaluate(e, [0.0]) == 0.0
    with pytest.raises(ExprEvalError):
        eval_dual(e, [0.0], 0)


def test_eval_dual_direction_checked():
    with pytest.raises(ValueError):
        eval_dual(parse("x1", 2), [0.0, 0.0], 2)
