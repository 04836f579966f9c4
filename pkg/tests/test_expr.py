import numpy as np
import pytest

from nullcone.errors import DomainError, ParseError, UnknownSymbolError
from nullcone.expr import FUNCTIONS, BinOp, Call, Neg, Num, Sym, constant_value, parse, serialize
from nullcone.jet import eval_value

CHART = ("t", "r", "theta", "phi")
PARAMS = ("M", "a")


def random_node(rng, depth=0):
    if depth > 3 or rng.random() < 0.25:
        k = rng.integers(3)
        if k == 0:
            return Num(float(rng.choice([0.5, 1.0, 2.0, 3.25, 1e-3, 12.0])))
        if k == 1:
            i = int(rng.integers(4))
            return Sym(CHART[i], "coord", i)
        i = int(rng.integers(2))
        return Sym(PARAMS[i], "param", i)
    k = rng.integers(6)
    if k == 0:
        return Neg(random_node(rng, depth + 1))
    if k == 1:
        return Call(str(rng.choice(FUNCTIONS)), random_node(rng, depth + 1))
    op = str(rng.choice(["+", "-", "*", "/", "^"]))
    return BinOp(op, random_node(rng, depth + 1), random_node(rng, depth + 1))


def test_round_trip_random_trees():
    rng = np.random.default_rng(7)
    for _ in range(200):
        node = random_node(rng)
        text = serialize(node)
        back = parse(text, CHART, PARAMS)
        assert back.root == node, text
        assert serialize(back) == text


@pytest.mark.parametrize(
    "source, expected",
    [
        ("2^3^2", 512.0),
        ("-2^2", -4.0),
        ("(-2)^2", 4.0),
        ("1 - 2 - 3", -4.0),
        ("8/4/2", 1.0),
        ("2*3 + 4", 10.0),
        ("sqrt(16) + exp(0)", 5.0),
        ("1e-3*1000", 1.0),
        ("2/3", 2 / 3),
    ],
)
def test_precedence_and_values(source, expected):
    assert constant_value(source) == pytest.approx(expected, rel=1e-15)


def test_parameters_and_coordinates():
    e = parse("1 - 2*M/r", CHART, PARAMS)
    assert eval_value(e, (0, 4, 1, 0), {"M": 1.0, "a": 0.0}) == pytest.approx(0.5)
    assert e.depends_on_coordinates()
    assert not parse("M*a", CHART, PARAMS).depends_on_coordinates()


@pytest.mark.parametrize(
    "source, position",
    [("1 +", 3), ("sin 2", 0), ("(1 + 2", 6), ("2 $ 3", 2), ("foo(1)", 0), ("1 2", 2)],
)
def test_parse_errors_carry_position(source, position):
    with pytest.raises(ParseError) as info:
        parse(source, CHART, PARAMS)
    assert info.value.position == position


def test_unknown_symbol():
    with pytest.raises(UnknownSymbolError) as info:
        parse("r + q", CHART, PARAMS)
    assert "q" in str(info.value)


def test_chart_validation():
    with pytest.raises(ValueError):
        parse("x", ("x", "x", "y", "z"))
    with pytest.raises(ValueError):
        parse("x", ("t", "x", "y", "z"), ["x"])
    with pytest.raises(ValueError):
        parse("x", ("t", "sin", "y", "z"))


@pytest.mark.parametrize(
    "source, point",
    [
        ("sqrt(r - 3)", (0, 2, 1, 1)),
        ("log(r - 2)", (0, 2, 1, 1)),
        ("1/(r - 2)", (0, 2, 1, 1)),
        ("r^0.5", (0, -1, 1, 1)),
        ("log(M - 1)", (0, 1, 1, 0)),
    ],
)
def test_domain_errors_name_the_subexpression(source, point):
    e = parse(source, CHART, PARAMS)
    with pytest.raises(DomainError) as info:
        eval_value(e, point, {"M": 1.0, "a": 0.0})
    assert info.value.subexpression


def test_integer_powers_of_negative_bases():
    e = parse("r^3 + r^-2", CHART)
    assert eval_value(e, (0, -2, 0, 0)) == pytest.approx(-8 + 0.25)
