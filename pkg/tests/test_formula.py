from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cellgauge.errors import (
    EmptyFormulaError,
    FormulaSyntaxError,
    UnbalancedParensError,
)
from cellgauge.formula import (
    BinaryOp,
    BoolLiteral,
    CellRefNode,
    FunctionCall,
    NumberLiteral,
    RangeRefNode,
    StringLiteral,
    UnaryOp,
    classify_tokens,
    parse_formula,
    render_formula,
    walk,
)
from cellgauge.refs import CellRef, RangeRef

# Formulas exercising every grammar construct; reused by round-trip and
# conservation properties.
CORPUS = [
    "=1",
    "=1.5",
    "=.5",
    "=1e3",
    '="it said ""hi"""',
    "=TRUE",
    "=FALSE",
    "=A1",
    "=$A$1",
    "=Data!B7",
    "='My Data'!B7",
    "=A1:B2",
    "=SUM($A$1:A5)",
    "=A1+B1",
    "=A1-B1-C1",
    "=A1*B1/C1",
    "=2^3^2",
    "=-A1",
    "=--A1",
    "=50%",
    "=-A1%",
    "=(A1+B1)*2",
    '="a"&"b"&C1',
    "=A1<=B1",
    "=A1<>B1",
    "=NOW()",
    "=SUM(A1, MAX(B1,C1))",
    "=IF(AND(B2>0,C2<10),B2*C2,0)",
    "=LOG10(100)",
    "=T.TEST(A1:A9,B1:B9,2,1)",
    "=1+2*3^2",
    "=(1+2)*3",
    "=A1=B1",
]


def ref(col, row, ca=False, ra=False, sheet=None):
    return CellRefNode(CellRef(sheet, col, row, ca, ra))


def test_parse_minimal_binary():
    ast = parse_formula("=A1+B1")
    assert ast.root == BinaryOp("+", ref(1, 1), ref(2, 1))
    assert ast.source == "=A1+B1"


def test_parse_range_call():
    ast = parse_formula("=SUM($A$1:A5)")
    assert ast.root == FunctionCall("SUM", (
        RangeRefNode(RangeRef(CellRef(None, 1, 1, True, True), CellRef(None, 1, 5))),
    ))


def test_parse_nested_if_node_by_node():
    # Hand-parsed per the grammar: IF(AND(B2>0, C2<10), B2*C2, 0)
    ast = parse_formula("=IF(AND(B2>0,C2<10),B2*C2,0)")
    expected = FunctionCall("IF", (
        FunctionCall("AND", (
            BinaryOp(">", ref(2, 2), NumberLiteral(0.0)),
            BinaryOp("<", ref(3, 2), NumberLiteral(10.0)),
        )),
        BinaryOp("*", ref(2, 2), ref(3, 2)),
        NumberLiteral(0.0),
    ))
    assert ast.root == expected


def test_function_names_case_normalized():
    assert parse_formula("=sum(A1)").root.name == "SUM"
    assert parse_formula("=Sum(A1)").root == parse_formula("=SUM(A1)").root


def test_whitespace_insignificant():
    assert parse_formula("= A1 + B1 ").root == parse_formula("=A1+B1").root


def test_precedence_ladder():
    # 1+2*3^2 = 1+(2*(3^2))
    ast = parse_formula("=1+2*3^2")
    assert ast.root == BinaryOp(
        "+",
        NumberLiteral(1.0),
        BinaryOp("*", NumberLiteral(2.0), BinaryOp("^", NumberLiteral(3.0), NumberLiteral(2.0))),
    )


def test_comparison_binds_loosest():
    ast = parse_formula('=A1&"x"=B1+1')
    assert isinstance(ast.root, BinaryOp) and ast.root.op == "="
    assert ast.root.left == BinaryOp("&", ref(1, 1), StringLiteral("x"))


def test_exponent_left_associative():
    ast = parse_formula("=2^3^2")
    assert ast.root == BinaryOp(
        "^", BinaryOp("^", NumberLiteral(2.0), NumberLiteral(3.0)), NumberLiteral(2.0)
    )


def test_unary_minus_binds_tighter_than_exponent():
    ast = parse_formula("=-2^2")
    assert ast.root == BinaryOp("^", UnaryOp("-", NumberLiteral(2.0)), NumberLiteral(2.0))


def test_percent_postfix():
    ast = parse_formula("=-A1%")
    assert ast.root == UnaryOp("-", UnaryOp("%", ref(1, 1)))


def test_sheet_qualified_range():
    ast = parse_formula("=SUM(Data!A1:A3)")
    rng = ast.root.args[0].ref
    assert rng.start.sheet == "Data" and rng.end.sheet == "Data"
    assert rng.height == 3


def test_range_endpoints_must_share_sheet():
    with pytest.raises(FormulaSyntaxError):
        parse_formula("=SUM(Data!A1:Other!A3)")


def test_boolean_literals_vs_function():
    assert parse_formula("=TRUE").root == BoolLiteral(True)
    assert parse_formula("=true").root == BoolLiteral(True)
    assert parse_formula("=TRUE()").root == FunctionCall("TRUE", ())


@pytest.mark.parametrize("bad,exc", [
    ("", EmptyFormulaError),
    ("=", EmptyFormulaError),
    ("=  ", EmptyFormulaError),
    ("A1+B1", FormulaSyntaxError),
    ("=SUM(", UnbalancedParensError),
    ("=SUM(A1", UnbalancedParensError),
    ("=(A1+B1", UnbalancedParensError),
    ("=A1)", UnbalancedParensError),
    ("=A1+", FormulaSyntaxError),
    ("=#REF!", FormulaSyntaxError),
    ('="unterminated', FormulaSyntaxError),
    ("=A0", FormulaSyntaxError),
    ("=FOO", FormulaSyntaxError),
    ("=1 2", FormulaSyntaxError),
])
def test_parse_errors(bad, exc):
    with pytest.raises(exc):
        parse_formula(bad)


def test_syntax_error_carries_offset():
    with pytest.raises(FormulaSyntaxError) as info:
        parse_formula("=A1+#")
    assert info.value.offset == 4


@pytest.mark.parametrize("text", CORPUS)
def test_round_trip(text):
    ast = parse_formula(text)
    rendered = render_formula(ast)
    assert parse_formula(rendered).root == ast.root


@given(st.text(max_size=40))
def test_parser_total_over_arbitrary_text(text):
    # Never raises anything but a syntax error; either result is acceptable.
    try:
        parse_formula("=" + text)
    except FormulaSyntaxError:
        pass


# --- token classification ---------------------------------------------------


def levels(text):
    return [(t.text, t.kind, t.nesting_level) for t in classify_tokens(parse_formula(text))]


def test_classify_flat_expression():
    assert levels("=A1+B1") == [
        ("+", "operator", 1), ("A1", "operand", 1), ("B1", "operand", 1),
    ]


def test_classify_nested_call():
    assert levels("=SUM(A1, MAX(B1,C1))") == [
        ("SUM", "operator", 1),
        ("A1", "operand", 2),
        ("MAX", "operator", 2),
        ("B1", "operand", 3),
        ("C1", "operand", 3),
    ]
    tokens = classify_tokens(parse_formula("=SUM(A1, MAX(B1,C1))"))
    assert sum(t.kind == "operator" for t in tokens) == 2
    assert sum(t.kind == "operand" for t in tokens) == 3


def test_classify_if_with_comparison():
    # Hand count: IF@1, then condition/branches at level 2; the comparison's
    # two operands are tokens too, so six tokens in total.
    assert levels("=IF(A1>0, A1, 0)") == [
        ("IF", "operator", 1),
        (">", "operator", 2),
        ("A1", "operand", 2),
        ("0", "operand", 2),
        ("A1", "operand", 2),
        ("0", "operand", 2),
    ]


def test_classify_range_is_single_operand():
    assert levels("=SUM($A$1:A5)") == [
        ("SUM", "operator", 1),
        ("$A$1:A5", "operand", 2),
    ]


def test_classify_parens_do_not_nest():
    assert all(lvl == 1 for _, _, lvl in levels("=(A1+B1)*2"))


def test_classify_percent_position():
    assert levels("=50%") == [("50", "operand", 1), ("%", "operator", 1)]


@pytest.mark.parametrize("text", CORPUS)
def test_token_count_conservation(text):
    ast = parse_formula(text)
    tokens = classify_tokens(ast)
    n1 = sum(1 for t in tokens if t.kind == "operator")
    n2 = sum(1 for t in tokens if t.kind == "operand")
    assert n1 + n2 == len(tokens)
    leaf_count = sum(
        1 for node in walk(ast.root)
        if not isinstance(node, (BinaryOp, UnaryOp, FunctionCall))
    )
    assert n2 == leaf_count


@pytest.mark.parametrize("text", CORPUS)
def test_nesting_levels_root_one_and_monotone(text):
    tokens = classify_tokens(parse_formula(text))
    assert tokens[0].nesting_level if tokens else 1  # non-empty corpus
    assert min(t.nesting_level for t in tokens) == 1
    # Levels only grow by function-call nesting; a token can never sit at a
    # level below any enclosing call's name token. The flattened sequence
    # makes that equivalent to: levels change by limited steps around calls.
    stack = [1]
    for t in tokens:
        if t.nesting_level > stack[-1]:
            assert t.nesting_level == stack[-1] + 1
            stack.append(t.nesting_level)
        else:
            while stack and stack[-1] > t.nesting_level:
                stack.pop()
            assert stack and stack[-1] == t.nesting_level


def test_avg_nesting_level_worked_value():
    tokens = classify_tokens(parse_formula("=SUM(A1, MAX(B1,C1))"))
    total = sum(t.nesting_level for t in tokens)
    assert Fraction(total, len(tokens)) == Fraction(11, 5)
