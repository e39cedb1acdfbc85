"""Payoff language: parsing, printing, evaluation, maturity inference."""
import random

import pytest

from crrpricing.crr import CrrParams, price_path
from crrpricing.lattice import BinaryLattice, TossPath, is_measurable_at
from crrpricing.payoff import (
    Add,
    Const,
    Div,
    Max2,
    Min2,
    Mul,
    Neg,
    PathAvg,
    PathMax,
    PathMin,
    PayoffEvalError,
    PayoffSyntaxError,
    PosPart,
    PriceAt,
    Sub,
    TerminalPrice,
    eval_payoff,
    parse_payoff,
    payoff_horizon,
    print_payoff,
)


class TestParsing:
    def test_call_desugars_to_positive_part(self):
        assert parse_payoff("call(98)") == PosPart(Sub(TerminalPrice(), Const(98.0)))

    def test_put_desugars(self):
        assert parse_payoff("put(98)") == PosPart(Sub(Const(98.0), TerminalPrice()))

    def test_forward_desugars(self):
        assert parse_payoff("forward(98)") == Sub(TerminalPrice(), Const(98.0))

    def test_lookback_desugars(self):
        assert parse_payoff("lookback") == Sub(PathMax(), TerminalPrice())

    def test_aggregates(self):
        assert parse_payoff("max(S)") == PathMax()
        assert parse_payoff("min(S)") == PathMin()
        assert parse_payoff("avg(S)") == PathAvg()

    def test_binary_max_min(self):
        assert parse_payoff("max(S[1], 2)") == Max2(PriceAt(1), Const(2.0))
        assert parse_payoff("min(S_T, max(S))") == Min2(TerminalPrice(), PathMax())

    def test_precedence_and_associativity(self):
        assert parse_payoff("1 + 2 * 3") == Add(Const(1.0), Mul(Const(2.0), Const(3.0)))
        assert parse_payoff("1 - 2 - 3") == Sub(Sub(Const(1.0), Const(2.0)), Const(3.0))
        assert parse_payoff("(1 - 2) * 3") == Mul(Sub(Const(1.0), Const(2.0)), Const(3.0))

    def test_unary_minus_binds_to_factor(self):
        assert parse_payoff("-S_T") == Neg(TerminalPrice())
        assert parse_payoff("--2") == Neg(Neg(Const(2.0)))
        assert parse_payoff("2 - -3") == Sub(Const(2.0), Neg(Const(3.0)))

    def test_whitespace_insensitive(self):
        assert parse_payoff("  max( S ) -  S_T ") == parse_payoff("max(S)-S_T")

    def test_scientific_notation(self):
        assert parse_payoff("1.5e-3") == Const(0.0015)


MALFORMED = [
    ("S[1", 3),          # unclosed index bracket
    ("", 0),             # empty input
    ("1 +", 3),          # dangling operator
    ("call(98", 7),      # unclosed call
    ("call(S_T)", 5),    # strike must be a number
    ("foo", 0),          # unknown identifier
    ("max(S,)", 5),      # bare S inside binary max needs an index
    ("1 2", 2),          # trailing input
    ("avg(2)", 4),       # avg applies to the path
    ("S + 1", 2),        # bare S needs an index
]


class TestSyntaxErrors:
    @pytest.mark.parametrize("text,position", MALFORMED)
    def test_malformed_inputs_carry_positions(self, text, position):
        with pytest.raises(PayoffSyntaxError) as info:
            parse_payoff(text)
        assert info.value.position == position, (
            f"{text!r}: reported offset {info.value.position}, expected {position}"
        )

    def test_unexpected_character(self):
        with pytest.raises(PayoffSyntaxError) as info:
            parse_payoff("1 ? 2")
        assert info.value.position == 2


PARAMS = CrrParams(u=1.2, d=0.8, v=10.0, r=0.03, p=0.5)


class TestEvaluation:
    def test_lookback_up_down(self):
        e = parse_payoff("lookback")
        assert eval_payoff(e, [10.0, 12.0, 9.6]) == pytest.approx(2.4, abs=1e-12)

    def test_lookback_counts_initial_price(self):
        # after down-up the running maximum is the initial price itself
        e = parse_payoff("lookback")
        assert eval_payoff(e, [10.0, 8.0, 9.6]) == pytest.approx(0.4, abs=1e-12)

    def test_forward_at_terminal_hundred(self):
        e = parse_payoff("forward(98)")
        assert eval_payoff(e, [95.0, 99.0, 100.0]) == pytest.approx(2.0)

    def test_price_index(self):
        e = parse_payoff("S[1] - S[0]")
        assert eval_payoff(e, [10.0, 12.0, 9.6]) == pytest.approx(2.0)

    def test_avg_includes_all_prices(self):
        e = parse_payoff("avg(S)")
        assert eval_payoff(e, [1.0, 2.0, 6.0]) == pytest.approx(3.0)

    def test_index_beyond_path_rejected(self):
        e = parse_payoff("S[5]")
        with pytest.raises(PayoffEvalError, match=r"S\[5\]"):
            eval_payoff(e, [10.0, 12.0])

    def test_division_by_zero_names_node(self):
        e = parse_payoff("1 / (S_T - 12)")
        with pytest.raises(PayoffEvalError, match="division by zero"):
            eval_payoff(e, [10.0, 12.0])

    def test_put_call_parity_pointwise(self):
        rng = random.Random(11)
        for _ in range(20):
            strike = round(rng.uniform(1.0, 150.0), 4)
            call = parse_payoff(f"call({strike})")
            put = parse_payoff(f"put({strike})")
            prices = [rng.uniform(1.0, 150.0) for _ in range(rng.randint(1, 6))]
            lhs = eval_payoff(call, prices) - eval_payoff(put, prices)
            assert lhs == prices[-1] - strike, "parity must hold exactly"


class TestPayoffHorizon:
    def test_fixed_indices(self):
        assert payoff_horizon(parse_payoff("S[3] - S[1]")) == 3

    def test_terminal_price_is_parametric(self):
        assert payoff_horizon(parse_payoff("call(98)")) is None

    def test_aggregates_are_parametric(self):
        assert payoff_horizon(parse_payoff("lookback")) is None

    def test_constants_need_no_history(self):
        assert payoff_horizon(parse_payoff("1 + 2")) == 0


def random_expr(rng: random.Random, depth: int):
    """Sample an expression shaped by the grammar's own productions."""
    atoms = [
        lambda: Const(float(rng.randint(0, 300))),
        lambda: Const(round(rng.uniform(0.0, 200.0), 4)),
        lambda: PriceAt(rng.randint(0, 6)),
        lambda: TerminalPrice(),
        lambda: PathMax(),
        lambda: PathMin(),
        lambda: PathAvg(),
    ]
    if depth <= 0:
        return rng.choice(atoms)()
    binops = [Add, Sub, Mul, Div, Max2, Min2]
    choice = rng.randrange(10)
    if choice < 6:
        op = rng.choice(binops)
        return op(random_expr(rng, depth - 1), random_expr(rng, depth - 1))
    if choice < 8:
        return Neg(random_expr(rng, depth - 1))
    if choice < 9:
        return PosPart(random_expr(rng, depth - 1))
    return rng.choice(atoms)()


class TestPrinterRoundTrip:
    def test_round_trip_on_generated_expressions(self):
        rng = random.Random(20240811)
        for i in range(100):
            expr = random_expr(rng, depth=rng.randint(0, 4))
            text = print_payoff(expr)
            reparsed = parse_payoff(text)
            assert reparsed == expr, f"case {i}: {text!r} reparsed differently"
            assert print_payoff(reparsed) == text

    def test_round_trip_on_sugar(self):
        for text in ("call(98)", "put(98)", "forward(98)", "lookback"):
            e = parse_payoff(text)
            assert parse_payoff(print_payoff(e)) == e

    def test_parenthesization_cases(self):
        assert print_payoff(parse_payoff("(1 + 2) * 3")) == "(1 + 2) * 3"
        assert print_payoff(parse_payoff("1 - (2 - 3)")) == "1 - (2 - 3)"
        assert print_payoff(parse_payoff("-(1 + 2)")) == "-(1 + 2)"


class TestMeasurability:
    @pytest.mark.parametrize("text", ["call(9)", "lookback", "avg(S) - S[1]", "S[2] * S_T"])
    @pytest.mark.parametrize("maturity", [2, 4, 6])
    def test_payoff_depends_only_on_first_t_tosses(self, text, maturity):
        expr = parse_payoff(text)
        lattice = BinaryLattice(maturity + 2)

        def payoff_of_full_path(w: TossPath) -> float:
            return eval_payoff(expr, price_path(PARAMS, w.truncate(maturity)))

        assert is_measurable_at(payoff_of_full_path, lattice, maturity)
