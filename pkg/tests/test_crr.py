"""Binomial market parameters, discounting, viability, risk-neutral weight."""
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crrpricing.crr import (
    CrrMarket,
    CrrParams,
    MarketNotViableError,
    disc_rfr_proc,
    discount_factor,
    discounted_value,
    filtration_equivalent_bernoulli,
    geom_rand_walk,
    is_viable,
    price_path,
    risk_neutral_q,
    step_rate_from_annual,
)
from crrpricing.lattice import (
    BinaryLattice,
    LatticeProcess,
    PathMeasure,
    TossPath,
    enumerate_paths,
    is_measurable_at,
    path_probability,
)
from crrpricing.market import (
    Asset,
    Market,
    closing_value_process,
    init_value,
    is_self_financing,
    qty_single,
    qty_sum,
)

PARAMS = CrrParams(u=1.2, d=0.8, v=10.0, r=0.03, p=0.5)


def path(label: str) -> TossPath:
    return TossPath.from_label(label)


viable_params = st.builds(
    lambda d, spread, rfrac, v, p: CrrParams(
        u=d + spread,
        d=d,
        v=v,
        r=(d + rfrac * spread) - 1.0,
        p=p,
    ),
    d=st.floats(0.5, 1.1),
    spread=st.floats(0.05, 0.8),
    rfrac=st.floats(0.05, 0.95),
    v=st.floats(1.0, 200.0),
    p=st.floats(0.01, 0.99),
)


class TestCrrParams:
    @pytest.mark.parametrize(
        "kwargs,fragment",
        [
            (dict(u=0.8, d=1.2, v=10, r=0.0, p=0.5), "0 < d < u"),
            (dict(u=1.2, d=0.8, v=-1, r=0.0, p=0.5), "positive"),
            (dict(u=1.2, d=0.8, v=10, r=-1.0, p=0.5), "exceed -1"),
            (dict(u=1.2, d=0.8, v=10, r=0.0, p=0.0), "strictly in (0, 1)"),
            (dict(u=1.2, d=1.2, v=10, r=0.0, p=0.5), "0 < d < u"),
        ],
    )
    def test_invariants_named_in_errors(self, kwargs, fragment):
        with pytest.raises(ValueError, match=fragment.replace("(", "\\(").replace(")", "\\)")):
            CrrParams(**kwargs)


class TestGeomRandWalk:
    def test_walk_values(self):
        assert geom_rand_walk(PARAMS, 0, path("-")) == 10.0
        assert geom_rand_walk(PARAMS, 1, path("U")) == pytest.approx(12.0, abs=1e-12)
        assert geom_rand_walk(PARAMS, 2, path("UD")) == pytest.approx(9.6, abs=1e-12)

    def test_double_down(self):
        assert geom_rand_walk(PARAMS, 2, path("DD")) == pytest.approx(6.4, abs=1e-12)

    def test_path_dependence_collapses_on_price(self):
        assert geom_rand_walk(PARAMS, 2, path("UD")) == pytest.approx(
            geom_rand_walk(PARAMS, 2, path("DU")), abs=1e-12
        )

    def test_degenerate_factors_rejected_at_construction(self):
        # the bare formula would give a flat walk for u = d = 1, but such
        # parameters never pass validation
        with pytest.raises(ValueError):
            CrrParams(u=1.0, d=1.0, v=10.0, r=0.0, p=0.5)

    def test_adapted_at_every_time(self):
        lattice = BinaryLattice(4)
        for n in range(5):
            f = lambda w: geom_rand_walk(PARAMS, n, w)
            assert is_measurable_at(f, lattice, n)

    def test_price_path_expands_walk(self):
        assert price_path(PARAMS, path("UD")) == pytest.approx([10.0, 12.0, 9.6])

    def test_short_path_rejected(self):
        with pytest.raises(ValueError):
            geom_rand_walk(PARAMS, 3, path("UD"))


class TestDiscounting:
    def test_compounding_values(self):
        assert disc_rfr_proc(0.03, 0) == 1.0
        assert disc_rfr_proc(0.03, 1) == pytest.approx(1.03, abs=1e-12)
        assert disc_rfr_proc(0.03, 2) == pytest.approx(1.0609, abs=1e-12)

    def test_zero_rate_is_flat(self):
        for n in range(5):
            assert disc_rfr_proc(0.0, n) == 1.0

    def test_two_percent_two_periods(self):
        assert disc_rfr_proc(0.02, 2) == pytest.approx(1.0404, abs=1e-12)

    def test_discount_factor_strike_example(self):
        df = discount_factor(0.02, 2)
        assert df == pytest.approx(0.96117, abs=5e-6)
        assert round(98 * df, 2) == 94.19

    def test_discount_factor_identity(self):
        assert discount_factor(0.03, 0) == 1.0
        assert discount_factor(0.03, 2) == pytest.approx(1 / 1.0609, abs=1e-15)

    def test_rate_floor_enforced(self):
        for fn in (disc_rfr_proc, discount_factor):
            with pytest.raises(ValueError):
                fn(-1.0, 1)

    def test_discounted_riskfree_price_is_constant_one(self):
        mkt = CrrMarket(PARAMS, horizon=4)
        deflated = discounted_value(PARAMS.r, mkt.market.price(mkt.riskfree))
        for n, w in deflated.nodes():
            assert deflated.at(n, w) == pytest.approx(1.0, abs=1e-15)

    def test_discounted_payoff_value(self):
        proc = LatticeProcess.from_function(2, lambda n, w: 2.4 if n == 2 else 0.0)
        deflated = discounted_value(0.03, proc)
        assert deflated.at(2, path("UD")) == pytest.approx(2.262, abs=5e-4)

    def test_discounting_zero_is_zero(self):
        deflated = discounted_value(0.05, LatticeProcess.constant(3, 0.0))
        assert all(deflated.at(n, w) == 0.0 for n, w in deflated.nodes())


class TestViability:
    def test_reference_parameters_viable(self):
        assert is_viable(PARAMS)

    def test_high_rate_inviable(self):
        assert not is_viable(CrrParams(u=1.2, d=0.8, v=10, r=0.25, p=0.5))

    def test_boundary_is_excluded(self):
        assert not is_viable(CrrParams(u=1.2, d=1.0, v=10, r=0.0, p=0.5))


class TestRiskNeutralWeight:
    def test_reference_value(self):
        assert risk_neutral_q(PARAMS) == pytest.approx(0.575, abs=1e-12)

    def test_symmetric_case(self):
        params = CrrParams(u=1.25, d=0.75, v=10, r=0.0, p=0.3)
        assert risk_neutral_q(params) == pytest.approx(0.5, abs=1e-12)

    def test_plugged_formula(self):
        params = CrrParams(u=1.1, d=0.9, v=10, r=0.05, p=0.5)
        assert risk_neutral_q(params) == pytest.approx(0.75, abs=1e-12)

    def test_inviable_rejected(self):
        with pytest.raises(MarketNotViableError):
            risk_neutral_q(CrrParams(u=1.2, d=0.8, v=10, r=0.25, p=0.5))

    @given(params=viable_params)
    @settings(max_examples=80)
    def test_weight_interior_and_driftless(self, params):
        q = risk_neutral_q(params)
        assert 0.0 < q < 1.0
        assert abs(q * params.u + (1 - q) * params.d - (1.0 + params.r)) <= 1e-12


class TestStepRate:
    def test_daily_rate_from_annual(self):
        assert step_rate_from_annual(0.02, 252) == pytest.approx(7.85e-5, abs=1e-7)

    def test_zero_annual(self):
        assert step_rate_from_annual(0.0, 12) == 0.0

    def test_single_step_identity(self):
        assert step_rate_from_annual(0.1, 1) == pytest.approx(0.1, abs=1e-15)

    def test_round_trip(self):
        r = step_rate_from_annual(0.07, 52)
        assert (1 + r) ** 52 == pytest.approx(1.07, abs=1e-12)


class TestFiltrationEquivalence:
    @staticmethod
    def zero_sets_agree(p: float, q: float, T: int) -> bool:
        # oracle: compare zero-probability cylinders path by path; an event
        # is null exactly when all its paths are, so this decides all events
        mp, mq = PathMeasure(p), PathMeasure(q)
        return all(
            (path_probability(mp, w) == 0.0) == (path_probability(mq, w) == 0.0)
            for w in enumerate_paths(T)
        )

    @pytest.mark.parametrize(
        "p,q", [(0.575, 0.3), (0.0, 0.5), (1.0, 0.5), (0.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    )
    def test_closed_form_matches_cylinder_oracle(self, p, q):
        assert filtration_equivalent_bernoulli(p, q, 4) == self.zero_sets_agree(p, q, 4)

    def test_interior_pair_equivalent(self):
        assert filtration_equivalent_bernoulli(0.575, 0.3, 6)

    def test_degenerate_mismatch(self):
        assert not filtration_equivalent_bernoulli(0.0, 0.5, 1)

    @given(p=st.floats(0.0, 1.0))
    @settings(max_examples=30)
    def test_reflexive(self, p):
        assert filtration_equivalent_bernoulli(p, p, 3)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            filtration_equivalent_bernoulli(-0.1, 0.5, 2)


class TestCrrMarket:
    def test_stock_set(self):
        mkt = CrrMarket(PARAMS, horizon=3)
        assert mkt.market.stocks == {mkt.risky, mkt.riskfree}
        assert mkt.extra in mkt.market.assets

    def test_price_processes(self):
        mkt = CrrMarket(PARAMS, horizon=3)
        assert mkt.market.price(mkt.risky).at(2, path("UD")) == pytest.approx(9.6)
        assert mkt.market.price(mkt.riskfree).at(2, path("DD")) == pytest.approx(1.0609)

    def test_json_round_trip(self):
        mkt = CrrMarket(PARAMS, horizon=5)
        again = CrrMarket.from_json(mkt.to_json())
        assert again.params == PARAMS
        assert again.horizon == 5

    @pytest.mark.parametrize(
        "text,fragment",
        [
            ("[]", "JSON object"),
            ("{", "not valid JSON"),
            ('{"u": 1.2, "d": 0.8, "v": 10, "r": 0.03, "p": 0.5}', "missing"),
            (
                '{"u": 1.2, "d": 0.8, "v": 10, "r": 0.03, "p": 0.5, "horizon": 2, "x": 1}',
                "unknown keys",
            ),
            (
                '{"u": 1.2, "d": 0.8, "v": 10, "r": 0.03, "p": 0.5, "horizon": 2.5}',
                "integer",
            ),
            (
                '{"u": "a", "d": 0.8, "v": 10, "r": 0.03, "p": 0.5, "horizon": 2}',
                "number",
            ),
        ],
    )
    def test_config_errors(self, text, fragment):
        with pytest.raises(ValueError, match=fragment):
            CrrMarket.from_json(text)

    def test_measures(self):
        mkt = CrrMarket(PARAMS, horizon=2)
        assert mkt.measure().p == 0.5
        assert mkt.risk_neutral_measure().p == pytest.approx(0.575, abs=1e-12)


class TestTwoRateArbitrage:
    def test_long_high_short_low_rate_portfolio(self):
        # two risk-free assets at different rates: buying the higher-rate one
        # and shorting the lower-rate one costs nothing and always gains
        horizon = 5
        r1, r2 = 0.01, 0.03
        low = Asset("rf-low")
        high = Asset("rf-high")
        slot = Asset("slot", kind="extra")
        mkt = Market(
            prices={
                low: LatticeProcess.from_function(horizon, lambda n, w: 1.01**n),
                high: LatticeProcess.from_function(horizon, lambda n, w: 1.03**n),
                slot: LatticeProcess.constant(horizon, 0.0),
            },
            stocks=[low, high],
        )
        p = qty_sum(
            qty_single(high, lambda n, w: 1.0, horizon=horizon),
            qty_single(low, lambda n, w: -1.0, horizon=horizon),
        )
        assert init_value(mkt, p) == 0.0
        assert is_self_financing(mkt, p)
        for n in range(1, horizon + 1):
            w = TossPath((True,) * n)
            gain = closing_value_process(mkt, p, n, w)
            assert gain == pytest.approx(1.03**n - 1.01**n, abs=1e-12)
            assert gain > 0.0
