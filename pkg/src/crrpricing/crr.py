"""Two-asset binomial market: geometric random walk, risk-free compounding,
discounting, the viability condition, and the risk-neutral toss probability.

The risky price multiplies by ``u`` on an up toss and ``d`` on a down toss
from initial value ``v``; the risk-free asset compounds at a constant
per-period rate ``r``. The market admits no arbitrage among stock-only
portfolios exactly when ``d < 1 + r < u``, in which case the unique
Bernoulli up-probability making the discounted risky price driftless is
``q = (1 + r - d) / (u - d)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .lattice import LatticeProcess, PathMeasure, TossPath, check_horizon
from .market import Asset, Market

RISKY_ID = "S"
RISKFREE_ID = "rf"
EXTRA_ID = "derivative"


class MarketNotViableError(ValueError):
    """The parameters admit an arbitrage, so no risk-neutral measure exists."""


@dataclass(frozen=True, slots=True)
class CrrParams:
    """Model parameters: up/down factors, initial price, rate, up-probability."""

    u: float
    d: float
    v: float
    r: float
    p: float

    def __post_init__(self) -> None:
        if not 0 < self.d < self.u:
            raise ValueError(f"need 0 < d < u, got d={self.d}, u={self.u}")
        if not self.v > 0:
            raise ValueError(f"initial risky price must be positive, got v={self.v}")
        if not self.r > -1:
            raise ValueError(f"per-period rate must exceed -1, got r={self.r}")
        if not 0 < self.p < 1:
            raise ValueError(f"up-probability must lie strictly in (0, 1), got p={self.p}")


def geom_rand_walk(params: CrrParams, n: int, path: TossPath) -> float:
    """Risky price after ``n`` tosses: ``v`` times one factor per toss."""
    if len(path) < n:
        raise ValueError(f"need at least {n} tosses, path has {len(path)}")
    return params.v * math.prod(
        params.u if path[i] else params.d for i in range(n)
    )


def price_path(params: CrrParams, path: TossPath) -> list[float]:
    """All prices along a scenario, time 0 through ``len(path)``."""
    prices = [params.v]
    for outcome in path:
        prices.append(prices[-1] * (params.u if outcome else params.d))
    return prices


def disc_rfr_proc(r: float, n: int) -> float:
    """Price of the risk-free asset at time ``n``: unit value compounded."""
    if not r > -1:
        raise ValueError(f"per-period rate must exceed -1, got r={r}")
    return (1.0 + r) ** n


def discount_factor(r: float, n: int) -> float:
    """Present value at time 0 of one unit of cash paid at time ``n``."""
    if not r > -1:
        raise ValueError(f"per-period rate must exceed -1, got r={r}")
    return (1.0 + r) ** -n


def discounted_value(r: float, process: LatticeProcess) -> LatticeProcess:
    """The process deflated by the risk-free growth at each time."""
    if not r > -1:
        raise ValueError(f"per-period rate must exceed -1, got r={r}")
    return LatticeProcess.from_function(
        process.horizon, lambda n, w: discount_factor(r, n) * process.at(n, w)
    )


def is_viable(params: CrrParams) -> bool:
    """No-arbitrage condition on the parameters, with strict boundaries."""
    return params.d < 1.0 + params.r < params.u


def risk_neutral_q(params: CrrParams) -> float:
    """The unique up-probability under which discounted prices are driftless."""
    if not is_viable(params):
        raise MarketNotViableError(
            f"no risk-neutral measure: requires d < 1+r < u, got "
            f"d={params.d}, 1+r={1.0 + params.r}, u={params.u}"
        )
    return (1.0 + params.r - params.d) / (params.u - params.d)


def step_rate_from_annual(annual: float, steps_per_year: int) -> float:
    """Per-step rate whose compounding over a year matches the annual rate."""
    if not annual > -1:
        raise ValueError(f"annual rate must exceed -1, got {annual}")
    if steps_per_year < 1:
        raise ValueError(f"steps per year must be at least 1, got {steps_per_year}")
    return (1.0 + annual) ** (1.0 / steps_per_year) - 1.0


def filtration_equivalent_bernoulli(p: float, q: float, horizon: int) -> bool:
    """Whether two Bernoulli toss weights share the same zero-probability
    events on the lattice of the given horizon.

    Any interior pair gives every cylinder positive weight under both
    measures; degenerate weights agree only with themselves. The condition
    is therefore independent of the horizon, which is validated but only
    consulted by exhaustive test oracles.
    """
    for name, value in (("p", p), ("q", q)):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {value}")
    check_horizon(horizon)
    if 0.0 < p < 1.0 and 0.0 < q < 1.0:
        return True
    return p == q


class CrrMarket:
    """The binomial market: one risky asset, one risk-free asset, and a free
    slot for a derivative product."""

    __slots__ = ("params", "horizon", "risky", "riskfree", "extra", "market")

    def __init__(self, params: CrrParams, horizon: int):
        check_horizon(horizon)
        if horizon < 1:
            raise ValueError("market horizon must be at least 1")
        self.params = params
        self.horizon = horizon
        self.risky = Asset(RISKY_ID)
        self.riskfree = Asset(RISKFREE_ID)
        self.extra = Asset(EXTRA_ID, kind="extra")
        self.market = Market(
            prices={
                self.risky: LatticeProcess.from_function(
                    horizon, lambda n, w: geom_rand_walk(params, n, w)
                ),
                self.riskfree: LatticeProcess.from_function(
                    horizon, lambda n, w: disc_rfr_proc(params.r, n)
                ),
                self.extra: LatticeProcess.constant(horizon, 0.0),
            },
            stocks=[self.risky, self.riskfree],
        )

    def measure(self) -> PathMeasure:
        """The physical toss measure."""
        return PathMeasure(self.params.p)

    def risk_neutral_measure(self) -> PathMeasure:
        return PathMeasure(risk_neutral_q(self.params))

    def to_dict(self) -> dict:
        p = self.params
        return {"u": p.u, "d": p.d, "v": p.v, "r": p.r, "p": p.p, "horizon": self.horizon}

    @classmethod
    def from_dict(cls, data: dict) -> "CrrMarket":
        required = {"u", "d", "v", "r", "p", "horizon"}
        missing = required - set(data)
        if missing:
            raise ValueError(f"config missing keys: {sorted(missing)}")
        unknown = set(data) - required
        if unknown:
            raise ValueError(f"config has unknown keys: {sorted(unknown)}")
        horizon = data["horizon"]
        if not isinstance(horizon, int) or isinstance(horizon, bool):
            raise ValueError(f"horizon must be an integer, got {horizon!r}")
        numbers = {}
        for key in ("u", "d", "v", "r", "p"):
            value = data[key]
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ValueError(f"config key {key!r} must be a number, got {value!r}")
            numbers[key] = float(value)
        return cls(CrrParams(**numbers), horizon)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CrrMarket":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ValueError("config must be a JSON object")
        return cls.from_dict(data)
