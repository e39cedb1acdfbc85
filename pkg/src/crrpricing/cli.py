"""Command-line interface: price payoffs, emit and verify hedging
portfolios, and check market viability.

Exit codes: 0 success; 2 market not viable (price/replicate); 3 malformed
input (config, payoff, CSV); 4 portfolio does not replicate; 5 market not
viable (check). Identical inputs produce byte-identical output: node order
is fixed, reports round to 6 significant digits, CSV numbers use the
shortest round-trip form.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass

from .crr import CrrMarket, CrrParams, MarketNotViableError, is_viable, risk_neutral_q
from .lattice import TossPath, iter_paths
from .market import (
    PredictabilityError,
    closing_value_process,
    read_portfolio_csv,
    write_portfolio_csv,
)
from .payoff import parse_payoff
from .pricing import (
    PayoffLike,
    fair_price,
    construct_arbitrage,
    is_arbitrage_process,
    price_lattice,
    replicating_portfolio,
    verify_replication,
)

EXIT_OK = 0
EXIT_INVIABLE = 2
EXIT_BAD_INPUT = 3
EXIT_NOT_REPLICATING = 4
EXIT_CHECK_INVIABLE = 5


@dataclass(frozen=True)
class MarketConfig:
    """Validated market description as read from a JSON config file."""

    params: CrrParams
    horizon: int

    @classmethod
    def from_json(cls, text: str) -> "MarketConfig":
        market = CrrMarket.from_json(text)
        return cls(market.params, market.horizon)

    @classmethod
    def from_file(cls, path: str) -> "MarketConfig":
        try:
            with open(path, "r", encoding="utf-8") as f:
                return cls.from_json(f.read())
        except OSError as exc:
            raise ValueError(f"cannot read config {path!r}: {exc}") from None

    def build(self) -> CrrMarket:
        return CrrMarket(self.params, self.horizon)

    def to_json(self) -> str:
        return self.build().to_json()


def read_path_table(text: str, maturity: int) -> dict[TossPath, float]:
    """Parse a per-terminal-path payoff table: header 'prefix,value' and one
    row per length-``maturity`` path."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["prefix", "value"]:
        raise ValueError("path table must start with header 'prefix,value'")
    table: dict[TossPath, float] = {}
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != 2:
            raise ValueError(f"path table line {lineno}: expected 2 columns")
        try:
            prefix = TossPath.from_label(rec[0].strip())
            value = float(rec[1])
        except ValueError as exc:
            raise ValueError(f"path table line {lineno}: {exc}") from None
        if len(prefix) != maturity:
            raise ValueError(
                f"path table line {lineno}: prefix {prefix.label()!r} has length "
                f"{len(prefix)}, expected {maturity}"
            )
        if prefix in table:
            raise ValueError(f"path table line {lineno}: duplicate prefix")
        table[prefix] = value
    missing = [w for w in iter_paths(maturity) if w not in table]
    if missing:
        raise ValueError(
            f"path table misses {len(missing)} of {2 ** maturity} paths, "
            f"e.g. {missing[0].label()}"
        )
    return table


def _fmt(x: float) -> str:
    return format(x, ".6g")


def _load_payoff(args: argparse.Namespace, maturity: int) -> PayoffLike:
    if args.payoff is not None:
        return parse_payoff(args.payoff)
    try:
        with open(args.path_table, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise ValueError(f"cannot read path table {args.path_table!r}: {exc}") from None
    return read_path_table(text, maturity)


def cmd_price(args: argparse.Namespace) -> int:
    crr = MarketConfig.from_file(args.config).build()
    payoff = _load_payoff(args, args.maturity)
    price = fair_price(crr, payoff, args.maturity)
    if args.tree:
        tree = price_lattice(crr, payoff, args.maturity)
        with open(args.tree, "w", encoding="utf-8") as f:
            tree.to_csv(f)
    print(f"fair price: {_fmt(price)}")
    return EXIT_OK


def cmd_replicate(args: argparse.Namespace) -> int:
    crr = MarketConfig.from_file(args.config).build()
    payoff = _load_payoff(args, args.maturity)
    portfolio = replicating_portfolio(crr, payoff, args.maturity)
    report = verify_replication(crr, portfolio, payoff, args.maturity)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            write_portfolio_csv(portfolio, f)
    else:
        sys.stdout.write(write_portfolio_csv(portfolio))
    ok = report.is_replicating(args.tolerance)
    print(
        f"replicating: {'yes' if ok else 'no'}; "
        f"init value = {_fmt(report.init_value)}; "
        f"max terminal error = {_fmt(report.max_terminal_error)}"
    )
    return EXIT_OK if ok else EXIT_NOT_REPLICATING


def cmd_verify(args: argparse.Namespace) -> int:
    crr = MarketConfig.from_file(args.config).build()
    payoff = _load_payoff(args, args.maturity)
    try:
        with open(args.portfolio, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise ValueError(f"cannot read portfolio {args.portfolio!r}: {exc}") from None
    try:
        portfolio = read_portfolio_csv(text, args.maturity, crr.market.assets)
    except PredictabilityError as exc:
        print("trading-strategy: fail (quantities peek at future tosses)")
        print(f"  {exc}")
        print("replicating: no")
        return EXIT_NOT_REPLICATING
    try:
        report = verify_replication(crr, portfolio, payoff, args.maturity)
    except ValueError as exc:
        if "stock portfolio" not in str(exc):
            raise
        print(f"stock-portfolio: fail ({exc})")
        print("replicating: no")
        return EXIT_NOT_REPLICATING
    print("stock-portfolio: pass")
    print(f"trading-strategy: {'pass' if report.trading_strategy else 'fail'}")
    print(f"self-financing: {'pass' if report.self_financing else 'fail'}")
    terminal_ok = report.max_terminal_error <= args.tolerance
    print(
        f"terminal-match: {'pass' if terminal_ok else 'fail'} "
        f"(max error = {_fmt(report.max_terminal_error)})"
    )
    print(f"init value = {_fmt(report.init_value)}")
    ok = report.is_replicating(args.tolerance)
    print(f"replicating: {'yes' if ok else 'no'}")
    return EXIT_OK if ok else EXIT_NOT_REPLICATING


def cmd_check(args: argparse.Namespace) -> int:
    crr = MarketConfig.from_file(args.config).build()
    if is_viable(crr.params):
        print(f"viable; q = {_fmt(risk_neutral_q(crr.params))}")
        return EXIT_OK
    print("not viable: requires d < 1+r < u")
    portfolio = construct_arbitrage(crr)
    verdict = is_arbitrage_process(crr, crr.measure(), portfolio)
    witness = verdict.witness_time if verdict.is_arbitrage else 1
    print(f"arbitrage portfolio (witness time {witness}):")
    root = TossPath()
    for asset in sorted({crr.risky, crr.riskfree}, key=lambda a: a.id):
        print(f"  {asset.id}: {_fmt(portfolio.quantity(asset, 1, root))}")
    for w in iter_paths(witness):
        value = closing_value_process(crr.market, portfolio, witness, w)
        print(f"  closing value[{w.label()}] = {_fmt(value)}")
    return EXIT_CHECK_INVIABLE


def _add_payoff_arguments(sub: argparse.ArgumentParser) -> None:
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument("--payoff", help="payoff expression, e.g. 'call(98)'")
    group.add_argument(
        "--path-table", help="CSV of per-terminal-path payoffs (prefix,value)"
    )
    sub.add_argument(
        "--maturity", type=int, required=True, help="payoff maturity in periods"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crrpricing",
        description="Binomial-market pricing, replication, and verification",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    price = commands.add_parser("price", help="fair price of a payoff")
    _add_payoff_arguments(price)
    price.add_argument("--tree", help="write the option value tree CSV here")
    price.set_defaults(func=cmd_price)

    replicate = commands.add_parser("replicate", help="synthesize a hedge")
    _add_payoff_arguments(replicate)
    replicate.add_argument("--out", help="write the portfolio CSV here (default stdout)")
    replicate.set_defaults(func=cmd_replicate)

    verify = commands.add_parser("verify", help="check a portfolio against a payoff")
    _add_payoff_arguments(verify)
    verify.add_argument("--portfolio", required=True, help="portfolio CSV to verify")
    verify.set_defaults(func=cmd_verify)

    check = commands.add_parser("check", help="viability and risk-neutral weight")
    check.set_defaults(func=cmd_check)

    for sub in (price, replicate, verify, check):
        sub.add_argument("--config", required=True, help="market config JSON file")
        sub.add_argument(
            "--tolerance",
            type=float,
            default=1e-9,
            help="replication tolerance (default 1e-9)",
        )
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_BAD_INPUT
    try:
        return args.func(args)
    except MarketNotViableError:
        print("market not viable: requires d < 1+r < u", file=sys.stderr)
        return EXIT_INVIABLE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
