"""Command line entry point.

Exit codes: 0 success, 1 usage or parse error, 2 precondition violation,
3 theorem violation detected.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import io as rio
from .algorithms import NotFirmQuasiStable, da_firm_proposing, da_worker_proposing, enumerate_stable, set_offering
from .disruption import PreconditionError
from .generate import FAMILIES, GenerationError, ScenarioConfig, TransitionSpec, generate_market
from .market import MarketError, SizeGuardError, check_matching
from .suite import run_scenario, run_theorem_suite, transition_from_json, write_scenario

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PRECONDITION = 2
EXIT_THEOREM = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        raise _UsageError(message)


def _emit(text: str, out: Optional[Path], name: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8")


def _config(args, trials: int) -> ScenarioConfig:
    spec = None
    if args.retire or args.add_firms:
        spec = TransitionSpec(args.retire, args.add_firms)
    return ScenarioConfig(
        rng_seed=args.seed,
        n_firms=args.firms,
        n_workers=args.workers,
        quota_max=args.quota_max,
        acceptability_density=args.density,
        preference_family=args.family,
        n_trials=trials,
        transition_spec=spec,
    )


def _load_market(path: str):
    return rio.market_from_json(rio.load_json(path))


def _load_matching(path: str, market):
    mu = rio.matching_from_json(rio.load_json(path))
    try:
        check_matching(mu, market)
    except MarketError as exc:
        raise rio.ParseError(str(exc)) from exc
    return mu


def cmd_gen(args) -> int:
    cfg = _config(args, args.trials)
    if args.out_dir is None:
        sys.stdout.write(rio.dumps(rio.market_to_json(generate_market(cfg, args.trial))))
        return EXIT_OK
    for t in range(cfg.n_trials):
        try:
            market = generate_market(cfg, t)
        except GenerationError as exc:
            print(f"trial {t} skipped: {exc}", file=sys.stderr)
            continue
        _emit(rio.dumps(rio.market_to_json(market)), args.out_dir, f"market_{t:04d}.json")
    return EXIT_OK


def cmd_solve(args) -> int:
    market = _load_market(args.market)
    payload = {
        "firm_optimal": rio.matching_to_json(da_firm_proposing(market)),
        "worker_optimal": rio.matching_to_json(da_worker_proposing(market)),
    }
    _emit(rio.dumps(payload), args.out_dir, "solve.json")
    return EXIT_OK


def cmd_stable_set(args) -> int:
    market = _load_market(args.market)
    stable = enumerate_stable(market, max_workers=args.max_enum)
    payload = {"stable_matchings": [rio.matching_to_json(mu) for mu in stable]}
    _emit(rio.dumps(payload), args.out_dir, "stable_set.json")
    return EXIT_OK


def cmd_so(args) -> int:
    market = _load_market(args.market)
    mu = _load_matching(args.matching, market)
    trace = set_offering(market, mu)
    _emit(rio.dumps(rio.trace_to_json(trace)), args.out_dir, "trace.json")
    return EXIT_OK


def cmd_transition(args) -> int:
    market = _load_market(args.market)
    mu = _load_matching(args.matching, market)
    try:
        transition = transition_from_json(rio.load_json(args.transition), market)
    except MarketError as exc:
        raise rio.ParseError(str(exc)) from exc
    outcome = run_scenario(mu, transition)
    out_dir = args.out_dir or Path(".")
    write_scenario(outcome, out_dir)
    if not outcome.report.passed:
        failed = [a.name for a in outcome.report.assertions if not a.passed]
        print(f"theorem violations: {', '.join(failed)}", file=sys.stderr)
        return EXIT_THEOREM
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config(args, args.trials)
    report = run_theorem_suite(cfg, corrupt_oracle=args.corrupt_oracle, jobs=args.jobs)
    _emit(rio.dumps(report), args.out_dir, "verify_report.json")
    return EXIT_THEOREM if report["violations"] else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="restab", description="Many-to-one matching markets and restabilization.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def gen_flags(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--trials", type=int, default=1)
        p.add_argument("--firms", type=int, default=3)
        p.add_argument("--workers", type=int, default=5)
        p.add_argument("--quota-max", type=int, default=2)
        p.add_argument("--density", type=float, default=0.7)
        p.add_argument("--family", choices=FAMILIES, default="responsive")
        p.add_argument("--retire", type=int, default=0, help="workers retired per transition")
        p.add_argument("--add-firms", type=int, default=0, help="firms opened per transition")

    def common(p):
        p.add_argument("--out-dir", type=Path, default=None)
        p.add_argument("--max-enum", type=int, default=None, help="worker cap for brute-force enumeration")

    p = sub.add_parser("gen", help="emit generated market JSON")
    gen_flags(p)
    common(p)
    p.add_argument("--trial", type=int, default=0, help="trial index when writing to stdout")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="firm- and worker-optimal stable matchings")
    p.add_argument("market")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("stable-set", help="enumerate every stable matching")
    p.add_argument("market")
    common(p)
    p.set_defaults(func=cmd_stable_set)

    p = sub.add_parser("so", help="run set offering from a firm quasi-stable matching")
    p.add_argument("market")
    p.add_argument("matching")
    common(p)
    p.set_defaults(func=cmd_so)

    p = sub.add_parser("transition", help="disrupt a stable matching and restabilize")
    p.add_argument("market")
    p.add_argument("matching")
    p.add_argument("transition")
    common(p)
    p.set_defaults(func=cmd_transition)

    p = sub.add_parser("verify", help="run the property suite over generated markets")
    gen_flags(p)
    common(p)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--corrupt-oracle", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"restab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    previous = os.environ.get("RESTAB_MAX_ENUM")
    if getattr(args, "max_enum", None) is not None:
        os.environ["RESTAB_MAX_ENUM"] = str(args.max_enum)
    try:
        return _dispatch(args)
    finally:
        if previous is None:
            os.environ.pop("RESTAB_MAX_ENUM", None)
        else:
            os.environ["RESTAB_MAX_ENUM"] = previous


def _dispatch(args) -> int:
    try:
        return args.func(args)
    except (rio.ParseError, ValueError) as exc:
        if isinstance(exc, (NotFirmQuasiStable, PreconditionError)):
            print(f"restab: precondition failed: {exc}", file=sys.stderr)
            return EXIT_PRECONDITION
        print(f"restab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SizeGuardError as exc:
        print(f"restab: precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
