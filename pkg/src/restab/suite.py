"""Batch property checks over generated markets, and single-scenario runs."""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from . import io as rio
from .algorithms import (
    achievable_firms,
    da_firm_proposing,
    da_worker_proposing,
    enumerate_fqs,
    enumerate_stable,
    set_offering,
)
from .disruption import (
    FirmEntry,
    MarketTransition,
    TransitionReport,
    disrupt,
    restabilize,
    verify_transition_theorems,
)
from .generate import GenerationError, ScenarioConfig, generate_market, generate_transition
from .lattice import (
    dominates_workers,
    firm_maximum,
    firm_minimum,
    join_workers,
    meet_workers,
    upper_set,
    worker_maximum,
    worker_minimum,
)
from .market import Market, Matching, is_firm_quasi_stable, is_stable

MAX_WITNESSES = 5


def check_market(market: Market, *, corrupt_oracle: bool = False) -> dict[str, Optional[Any]]:
    """Run every market-level property; map each name to ``None`` or a failure detail."""
    out: dict[str, Optional[Any]] = {}
    stable = list(enumerate_stable(market))
    fqs = enumerate_fqs(market)
    fqs_set = set(fqs)
    firm_opt = da_firm_proposing(market)
    worker_opt = da_worker_proposing(market)

    def first(name: str, failures) -> None:
        out[name] = next(iter(failures), None)

    da_bad = []
    if firm_maximum(stable, market) != firm_opt:
        da_bad.append({"side": "firm", "da": _plain(firm_opt)})
    if worker_maximum(stable, market) != worker_opt:
        da_bad.append({"side": "worker", "da": _plain(worker_opt)})
    first("da_oracle_agreement", da_bad)
    first("stable_implies_fqs", ({"stable": _plain(mu)} for mu in stable if mu not in fqs_set))
    first(
        "lattice_closure",
        (
            {"a": _plain(a), "b": _plain(b)}
            for a in stable
            for b in stable
            if not (is_stable(join_workers(a, b, market), market) and is_stable(meet_workers(a, b, market), market))
        ),
    )
    first(
        "rural_hospitals",
        (
            {"firm": f, "a": _plain(a), "b": _plain(b)}
            for a in stable
            for b in stable
            for f, pref in market.firms.items()
            if len(a.firm(f)) != len(b.firm(f)) or (len(a.firm(f)) < pref.quota and a.firm(f) != b.firm(f))
        ),
    )
    polar = []
    if firm_minimum(stable, market) != worker_opt or worker_minimum(stable, market) != firm_opt:
        polar.append({"firm_optimal": _plain(firm_opt), "worker_optimal": _plain(worker_opt)})
    first("polarization", polar)
    first(
        "mixed_join_stability",
        (
            {"stable": _plain(a), "fqs": _plain(b)}
            for a in stable
            for b in fqs
            if not is_stable(join_workers(a, b, market), market)
        ),
    )

    failures: dict[str, list] = defaultdict(list)
    per_worker_outputs: dict[tuple, set] = defaultdict(set)
    achievable = {w: achievable_firms(w, market, stable) for w in market.workers}
    for mu0 in fqs:
        ups = list(upper_set(stable, mu0, market))
        if not ups or any(
            join_workers(a, b, market) not in ups or meet_workers(a, b, market) not in ups for a in ups for b in ups
        ):
            failures["sublattice_upper_set"].append({"input": _plain(mu0)})
        trace = set_offering(market, mu0)
        result = trace.output
        seq = trace.matchings
        if not is_stable(result, market):
            failures["so_output_stable"].append({"input": _plain(mu0)})
        if not all(is_firm_quasi_stable(mu, market) for mu in seq):
            failures["so_intermediates_fqs"].append({"input": _plain(mu0)})
        if not all(dominates_workers(b, a, market) for a, b in zip(seq, seq[1:])):
            failures["so_worker_monotone"].append({"input": _plain(mu0)})
        if not all(dominates_workers(mu, step, market) for mu in ups for step in seq):
            failures["so_dominance_preserved"].append({"input": _plain(mu0)})
        if worker_minimum(ups, market) != result:
            failures["so_worst_point"].append({"input": _plain(mu0), "output": _plain(result)})
        expected = mu0 if corrupt_oracle else join_workers(mu0, firm_opt, market)
        if result != expected:
            failures["so_closed_form"].append(
                {"input": _plain(mu0), "output": _plain(result), "expected": _plain(expected)}
            )
        for w in market.workers:
            want = mu0[w] if mu0[w] in achievable[w] else firm_opt[w]
            if result[w] != want:
                failures["so_per_worker_achievable"].append({"input": _plain(mu0), "worker": w})
            per_worker_outputs[(w, mu0[w])].add(result[w])
    for name in (
        "sublattice_upper_set",
        "so_output_stable",
        "so_intermediates_fqs",
        "so_worker_monotone",
        "so_dominance_preserved",
        "so_worst_point",
        "so_closed_form",
        "so_per_worker_achievable",
    ):
        first(name, failures[name])
    first(
        "so_per_worker_independence",
        (
            {"worker": w, "input_partner": f, "outputs": sorted(o, key=lambda x: -1 if x is None else x)}
            for (w, f), o in sorted(per_worker_outputs.items(), key=lambda kv: (kv[0][0], -1 if kv[0][1] is None else kv[0][1]))
            if len(o) > 1
        ),
    )
    return out


def check_transition(transition: MarketTransition) -> dict[str, Optional[Any]]:
    """Run the transition report for every stable matching of the old market."""
    old_stable = list(enumerate_stable(transition.old))
    new_stable = list(enumerate_stable(transition.new))
    out: dict[str, Optional[Any]] = {}
    for mu_old in old_stable:
        report = verify_transition_theorems(mu_old, transition, old_stable=old_stable, new_stable=new_stable)
        for a in report.assertions:
            name = f"transition_{a.name}"
            if not a.passed and out.get(name) is None:
                out[name] = {"old_matching": _plain(mu_old), "witnesses": list(a.witnesses)}
            else:
                out.setdefault(name, None)
    return out


def run_trial(cfg: ScenarioConfig, trial: int, corrupt_oracle: bool = False) -> dict:
    try:
        market = generate_market(cfg, trial)
        transition = generate_transition(cfg, trial, market) if cfg.transition_spec else None
    except GenerationError as exc:
        return {"trial": trial, "skipped": str(exc)}
    results = check_market(market, corrupt_oracle=corrupt_oracle)
    payload: dict[str, Any] = {"market": rio.market_to_json(market)}
    if transition is not None:
        results.update(check_transition(transition))
        payload["new_market"] = rio.market_to_json(transition.new)
    return {"trial": trial, "results": results, "instance": payload}


def _run_trial_args(args: tuple) -> dict:
    return run_trial(*args)


def run_theorem_suite(cfg: ScenarioConfig, *, corrupt_oracle: bool = False, jobs: int = 1) -> dict:
    """Count passes and failures per property over ``cfg.n_trials`` generated markets."""
    args = [(cfg, t, corrupt_oracle) for t in range(cfg.n_trials)]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_trial_args, args, chunksize=max(1, len(args) // (4 * jobs))))
    else:
        outcomes = [run_trial(*a) for a in args]
    outcomes.sort(key=lambda o: o["trial"])

    theorems: dict[str, dict] = {}
    skipped = []
    for outcome in outcomes:
        if "skipped" in outcome:
            skipped.append({"trial": outcome["trial"], "reason": outcome["skipped"]})
            continue
        for name, detail in sorted(outcome["results"].items()):
            entry = theorems.setdefault(name, {"pass": 0, "fail": 0, "witnesses": []})
            if detail is None:
                entry["pass"] += 1
            else:
                entry["fail"] += 1
                if len(entry["witnesses"]) < MAX_WITNESSES:
                    entry["witnesses"].append({"trial": outcome["trial"], "detail": detail, **outcome["instance"]})
    return {
        "config": cfg.to_json(),
        "trials_run": len(outcomes) - len(skipped),
        "skipped": skipped,
        "theorems": dict(sorted(theorems.items())),
        "violations": sum(t["fail"] for t in theorems.values()),
    }


def transition_from_json(obj: Any, market: Market) -> MarketTransition:
    rio._expect_keys(obj, set(), {"retire", "add_firms"}, "transition")
    retire = rio._int_list(obj.get("retire", []), "retire")
    raw_firms = obj.get("add_firms", [])
    if not isinstance(raw_firms, list):
        raise rio.ParseError("add_firms must be a list")
    entrants = []
    for item in raw_firms:
        fid, pref = rio.firm_from_json(item, extra=frozenset({"ranked_by"}))
        ranked_by = item.get("ranked_by", {})
        if not isinstance(ranked_by, dict):
            raise rio.ParseError(f"entrant {fid}: ranked_by must be an object")
        try:
            positions = {int(w): rio._int(p, "ranked_by position") for w, p in ranked_by.items()}
        except ValueError as exc:
            raise rio.ParseError(f"entrant {fid}: {exc}") from exc
        entrants.append(FirmEntry(fid, pref, positions))
    return disrupt(market, retire, entrants)


CSV_COLUMNS = ("trial", "kind", "agent_id", "old_partner", "new_partner", "improved", "chain_length")


def _ids(ws) -> str:
    return " ".join(str(w) for w in sorted(ws))


def partners_csv(mu_old: Matching, transition: MarketTransition, trace, trial: int = 0) -> str:
    old, new = transition.old, transition.new
    result = trace.output
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    chain = trace.chain_length

    def fmt(f) -> str:
        return "" if f is None else str(f)

    for w in old.workers:
        if w not in new.workers:
            writer.writerow([trial, "worker", w, fmt(mu_old[w]), "retired", "", chain])
            continue
        improved = new.worker_prefers(w, result[w], mu_old[w])
        writer.writerow([trial, "worker", w, fmt(mu_old[w]), fmt(result[w]), str(improved).lower(), chain])
    for f in new.firms:
        after = result.firm(f)
        if f in old.firms:
            before = mu_old.firm(f)
            improved = old.firms[f].prefers(after, before)
            writer.writerow([trial, "firm", f, _ids(before), _ids(after), str(improved).lower(), chain])
        else:
            writer.writerow([trial, "firm", f, "", _ids(after), str(bool(after)).lower(), chain])
    return buf.getvalue()


@dataclass(frozen=True)
class ScenarioOutcome:
    trace: Any
    report: TransitionReport
    csv_text: str


def run_scenario(mu_old: Matching, transition: MarketTransition) -> ScenarioOutcome:
    trace = restabilize(mu_old, transition)
    report = verify_transition_theorems(mu_old, transition)
    return ScenarioOutcome(trace, report, partners_csv(mu_old, transition, trace))


def write_scenario(outcome: ScenarioOutcome, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "trace.json").write_text(rio.dumps(rio.trace_to_json(outcome.trace)), encoding="utf-8")
    (out_dir / "report.json").write_text(rio.dumps(outcome.report.to_json()), encoding="utf-8")
    (out_dir / "partners.csv").write_text(outcome.csv_text, encoding="utf-8")


def _plain(mu: Matching) -> dict[str, Optional[int]]:
    return {str(w): f for w, f in mu.items()}
