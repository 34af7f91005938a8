"""Population changes: worker retirement, firm entry, and restabilization afterwards.

A transition runs from an old market to a new one. Comparisons across the two
markets only quantify over agents present in both: surviving workers under the
new preferences, and incumbent firms under the old preferences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .algorithms import SOTrace, enumerate_stable, set_offering
from .lattice import blair_dominates, dominates_workers, firm_maximum, worker_maximum
from .market import (
    DEFAULT_MAX_SUBSTITUTABLE,
    ExplicitSubsets,
    FirmId,
    FirmPreference,
    Market,
    MarketError,
    Matching,
    SizeGuardError,
    WorkerId,
    is_acceptable_coalition,
    is_firm_quasi_stable,
    is_stable,
    powerset,
    validate_q_separable,
    validate_substitutable,
)


class PreconditionError(ValueError):
    """An input matching lacks the stability the operation relies on."""


@dataclass(frozen=True)
class FirmEntry:
    """A new firm plus where it lands in each worker's ranking.

    ``ranked_by`` maps a worker to the 0-based position the firm takes in that
    worker's list; workers not mentioned find the firm unacceptable.
    """

    firm: FirmId
    preference: FirmPreference
    ranked_by: Mapping[WorkerId, int] = field(default_factory=dict)


@dataclass(frozen=True)
class MarketTransition:
    old: Market
    new: Market

    def __post_init__(self) -> None:
        if not set(self.new.workers) <= set(self.old.workers):
            raise MarketError("transition adds workers; only retirements are supported")
        if not set(self.old.firms) <= set(self.new.firms):
            raise MarketError("transition removes firms; only entries are supported")

    @classmethod
    def checked(cls, old: Market, new: Market) -> "MarketTransition":
        if not is_consistent(old, new):
            raise MarketError("markets are not consistent on their common agents")
        return cls(old, new)

    @property
    def survivors(self) -> list[WorkerId]:
        return list(self.new.workers)

    @property
    def retired(self) -> list[WorkerId]:
        return [w for w in self.old.workers if w not in self.new.workers]

    @property
    def incumbents(self) -> list[FirmId]:
        return list(self.old.firms)

    @property
    def entrants(self) -> list[FirmId]:
        return [f for f in self.new.firms if f not in self.old.firms]


def _revalidate(fid: FirmId, pref: FirmPreference, market: Market) -> None:
    if isinstance(pref, ExplicitSubsets):
        if not (validate_substitutable(pref, market) and validate_q_separable(pref, market)):
            raise MarketError(f"firm {fid}: explicit order fails substitutability or separability")


def retire_workers(market: Market, retired: Iterable[WorkerId]) -> MarketTransition:
    retired = frozenset(retired)
    unknown = retired - market.workers.keys()
    if unknown:
        raise MarketError(f"cannot retire unknown workers {sorted(unknown)}")
    survivors = frozenset(market.workers) - retired
    firms = {f: pref.restrict(survivors) for f, pref in market.firms.items()}
    workers = {w: r for w, r in market.workers.items() if w in survivors}
    new = Market(firms, workers)
    for f, pref in new.firms.items():
        _revalidate(f, pref, new)
    return MarketTransition(market, new)


def add_firms(market: Market, entrants: Sequence[FirmEntry]) -> MarketTransition:
    firms = dict(market.firms)
    workers = {w: list(r) for w, r in market.workers.items()}
    for entry in entrants:
        if entry.firm in firms:
            raise MarketError(f"firm id {entry.firm} already exists")
        firms[entry.firm] = entry.preference
        for w, pos in sorted(entry.ranked_by.items()):
            if w not in workers:
                raise MarketError(f"entrant {entry.firm} ranked by unknown worker {w}")
            workers[w].insert(max(0, pos), entry.firm)
    new = Market(firms, {w: tuple(r) for w, r in workers.items()})
    for entry in entrants:
        _revalidate(entry.firm, entry.preference, new)
    return MarketTransition(market, new)


def disrupt(
    market: Market, retire: Iterable[WorkerId] = (), entrants: Sequence[FirmEntry] = ()
) -> MarketTransition:
    """Retire workers, then open firms, as one transition from ``market``."""
    mid = retire_workers(market, retire).new
    return MarketTransition(market, add_firms(mid, entrants).new)


def is_consistent(old: Market, new: Market, *, max_workers: int = DEFAULT_MAX_SUBSTITUTABLE) -> bool:
    """Both markets agree on acceptable coalitions and preferences among shared agents."""
    firms = [f for f in old.firms if f in new.firms]
    workers = [w for w in old.workers if w in new.workers]
    if len(workers) > max_workers:
        raise SizeGuardError(f"{len(workers)} shared workers exceeds consistency cap {max_workers}")
    subsets = list(powerset(workers))
    for f in firms:
        for s in subsets:
            if is_acceptable_coalition(s, f, old) != is_acceptable_coalition(s, f, new):
                return False
        old_order = sorted(subsets, key=old.firms[f].subset_key)
        new_order = sorted(subsets, key=new.firms[f].subset_key)
        if old_order != new_order:
            return False
    for w in workers:
        if sorted(firms, key=lambda f: old.worker_key(w, f)) != sorted(firms, key=lambda f: new.worker_key(w, f)):
            return False
    return True


def leads_to(old: Market, new: Market) -> bool:
    if not set(new.workers) <= set(old.workers) or not set(old.firms) <= set(new.firms):
        return False
    return is_consistent(old, new)


def induce(mu_old: Matching, transition: MarketTransition) -> Matching:
    """Survivors keep their partners; retired workers drop out and entrants start empty."""
    return Matching({w: mu_old[w] for w in transition.new.workers})


def restabilize(mu_old: Matching, transition: MarketTransition, *, check: bool = True) -> SOTrace:
    if check and not is_stable(mu_old, transition.old):
        raise PreconditionError("the pre-disruption matching is not stable in the old market")
    return set_offering(transition.new, induce(mu_old, transition))


@dataclass(frozen=True)
class AssertionResult:
    name: str
    passed: bool
    witnesses: tuple[dict, ...] = ()

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "witnesses": list(self.witnesses)}


@dataclass(frozen=True)
class TransitionReport:
    assertions: tuple[AssertionResult, ...]
    chain_length: int

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def __getitem__(self, name: str) -> AssertionResult:
        for a in self.assertions:
            if a.name == name:
                return a
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "chain_length": self.chain_length,
            "assertions": [a.to_json() for a in self.assertions],
        }


def _result(name: str, witnesses: list[dict]) -> AssertionResult:
    return AssertionResult(name, not witnesses, tuple(witnesses))


def verify_transition_theorems(
    mu_old: Matching,
    transition: MarketTransition,
    *,
    old_stable: Optional[Sequence[Matching]] = None,
    new_stable: Optional[Sequence[Matching]] = None,
) -> TransitionReport:
    """Check how restabilization relates the old stable matching to the new outcome.

    Optimal matchings of both markets come from brute-force enumeration, so the
    report does not rely on deferred acceptance.
    """
    old, new = transition.old, transition.new
    survivors = transition.survivors
    if old_stable is None:
        old_stable = list(enumerate_stable(old))
    if new_stable is None:
        new_stable = list(enumerate_stable(new))
    firm_opt = firm_maximum(new_stable, new)
    worker_opt_new = worker_maximum(new_stable, new)
    worker_opt_old = worker_maximum(old_stable, old)
    if firm_opt is None or worker_opt_new is None or worker_opt_old is None:
        raise PreconditionError("stable set lacks an optimal element; preferences are not substitutable")

    induced = induce(mu_old, transition)
    trace = set_offering(new, induced, check=False)
    so = trace.output
    results = []

    results.append(
        _result(
            "induced_firm_quasi_stable",
            [] if is_firm_quasi_stable(induced, new) else [{"induced": _plain(induced)}],
        )
    )

    bad = [
        {"worker": w, "original": mu_old[w], "restabilized": so[w]}
        for w in survivors
        if new.worker_key(w, so[w]) < new.worker_key(w, mu_old[w])
    ]
    results.append(_result("a_survivors_weakly_improve", bad))

    bad = []
    for f in old.firms:
        picked = old.choose(f, mu_old.firm(f) | so.firm(f))
        if picked != mu_old.firm(f):
            bad.append(
                {
                    "firm": f,
                    "original": sorted(mu_old.firm(f)),
                    "restabilized": sorted(so.firm(f)),
                    "choice_from_union": sorted(picked),
                }
            )
    results.append(_result("b_incumbents_blair_lose", bad))

    bad = [
        {"firm": f, "restabilized": sorted(so.firm(f)), "firm_optimal": sorted(firm_opt.firm(f))}
        for f in transition.entrants
        if so.firm(f) != firm_opt.firm(f)
    ]
    results.append(_result("c_entrants_get_firm_optimal", bad))

    bad = []
    for w in survivors:
        a, b = induced[w], firm_opt[w]
        best = a if new.worker_prefers(w, a, b) else b
        if so[w] != best:
            bad.append({"worker": w, "induced": a, "firm_optimal": b, "restabilized": so[w]})
    results.append(_result("d_per_worker_max", bad))

    outputs = [set_offering(new, induce(mu, transition), check=False).output for mu in old_stable]
    bad = []
    for i, mu1 in enumerate(old_stable):
        for j, mu2 in enumerate(old_stable):
            if i != j and dominates_workers(mu1, mu2, old):
                if not dominates_workers(outputs[i], outputs[j], new):
                    bad.append({"higher": _plain(mu1), "lower": _plain(mu2)})
    results.append(_result("e_monotone_in_old_matching", bad))

    bad = []
    if not dominates_workers(worker_opt_new, worker_opt_old, new, survivors):
        bad.append({"relation": "worker_optimal_improves", "new": _plain(worker_opt_new), "old": _plain(worker_opt_old)})
    if not blair_dominates(worker_opt_old, worker_opt_new, old.firms, old):
        bad.append({"relation": "incumbents_blair_lose", "new": _plain(worker_opt_new), "old": _plain(worker_opt_old)})
    results.append(_result("f_worker_optimal_shift", bad))

    return TransitionReport(tuple(results), trace.chain_length)


def _plain(mu: Matching) -> dict[str, Optional[int]]:
    return {str(w): f for w, f in mu.items()}
