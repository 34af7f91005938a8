"""Deferred acceptance, the set offering restabilization loop, and brute-force oracles."""

from __future__ import annotations

import itertools
import os
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .lattice import StableSet
from .market import (
    FirmId,
    Market,
    Matching,
    Partner,
    SizeGuardError,
    WorkerId,
    envy_set,
    is_firm_quasi_stable,
    is_individually_rational,
    is_stable,
)

DEFAULT_MAX_ENUM_WORKERS = 7
DEFAULT_MAX_ENUM_FIRMS = 5


class NotFirmQuasiStable(ValueError):
    """Set offering was handed a matching outside its domain."""


def enumeration_cap() -> int:
    """Worker cap for brute-force enumeration; ``RESTAB_MAX_ENUM`` overrides it."""
    raw = os.environ.get("RESTAB_MAX_ENUM")
    return int(raw) if raw else DEFAULT_MAX_ENUM_WORKERS


def _check_size(market: Market, max_workers: Optional[int], max_firms: int) -> None:
    cap = enumeration_cap() if max_workers is None else max_workers
    if len(market.workers) > cap:
        raise SizeGuardError(f"{len(market.workers)} workers exceeds enumeration cap {cap}")
    if len(market.firms) > max_firms:
        raise SizeGuardError(f"{len(market.firms)} firms exceeds enumeration cap {max_firms}")


def _individually_rational_matchings(market: Market) -> Iterator[Matching]:
    # Only mutually acceptable pairs can appear, and under substitutability a firm
    # that rejects part of a set rejects it from every superset, so both prune.
    workers = list(market.workers)
    options = {
        w: [None] + [f for f in market.workers[w] if market.firms[f].is_acceptable(w)]
        for w in workers
    }
    held: dict[FirmId, frozenset[WorkerId]] = {f: frozenset() for f in market.firms}
    assignment: dict[WorkerId, Partner] = {}

    def extend(i: int) -> Iterator[Matching]:
        if i == len(workers):
            yield Matching(assignment)
            return
        w = workers[i]
        for f in options[w]:
            if f is None:
                assignment[w] = None
                yield from extend(i + 1)
                continue
            before = held[f]
            grown = before | {w}
            if len(grown) > market.firms[f].quota or market.choose(f, grown) != grown:
                continue
            held[f] = grown
            assignment[w] = f
            yield from extend(i + 1)
            held[f] = before
        assignment.pop(w, None)

    yield from extend(0)


def all_matchings(market: Market) -> Iterator[Matching]:
    """Every worker-to-(firm or nobody) assignment within quotas, without pruning."""
    workers = list(market.workers)
    choices = [None] + list(market.firms)
    for combo in itertools.product(choices, repeat=len(workers)):
        counts: dict[FirmId, int] = defaultdict(int)
        ok = True
        for f in combo:
            if f is not None:
                counts[f] += 1
                if counts[f] > market.firms[f].quota:
                    ok = False
                    break
        if ok:
            yield Matching(dict(zip(workers, combo)))


def enumerate_individually_rational(
    market: Market, *, max_workers: Optional[int] = None, max_firms: int = DEFAULT_MAX_ENUM_FIRMS
) -> list[Matching]:
    _check_size(market, max_workers, max_firms)
    return list(_individually_rational_matchings(market))


def enumerate_stable(
    market: Market, *, max_workers: Optional[int] = None, max_firms: int = DEFAULT_MAX_ENUM_FIRMS
) -> StableSet:
    _check_size(market, max_workers, max_firms)
    return StableSet(market, tuple(mu for mu in _individually_rational_matchings(market) if is_stable(mu, market)))


def enumerate_fqs(
    market: Market, *, max_workers: Optional[int] = None, max_firms: int = DEFAULT_MAX_ENUM_FIRMS
) -> list[Matching]:
    _check_size(market, max_workers, max_firms)
    found = [mu for mu in _individually_rational_matchings(market) if is_firm_quasi_stable(mu, market)]
    return sorted(found, key=Matching.sort_key)


def achievable_firms(
    worker: WorkerId, market: Market, stable: Optional[StableSet] = None
) -> set[Partner]:
    """Partners (``None`` for unmatched) that ``worker`` has in some stable matching."""
    if stable is None:
        stable = enumerate_stable(market)
    return {mu[worker] for mu in stable}


def da_firm_proposing(market: Market) -> Matching:
    """Firm-proposing deferred acceptance; firms offer whole choice sets each round."""
    available = {f: frozenset(w for w in market.workers if pref.is_acceptable(w)) for f, pref in market.firms.items()}
    while True:
        received: dict[WorkerId, list[FirmId]] = defaultdict(list)
        for f in market.firms:
            for w in market.choose(f, available[f]):
                received[w].append(f)
        held: dict[WorkerId, FirmId] = {}
        rejected = False
        for w, firms in received.items():
            best = max(firms, key=lambda f: market.worker_key(w, f))
            for f in firms:
                if f != best or not market.worker_accepts(w, f):
                    available[f] = available[f] - {w}
                    rejected = True
            if market.worker_accepts(w, best):
                held[w] = best
        if not rejected:
            return Matching({w: held.get(w) for w in market.workers})


def da_worker_proposing(market: Market, order: Optional[Iterable[WorkerId]] = None) -> Matching:
    """Worker-proposing deferred acceptance, one proposal at a time.

    Free workers queue in ``order`` (default: by id); a rejected worker rejoins
    the back of the queue.
    """
    queue = deque(market.workers if order is None else order)
    next_choice = {w: 0 for w in market.workers}
    held: dict[FirmId, frozenset[WorkerId]] = {f: frozenset() for f in market.firms}
    while queue:
        w = queue.popleft()
        ranking = market.workers[w]
        if next_choice[w] >= len(ranking):
            continue
        f = ranking[next_choice[w]]
        next_choice[w] += 1
        pool = held[f] | {w}
        keep = market.choose(f, pool)
        held[f] = keep
        queue.extend(sorted(pool - keep))
    return Matching.from_firm_view(market, held)


@dataclass(frozen=True)
class SOIteration:
    offers: dict[FirmId, frozenset[WorkerId]]
    available: dict[FirmId, frozenset[WorkerId]]
    matching: Matching

    @property
    def has_offers(self) -> bool:
        return any(self.offers.values())


@dataclass(frozen=True)
class SOTrace:
    input: Matching
    iterations: tuple[SOIteration, ...]

    @property
    def output(self) -> Matching:
        return self.iterations[-1].matching

    @property
    def matchings(self) -> list[Matching]:
        return [self.input] + [it.matching for it in self.iterations]

    @property
    def chain_length(self) -> int:
        """Rounds in which at least one offer went out."""
        return sum(it.has_offers for it in self.iterations)


def fqs_violation(mu: Matching, market: Market) -> Optional[str]:
    if not is_individually_rational(mu, market):
        return "matching is not individually rational"
    if is_firm_quasi_stable(mu, market):
        return None
    for f in market.firms:
        held = mu.firm(f)
        envious = envy_set(f, mu, market)
        fired = held - market.choose(f, held | envious)
        if fired:
            return f"firm {f} would drop {sorted(fired)} when offered envious workers {sorted(envious)}"
    return "firm quasi-stability fails on a proper subset of some envy set"


def initial_available(market: Market, mu0: Matching) -> dict[FirmId, frozenset[WorkerId]]:
    """Workers outside each firm whose addition improves some under-quota set.

    Under quota-separability this is every individually acceptable outsider.
    """
    return {
        f: frozenset(w for w in market.workers if w not in mu0.firm(f) and pref.is_acceptable(w))
        for f, pref in market.firms.items()
    }


def set_offering(market: Market, mu0: Matching, *, check: bool = True) -> SOTrace:
    """Restabilize a firm quasi-stable matching by rounds of simultaneous firm offers."""
    if check:
        problem = fqs_violation(mu0, market)
        if problem is not None:
            raise NotFirmQuasiStable(problem)
    available = initial_available(market, mu0)
    budget = sum(len(a) for a in available.values()) + 1
    current = mu0
    iterations: list[SOIteration] = []
    for _ in range(budget):
        offers = {}
        for f in market.firms:
            held = current.firm(f)
            offers[f] = market.choose(f, available[f] | held) - held
        if not any(offers.values()):
            iterations.append(SOIteration(offers, available, current))
            return SOTrace(mu0, tuple(iterations))
        received: dict[WorkerId, list[FirmId]] = defaultdict(list)
        for f, ws in offers.items():
            for w in ws:
                received[w].append(f)
        assignment = current.assignment
        for w, firms in received.items():
            options = [current[w], *firms]
            assignment[w] = max(options, key=lambda f: market.worker_key(w, f))
        current = Matching(assignment)
        iterations.append(SOIteration(offers, available, current))
        available = {f: available[f] - offers[f] for f in market.firms}
    raise RuntimeError("set offering exceeded its iteration bound")
