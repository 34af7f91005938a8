"""Worker-side lattice operators and the unanimity and Blair orders."""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Optional, Sequence

from .market import FirmId, Market, Matching, WorkerId, is_stable


@dataclass(frozen=True)
class StableSet:
    market: Market
    matchings: tuple[Matching, ...]

    def __post_init__(self) -> None:
        unique = sorted(set(self.matchings), key=Matching.sort_key)
        object.__setattr__(self, "matchings", tuple(unique))

    def __iter__(self):
        return iter(self.matchings)

    def __len__(self) -> int:
        return len(self.matchings)

    def __contains__(self, mu: object) -> bool:
        return mu in self.matchings

    def check(self) -> bool:
        return all(is_stable(mu, self.market) for mu in self.matchings)


def _pointwise(mu1: Matching, mu2: Matching, market: Market, best: bool) -> Matching:
    out = {}
    for w in market.workers:
        a, b = mu1[w], mu2[w]
        if best:
            out[w] = a if market.worker_prefers(w, a, b) else b
        else:
            out[w] = a if market.worker_prefers(w, b, a) else b
    return Matching(out)


def join_workers(mu1: Matching, mu2: Matching, market: Market) -> Matching:
    """Each worker keeps the better of their two partners."""
    return _pointwise(mu1, mu2, market, best=True)


def meet_workers(mu1: Matching, mu2: Matching, market: Market) -> Matching:
    """Each worker keeps the worse of their two partners."""
    return _pointwise(mu1, mu2, market, best=False)


def join_all(matchings: Iterable[Matching], market: Market) -> Matching:
    return reduce(lambda a, b: join_workers(a, b, market), matchings)


def meet_all(matchings: Iterable[Matching], market: Market) -> Matching:
    return reduce(lambda a, b: meet_workers(a, b, market), matchings)


def dominates_workers(
    mu1: Matching,
    mu2: Matching,
    market: Market,
    workers: Optional[Iterable[WorkerId]] = None,
) -> bool:
    """Every worker (of ``market``, or of ``workers``) weakly prefers ``mu1``."""
    ws = market.workers if workers is None else workers
    return all(market.worker_key(w, mu1.partner(w)) >= market.worker_key(w, mu2.partner(w)) for w in ws)


def dominates_firms(
    mu1: Matching,
    mu2: Matching,
    market: Market,
    firms: Optional[Iterable[FirmId]] = None,
) -> bool:
    fs = market.firms if firms is None else firms
    for f in fs:
        pref = market.firms[f]
        if pref.subset_key(mu1.firm(f)) < pref.subset_key(mu2.firm(f)):
            return False
    return True


def blair_dominates(mu1: Matching, mu2: Matching, firms: Iterable[FirmId], market: Market) -> bool:
    """Choosing from the union of both assignments gives back ``mu1``'s, for each firm."""
    return all(market.choose(f, mu1.firm(f) | mu2.firm(f)) == mu1.firm(f) for f in firms)


def upper_set(stable: StableSet | Sequence[Matching], mu_prime: Matching, market: Market) -> StableSet:
    """Stable matchings that every worker weakly prefers to ``mu_prime``."""
    members = [mu for mu in stable if dominates_workers(mu, mu_prime, market)]
    return StableSet(market, tuple(members))


def worker_minimum(matchings: Sequence[Matching], market: Market) -> Optional[Matching]:
    """The member every other member worker-dominates, if there is one."""
    for mu in matchings:
        if all(dominates_workers(nu, mu, market) for nu in matchings):
            return mu
    return None


def worker_maximum(matchings: Sequence[Matching], market: Market) -> Optional[Matching]:
    for mu in matchings:
        if all(dominates_workers(mu, nu, market) for nu in matchings):
            return mu
    return None


def firm_maximum(matchings: Sequence[Matching], market: Market) -> Optional[Matching]:
    for mu in matchings:
        if all(dominates_firms(mu, nu, market) for nu in matchings):
            return mu
    return None


def firm_minimum(matchings: Sequence[Matching], market: Market) -> Optional[Matching]:
    for mu in matchings:
        if all(dominates_firms(nu, mu, market) for nu in matchings):
            return mu
    return None
