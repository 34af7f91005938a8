"""Markets, preferences, matchings and the stability predicates.

Firms hold a quota and either a responsive ranking of individual workers or an
explicit strict ranking of worker subsets. Workers rank firms; any firm left off
a worker's list is unacceptable to that worker.

Every preference is turned into a total order on subsets through
``FirmPreference.subset_key`` (larger keys are better). The responsive
completion orders acceptable sets by the best worker of their symmetric
difference, which agrees with lexicographic comparison of sorted rank vectors
on equal-size sets and is substitutable and quota-separable by construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Union

FirmId = int
WorkerId = int
Partner = Optional[FirmId]

DEFAULT_MAX_SUBSTITUTABLE = 12
DEFAULT_MAX_SEPARABLE = 10
DEFAULT_MAX_FQS_SUBSETS = 12


class MarketError(ValueError):
    """Malformed market or matching: unknown ids, duplicates, bad quotas."""


class SizeGuardError(RuntimeError):
    """An exhaustive check was asked to run on an instance above its cap."""


def powerset(items: Iterable[int], max_size: int | None = None) -> Iterator[frozenset[int]]:
    items = sorted(items)
    top = len(items) if max_size is None else min(max_size, len(items))
    for k in range(top + 1):
        for combo in itertools.combinations(items, k):
            yield frozenset(combo)


def _guard(n: int, cap: int, what: str) -> None:
    if n > cap:
        raise SizeGuardError(f"{what}: {n} workers exceeds the cap of {cap}")


class FirmPreference:
    quota: int

    def choice(self, available: frozenset[WorkerId]) -> frozenset[WorkerId]:
        raise NotImplementedError

    def subset_key(self, subset: frozenset[WorkerId]) -> tuple:
        raise NotImplementedError

    def is_acceptable(self, worker: WorkerId) -> bool:
        return self.subset_key(frozenset((worker,))) > self.subset_key(frozenset())

    def prefers(self, a: frozenset[WorkerId], b: frozenset[WorkerId]) -> bool:
        """Strict preference of ``a`` over ``b``."""
        return self.subset_key(a) > self.subset_key(b)

    def mentioned_workers(self) -> frozenset[WorkerId]:
        raise NotImplementedError

    def restrict(self, workers: frozenset[WorkerId]) -> "FirmPreference":
        """The same order restricted to subsets of ``workers``."""
        raise NotImplementedError


@dataclass(frozen=True)
class Responsive(FirmPreference):
    quota: int
    ranking: tuple[WorkerId, ...]
    _position: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "ranking", tuple(self.ranking))
        if self.quota < 1:
            raise MarketError(f"quota must be at least 1, got {self.quota}")
        if len(set(self.ranking)) != len(self.ranking):
            raise MarketError(f"duplicate worker in ranking {self.ranking}")
        object.__setattr__(self, "_position", {w: i for i, w in enumerate(self.ranking)})

    def choice(self, available: frozenset[WorkerId]) -> frozenset[WorkerId]:
        pos = self._position
        good = sorted((w for w in available if w in pos), key=pos.__getitem__)
        return frozenset(good[: self.quota])

    def is_acceptable(self, worker: WorkerId) -> bool:
        return worker in self._position

    def subset_key(self, subset: frozenset[WorkerId]) -> tuple:
        if len(subset) > self.quota:
            return (-1, 0, (), tuple(sorted(subset)))
        bad = sorted(w for w in subset if w not in self._position)
        bits = tuple(int(w in subset) for w in self.ranking)
        # ties among sets with unacceptable members broken by id, never reached by choice
        return (0, -len(bad), bits, tuple(-w for w in bad))

    def mentioned_workers(self) -> frozenset[WorkerId]:
        return frozenset(self.ranking)

    def restrict(self, workers: frozenset[WorkerId]) -> "Responsive":
        return Responsive(self.quota, tuple(w for w in self.ranking if w in workers))


@dataclass(frozen=True)
class ExplicitSubsets(FirmPreference):
    """Strict ranking of subsets, best first; unlisted sets rank below everything listed."""

    quota: int
    order: tuple[frozenset[WorkerId], ...]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        order = tuple(frozenset(s) for s in self.order)
        object.__setattr__(self, "order", order)
        if self.quota < 1:
            raise MarketError(f"quota must be at least 1, got {self.quota}")
        if len(set(order)) != len(order):
            raise MarketError("duplicate subset in explicit order")
        if frozenset() not in order:
            raise MarketError("explicit order must rank the empty set")
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(order)})

    def choice(self, available: frozenset[WorkerId]) -> frozenset[WorkerId]:
        for s in self.order:
            if len(s) <= self.quota and s <= available:
                return s
        raise AssertionError("unreachable: the empty set is always listed")

    def subset_key(self, subset: frozenset[WorkerId]) -> tuple:
        i = self._index.get(subset)
        if i is None:
            return (-1, tuple(sorted(subset)))
        return (0, len(self.order) - i)

    def mentioned_workers(self) -> frozenset[WorkerId]:
        return frozenset().union(*self.order)

    def restrict(self, workers: frozenset[WorkerId]) -> "ExplicitSubsets":
        return ExplicitSubsets(self.quota, tuple(s for s in self.order if s <= workers))


@dataclass(frozen=True)
class Market:
    firms: Mapping[FirmId, FirmPreference]
    workers: Mapping[WorkerId, tuple[FirmId, ...]]

    def __post_init__(self) -> None:
        firms = dict(sorted(self.firms.items()))
        workers = {w: tuple(r) for w, r in sorted(self.workers.items())}
        object.__setattr__(self, "firms", firms)
        object.__setattr__(self, "workers", workers)
        if not firms or not workers:
            raise MarketError("a market needs at least one firm and one worker")
        for w, ranking in workers.items():
            if len(set(ranking)) != len(ranking):
                raise MarketError(f"worker {w}: duplicate firm in ranking")
            unknown = set(ranking) - firms.keys()
            if unknown:
                raise MarketError(f"worker {w} ranks unknown firms {sorted(unknown)}")
        for f, pref in firms.items():
            unknown = pref.mentioned_workers() - workers.keys()
            if unknown:
                raise MarketError(f"firm {f} ranks unknown workers {sorted(unknown)}")
            if isinstance(pref, ExplicitSubsets):
                missing = [s for s in powerset(workers, pref.quota) if s not in pref._index]
                if missing:
                    raise MarketError(
                        f"firm {f}: explicit order misses {len(missing)} subsets of size <= quota"
                    )
        ranks = {w: {f: len(r) - i for i, f in enumerate(r)} for w, r in workers.items()}
        object.__setattr__(self, "_worker_rank", ranks)
        object.__setattr__(self, "_choice_cache", {})

    @property
    def firm_ids(self) -> list[FirmId]:
        return list(self.firms)

    @property
    def worker_ids(self) -> list[WorkerId]:
        return list(self.workers)

    def worker_key(self, worker: WorkerId, firm: Partner) -> int:
        """Rank of ``firm`` for ``worker``: larger is better, unmatched is 0."""
        if firm is None:
            return 0
        r = self._worker_rank[worker].get(firm)
        if r is not None:
            return r
        # unacceptable firms sit below unemployment, lower ids first
        return -1 - firm

    def worker_prefers(self, worker: WorkerId, a: Partner, b: Partner) -> bool:
        return self.worker_key(worker, a) > self.worker_key(worker, b)

    def worker_accepts(self, worker: WorkerId, firm: FirmId) -> bool:
        return firm in self._worker_rank[worker]

    def choose(self, firm: FirmId, available: Iterable[WorkerId]) -> frozenset[WorkerId]:
        available = frozenset(available)
        cache = self._choice_cache
        key = (firm, available)
        hit = cache.get(key)
        if hit is None:
            hit = self.firms[firm].choice(available)
            cache[key] = hit
        return hit


def choice(firm: FirmId, available: Iterable[WorkerId], market: Market) -> frozenset[WorkerId]:
    """Firm ``firm``'s most preferred subset of ``available``."""
    if firm not in market.firms:
        raise MarketError(f"unknown firm {firm}")
    available = frozenset(available)
    unknown = available - market.workers.keys()
    if unknown:
        raise MarketError(f"unknown workers {sorted(unknown)}")
    return market.choose(firm, available)


class Matching:
    """Worker to firm assignment; the firm view is derived from it."""

    __slots__ = ("_assignment", "_firm_view", "_hash")

    def __init__(self, assignment: Mapping[WorkerId, Partner]):
        self._assignment = dict(sorted(assignment.items()))
        self._firm_view: dict[FirmId, frozenset[WorkerId]] | None = None
        self._hash: int | None = None

    @classmethod
    def empty(cls, market: Market) -> "Matching":
        return cls({w: None for w in market.workers})

    @classmethod
    def from_firm_view(cls, market: Market, view: Mapping[FirmId, Iterable[WorkerId]]) -> "Matching":
        assignment: dict[WorkerId, Partner] = {w: None for w in market.workers}
        for f, ws in view.items():
            for w in ws:
                if assignment[w] is not None:
                    raise MarketError(f"worker {w} assigned twice")
                assignment[w] = f
        return cls(assignment)

    @property
    def assignment(self) -> dict[WorkerId, Partner]:
        return dict(self._assignment)

    def __getitem__(self, worker: WorkerId) -> Partner:
        return self._assignment[worker]

    def partner(self, worker: WorkerId) -> Partner:
        return self._assignment.get(worker)

    def workers(self) -> list[WorkerId]:
        return list(self._assignment)

    def items(self):
        return self._assignment.items()

    def firm(self, firm: FirmId) -> frozenset[WorkerId]:
        if self._firm_view is None:
            view: dict[FirmId, set[WorkerId]] = {}
            for w, f in self._assignment.items():
                if f is not None:
                    view.setdefault(f, set()).add(w)
            self._firm_view = {f: frozenset(ws) for f, ws in view.items()}
        return self._firm_view.get(firm, frozenset())

    def restrict(self, workers: Iterable[WorkerId]) -> "Matching":
        keep = set(workers)
        return Matching({w: f for w, f in self._assignment.items() if w in keep})

    def sort_key(self) -> tuple:
        return tuple((w, -1 if f is None else f) for w, f in self._assignment.items())

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Matching) and self._assignment == other._assignment

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(tuple(self._assignment.items()))
        return self._hash

    def __repr__(self) -> str:
        return f"Matching({self._assignment})"


def check_matching(mu: Matching, market: Market) -> None:
    if set(mu.workers()) != set(market.workers):
        raise MarketError("matching does not cover exactly the market's workers")
    for w, f in mu.items():
        if f is not None and f not in market.firms:
            raise MarketError(f"worker {w} matched to unknown firm {f}")


def is_acceptable_coalition(coalition: Iterable[WorkerId], firm: FirmId, market: Market) -> bool:
    coalition = frozenset(coalition)
    if firm not in market.firms:
        raise MarketError(f"unknown firm {firm}")
    if coalition - market.workers.keys():
        raise MarketError("coalition has unknown workers")
    pref = market.firms[firm]
    if not pref.prefers(coalition, frozenset()):
        return False
    return all(market.worker_accepts(w, firm) for w in coalition)


def is_individually_rational(mu: Matching, market: Market) -> bool:
    for w, f in mu.items():
        if f is not None and not market.worker_accepts(w, f):
            return False
    return all(market.choose(f, mu.firm(f)) == mu.firm(f) for f in market.firms)


def envy_set(firm: FirmId, mu: Matching, market: Market) -> frozenset[WorkerId]:
    """Workers who strictly prefer ``firm`` to their current partner."""
    return frozenset(w for w, f in mu.items() if market.worker_prefers(w, firm, f))


def blocking_pairs(mu: Matching, market: Market) -> set[tuple[WorkerId, FirmId]]:
    pairs = set()
    for f in market.firms:
        held = mu.firm(f)
        for w in envy_set(f, mu, market):
            if w in market.choose(f, held | {w}):
                pairs.add((w, f))
    return pairs


def is_stable(mu: Matching, market: Market) -> bool:
    if not is_individually_rational(mu, market):
        return False
    for f in market.firms:
        held = mu.firm(f)
        for w in envy_set(f, mu, market):
            if w in market.choose(f, held | {w}):
                return False
    return True


def is_firm_quasi_stable(
    mu: Matching,
    market: Market,
    *,
    exhaustive: bool | None = None,
    max_subset_workers: int = DEFAULT_MAX_FQS_SUBSETS,
) -> bool:
    """Individually rational, and no firm fires anyone when shown envious workers.

    For substitutable preferences, a held worker dropped from ``held | S`` is also
    dropped from ``held | envy`` for the full envy set, so one check per firm is
    enough. ``exhaustive=None`` uses that shortcut for responsive firms and scans
    every nonempty subset of the envy set for explicit ones.
    """
    if not is_individually_rational(mu, market):
        return False
    for f, pref in market.firms.items():
        envious = envy_set(f, mu, market)
        if not envious:
            continue
        held = mu.firm(f)
        scan = exhaustive if exhaustive is not None else isinstance(pref, ExplicitSubsets)
        if not scan:
            if not held <= market.choose(f, held | envious):
                return False
            continue
        _guard(len(envious), max_subset_workers, "firm quasi-stability subset scan")
        for s in powerset(envious):
            if s and not held <= market.choose(f, held | s):
                return False
    return True


def _workers_of(workers: Market | Iterable[WorkerId]) -> list[WorkerId]:
    return list(workers.workers) if isinstance(workers, Market) else sorted(workers)


def validate_substitutable(
    pref: FirmPreference,
    workers: Market | Iterable[WorkerId],
    *,
    exhaustive: bool = False,
    max_workers: int = DEFAULT_MAX_SUBSTITUTABLE,
) -> bool:
    """Whether a chosen worker stays chosen after any other worker is removed."""
    if isinstance(pref, Responsive) and not exhaustive:
        return True
    ws = _workers_of(workers)
    _guard(len(ws), max_workers, "substitutability check")
    for s in powerset(ws):
        chosen = pref.choice(s)
        for w in chosen:
            for other in s - {w}:
                if w not in pref.choice(s - {other}):
                    return False
    return True


def validate_q_separable(
    pref: FirmPreference,
    workers: Market | Iterable[WorkerId],
    *,
    exhaustive: bool = False,
    max_workers: int = DEFAULT_MAX_SEPARABLE,
) -> bool:
    if isinstance(pref, Responsive) and not exhaustive:
        return True
    ws = _workers_of(workers)
    _guard(len(ws), max_workers, "quota-separability check")
    q = pref.quota
    empty_key = pref.subset_key(frozenset())
    good = {w: pref.subset_key(frozenset((w,))) > empty_key for w in ws}
    for s in powerset(ws, q - 1):
        base = pref.subset_key(s)
        for w in ws:
            if w in s:
                continue
            if (pref.subset_key(s | {w}) > base) != good[w]:
                return False
    if isinstance(pref, ExplicitSubsets):
        listed_large = (s for s in pref.order if len(s) > q)
    else:
        listed_large = (s for s in powerset(ws) if len(s) > q)
    return all(pref.subset_key(s) < empty_key for s in listed_large)
