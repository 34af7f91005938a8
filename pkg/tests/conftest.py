from __future__ import annotations

import itertools
from pathlib import Path

import pytest
from hypothesis import strategies as st

from restab.market import ExplicitSubsets, Market, Responsive, powerset

FIXTURES = Path(__file__).parent / "fixtures"

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@st.composite
def markets(draw, max_firms: int = 3, max_workers: int = 4, max_quota: int = 3) -> Market:
    """Small responsive markets with arbitrary acceptability."""
    n_firms = draw(st.integers(1, max_firms))
    n_workers = draw(st.integers(1, max_workers))
    workers = list(range(n_workers))
    firms = {}
    for f in range(n_firms):
        quota = draw(st.integers(1, max_quota))
        ranking = draw(st.permutations(workers))
        keep = draw(st.integers(0, n_workers))
        firms[f] = Responsive(quota, tuple(ranking[:keep]))
    prefs = {}
    for w in workers:
        ranking = draw(st.permutations(list(range(n_firms))))
        keep = draw(st.integers(0, n_firms))
        prefs[w] = tuple(ranking[:keep])
    return Market(firms, prefs)


def crossed_market() -> Market:
    """Two workers and two unit-quota firms with opposed preferences."""
    return Market(
        {0: Responsive(1, (1, 0)), 1: Responsive(1, (0, 1))},
        {0: (0, 1), 1: (1, 0)},
    )


def two_crossed_blocks() -> Market:
    """Two independent copies of the crossed market, giving four stable matchings."""
    return Market(
        {
            0: Responsive(1, (1, 0)),
            1: Responsive(1, (0, 1)),
            2: Responsive(1, (3, 2)),
            3: Responsive(1, (2, 3)),
        },
        {0: (0, 1), 1: (1, 0), 2: (2, 3), 3: (3, 2)},
    )


def responsive_as_explicit(pref: Responsive, workers: list[int]) -> ExplicitSubsets:
    """The responsive order written out as an explicit subset list."""
    subsets = list(powerset(workers, pref.quota))
    subsets.sort(key=pref.subset_key, reverse=True)
    return ExplicitSubsets(pref.quota, tuple(subsets))


def brute_choice(order: list[frozenset[int]], quota: int, available: frozenset[int]) -> frozenset[int]:
    """Best listed subset of ``available`` within quota, by scanning all of its subsets."""
    best, best_pos = frozenset(), order.index(frozenset())
    for k in range(min(quota, len(available)) + 1):
        for combo in itertools.combinations(sorted(available), k):
            s = frozenset(combo)
            if s in order and order.index(s) < best_pos:
                best, best_pos = s, order.index(s)
    return best


def brute_responsive_choice(ranking: tuple[int, ...], quota: int, available: frozenset[int]) -> frozenset[int]:
    """Among maximum-size acceptable subsets, the one with the smallest sorted rank vector."""
    good = [w for w in available if w in ranking]
    size = min(quota, len(good))
    candidates = [frozenset(c) for c in itertools.combinations(good, size)]
    return min(candidates, key=lambda s: sorted(ranking.index(w) for w in s))


def has_responsive_choice(pref: ExplicitSubsets) -> bool:
    """Whether some individual ranking with the same quota induces the same choice on every subset."""
    workers = sorted({w for s in pref.order for w in s})
    subsets = list(powerset(workers))
    for k in range(len(workers) + 1):
        for ranking in itertools.permutations(workers, k):
            cand = Responsive(pref.quota, ranking)
            if all(cand.choice(s) == pref.choice(s) for s in subsets):
                return True
    return False


@pytest.fixture
def crossed() -> Market:
    return crossed_market()
