"""Seeded random markets and disruptions.

Every draw comes from a Philox counter-based generator keyed by
``SeedSequence([seed, trial])`` (with an extra word for transitions), so a
(seed, trial) pair always yields the same instance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .disruption import FirmEntry, MarketTransition, disrupt
from .market import ExplicitSubsets, FirmPreference, Market, Responsive, powerset, validate_q_separable, validate_substitutable

FAMILIES = ("responsive", "explicit-validated")
MAX_EXPLICIT_WORKERS = 5
EXPLICIT_ATTEMPTS = 50


class GenerationError(RuntimeError):
    """Rejection sampling gave up on a trial."""


@dataclass(frozen=True)
class TransitionSpec:
    retire_count: int = 0
    add_firm_count: int = 0


@dataclass(frozen=True)
class ScenarioConfig:
    rng_seed: int = 0
    n_firms: int = 3
    n_workers: int = 5
    quota_max: int = 2
    acceptability_density: float = 0.7
    preference_family: str = "responsive"
    n_trials: int = 1
    transition_spec: Optional[TransitionSpec] = None

    def __post_init__(self) -> None:
        if self.n_firms < 1 or self.n_workers < 1 or self.quota_max < 1:
            raise ValueError("firms, workers and quota_max must be positive")
        if self.n_trials < 0:
            raise ValueError("n_trials must be non-negative")
        if not 0.0 <= self.acceptability_density <= 1.0:
            raise ValueError("acceptability_density must lie in [0, 1]")
        if self.preference_family not in FAMILIES:
            raise ValueError(f"unknown preference family {self.preference_family!r}")
        if self.preference_family == "explicit-validated" and self.n_workers > MAX_EXPLICIT_WORKERS:
            raise ValueError(f"explicit preferences need at most {MAX_EXPLICIT_WORKERS} workers")
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError("rng_seed must fit in 64 bits")

    def to_json(self) -> dict:
        spec = self.transition_spec
        return {
            "rng_seed": self.rng_seed,
            "n_firms": self.n_firms,
            "n_workers": self.n_workers,
            "quota_max": self.quota_max,
            "acceptability_density": self.acceptability_density,
            "preference_family": self.preference_family,
            "n_trials": self.n_trials,
            "transition_spec": None
            if spec is None
            else {"retire_count": spec.retire_count, "add_firm_count": spec.add_firm_count},
        }


def make_rng(seed: int, *words: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *words])))


def _sample(rng: np.random.Generator, items: list[int], density: float) -> list[int]:
    keep = [x for x, u in zip(items, rng.random(len(items))) if u < density]
    return [keep[i] for i in rng.permutation(len(keep))]


def _assignment_value(members: list[int], weights: dict[int, list[float]], slots: int) -> float:
    if not members:
        return 0.0
    best = 0.0
    for perm in itertools.permutations(range(slots), len(members)):
        best = max(best, sum(weights[w][s] for w, s in zip(members, perm)))
    return best


def explicit_preference(
    rng: np.random.Generator, workers: list[int], quota: int, density: float
) -> ExplicitSubsets:
    """Subset order from a random slot-assignment valuation.

    Each acceptable worker gets a positive weight per slot and a set is worth its
    best assignment into ``quota`` slots; unacceptable members carry a penalty
    larger than any attainable value. Such valuations are gross substitutes,
    hence substitutable, while the induced choice is generally not responsive.
    """
    good = set(x for x, u in zip(workers, rng.random(len(workers))) if u < density)
    weights = {w: list(0.05 + rng.random(quota) ** 3) for w in workers}
    penalty = 2.0 * quota + 1.0
    scored = []
    for s in powerset(workers, quota):
        members = sorted(s & good)
        value = _assignment_value(members, weights, quota) - penalty * len(s - good)
        scored.append((-value, tuple(sorted(s)), s))
    scored.sort()
    return ExplicitSubsets(quota, tuple(s for _, _, s in scored))


def _firm_preference(cfg: ScenarioConfig, rng: np.random.Generator, workers: list[int]) -> FirmPreference:
    quota = int(rng.integers(1, cfg.quota_max + 1))
    if cfg.preference_family == "responsive":
        return Responsive(quota, tuple(_sample(rng, workers, cfg.acceptability_density)))
    for _ in range(EXPLICIT_ATTEMPTS):
        pref = explicit_preference(rng, workers, quota, cfg.acceptability_density)
        if validate_substitutable(pref, workers) and validate_q_separable(pref, workers):
            return pref
    raise GenerationError("no substitutable, quota-separable subset order found")


def generate_market(cfg: ScenarioConfig, trial: int) -> Market:
    rng = make_rng(cfg.rng_seed, trial)
    firm_ids = list(range(cfg.n_firms))
    worker_ids = list(range(cfg.n_workers))
    firms = {f: _firm_preference(cfg, rng, worker_ids) for f in firm_ids}
    workers = {w: tuple(_sample(rng, firm_ids, cfg.acceptability_density)) for w in worker_ids}
    return Market(firms, workers)


def generate_transition(cfg: ScenarioConfig, trial: int, market: Market) -> MarketTransition:
    """Retire ``retire_count`` random workers, then open ``add_firm_count`` firms."""
    spec = cfg.transition_spec or TransitionSpec()
    rng = make_rng(cfg.rng_seed, trial, 1)
    workers = list(market.workers)
    retire_count = min(spec.retire_count, len(workers) - 1)
    retired = sorted(workers[i] for i in rng.choice(len(workers), size=retire_count, replace=False))
    survivors = [w for w in workers if w not in retired]
    next_id = max(market.firms) + 1
    entrants = []
    for k in range(spec.add_firm_count):
        pref = _firm_preference(cfg, rng, survivors)
        ranked_by = {}
        for w in survivors:
            if rng.random() < cfg.acceptability_density:
                ranked_by[w] = int(rng.integers(0, len(market.workers[w]) + k + 1))
        entrants.append(FirmEntry(next_id + k, pref, ranked_by))
    return disrupt(market, retired, entrants)
