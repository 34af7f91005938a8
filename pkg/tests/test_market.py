from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_choice, brute_responsive_choice, markets, responsive_as_explicit
from restab.algorithms import all_matchings
from restab.generate import ScenarioConfig, generate_market
from restab.io import ParseError, market_from_json, market_to_json, matching_from_json, matching_to_json
from restab.market import (
    ExplicitSubsets,
    Market,
    MarketError,
    Matching,
    Responsive,
    SizeGuardError,
    blocking_pairs,
    choice,
    envy_set,
    is_acceptable_coalition,
    is_firm_quasi_stable,
    is_individually_rational,
    is_stable,
    powerset,
    validate_q_separable,
    validate_substitutable,
)

S = frozenset


def one_firm(ranking=(1, 2, 3), quota=2, workers=(1, 2, 3)) -> Market:
    return Market({0: Responsive(quota, ranking)}, {w: (0,) for w in workers})


class TestChoice:
    def test_responsive_top_quota(self):
        assert choice(0, {1, 2, 3}, one_firm()) == S({1, 2})

    def test_empty_input(self):
        assert choice(0, set(), one_firm()) == S()

    def test_skips_unacceptable(self):
        m = Market({0: Responsive(2, (3,))}, {1: (0,), 2: (0,), 3: (0,)})
        assert choice(0, {1, 2, 3}, m) == S({3})

    def test_unknown_ids(self):
        m = one_firm()
        with pytest.raises(MarketError):
            choice(9, {1}, m)
        with pytest.raises(MarketError):
            choice(0, {42}, m)

    def test_explicit_matches_subset_scan(self):
        cfg = ScenarioConfig(rng_seed=5, n_firms=2, n_workers=3, quota_max=2, preference_family="explicit-validated")
        for trial in range(20):
            m = generate_market(cfg, trial)
            for f, pref in m.firms.items():
                for s in powerset(m.workers):
                    assert choice(f, s, m) == brute_choice(list(pref.order), pref.quota, s)

    @given(markets(max_workers=5), st.data())
    def test_responsive_matches_brute_force(self, m, data):
        f = data.draw(st.sampled_from(list(m.firms)))
        s = data.draw(st.frozensets(st.sampled_from(list(m.workers))))
        pref = m.firms[f]
        assert choice(f, s, m) == brute_responsive_choice(pref.ranking, pref.quota, s)

    @given(markets(max_workers=6), st.data())
    def test_choice_invariants(self, m, data):
        f = data.draw(st.sampled_from(list(m.firms)))
        s = data.draw(st.frozensets(st.sampled_from(list(m.workers))))
        pref = m.firms[f]
        chosen = choice(f, s, m)
        assert chosen <= s
        assert choice(f, chosen, m) == chosen
        assert len(chosen) <= pref.quota
        acceptable = [w for w in s if pref.is_acceptable(w)]
        assert len(chosen) == min(pref.quota, len(acceptable))
        for dropped in s - chosen:
            assert choice(f, s - {dropped}, m) == chosen


class TestSubsetOrder:
    def test_equal_sizes_compare_lexicographically(self):
        pref = Responsive(2, (0, 1, 2, 3))
        assert pref.prefers(S({0, 3}), S({1, 2}))
        assert pref.prefers(S({1, 2}), S({1, 3}))

    def test_acceptable_worker_improves_undersized_set(self):
        pref = Responsive(3, (0, 1, 2, 3))
        assert pref.prefers(S({1, 3}), S({1}))
        assert pref.prefers(S({3}), S())

    def test_unacceptable_and_oversized_below_empty(self):
        pref = Responsive(2, (0, 1))
        assert pref.prefers(S(), S({0, 5}))
        assert pref.prefers(S(), S({0, 1, 2}))
        assert pref.prefers(S({5}), S({5, 6}))

    def test_restriction_preserves_relative_order(self):
        pref = Responsive(2, (0, 1, 2, 3))
        sub = pref.restrict(S({0, 2, 3}))
        subsets = list(powerset({0, 2, 3}))
        assert sorted(subsets, key=pref.subset_key) == sorted(subsets, key=sub.subset_key)


class TestValidators:
    def test_responsive_is_valid(self):
        pref = Responsive(2, (2, 0, 1))
        assert validate_substitutable(pref, [0, 1, 2])
        assert validate_q_separable(pref, [0, 1, 2])

    @given(markets(max_workers=5))
    @settings(max_examples=30)
    def test_responsive_passes_exhaustive_checks(self, m):
        for pref in m.firms.values():
            assert validate_substitutable(pref, m, exhaustive=True)
            assert validate_q_separable(pref, m, exhaustive=True)

    def test_complements_fail_substitutability(self):
        pref = ExplicitSubsets(2, (S({1, 2}), S(), S({1}), S({2})))
        assert pref.choice(S({1, 2})) == S({1, 2})
        assert pref.choice(S({1})) == S()
        assert not validate_substitutable(pref, [1, 2])

    def test_explicit_copy_of_responsive_is_valid(self):
        workers = [0, 1, 2, 3]
        pref = responsive_as_explicit(Responsive(2, (3, 1, 0)), workers)
        assert validate_substitutable(pref, workers)
        assert validate_q_separable(pref, workers)

    def test_oversized_set_above_empty_fails_separability(self):
        pref = ExplicitSubsets(1, (S({1, 2}), S({1}), S({2}), S()))
        assert not validate_q_separable(pref, [1, 2])

    def test_adding_acceptable_worker_must_help(self):
        # every singleton beats the empty set, yet {0, 1} ranks below {1}
        order = (S({1}), S({0}), S({2}), S({0, 2}), S({1, 2}), S({0, 1}), S())
        pref = ExplicitSubsets(2, order)
        assert all(pref.prefers(S({w}), S()) for w in (0, 1, 2))
        assert not validate_q_separable(pref, [0, 1, 2])

    def test_size_guard(self):
        pref = ExplicitSubsets(1, (S(),))
        with pytest.raises(SizeGuardError):
            validate_substitutable(pref, range(13))
        with pytest.raises(SizeGuardError):
            validate_q_separable(pref, range(11))
        assert validate_substitutable(pref, range(3), max_workers=3)


class TestExplicitMarket:
    def test_explicit_order_must_be_complete(self):
        with pytest.raises(MarketError):
            Market({0: ExplicitSubsets(1, (S({1}), S()))}, {1: (0,), 2: (0,)})

    def test_explicit_order_must_rank_empty(self):
        with pytest.raises(MarketError):
            ExplicitSubsets(1, (S({1}),))


class TestPredicates:
    def test_acceptable_coalition(self):
        m = Market({0: Responsive(2, (1, 2))}, {1: (0,), 2: ()})
        assert not is_acceptable_coalition(set(), 0, m)
        assert is_acceptable_coalition({1}, 0, m)
        assert not is_acceptable_coalition({1, 2}, 0, m)

    def test_individual_rationality(self):
        m = Market({0: Responsive(1, (1, 2))}, {1: (0,), 2: ()})
        assert is_individually_rational(Matching.empty(m), m)
        assert not is_individually_rational(Matching({1: None, 2: 0}), m)
        assert not is_individually_rational(Matching({1: 0, 2: 0}), m)

    def test_over_quota_firm_is_not_rational(self):
        m = Market({0: Responsive(1, (1, 2))}, {1: (0,), 2: (0,)})
        assert not is_individually_rational(Matching({1: 0, 2: 0}), m)

    def test_blocking_pair_single_firm(self):
        # enumerate the three matchings with at most one hire by hand
        m = Market({0: Responsive(1, (1, 2))}, {1: (0,), 2: (0,)})
        assert blocking_pairs(Matching({1: None, 2: 0}), m) == {(1, 0)}
        assert blocking_pairs(Matching({1: 0, 2: None}), m) == set()
        assert blocking_pairs(Matching({1: None, 2: None}), m) == {(1, 0), (2, 0)}
        assert not is_stable(Matching({1: None, 2: 0}), m)
        assert is_stable(Matching({1: 0, 2: None}), m)
        assert not is_stable(Matching.empty(m), m)

    def test_empty_matching_one_acceptable_pair(self):
        m = Market({0: Responsive(1, (1,))}, {1: (0,)})
        assert blocking_pairs(Matching.empty(m), m) == {(1, 0)}

    def test_envy_set(self):
        m = Market({0: Responsive(1, (1, 2)), 1: Responsive(1, (1, 2))}, {1: (0, 1), 2: (1,)})
        empty = Matching.empty(m)
        assert envy_set(1, empty, m) == S({1, 2})
        assert envy_set(0, empty, m) == S({1})
        assert envy_set(0, Matching({1: 0, 2: None}), m) == S()
        assert envy_set(1, Matching({1: 0, 2: 1}), m) == S()

    def test_envy_set_when_firm_unacceptable_to_all(self):
        m = Market({0: Responsive(1, (1,)), 1: Responsive(1, (1,))}, {1: (1,), 2: ()})
        assert envy_set(0, Matching.empty(m), m) == S()

    def test_envy_set_after_firm_optimal_single_firm(self):
        m = Market({0: Responsive(2, (1, 2, 3))}, {1: (0,), 2: (0,), 3: (0,), 4: ()})
        mu = Matching({1: 0, 2: 0, 3: None, 4: None})
        assert envy_set(0, mu, m) == S({3})
        assert is_stable(mu, m)


class TestFirmQuasiStability:
    def test_empty_matching(self, crossed):
        assert is_firm_quasi_stable(Matching.empty(crossed), crossed)

    def test_holding_second_choice_while_first_envies(self):
        m = Market({0: Responsive(1, (1, 2))}, {1: (0,), 2: (0,)})
        assert not is_firm_quasi_stable(Matching({1: None, 2: 0}), m)

    def test_singletons_do_not_suffice(self):
        # each envious worker alone fits next to the incumbent, both together displace it
        m = Market({0: Responsive(2, (1, 2, 3))}, {1: (0,), 2: (0,), 3: (0,)})
        mu = Matching({1: None, 2: None, 3: 0})
        held = mu.firm(0)
        assert all(held <= choice(0, held | {w}, m) for w in (1, 2))
        assert not is_firm_quasi_stable(mu, m)
        assert not is_firm_quasi_stable(mu, m, exhaustive=True)

    @given(markets(max_workers=5))
    @settings(max_examples=60, deadline=None)
    def test_envy_shortcut_matches_subset_scan(self, m):
        for mu in all_matchings(m):
            assert is_firm_quasi_stable(mu, m) == is_firm_quasi_stable(mu, m, exhaustive=True)

    @given(markets())
    @settings(max_examples=60, deadline=None)
    def test_stable_implies_fqs(self, m):
        for mu in all_matchings(m):
            if is_stable(mu, m):
                assert is_firm_quasi_stable(mu, m)

    def test_explicit_markets_stable_implies_fqs(self):
        cfg = ScenarioConfig(rng_seed=9, n_firms=2, n_workers=4, quota_max=3, preference_family="explicit-validated")
        for trial in range(15):
            m = generate_market(cfg, trial)
            for mu in all_matchings(m):
                if is_stable(mu, m):
                    assert is_firm_quasi_stable(mu, m)
                assert is_firm_quasi_stable(mu, m, exhaustive=False) == is_firm_quasi_stable(mu, m, exhaustive=True)


class TestJson:
    def test_round_trip(self):
        cfg = ScenarioConfig(rng_seed=2, n_firms=2, n_workers=3, preference_family="explicit-validated")
        m = generate_market(cfg, 0)
        assert market_from_json(json.loads(json.dumps(market_to_json(m)))) == m
        mu = Matching({0: 1, 1: None, 2: 0})
        assert matching_from_json(json.loads(json.dumps(matching_to_json(mu)))) == mu

    def test_unknown_keys_rejected(self):
        base = {"firms": [{"id": 0, "quota": 1, "ranking": [0]}], "workers": [{"id": 0, "ranking": [0]}]}
        market_from_json(base)
        for bad in (
            {**base, "extra": 1},
            {**base, "firms": [{"id": 0, "quota": 1, "ranking": [0], "colour": "red"}]},
            {**base, "workers": [{"id": 0, "ranking": [0], "age": 3}]},
        ):
            with pytest.raises(ParseError):
                market_from_json(bad)
        with pytest.raises(ParseError):
            matching_from_json({"assignment": {}, "note": ""})

    def test_bad_references(self):
        with pytest.raises(ParseError):
            market_from_json({"firms": [{"id": 0, "quota": 1, "ranking": [7]}], "workers": [{"id": 0, "ranking": [0]}]})
        with pytest.raises(ParseError):
            market_from_json({"firms": [{"id": 0, "quota": 0, "ranking": [0]}], "workers": [{"id": 0, "ranking": [0]}]})
