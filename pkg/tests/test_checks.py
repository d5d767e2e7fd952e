import pytest

from decteam.belief import compose_with_belief
from decteam.checks import (check_payoff_relevant, check_sufficient_general,
                            check_sufficient_private, open_loop_profiles,
                            replay_counterexample)
from decteam.errors import SizeGuardError
from decteam.problems import build_tiny_team
from decteam.schemes import EmptyScheme, IdentityScheme, WindowScheme
from instances import random_instance


def test_identity_is_payoff_relevant(tiny):
    rep = check_payoff_relevant(tiny, IdentityScheme())
    assert rep.holds
    assert all(c.coverage == "exhaustive" for c in rep.conditions)


def test_identity_is_sufficient_private(tiny):
    rep = check_sufficient_private(tiny, IdentityScheme())
    assert rep.holds
    assert all(c.coverage == "exhaustive" for c in rep.conditions)


def test_empty_scheme_fails_payoff_relevance(tiny):
    # throwing everything away cannot predict the utility flow
    rep = check_payoff_relevant(tiny, EmptyScheme())
    assert rep.any_fails


def test_lossy_scheme_fails_with_replayable_counterexample(tiny_noshare):
    m = tiny_noshare
    rep = check_sufficient_private(m, WindowScheme(1, 0))
    assert rep.any_fails
    failing = [c for c in rep.conditions if c.verdict == "FAILS"]
    assert failing
    for cond in failing:
        ce = cond.counterexample
        assert ce is not None
        dev = replay_counterexample(m, WindowScheme(1, 0), ce)
        assert abs(dev - cond.max_deviation) < 1e-12
        assert dev > 1e-9


def test_composite_passes_general_definition(tiny):
    scheme = compose_with_belief(tiny, IdentityScheme())
    rep = check_sufficient_general(tiny, scheme)
    assert rep.holds


def test_general_definition_on_random_instances():
    for seed in (0, 1):
        m = random_instance(seed)
        scheme = compose_with_belief(m, IdentityScheme())
        rep = check_sufficient_general(m, scheme)
        assert rep.holds, seed


def test_sampled_coverage_is_reported(tiny):
    rep = check_sufficient_private(tiny, IdentityScheme(), profile_budget=5)
    assert rep.holds
    assert any(c.coverage.startswith("sampled(") for c in rep.conditions)
    # counts accumulate across stages, each stage capped by the budget
    assert all(c.profiles_checked <= 5 * tiny.horizon
               for c in rep.conditions)


def test_sampling_is_deterministic_per_seed(tiny):
    a = check_sufficient_private(tiny, IdentityScheme(), profile_budget=5,
                                 seed=3)
    b = check_sufficient_private(tiny, IdentityScheme(), profile_budget=5,
                                 seed=3)
    da = [c.to_dict() for c in a.conditions]
    db = [c.to_dict() for c in b.conditions]
    assert da == db


def test_open_loop_profile_cap():
    m = build_tiny_team()
    with pytest.raises(SizeGuardError):
        open_loop_profiles(m, cap=2)


def test_payoff_relevance_rejects_general_kind(tiny):
    scheme = compose_with_belief(tiny, IdentityScheme())
    with pytest.raises(ValueError):
        check_payoff_relevant(tiny, scheme)
