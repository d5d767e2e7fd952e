import random
from fractions import Fraction

import pytest

from decteam.belief import (Belief, Prescription, check_policy_independence,
                            compose_with_belief, sib_belief, sib_belief_all,
                            sib_update)
from decteam.errors import (InconsistentObservation,
                            ZeroProbabilityConditioning)
from decteam.model import OpenLoopPolicy, TeamModel, UniformPolicy
from decteam.schemes import EmptyScheme, IdentityScheme
from instances import random_deterministic_policy, random_instance


def both_play(m, a):
    return OpenLoopPolicy(m, [(a, a)] * m.horizon)


def test_first_stage_belief_is_bayes(tiny):
    b = sib_belief(tiny, IdentityScheme(), both_play(tiny, 0), (0,))
    assert abs(b.total() - 1) < 1e-12
    # x-marginal at the first stage equals the prior (z is uninformative)
    marg = b.x_marginal()
    assert abs(marg[0] - 0.5) < 1e-12 and abs(marg[1] - 0.5) < 1e-12


def test_stage2_belief_table_exact(tiny_exact):
    """Belief at the second stage under both-play-0, checked entry by entry
    against an independent enumeration."""
    m = tiny_exact
    g = both_play(m, 0)
    c = (0, 0)  # a joint action (0, 0) maps to the first common value
    b = sib_belief(m, IdentityScheme(), g, c)

    half = Fraction(1, 2)
    eps = [Fraction(1, 10), Fraction(1, 5)]

    def py(i, y, x):
        return 1 - eps[i] if y == x else eps[i]

    expect = {}
    for x1 in (0, 1):
        for y1 in (0, 1):
            for y2 in (0, 1):
                w0 = half * py(0, y1, x1) * py(1, y2, x1)
                for x2 in (0, 1):
                    keep = Fraction(4, 5)
                    wt = w0 * (keep if x2 == x1 else 1 - keep)
                    for y1b in (0, 1):
                        for y2b in (0, 1):
                            w = wt * py(0, y1b, x2) * py(1, y2b, x2)
                            s = (((y1, y1b), (0,)), ((y2, y2b), (0,)))
                            k = (x2, s)
                            expect[k] = expect.get(k, 0) + w
    assert set(b.probs) == set(expect)
    for k, v in expect.items():
        assert b.probs[k] == v  # normalizer is 1: c has probability 1
    assert len(b.probs) == 2 * 4 * 4


def test_belief_normalization_random_instances():
    for seed in (0, 1, 2, 3):
        m = random_instance(seed)
        g = UniformPolicy(m)
        for t in range(m.horizon):
            for c, (b, pc) in sib_belief_all(m, IdentityScheme(), g, t).items():
                assert abs(b.total() - 1) < 1e-12


def test_perfect_common_observation_point_mass():
    # common kernel reveals the state: the x-marginal is a point mass
    m = random_instance(0)
    nz = len(m.states[0])
    m2 = TeamModel(
        m.horizon, m.num_agents, m.states, m.actions, m.private_obs,
        [[f"z{j}" for j in range(nz)]] * m.horizon, m.init, m.transition,
        m.private_obs_kernel,
        [[[1.0 if z == x else 0.0 for z in range(nz)]
          for x in range(len(m.states[0]))]] +
        [[[[[1.0 if z == x else 0.0 for z in range(nz)]
            for _a2 in range(2)] for _a1 in range(2)]
          for x in range(len(m.states[0]))] for _t in range(m.horizon - 1)],
        m.utility)
    for c, (b, pc) in sib_belief_all(m2, IdentityScheme(),
                                     UniformPolicy(m2), 1).items():
        marg = b.x_marginal()
        assert len(marg) == 1 and abs(list(marg.values())[0] - 1) < 1e-12
        assert list(marg)[0] == c[-1]


def test_filter_consistency_exact(tiny_exact):
    m = tiny_exact
    s = IdentityScheme()
    g = UniformPolicy(m)
    half = Fraction(1, 2)
    alpha = Prescription([
        {((y,), ()): {0: half, 1: half} for y in range(2)} for _ in range(2)])
    from decteam.solver import root_beliefs
    roots = root_beliefs(m, s)
    b0, pz = roots[0]
    direct = sib_belief_all(m, s, g, 1)
    total = 0
    for z2 in range(4):
        b1, norm = sib_update(m, s, b0, alpha, z2)
        total += norm
        assert b1.sup_distance(direct[(0, z2)][0]) == 0
        assert norm == direct[(0, z2)][1]
    assert total == 1


def test_update_identity_when_uninformative():
    """No dynamics, no information: the updated belief equals the prior."""
    m = TeamModel(
        horizon=2, num_agents=1,
        states=[["a", "b"]] * 2, actions=[[["l", "r"]]] * 2,
        private_obs=[[["-"]]] * 2, common_obs=[["-"]] * 2,
        init=[0.3, 0.7],
        transition=[[[[1.0, 0.0], [1.0, 0.0]], [[0.0, 1.0], [0.0, 1.0]]]],
        private_obs_kernel=[[[[1.0], [1.0]]],
                            [[[[1.0], [1.0]], [[1.0], [1.0]]]]],
        common_obs_kernel=[[[1.0], [1.0]], [[[1.0], [1.0]], [[1.0], [1.0]]]],
        utility=[[[0.0, 0.0], [0.0, 0.0]]] * 2)
    s = EmptyScheme()
    prior = Belief(0, {(0, ((),)): 0.3, (1, ((),)): 0.7})
    alpha = Prescription([{(): 0}])
    post, norm = sib_update(m, s, prior, alpha, 0)
    assert norm == 1.0
    assert post.sup_distance(Belief(1, prior.probs)) < 1e-12


def test_impossible_observation_raises(tiny):
    from decteam.solver import root_beliefs
    b0, _ = root_beliefs(tiny, IdentityScheme())[0]
    alpha = Prescription([{((y,), ()): 0 for y in range(2)}
                          for _ in range(2)])
    # both agents play 0, so the common value for joint action (1, 1)
    # cannot occur
    with pytest.raises(InconsistentObservation):
        sib_update(tiny, IdentityScheme(), b0, alpha, 3)


def test_unreachable_history_raises(tiny):
    g = both_play(tiny, 0)
    with pytest.raises(ZeroProbabilityConditioning):
        sib_belief(tiny, IdentityScheme(), g, (0, 3))


def test_policy_independence_random(tiny):
    rng = random.Random(11)
    base = random_deterministic_policy(tiny, rng)
    variants = [random_deterministic_policy(tiny, rng) for _ in range(3)]
    rep = check_policy_independence(tiny, base, 0, variants, 1)
    assert rep.holds
    assert rep.conditions[0].max_deviation <= 1e-12


def test_policy_independence_single_agent():
    m = random_instance(0)
    # restrict to agent 0 by fixing agent 1 via the base profile
    rng = random.Random(5)
    base = random_deterministic_policy(m, rng)
    variants = [random_deterministic_policy(m, rng) for _ in range(2)]
    rep = check_policy_independence(m, base, 1, variants, m.horizon - 1)
    assert rep.holds


def test_composite_scheme_value_pairs(tiny):
    s = compose_with_belief(tiny, IdentityScheme())
    g = UniformPolicy(tiny)
    v = s.value(tiny, 0, 0, (0,), ((1,), ()), prefix=g)
    assert v[0] == ((1,), ())
    # the second component is the belief key shared by both agents
    v2 = s.value(tiny, 1, 0, (0,), ((0,), ()), prefix=g)
    assert v[1] == v2[1]
    with pytest.raises(ValueError):
        s.value(tiny, 0, 0, (0,), ((1,), ()))


def test_composite_requires_private_base(tiny):
    s = compose_with_belief(tiny, IdentityScheme())
    with pytest.raises(ValueError):
        compose_with_belief(tiny, s)
