"""End-to-end acceptance gate.

Each test prints one PASS/FAIL line; run with ``pytest -v -s
tests/test_acceptance.py`` to see them.  The random-instance suite (50 small
two-agent problems over horizons 2 and 3) is shared across criteria.
"""

import random

import pytest

from decteam.belief import (Prescription, check_policy_independence,
                            compose_with_belief, sib_belief_all, sib_update)
from decteam.checks import (check_sufficient_general, check_sufficient_private,
                            replay_counterexample)
from decteam.infinite import (reachable_points, truncation_bound,
                              value_at_start, value_iteration)
from decteam.model import UniformPolicy, expected_utility
from decteam.oracle import brute_force_optimal, transfer_to_sib
from decteam.problems import (build_delayed_sharing, build_remote_local,
                              build_source_coding, build_tiny_team)
from decteam.schemes import EmptyScheme, IdentityScheme, WindowScheme
from decteam.solver import solve_team_dp
from instances import random_deterministic_policy, random_instance
from test_infinite import make_mdp, tabular_vi

SUITE_SIZE = 50


def verdict(n, ok, detail=""):
    line = f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def suite():
    return [random_instance(seed) for seed in range(SUITE_SIZE)]


@pytest.fixture(scope="module")
def dp_values(suite):
    return [solve_team_dp(m, IdentityScheme())[2] for m in suite]


def test_criterion_1_dp_equals_oracle_on_random_suite(suite, dp_values):
    worst = 0.0
    for m, v in zip(suite, dp_values):
        gap = abs(v - brute_force_optimal(m).value)
        worst = max(worst, gap)
    verdict(1, worst <= 1e-9, f"max |dp - oracle| = {worst:.3e}")


def test_criterion_2_filter_consistency(suite):
    worst = 0.0
    scheme = IdentityScheme()
    for m in suite:
        g = UniformPolicy(m)
        beliefs = [sib_belief_all(m, scheme, g, t) for t in range(m.horizon)]
        for t in range(m.horizon - 1):
            for c, (b, pc) in beliefs[t].items():
                alpha = Prescription([
                    {s: {a: 1.0 / m.n_actions(t, i)
                         for a in range(m.n_actions(t, i))}
                     for s in b.support_values(i)}
                    for i in range(m.num_agents)])
                for z in range(m.n_common_obs(t + 1)):
                    if (c + (z,)) not in beliefs[t + 1]:
                        continue
                    chained, _ = sib_update(m, scheme, b, alpha, z)
                    direct = beliefs[t + 1][c + (z,)][0]
                    worst = max(worst, float(chained.sup_distance(direct)))
    verdict(2, worst <= 1e-9, f"max sup-distance = {worst:.3e}")


def test_criterion_3_policy_independence(suite):
    worst = 0.0
    for k, m in enumerate(suite):
        rng = random.Random(1000 + k)
        t = m.horizon - 1
        for draw in range(20):
            i = draw % m.num_agents
            base = random_deterministic_policy(m, rng)
            variant = random_deterministic_policy(m, rng)
            rep = check_policy_independence(m, base, i, [variant], t)
            worst = max(worst, float(rep.conditions[0].max_deviation))
    verdict(3, worst <= 1e-12, f"max belief deviation = {worst:.3e}")


def test_criterion_4_checker_correctness(suite):
    ok = True
    detail = []
    for k, m in enumerate(suite):
        rep = check_sufficient_private(m, IdentityScheme())
        if not (rep.holds
                and all(c.coverage == "exhaustive" for c in rep.conditions)):
            ok = False
            detail.append(f"identity scheme not exhaustive-clean on #{k}")
            break

    # crafted lossy compressions must fail with replayable counterexamples
    lossy = [
        (build_tiny_team(share_actions=False), WindowScheme(1, 0)),
        (build_tiny_team(), WindowScheme(1, 0)),
    ]
    for m, scheme in lossy:
        rep = check_sufficient_private(m, scheme)
        failing = [c for c in rep.conditions if c.verdict == "FAILS"]
        if not failing:
            ok = False
            detail.append(f"lossy scheme passed on {m.name}")
            continue
        for cond in failing:
            dev = replay_counterexample(m, scheme, cond.counterexample)
            if not (dev > 1e-9 and abs(dev - cond.max_deviation) < 1e-12):
                ok = False
                detail.append("replay mismatch")
    verdict(4, ok, "; ".join(detail))


def test_criterion_5_special_case_problems():
    ok = True
    detail = []

    src = {"init": [0.5, 0.5], "kernel": {(0,): [0.5, 0.5], (1,): [0.5, 0.5]}}
    m, scheme = build_source_coding(1, 0, 3, src, msg_size=2)
    rep = check_sufficient_private(m, scheme, profile_budget=30)
    v = solve_team_dp(m, scheme)[2]
    gap = abs(v - brute_force_optimal(m).value)
    if not rep.holds or gap > 1e-9:
        ok = False
        detail.append(f"source-coding: holds={rep.holds} gap={gap:.3e}")

    m, scheme = build_delayed_sharing(1, build_tiny_team())
    rep = check_sufficient_private(m, scheme, profile_budget=60)
    v = solve_team_dp(m, scheme)[2]
    gap = abs(v - brute_force_optimal(m).value)
    if not rep.holds or gap > 1e-9:
        ok = False
        detail.append(f"delayed-sharing: holds={rep.holds} gap={gap:.3e}")

    plant = {
        "states": ["0", "1"],
        "actions": [["0", "1"], ["0", "1"]],
        "init": [0.5, 0.5],
        "transition": [[[[0.9, 0.1], [0.6, 0.4]], [[0.4, 0.6], [0.2, 0.8]]],
                       [[[0.3, 0.7], [0.5, 0.5]], [[0.8, 0.2], [0.1, 0.9]]]],
        "utility": [[[1, 0], [0.4, 0.2]], [[0, 1], [0.3, 0.7]]],
    }
    m, scheme = build_remote_local(0.5, plant, T=2)
    rep = check_sufficient_general(m, scheme, profile_budget=60)
    # the information-state scheme is strategy-dependent, so the DP leg runs
    # on the full private history, which subsumes it
    v = solve_team_dp(m, IdentityScheme())[2]
    gap = abs(v - brute_force_optimal(m).value)
    if not rep.holds or gap > 1e-9:
        ok = False
        detail.append(f"remote-local: holds={rep.holds} gap={gap:.3e}")

    verdict(5, ok, "; ".join(detail))


def test_criterion_6_composite_passes_general_checker(suite):
    ok = True
    detail = ""
    for k, m in enumerate(suite):
        scheme = compose_with_belief(m, IdentityScheme())
        rep = check_sufficient_general(m, scheme)
        if not rep.holds:
            ok = False
            detail = f"composite failed on instance #{k}"
            break
    verdict(6, ok, detail)


def test_criterion_7_transfer_equivalence():
    m = build_tiny_team()
    scheme = IdentityScheme()
    rng = random.Random(77)
    ok = True
    detail = []
    for k in range(10):
        g = random_deterministic_policy(m, rng)
        rep = transfer_to_sib(m, scheme, g, sample_count=1_000_000,
                              seed=500 + k)
        exact_ok = (rep["pi_s_match"]
                    and max(rep["flow_deviation"]) <= 1e-9
                    and max(rep["pi_s_distribution_deviation"]) <= 1e-9)
        mc_ok = all(rep["mc_within_3sigma"])
        if not (exact_ok and mc_ok):
            ok = False
            detail.append(f"profile {k}: exact={exact_ok} mc={mc_ok}")
    verdict(7, ok, "; ".join(detail))


def test_criterion_8_mdp_degenerate_infinite_horizon():
    import numpy as np
    sm = make_mdp(discount=0.9)
    scheme = EmptyScheme()
    ps, closed = reachable_points(sm, scheme, depth=5)
    values, policy, info = value_iteration(sm, scheme, ps, tol=1e-8)

    v = tabular_vi(np.array(sm.transition), np.array(sm.utility), sm.discount)
    match = all(abs(values[k] - v[next(iter(ps.points[k].x_marginal()))])
                <= 1e-8 for k in ps.keys())

    from decteam.infinite import bellman_apply
    residual = max(
        abs(bellman_apply(sm, scheme, values, ps, ps.points[k])[0] - values[k])
        for k in ps.keys())

    rng = random.Random(8)
    contraction = True
    for _ in range(100):
        u = {k: rng.uniform(-10, 10) for k in ps.keys()}
        w = {k: rng.uniform(-10, 10) for k in ps.keys()}
        lhs = max(abs(bellman_apply(sm, scheme, u, ps, ps.points[k])[0]
                      - bellman_apply(sm, scheme, w, ps, ps.points[k])[0])
                  for k in ps.keys())
        rhs = sm.discount * max(abs(u[k] - w[k]) for k in ps.keys())
        if lhs > rhs + 1e-12:
            contraction = False
            break

    ok = closed and match and residual <= 1e-8 and contraction
    verdict(8, ok, f"closed={closed} match={match} residual={residual:.3e} "
                   f"contraction={contraction}")


def test_criterion_9_truncation_bound():
    T = truncation_bound(0.5, 1.0, 0.25)
    sm = make_mdp(discount=0.5)
    scheme = EmptyScheme()
    ps, closed = reachable_points(sm, scheme, depth=5)
    values, _, _ = value_iteration(sm, scheme, ps, tol=1e-10)
    v_inf = value_at_start(sm, scheme, values, ps)
    v_fin = solve_team_dp(sm.unroll(T), scheme)[2]
    gap = abs(v_fin - v_inf)
    ok = T == 4 and closed and gap <= 0.25
    verdict(9, ok, f"T={T} |finite - infinite| = {gap:.4f} <= 0.25")
