import copy
import random
from fractions import Fraction

import pytest

from decteam.errors import SizeGuardError
from decteam.model import UniformPolicy, expected_utility
from decteam.oracle import (brute_force_optimal, brute_force_sib_optimal,
                            build_residual_code,
                            residual_independence_report, transfer_to_sib)
from decteam.schemes import EmptyScheme, IdentityScheme
from decteam.solver import solve_team_dp
from instances import random_deterministic_policy, random_instance


def test_brute_force_golden_value(tiny_exact):
    res = brute_force_optimal(tiny_exact)
    assert res.value == Fraction(1859, 1250)
    assert res.profiles_enumerated == 295936


def test_brute_force_policy_attains_value(tiny):
    res = brute_force_optimal(tiny)
    total, _ = expected_utility(tiny, res.policy)
    assert abs(total - res.value) < 1e-12


def test_zero_utility(tiny):
    m = copy.deepcopy(tiny)
    m.utility = [[[[0.0, 0.0], [0.0, 0.0]] for _ in range(2)]
                 for _ in range(2)]
    assert brute_force_optimal(m).value == 0


def test_matches_dp_on_random_instances():
    for seed in (0, 1, 2, 3):
        m = random_instance(seed)
        _, _, v = solve_team_dp(m, IdentityScheme())
        res = brute_force_optimal(m)
        assert abs(v - res.value) < 1e-9, seed


def test_sib_restricted_enumeration(tiny):
    # restricting both search and DP to the empty compression gives the same
    # optimum, computed by entirely different code paths
    res = brute_force_sib_optimal(tiny, EmptyScheme())
    _, _, v = solve_team_dp(tiny, EmptyScheme())
    assert abs(res.value - v) < 1e-12
    assert res.profiles_enumerated < 295936


def test_work_cap(tiny):
    with pytest.raises(SizeGuardError):
        brute_force_optimal(tiny, cap=100)


def test_residual_code_cells_normalized(tiny):
    g = random_deterministic_policy(tiny, random.Random(0))
    code = build_residual_code(tiny, IdentityScheme(), g)
    for hists, probs, cums in code.cells.values():
        assert abs(sum(probs) - 1) < 1e-12
        assert abs(cums[-1] - 1) < 1e-12
        assert all(p > 0 for p in probs)
    for tuples, probs, cums in code.joint_cells.values():
        assert abs(sum(probs) - 1) < 1e-12


def test_residual_code_inverse_cdf_boundaries(tiny):
    g = UniformPolicy(tiny)
    # the empty compression leaves several histories per cell
    code = build_residual_code(tiny, EmptyScheme(), g)
    key = next(k for k in code.cells if len(code.cells[k][0]) >= 2)
    t, i, pik, s = key
    hists, probs, cums = code.cells[key]
    # r = 0 and r at the first cumulative sum both select the first history
    assert code.invert(t, i, pik, s, 0.0) == hists[0]
    assert code.invert(t, i, pik, s, cums[0]) == hists[0]
    # just past the boundary selects the second
    assert code.invert(t, i, pik, s, cums[0] + 1e-12) == hists[1]
    assert code.invert(t, i, pik, s, 1.0) == hists[-1]


def test_residual_independence_holds(tiny):
    for seed in (0, 7):
        g = random_deterministic_policy(tiny, random.Random(seed))
        rep = residual_independence_report(tiny, IdentityScheme(), g)
        assert rep.holds


def test_transfer_exact_equivalence(tiny):
    for seed in range(3):
        g = random_deterministic_policy(tiny, random.Random(seed))
        rep = transfer_to_sib(tiny, IdentityScheme(), g)
        assert rep["pi_s_match"]
        assert max(rep["flow_deviation"]) < 1e-9
        assert max(rep["pi_s_distribution_deviation"]) < 1e-9


def test_transfer_monte_carlo(tiny):
    g = random_deterministic_policy(tiny, random.Random(2))
    rep = transfer_to_sib(tiny, IdentityScheme(), g, sample_count=50_000,
                          seed=9)
    assert all(rep["mc_within_3sigma"])
    assert len(rep["mc_flows"]) == tiny.horizon


def test_transfer_with_empty_scheme(tiny):
    # transferring onto the empty compression must still reproduce the exact
    # flows: the joint cell then carries all correlation
    g = UniformPolicy(tiny)
    rep = transfer_to_sib(tiny, EmptyScheme(), g)
    assert rep["pi_s_match"]
    assert max(rep["flow_deviation"]) < 1e-9
