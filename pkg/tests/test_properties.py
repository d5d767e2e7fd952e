"""Property tests over randomly generated instances."""

from hypothesis import given, settings, strategies as st

from decteam.infinite import truncation_bound
from decteam.model import UniformPolicy, trajectory_distribution
from decteam.schemes import EmptyScheme, IdentityScheme
from decteam.belief import sib_belief_all
from decteam.solver import solve_team_dp
from instances import random_instance


@settings(max_examples=12, deadline=None)
@given(st.integers(min_value=0, max_value=400).map(lambda s: 2 * s))
def test_information_monotonicity(seed):
    """Discarding private information can never raise the optimal value."""
    m = random_instance(seed)
    v_empty = solve_team_dp(m, EmptyScheme())[2]
    v_full = solve_team_dp(m, IdentityScheme())[2]
    assert v_empty <= v_full + 1e-12


@settings(max_examples=12, deadline=None)
@given(st.integers(min_value=0, max_value=801))
def test_trajectory_distribution_normalized(seed):
    m = random_instance(seed)
    dist = trajectory_distribution(m, UniformPolicy(m))
    assert abs(sum(dist.values()) - 1) < 1e-12


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=0, max_value=400).map(lambda s: 2 * s))
def test_beliefs_normalized_at_every_history(seed):
    m = random_instance(seed)
    g = UniformPolicy(m)
    for t in range(m.horizon):
        total_pc = 0
        for c, (b, pc) in sib_belief_all(m, IdentityScheme(), g, t).items():
            assert abs(b.total() - 1) < 1e-12
            total_pc += pc
        assert abs(total_pc - 1) < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=0.05, max_value=0.95),
       st.floats(min_value=0.0, max_value=5.0),
       st.floats(min_value=0.01, max_value=1.0))
def test_truncation_bound_minimal(delta, bound, eps):
    T = truncation_bound(delta, bound, eps)
    assert T >= 1
    assert delta ** T * bound / (1 - delta) <= eps / 2
    if T > 1:
        assert delta ** (T - 1) * bound / (1 - delta) > eps / 2
