"""Finite dynamic team model and exact reference semantics.

A team model describes N agents acting over a finite horizon T.  At each stage
t the system is in a state x_t; every agent privately observes y_t^i and all
agents see a common observation z_t (both drawn from kernels conditioned on
the current state and the previous joint action).  Agents then act, a team
utility u_t(x_t, a_t) accrues, and the state transitions.

Stages are 0-based internally; user-facing messages are 1-based.  A common
history is a tuple c = (z_0, ..., z_t) of observation indices.  An agent's
private part is p = (ys, acts) with ys = (y_0, ..., y_t) and
acts = (a_0, ..., a_{t-1}) holding that agent's own observation and action
indices.  All probability numbers may be floats or ``fractions.Fraction``
(exact mode); the algorithms are agnostic.
"""

import itertools
from fractions import Fraction
from typing import NamedTuple

from .errors import SizeGuardError

DEFAULT_HISTORY_CAP = 10 ** 7
DEFAULT_TRAJECTORY_CAP = 10 ** 7


def _lookup(table, idx):
    for k in idx:
        table = table[k]
    return table


def _to_rational(obj):
    """Recursively convert numeric leaves to exact Fractions."""
    if isinstance(obj, list):
        return [_to_rational(v) for v in obj]
    if isinstance(obj, Fraction):
        return obj
    return Fraction(obj)  # exact for ints and binary floats


class Trajectory(NamedTuple):
    x: tuple      # states, length T
    a: tuple      # joint action tuples, length T
    y: tuple      # joint private-observation tuples, length T
    z: tuple      # common observations, length T


class AgentHistory(NamedTuple):
    agent: int
    stage: int
    common: tuple            # z indices, length stage+1
    private_obs: tuple       # own y indices, length stage+1
    private_actions: tuple   # own a indices, length stage


class TeamModel:
    """Immutable container for a finite dynamic team.

    Kernels are nested lists indexed by integer labels:

    * ``transition[t][x][a_1]...[a_N][x']`` for t in 0..T-2
    * ``private_obs_kernel[t][i]``: ``[x][y]`` at t=0 (the pre-game action is
      a distinguished null), ``[x][a_1]...[a_N][y]`` for t >= 1
    * ``common_obs_kernel[t]``: same action convention
    * ``utility[t][x][a_1]...[a_N]``: team payoff
    * ``agent_utilities[i]``: optional per-agent stage tables with the same
      shape as ``utility`` (evaluators accept them; the optimizer insists
      they all equal the team table)
    """

    def __init__(self, horizon, num_agents, states, actions, private_obs,
                 common_obs, init, transition, private_obs_kernel,
                 common_obs_kernel, utility, agent_utilities=None, name=""):
        self.horizon = horizon
        self.num_agents = num_agents
        self.states = states            # [t] -> list of labels
        self.actions = actions          # [t][i] -> list of labels
        self.private_obs = private_obs  # [t][i] -> list of labels
        self.common_obs = common_obs    # [t] -> list of labels
        self.init = init
        self.transition = transition
        self.private_obs_kernel = private_obs_kernel
        self.common_obs_kernel = common_obs_kernel
        self.utility = utility
        self.agent_utilities = agent_utilities
        self.name = name
        self._joint_actions = {}

    # -- index helpers -----------------------------------------------------

    def n_states(self, t):
        return len(self.states[t])

    def n_actions(self, t, i):
        return len(self.actions[t][i])

    def n_private_obs(self, t, i):
        return len(self.private_obs[t][i])

    def n_common_obs(self, t):
        return len(self.common_obs[t])

    def joint_actions(self, t):
        """All joint actions at stage t as index tuples, lexicographic."""
        if t not in self._joint_actions:
            self._joint_actions[t] = list(itertools.product(
                *[range(self.n_actions(t, i)) for i in range(self.num_agents)]))
        return self._joint_actions[t]

    # -- kernel accessors --------------------------------------------------

    def p_init(self, x):
        return self.init[x]

    def p_trans(self, t, x, a):
        return _lookup(self.transition[t], (x,) + tuple(a))

    def p_y(self, t, i, x, aprev):
        tab = self.private_obs_kernel[t][i]
        if t == 0:
            return tab[x]
        return _lookup(tab, (x,) + tuple(aprev))

    def p_z(self, t, x, aprev):
        tab = self.common_obs_kernel[t]
        if t == 0:
            return tab[x]
        return _lookup(tab, (x,) + tuple(aprev))

    def u_team(self, t, x, a):
        return _lookup(self.utility[t], (x,) + tuple(a))

    def u_agent(self, t, i, x, a):
        if self.agent_utilities is None:
            return self.u_team(t, x, a)
        return _lookup(self.agent_utilities[i][t], (x,) + tuple(a))

    def is_team_utility(self, tol=0.0):
        if self.agent_utilities is None:
            return True
        for i in range(self.num_agents):
            for t in range(self.horizon):
                for x in range(self.n_states(t)):
                    for a in self.joint_actions(t):
                        if abs(self.u_agent(t, i, x, a) - self.u_team(t, x, a)) > tol:
                            return False
        return True

    def to_rational(self):
        """Copy with all probabilities and utilities as exact Fractions."""
        return TeamModel(
            self.horizon, self.num_agents, self.states, self.actions,
            self.private_obs, self.common_obs, _to_rational(self.init),
            _to_rational(self.transition), _to_rational(self.private_obs_kernel),
            _to_rational(self.common_obs_kernel), _to_rational(self.utility),
            None if self.agent_utilities is None else _to_rational(self.agent_utilities),
            name=self.name)


# ---------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------

class Policy:
    """Strategy profile interface: a distribution over own actions per
    (stage, agent, common history, private part)."""

    def action_dist(self, t, i, c, p):
        raise NotImplementedError


class HistoryPolicy(Policy):
    """Tabular full-history profile.

    ``tables[(t, i)][(c, p)]`` is either an action index (deterministic), a
    list of probabilities over actions, or a dict {action: prob}.  Histories
    absent from the table get the default action; zero-probability histories
    never matter for expected utility, so any total extension is valid.
    """

    def __init__(self, m, tables=None, default_action=0):
        self.m = m
        self.tables = tables if tables is not None else {}
        self.default_action = default_action

    def set(self, t, i, c, p, row):
        self.tables.setdefault((t, i), {})[(c, p)] = row

    def get(self, t, i, c, p):
        return self.tables.get((t, i), {}).get((c, p))

    def action_dist(self, t, i, c, p):
        row = self.tables.get((t, i), {}).get((c, p))
        if row is None:
            return [(self.default_action, 1)]
        if isinstance(row, int):
            return [(row, 1)]
        if isinstance(row, dict):
            return sorted((a, q) for a, q in row.items() if q > 0)
        return [(a, q) for a, q in enumerate(row) if q > 0]

    def is_deterministic(self):
        for tab in self.tables.values():
            for row in tab.values():
                if not isinstance(row, int):
                    supp = [q for q in (row.values() if isinstance(row, dict) else row) if q > 0]
                    if len(supp) != 1:
                        return False
        return True


class UniformPolicy(Policy):
    def __init__(self, m):
        self.m = m

    def action_dist(self, t, i, c, p):
        n = self.m.n_actions(t, i)
        w = Fraction(1, n) if isinstance(self.m.init[0], Fraction) else 1.0 / n
        return [(a, w) for a in range(n)]


class OpenLoopPolicy(Policy):
    """Fixed joint action sequence; agents ignore their information."""

    def __init__(self, m, joint_actions):
        self.m = m
        self.joint = joint_actions  # [t] -> joint action tuple

    def action_dist(self, t, i, c, p):
        return [(self.joint[t][i], 1)]


class FunctionPolicy(Policy):
    """Adapter turning a callable (t, i, c, p) -> action | [(a, p), ...]
    into a policy."""

    def __init__(self, fn):
        self.fn = fn

    def action_dist(self, t, i, c, p):
        out = self.fn(t, i, c, p)
        if isinstance(out, int):
            return [(out, 1)]
        return out


class StagePatchedPolicy(Policy):
    """Plays ``base`` before ``from_stage`` and ``patch`` from then on."""

    def __init__(self, base, from_stage, patch):
        self.base = base
        self.from_stage = from_stage
        self.patch = patch

    def action_dist(self, t, i, c, p):
        pol = self.base if t < self.from_stage else self.patch
        return pol.action_dist(t, i, c, p)


class AgentPatchedPolicy(Policy):
    """Profile where one agent's strategy is replaced."""

    def __init__(self, base, agent, replacement):
        self.base = base
        self.agent = agent
        self.replacement = replacement

    def action_dist(self, t, i, c, p):
        pol = self.replacement if i == self.agent else self.base
        return pol.action_dist(t, i, c, p)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _check_rows(table, depth, path, diagnostics, what, tol=1e-12):
    """Walk a nested kernel down to rows (lists at the given depth) and check
    each row is a probability vector."""
    if depth == 0:
        total = sum(table)
        if any(v < 0 for v in table):
            diagnostics.append(f"negative probability in {what} at {path}")
        if abs(total - 1) > tol:
            diagnostics.append(f"kernel row not stochastic at {what} {path}")
        return
    for k, sub in enumerate(table):
        _check_rows(sub, depth - 1, path + (k,), diagnostics, what, tol)


def validate_model(m, tol=1e-12):
    """Return a list of human-readable diagnostics; empty iff the model is
    valid (stochastic kernels, full-support initial distribution, non-empty
    label sets, consistent shapes)."""
    diags = []
    T, N = m.horizon, m.num_agents
    if T < 1:
        diags.append("horizon must be at least 1")
        return diags
    for t in range(T):
        if m.n_states(t) == 0:
            diags.append(f"empty state set at t={t + 1}")
        if m.n_common_obs(t) == 0:
            diags.append(f"empty common observation set at t={t + 1}")
        for i in range(N):
            if m.n_actions(t, i) == 0:
                diags.append(f"empty action set at t={t + 1}, agent {i + 1}")
            if m.n_private_obs(t, i) == 0:
                diags.append(f"empty private observation set at t={t + 1}, agent {i + 1}")
    if diags:
        return diags

    if len(m.init) != m.n_states(0):
        diags.append("initial distribution has wrong length")
    else:
        if abs(sum(m.init) - 1) > tol:
            diags.append("initial distribution does not sum to 1")
        if any(v <= 0 for v in m.init):
            diags.append("initial distribution lacks full support")

    for t in range(T - 1):
        for x in range(m.n_states(t)):
            for a in m.joint_actions(t):
                row = m.transition[t]
                try:
                    row = _lookup(row, (x,) + a)
                except (IndexError, TypeError):
                    diags.append(f"transition table malformed at t={t + 1}")
                    row = None
                if row is not None:
                    if len(row) != m.n_states(t + 1):
                        diags.append(f"transition row wrong length at t={t + 1}, x={x}, a={a}")
                    else:
                        s = sum(row)
                        if any(v < 0 for v in row) or abs(s - 1) > tol:
                            diags.append(
                                f"kernel row not stochastic at t={t + 1}, x={x}, a={a}")

    for t in range(T):
        prev_actions = [()] if t == 0 else m.joint_actions(t - 1)
        for x in range(m.n_states(t)):
            for a in prev_actions:
                for i in range(N):
                    try:
                        row = m.p_y(t, i, x, a if t > 0 else None)
                    except (IndexError, TypeError):
                        diags.append(f"private observation kernel malformed at t={t + 1}, agent {i + 1}")
                        continue
                    if len(row) != m.n_private_obs(t, i):
                        diags.append(f"private observation row wrong length at t={t + 1}, agent {i + 1}")
                    elif any(v < 0 for v in row) or abs(sum(row) - 1) > tol:
                        diags.append(
                            f"private observation kernel row not stochastic at "
                            f"t={t + 1}, agent {i + 1}, x={x}, a={a}")
                try:
                    row = m.p_z(t, x, a if t > 0 else None)
                except (IndexError, TypeError):
                    diags.append(f"common observation kernel malformed at t={t + 1}")
                    continue
                if len(row) != m.n_common_obs(t):
                    diags.append(f"common observation row wrong length at t={t + 1}")
                elif any(v < 0 for v in row) or abs(sum(row) - 1) > tol:
                    diags.append(
                        f"common observation kernel row not stochastic at t={t + 1}, x={x}, a={a}")
    return diags


# ---------------------------------------------------------------------------
# Exact forward enumeration
# ---------------------------------------------------------------------------

def agent_private(ys, acts, i):
    """Extract agent i's private part from joint observation/action lists."""
    return (tuple(yy[i] for yy in ys), tuple(aa[i] for aa in acts))


def forward_runs(m, policy, upto=None, include_last_action=False):
    """Yield every positive-probability partial run as
    (prob, xs, ys, zs, acts).

    ``xs`` covers stages 0..upto; ``ys``/``zs`` the realized observations up
    to stage ``upto``; ``acts`` the joint actions for stages 0..upto-1 (and
    stage ``upto`` too when ``include_last_action``).  Enumeration order is
    deterministic (index-lexicographic).
    """
    if upto is None:
        upto = m.horizon - 1
    N = m.num_agents

    def obs_branches(t, x, aprev):
        z_row = m.p_z(t, x, aprev)
        y_rows = [m.p_y(t, i, x, aprev) for i in range(N)]
        y_support = [[(y, q) for y, q in enumerate(row) if q > 0] for row in y_rows]
        for z, qz in enumerate(z_row):
            if qz <= 0:
                continue
            for combo in itertools.product(*y_support):
                py = qz
                for _, q in combo:
                    py = py * q
                yield tuple(y for y, _ in combo), z, py

    def action_branches(t, zs, ys, acts):
        c = tuple(zs)
        dists = [policy.action_dist(t, i, c, agent_private(ys, acts, i))
                 for i in range(N)]
        for combo in itertools.product(*dists):
            pa = 1
            for _, q in combo:
                pa = pa * q
            if pa > 0:
                yield tuple(a for a, _ in combo), pa

    def rec(t, prob, xs, ys, zs, acts):
        x = xs[-1]
        aprev = acts[-1] if t > 0 else None
        for y_joint, z, pobs in obs_branches(t, x, aprev):
            ys.append(y_joint)
            zs.append(z)
            p1 = prob * pobs
            if t == upto and not include_last_action:
                yield (p1, tuple(xs), tuple(ys), tuple(zs), tuple(acts))
            else:
                for a_joint, pa in action_branches(t, zs, ys, acts):
                    acts.append(a_joint)
                    p2 = p1 * pa
                    if t == upto:
                        yield (p2, tuple(xs), tuple(ys), tuple(zs), tuple(acts))
                    else:
                        row = m.p_trans(t, x, a_joint)
                        for x2, q in enumerate(row):
                            if q > 0:
                                xs.append(x2)
                                yield from rec(t + 1, p2 * q, xs, ys, zs, acts)
                                xs.pop()
                    acts.pop()
            ys.pop()
            zs.pop()

    for x1, q in enumerate(m.init):
        if q > 0:
            yield from rec(0, q, [x1], [], [], [])


def trajectory_space_size(m):
    """Syntactic upper bound on the enumeration domain of full runs."""
    n = 1
    for t in range(m.horizon):
        n *= m.n_states(t) * m.n_common_obs(t)
        for i in range(m.num_agents):
            n *= m.n_private_obs(t, i) * m.n_actions(t, i)
    return n


def trajectory_distribution(m, policy, cap=DEFAULT_TRAJECTORY_CAP):
    """Exact joint distribution over full trajectories under a profile.

    Returns a dict Trajectory -> probability with only positive-probability
    support.  Refuses with :class:`SizeGuardError` when the syntactic
    enumeration domain exceeds ``cap``.
    """
    n = trajectory_space_size(m)
    if n > cap:
        raise SizeGuardError("trajectory enumeration", n, cap)
    out = {}
    for prob, xs, ys, zs, acts in forward_runs(m, policy, include_last_action=True):
        key = Trajectory(xs, acts, ys, zs)
        out[key] = out.get(key, 0) + prob
    return out


def expected_utility(m, policy, cap=DEFAULT_TRAJECTORY_CAP):
    """Exact expected total team utility and the per-stage flow vector.

    The total equals the sum of the flows exactly (same arithmetic)."""
    n = trajectory_space_size(m)
    if n > cap:
        raise SizeGuardError("trajectory enumeration", n, cap)
    flows = [0] * m.horizon
    for prob, xs, ys, zs, acts in forward_runs(m, policy, include_last_action=True):
        for t in range(m.horizon):
            flows[t] = flows[t] + prob * m.u_team(t, xs[t], acts[t])
    return sum(flows), flows


def history_space_size(m, t, i):
    n = 1
    for tau in range(t + 1):
        n *= m.n_common_obs(tau) * m.n_private_obs(tau, i)
    for tau in range(t):
        n *= m.n_actions(tau, i)
    return n


def enumerate_histories(m, t, i, policy=None, cap=DEFAULT_HISTORY_CAP):
    """All syntactic agent histories at stage t (0-based), deterministically
    ordered lexicographically over (common, private_obs, private_actions).

    When a ``policy`` is supplied, returns (history, reachable) pairs where
    ``reachable`` flags positive probability under the profile; otherwise
    returns plain histories.
    """
    n = history_space_size(m, t, i)
    if n > cap:
        raise SizeGuardError("history enumeration", n, cap)
    cs = itertools.product(*[range(m.n_common_obs(tau)) for tau in range(t + 1)])
    combos = []
    for c in cs:
        for ys in itertools.product(*[range(m.n_private_obs(tau, i)) for tau in range(t + 1)]):
            for acts in itertools.product(*[range(m.n_actions(tau, i)) for tau in range(t)]):
                combos.append(AgentHistory(i, t, c, ys, acts))
    if policy is None:
        return combos
    reached = set()
    for prob, xs, ys, zs, acts in forward_runs(m, policy, upto=t):
        reached.add((tuple(zs), agent_private(ys, acts, i)))
    return [(h, (h.common, (h.private_obs, h.private_actions)) in reached)
            for h in combos]


def reachable_histories(m, policy, t):
    """Map from joint reachable data at stage t: returns a dict keyed by
    (c, p_joint) -> (probability, x-distribution dict).

    ``p_joint`` is the tuple of per-agent private parts.  Used by checkers
    and belief computations; the x-distribution is the unnormalized joint
    mass over the current state."""
    out = {}
    N = m.num_agents
    for prob, xs, ys, zs, acts in forward_runs(m, policy, upto=t):
        c = tuple(zs)
        pj = tuple(agent_private(ys, acts, i) for i in range(N))
        cell = out.setdefault((c, pj), {})
        cell[xs[-1]] = cell.get(xs[-1], 0) + prob
    return out
