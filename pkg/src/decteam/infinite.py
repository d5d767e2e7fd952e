"""Discounted infinite-horizon teams with stage-invariant data.

A stationary model repeats one set of kernels and one stage utility forever,
with payoffs discounted by delta per stage.  The solver runs value iteration
for the coordinator's Bellman operator over a finite set of belief points:
each point's update under a prescription and next common observation is
either another point of the set (closed sets, exact) or projected to the
nearest point in sup-norm (the maximum projection distance is reported so
accuracy loss stays visible).

A truncation device connects back to the finite-horizon solver: with a
bounded stage utility, cutting the horizon at ``truncation_bound(delta, M,
eps)`` changes the optimal value by at most eps, so the finite backward
induction on the unrolled model approximates the fixed point.
"""

import math

from .belief import Belief, sib_update
from .errors import EmptyPointSet, InconsistentObservation
from .model import TeamModel
from .solver import enumerate_prescriptions, root_beliefs

DEFAULT_ITERATION_CAP = 10 ** 6


class StationaryModel:
    """Stage-invariant team data plus a discount delta in (0, 1).

    Kernels use the same nested-list layout as the finite model's interior
    stages: ``transition[x][a_1]...[a_N][x']``, ``private_obs_kernel[i][x]
    [a_1]...[a_N][y]``, ``common_obs_kernel[x][a_1]...[a_N][z]``,
    ``utility[x][a_1]...[a_N]``.  The first stage of any unrolling has no
    preceding action; its observation kernels default to the stationary
    kernels evaluated at joint action (0, ..., 0) unless overridden.
    """

    def __init__(self, num_agents, states, actions, private_obs, common_obs,
                 init, transition, private_obs_kernel, common_obs_kernel,
                 utility, discount, first_private_obs=None,
                 first_common_obs=None, name=""):
        if not 0 < discount < 1:
            raise ValueError("discount must lie strictly inside (0, 1)")
        self.num_agents = num_agents
        self.states = states
        self.actions = actions          # [i] -> labels
        self.private_obs = private_obs  # [i] -> labels
        self.common_obs = common_obs
        self.init = init
        self.transition = transition
        self.private_obs_kernel = private_obs_kernel
        self.common_obs_kernel = common_obs_kernel
        self.utility = utility
        self.discount = discount
        self.first_private_obs = first_private_obs
        self.first_common_obs = first_common_obs
        self.name = name

    def _first_kernels(self):
        null = (0,) * self.num_agents

        def at_null(tab):
            out = []
            for x in range(len(self.states)):
                row = tab[x]
                for a in null:
                    row = row[a]
                out.append(row)
            return out

        py = self.first_private_obs
        if py is None:
            py = [at_null(self.private_obs_kernel[i])
                  for i in range(self.num_agents)]
        pz = self.first_common_obs
        if pz is None:
            pz = at_null(self.common_obs_kernel)
        return py, pz

    def unroll(self, horizon, discounted=True):
        """Finite model repeating the stationary stage ``horizon`` times.

        With ``discounted`` the stage-t utility is scaled by delta^t, so the
        finite optimal value approximates the infinite one up to the
        truncation tail."""
        py0, pz0 = self._first_kernels()
        scale = 1
        utils = []
        for t in range(horizon):
            utils.append(_scale_tree(self.utility, scale) if discounted
                         else self.utility)
            scale = scale * self.discount
        return TeamModel(
            horizon=horizon,
            num_agents=self.num_agents,
            states=[self.states] * horizon,
            actions=[self.actions] * horizon,
            private_obs=[self.private_obs] * horizon,
            common_obs=[self.common_obs] * horizon,
            init=self.init,
            transition=[self.transition] * (horizon - 1),
            private_obs_kernel=[py0] + [self.private_obs_kernel] * (horizon - 1),
            common_obs_kernel=[pz0] + [self.common_obs_kernel] * (horizon - 1),
            utility=utils,
            name=f"{self.name}[T={horizon}]")

    def window(self):
        """Two-stage undiscounted unrolling used to drive single belief
        updates (only the interior kernels matter there)."""
        return self.unroll(2, discounted=False)


def _scale_tree(tree, w):
    if isinstance(tree, list):
        return [_scale_tree(v, w) for v in tree]
    return tree * w


def _retag(belief):
    return belief if belief.t == 0 else Belief(0, belief.probs)


class BeliefPointSet:
    """Finite value-iteration support over (state, compressed values).

    ``closed`` is true when every one-step update of every point lands back
    on a point of the set exactly (sup-distance below ``close_tol``)."""

    def __init__(self, points):
        pts = {}
        for b in points:
            b = _retag(b)
            pts.setdefault(b.key(), b)
        self.points = pts  # key -> Belief, all tagged stage 0

    def __len__(self):
        return len(self.points)

    def keys(self):
        return sorted(self.points, key=repr)

    def project(self, belief):
        """Nearest point in sup-norm; returns (key, distance)."""
        if not self.points:
            raise EmptyPointSet("belief point set is empty")
        belief = _retag(belief)
        k = belief.key()
        if k in self.points:
            return k, 0.0
        best, bestd = None, None
        for key in self.keys():
            d = self.points[key].sup_distance(belief)
            if bestd is None or d < bestd:
                best, bestd = key, d
        return best, bestd

    def closure_report(self, sm, scheme, close_tol=1e-12):
        """Checks one-step closure under every deterministic prescription
        and observation; returns (closed, max projection distance)."""
        w = sm.window()
        worst = 0.0
        for key in self.keys():
            b = self.points[key]
            support = [b.support_values(i) for i in range(sm.num_agents)]
            for alpha in enumerate_prescriptions(w, 0, support):
                for z in range(len(sm.common_obs)):
                    try:
                        b2, _ = sib_update(w, scheme, b, alpha, z)
                    except InconsistentObservation:
                        continue
                    _, d = self.project(b2)
                    worst = max(worst, float(d))
        return worst <= close_tol, worst


def reachable_points(sm, scheme, depth, point_cap=10 ** 4):
    """Belief points reachable from the initial beliefs in at most ``depth``
    updates, closing under every deterministic prescription and observation.
    Returns (BeliefPointSet, fully_closed)."""
    w = sm.window()
    seen = {}
    frontier = []
    for z, (b, pz) in root_beliefs(sm.unroll(1), scheme).items():
        b = _retag(b)
        if b.key() not in seen:
            seen[b.key()] = b
            frontier.append(b)
    closed = True
    for _ in range(depth):
        if not frontier:
            break
        nxt = []
        for b in frontier:
            support = [b.support_values(i) for i in range(sm.num_agents)]
            for alpha in enumerate_prescriptions(w, 0, support):
                for z in range(len(sm.common_obs)):
                    try:
                        b2, _ = sib_update(w, scheme, b, alpha, z)
                    except InconsistentObservation:
                        continue
                    b2 = _retag(b2)
                    k = b2.key()
                    if k not in seen:
                        if len(seen) >= point_cap:
                            return BeliefPointSet(seen.values()), False
                        seen[k] = b2
                        nxt.append(b2)
        frontier = nxt
    if frontier:
        closed = False  # depth exhausted with growth still happening
    return BeliefPointSet(seen.values()), closed


def bellman_apply(sm, scheme, values, point_set, belief):
    """One coordinator Bellman step at one belief.

    Maximizes, over deterministic joint prescriptions on the belief's
    support, the expected stage utility plus delta times the value of the
    (projected) updated belief.  Returns (value, best prescription, max
    projection distance encountered)."""
    if not point_set.points:
        raise EmptyPointSet("belief point set is empty")
    w = sm.window()
    belief = _retag(belief)
    support = [belief.support_values(i) for i in range(sm.num_agents)]
    best = None
    best_alpha = None
    worst_proj = 0.0
    for alpha in enumerate_prescriptions(w, 0, support):
        total = 0
        for (x, s_joint), pv in belief.probs.items():
            for a_joint, pa in alpha.joint_support(s_joint):
                total = total + pv * pa * w.u_team(0, x, a_joint)
        cont = 0
        for z in range(len(sm.common_obs)):
            try:
                b2, norm = sib_update(w, scheme, belief, alpha, z)
            except InconsistentObservation:
                continue
            k, d = point_set.project(b2)
            worst_proj = max(worst_proj, float(d))
            cont = cont + norm * values[k]
        v = total + sm.discount * cont
        if best is None or v > best:
            best = v
            best_alpha = alpha
    return best, best_alpha, worst_proj


def value_iteration(sm, scheme, point_set, tol=1e-8,
                    iteration_cap=DEFAULT_ITERATION_CAP):
    """Iterates the Bellman operator on the point set until the sup-norm
    change drops below tol*(1-delta)/(2*delta), which makes the returned
    values tol-accurate for the fixed point.  Returns (values, greedy
    prescriptions per point key, info dict)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    delta = sm.discount
    threshold = tol * (1 - delta) / (2 * delta)
    keys = point_set.keys()
    values = {k: 0.0 for k in keys}
    policy = {}
    residual = None
    worst_proj = 0.0
    iterations = 0
    while iterations < iteration_cap:
        iterations += 1
        new = {}
        for k in keys:
            v, alpha, proj = bellman_apply(sm, scheme, values, point_set,
                                           point_set.points[k])
            new[k] = v
            policy[k] = alpha
            worst_proj = max(worst_proj, proj)
        residual = max(abs(new[k] - values[k]) for k in keys)
        values = new
        if residual <= threshold:
            break
    else:
        raise RuntimeError(
            f"value iteration hit the cap of {iteration_cap} sweeps; "
            f"last residual {residual}")
    info = {"iterations": iterations, "residual": float(residual),
            "max_projection_distance": worst_proj,
            "stop_threshold": float(threshold)}
    return values, policy, info


def value_at_start(sm, scheme, values, point_set):
    """Expected fixed-point value over the initial common observation,
    projecting each initial belief onto the point set."""
    total = 0
    for z, (b, pz) in root_beliefs(sm.unroll(1), scheme).items():
        k, _ = point_set.project(b)
        total = total + pz * values[k]
    return total


def truncation_bound(delta, bound, eps):
    """Smallest horizon T >= 1 with delta^T * bound / (1 - delta) <= eps/2,
    so truncating the discounted sum at T costs at most eps."""
    if not 0 < delta < 1:
        raise ValueError("discount must lie strictly inside (0, 1)")
    if bound < 0 or eps <= 0:
        raise ValueError("need a nonnegative bound and a positive target")
    if bound == 0 or delta * bound / (1 - delta) <= eps / 2:
        return 1
    target = eps / 2 * (1 - delta) / bound
    T = max(1, math.ceil(math.log(target) / math.log(delta)))
    while delta ** T * bound / (1 - delta) > eps / 2:
        T += 1
    while T > 1 and delta ** (T - 1) * bound / (1 - delta) <= eps / 2:
        T -= 1
    return T
