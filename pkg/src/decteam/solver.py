"""Backward-induction team solver over reachable common beliefs.

The solver turns the decentralized problem into a centralized one: a
fictitious coordinator observes the common history, maintains the belief
pi_t over (state, compressed private values), and at each stage picks a joint
prescription mapping each agent's compression value to an action.  Backward
induction over the reachable belief graph yields the optimal value and a
belief-indexed policy, which lifts back to a full-history profile.
"""

import itertools

from .belief import Belief, Prescription, sib_update
from .errors import InconsistentObservation, NonTeamUtility, SizeGuardError
from .model import HistoryPolicy, agent_private, forward_runs

DEFAULT_NODE_CAP = 10 ** 6


class BeliefNode:
    def __init__(self, t, belief):
        self.t = t
        self.belief = belief
        self.key = belief.key()
        self.support = None        # per-agent sorted compression values
        self.prescriptions = None  # list of Prescription, enumeration order
        self.children = {}         # (prescription index, z) -> (child key, prob)


class SIBPolicy:
    """A chosen prescription index per belief node."""

    def __init__(self, graph, choices):
        self.graph = graph
        self.choices = choices  # node key -> prescription index

    def prescription(self, node_key):
        node = self.graph.nodes[node_key]
        return node.prescriptions[self.choices[node_key]]


class BeliefGraph:
    def __init__(self, m, scheme, roots, nodes):
        self.m = m
        self.scheme = scheme
        self.roots = roots  # z1 -> (node key, P{z1})
        self.nodes = nodes  # key -> BeliefNode

    def stage_counts(self):
        out = {}
        for node in self.nodes.values():
            out[node.t] = out.get(node.t, 0) + 1
        return out


def root_beliefs(m, scheme):
    """Initial beliefs, one per positive-probability first common
    observation, with their probabilities."""
    groups = {}
    totals = {}
    N = m.num_agents
    for x, qx in enumerate(m.init):
        if qx <= 0:
            continue
        zrow = m.p_z(0, x, None)
        yrows = [m.p_y(0, i, x, None) for i in range(N)]
        ysup = [[(y, q) for y, q in enumerate(r) if q > 0] for r in yrows]
        for z, qz in enumerate(zrow):
            if qz <= 0:
                continue
            for combo in itertools.product(*ysup):
                w = qx * qz
                for _, q in combo:
                    w = w * q
                s_joint = tuple(scheme.init_value(m, i, combo[i][0], z)
                                for i in range(N))
                cell = groups.setdefault(z, {})
                k = (x, s_joint)
                cell[k] = cell.get(k, 0) + w
                totals[z] = totals.get(z, 0) + w
    out = {}
    for z in sorted(groups):
        tot = totals[z]
        out[z] = (Belief(0, {k: v / tot for k, v in groups[z].items()}), tot)
    return out


def enumerate_prescriptions(m, t, support):
    """All deterministic joint prescriptions over the given per-agent
    compression-value lists, in a fixed order: agents outermost, values in
    the given order, actions innermost-lexicographic."""
    per_agent_maps = []
    for i, values in enumerate(support):
        assignments = []
        for combo in itertools.product(range(m.n_actions(t, i)), repeat=len(values)):
            assignments.append(dict(zip(values, combo)))
        per_agent_maps.append(assignments)
    out = []
    for joint in itertools.product(*per_agent_maps):
        out.append(Prescription(list(joint)))
    return out


def expand_belief_graph(m, scheme, node_cap=DEFAULT_NODE_CAP):
    """Forward closure of the belief update under every deterministic
    prescription and every positive-probability next common observation.

    Nodes are deduplicated by the belief's canonical key."""
    T = m.horizon
    roots = root_beliefs(m, scheme)
    nodes = {}
    frontier = []
    root_map = {}
    for z, (b, pz) in roots.items():
        node = BeliefNode(0, b)
        if node.key not in nodes:
            nodes[node.key] = node
            frontier.append(node)
        root_map[z] = (node.key, pz)

    work = 0
    for t in range(T):
        next_frontier = []
        for node in frontier:
            node.support = [node.belief.support_values(i)
                            for i in range(m.num_agents)]
            node.prescriptions = enumerate_prescriptions(m, t, node.support)
            work += len(node.prescriptions)
            if len(nodes) > node_cap or work > node_cap * 10:
                raise SizeGuardError("belief graph expansion",
                                     max(len(nodes), work), node_cap)
            if t == T - 1:
                continue
            for pi_idx, alpha in enumerate(node.prescriptions):
                for z2 in range(m.n_common_obs(t + 1)):
                    try:
                        child_belief, norm = sib_update(m, scheme, node.belief,
                                                        alpha, z2)
                    except InconsistentObservation:
                        continue
                    ck = child_belief.key()
                    if ck not in nodes:
                        child = BeliefNode(t + 1, child_belief)
                        nodes[ck] = child
                        next_frontier.append(child)
                    node.children[(pi_idx, z2)] = (ck, norm)
        frontier = next_frontier
    return BeliefGraph(m, scheme, root_map, nodes)


def _stage_payoff(m, t, belief, alpha):
    total = 0
    for (x, s_joint), pv in belief.probs.items():
        for a_joint, pa in alpha.joint_support(s_joint):
            total = total + pv * pa * m.u_team(t, x, a_joint)
    return total


def solve_team_dp(m, scheme, node_cap=DEFAULT_NODE_CAP, graph=None):
    """Backward induction over the reachable belief graph.

    Returns (value table keyed by node, SIBPolicy, optimal value).  Ties are
    broken toward the lowest prescription enumeration index.  Requires a
    genuine team utility."""
    if not m.is_team_utility():
        raise NonTeamUtility("per-agent utilities differ; the optimizer "
                             "solves team objectives only")
    if graph is None:
        graph = expand_belief_graph(m, scheme, node_cap=node_cap)
    T = m.horizon
    by_stage = [[] for _ in range(T)]
    for node in graph.nodes.values():
        by_stage[node.t].append(node)
    values = {}
    choices = {}
    for t in range(T - 1, -1, -1):
        for node in sorted(by_stage[t], key=lambda n: repr(n.key)):
            best = None
            best_idx = None
            for idx, alpha in enumerate(node.prescriptions):
                v = _stage_payoff(m, t, node.belief, alpha)
                if t < T - 1:
                    for z2 in range(m.n_common_obs(t + 1)):
                        edge = node.children.get((idx, z2))
                        if edge is not None:
                            ck, norm = edge
                            v = v + norm * values[ck]
                if best is None or v > best:
                    best = v
                    best_idx = idx
            values[node.key] = best
            choices[node.key] = best_idx
    vstar = 0
    for z in sorted(graph.roots):
        ck, pz = graph.roots[z]
        vstar = vstar + pz * values[ck]
    return values, SIBPolicy(graph, choices), vstar


def lift_to_history_policy(m, scheme, sib_policy):
    """Expand a belief-indexed policy into a full-history profile, stage by
    stage: walk the belief graph along common observations, read off the
    prescription, and apply it to each reachable private part's compression
    value.  Unreachable histories default to action 0."""
    graph = sib_policy.graph
    m_ = graph.m
    tables = {}
    policy = HistoryPolicy(m_, tables, default_action=0)

    # map each reachable common history to its belief node by walking the
    # chosen prescriptions forward
    node_at = {}
    for z, (ck, pz) in graph.roots.items():
        node_at[(z,)] = ck
    T = m_.horizon
    for t in range(T - 1):
        for c in [c for c in list(node_at) if len(c) == t + 1]:
            ck = node_at[c]
            node = graph.nodes[ck]
            idx = sib_policy.choices.get(ck)
            if idx is None:
                continue
            for z2 in range(m_.n_common_obs(t + 1)):
                edge = node.children.get((idx, z2))
                if edge is not None:
                    node_at[c + (z2,)] = edge[0]

    # Forward reachability must be computed under the policy being built, so
    # fill the tables stage by stage; enumerating stage t only ever queries
    # the already-filled stages before t.
    for t in range(T):
        seen = set()
        for prob, xs, ys, zs, acts in forward_runs(m_, policy, upto=t):
            c = tuple(zs)
            ck = node_at.get(c)
            if ck is None:
                continue
            node = graph.nodes[ck]
            idx = sib_policy.choices.get(ck)
            if idx is None:
                continue
            alpha = node.prescriptions[idx]
            for i in range(m_.num_agents):
                p = agent_private(ys, acts, i)
                if (i, c, p) in seen:
                    continue
                seen.add((i, c, p))
                s = scheme.value(m_, i, t, c, p, prefix=policy)
                dist = alpha.action_dist(i, s)
                if len(dist) == 1:
                    policy.set(t, i, c, p, dist[0][0])
                else:
                    policy.set(t, i, c, p, dict(dist))
    return policy
