"""Common-information beliefs over (state, compressed private values).

The central object is the belief pi_t(x_t, s_t) = P{X_t = x_t, S_t = s_t | c_t}
held jointly by all agents given the common history.  It can be computed
directly from the exact trajectory distribution (``sib_belief``) or pushed
forward recursively by a Bayes update given the stage prescription and the
next common observation (``sib_update``).  Consistency of the two is one of
the package's standing invariants.
"""

from fractions import Fraction

from .errors import InconsistentObservation, ZeroProbabilityConditioning
from .model import agent_private, forward_runs
from .reporting import CheckReport, ConditionResult, FAILS, HOLDS
from .schemes import CompressionScheme, GENERAL

KEY_DECIMALS = 9


def _roundp(v):
    if isinstance(v, Fraction):
        return v
    return round(float(v), KEY_DECIMALS)


class Belief:
    """Probability table over (state index, joint compression value)."""

    def __init__(self, t, probs):
        self.t = t
        self.probs = {k: v for k, v in probs.items() if v > 0}
        self._key = None

    def total(self):
        return sum(self.probs.values())

    def normalized(self):
        z = self.total()
        return Belief(self.t, {k: v / z for k, v in self.probs.items()})

    def key(self):
        """Canonical memoization key: entries rounded to 1e-9 (exact in
        rational mode), zeros dropped, deterministic order.  Cached; the
        table must not be mutated after the first call."""
        if self._key is not None:
            return self._key
        items = []
        for k in sorted(self.probs):
            p = _roundp(self.probs[k])
            if p > 0:
                items.append((k, p))
        self._key = (self.t, tuple(items))
        return self._key

    def x_marginal(self):
        out = {}
        for (x, s), v in self.probs.items():
            out[x] = out.get(x, 0) + v
        return out

    def support_values(self, i):
        """Distinct compression values of agent i in the support, sorted."""
        return sorted({s[i] for (x, s) in self.probs})

    def sup_distance(self, other):
        keys = set(self.probs) | set(other.probs)
        return max((abs(self.probs.get(k, 0) - other.probs.get(k, 0)) for k in keys),
                   default=0)

    def to_sparse(self):
        return [[list(map(repr, _flatten_key(k))), float(v)]
                for k, v in sorted(self.probs.items())]


def _flatten_key(k):
    x, s = k
    return (x,) + tuple(s)


class Prescription:
    """Per-agent map from compression values to (distributions over) actions.

    Deterministic prescriptions store plain action indices."""

    def __init__(self, maps):
        self.maps = maps  # list per agent: dict value -> int | dict {a: prob}

    def action_dist(self, i, s):
        row = self.maps[i].get(s)
        if row is None:
            return [(0, 1)]  # off-support values never carry probability mass
        if isinstance(row, int):
            return [(row, 1)]
        return sorted((a, q) for a, q in row.items() if q > 0)

    def joint_support(self, s_joint):
        dists = [self.action_dist(i, s) for i, s in enumerate(s_joint)]
        out = []
        _product_joint(dists, 0, (), 1, out)
        return out

    def to_jsonable(self):
        return [sorted((repr(s), row if isinstance(row, int) else
                        {int(a): float(q) for a, q in row.items()})
                       for s, row in mp.items()) for mp in self.maps]


def _product_joint(dists, i, acc, w, out):
    if i == len(dists):
        out.append((acc, w))
        return
    for a, q in dists[i]:
        _product_joint(dists, i + 1, acc + (a,), w * q, out)


def sib_belief_all(m, scheme, g_prefix, t, prefix_policy=None):
    """All beliefs at stage t (0-based) in one forward pass.

    Returns dict c -> (Belief, P{c}).  ``g_prefix`` governs stages before t;
    strategy-dependent schemes receive it when computing values."""
    groups = {}
    totals = {}
    N = m.num_agents
    for prob, xs, ys, zs, acts in forward_runs(m, g_prefix, upto=t):
        c = tuple(zs)
        s_joint = tuple(
            scheme.value(m, i, t, c, agent_private(ys, acts, i), prefix=g_prefix)
            for i in range(N))
        cell = groups.setdefault(c, {})
        k = (xs[-1], s_joint)
        cell[k] = cell.get(k, 0) + prob
        totals[c] = totals.get(c, 0) + prob
    out = {}
    for c, cell in groups.items():
        z = totals[c]
        out[c] = (Belief(t, {k: v / z for k, v in cell.items()}), z)
    return out


def sib_belief(m, scheme, g_prefix, c):
    """Exact belief at common history c (stage = len(c) - 1) under the
    profile prefix.  Raises ZeroProbabilityConditioning when P{c} = 0."""
    t = len(c) - 1
    beliefs = sib_belief_all(m, scheme, g_prefix, t)
    if c not in beliefs:
        raise ZeroProbabilityConditioning(f"common history {c} has probability 0")
    return beliefs[c][0]


def sib_update(m, scheme, belief, prescription, z_next):
    """One-step Bayes update of the belief given the stage prescription and
    the next common observation.

    Returns (posterior Belief at stage t+1, normalizer), the normalizer being
    the prior probability of ``z_next``.  Raises InconsistentObservation when
    that probability is zero."""
    t = belief.t
    t2 = t + 1
    N = m.num_agents
    mass = {}
    norm = 0
    for (x, s_joint), pv in belief.probs.items():
        for a_joint, pa in prescription.joint_support(s_joint):
            w0 = pv * pa
            if w0 <= 0:
                continue
            trow = m.p_trans(t, x, a_joint)
            for x2, q in enumerate(trow):
                if q <= 0:
                    continue
                pz = m.p_z(t2, x2, a_joint)[z_next]
                if pz <= 0:
                    continue
                w1 = w0 * q * pz
                y_support = [
                    [(y, qq) for y, qq in enumerate(m.p_y(t2, i, x2, a_joint)) if qq > 0]
                    for i in range(N)]
                for combo in _combos(y_support):
                    y_joint, py = combo
                    s2 = tuple(
                        scheme.update_value(m, t2, j, s_joint[j], y_joint[j],
                                            z_next, a_joint[j])
                        for j in range(N))
                    w = w1 * py
                    k = (x2, s2)
                    mass[k] = mass.get(k, 0) + w
                    norm += w
    if norm == 0:
        raise InconsistentObservation(
            f"observation {z_next} has zero prior probability")
    return Belief(t2, {k: v / norm for k, v in mass.items()}), norm


def _combos(supports):
    out = [((), 1)]
    for sup in supports:
        out = [(acc + (y,), w * q) for acc, w in out for y, q in sup]
    return out


# ---------------------------------------------------------------------------
# Policy-independence of conditional beliefs
# ---------------------------------------------------------------------------

def _conditional_views(m, policy, agent, t):
    """For each positive-probability history of ``agent`` at stage t, the
    normalized conditional distribution over (x_t, others' private parts)."""
    N = m.num_agents
    groups = {}
    for prob, xs, ys, zs, acts in forward_runs(m, policy, upto=t):
        c = tuple(zs)
        own = agent_private(ys, acts, agent)
        others = tuple(agent_private(ys, acts, j) for j in range(N) if j != agent)
        cell = groups.setdefault((c, own), {})
        k = (xs[-1], others)
        cell[k] = cell.get(k, 0) + prob
    out = {}
    for h, cell in groups.items():
        z = sum(cell.values())
        out[h] = {k: v / z for k, v in cell.items()}
    return out


def check_policy_independence(m, g_minus_i, agent, g_i_variants, t, tol=1e-12):
    """Verify that the conditional distribution over (x_t, others' private
    parts) given the agent's own history does not depend on the agent's own
    strategy.

    Compares all variant pairs on histories reachable under both combined
    profiles.  This property holds for every model in this class, so FAILS
    flags an engine bug, not a modeling problem."""
    from .model import AgentPatchedPolicy
    views = []
    for v in g_i_variants:
        combined = AgentPatchedPolicy(g_minus_i, agent, v)
        views.append(_conditional_views(m, combined, agent, t))
    worst = 0
    ce = None
    pairs = 0
    for a in range(len(views)):
        for b in range(a + 1, len(views)):
            common = sorted(set(views[a]) & set(views[b]), key=repr)
            for h in common:
                d1, d2 = views[a][h], views[b][h]
                keys = set(d1) | set(d2)
                dev = max((abs(d1.get(k, 0) - d2.get(k, 0)) for k in keys), default=0)
                pairs += 1
                if dev > worst:
                    worst = dev
                    if dev > tol:
                        ce = {"variants": (a, b), "history": repr(h),
                              "deviation": float(dev)}
    verdict = HOLDS if worst <= tol else FAILS
    cond = ConditionResult("policy-independence", verdict, worst, ce,
                           profiles_checked=len(views), realizations_checked=pairs)
    return CheckReport("policy-independence", [cond], tol)


# ---------------------------------------------------------------------------
# Belief-augmented (composite) schemes
# ---------------------------------------------------------------------------

class CompositeScheme(CompressionScheme):
    """General scheme pairing a private scheme's value with the common
    belief: value = (s_t^i, key of pi_t).

    The belief component is strategy-dependent: it is the exact conditional
    of (x_t, s_t) given the common history under the profile prefix, so the
    prefix must be supplied when values are computed."""

    kind = GENERAL
    strategy_dependent = True

    def __init__(self, base):
        self.base = base
        self.name = f"composite({base.name})"

    def belief_at(self, m, prefix, c):
        cache = getattr(prefix, "_belief_cache", None)
        if cache is None:
            cache = {}
            try:
                prefix._belief_cache = cache
            except AttributeError:
                pass
        t = len(c) - 1
        if t not in cache:
            cache[t] = sib_belief_all(m, self.base, prefix, t)
        if c not in cache[t]:
            raise ZeroProbabilityConditioning(f"common history {c} unreachable")
        return cache[t][c][0]

    def value(self, m, i, t, c, p, prefix=None):
        if prefix is None:
            raise ValueError("composite scheme values require the profile prefix")
        s = self.base.value(m, i, t, c, p, prefix=prefix)
        pi = self.belief_at(m, prefix, c)
        return (s, pi.key())


def compose_with_belief(m, s):
    """Augment a private scheme with the common belief (the composite
    information state).  The caller is responsible for having verified the
    base scheme's sufficiency."""
    if s.kind == GENERAL:
        raise ValueError("base scheme must be private")
    return CompositeScheme(s)
