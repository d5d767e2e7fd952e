"""Enumeration-based verification of compression sufficiency conditions.

Three graded notions are checked, each phrased as conditional-distribution
(or conditional-expectation) equalities that must hold under every strategy
profile in a stated family:

* payoff-relevance (``check_payoff_relevant``): per-agent closure of the
  compressed value's dynamics and of the stage utility, quantified over all
  open-loop profiles;
* private sufficiency (``check_sufficient_private``): joint dynamics closure
  of (s_{t+1}, z_{t+1}), joint utility measurability, and cross-agent
  consistency of the compressed values, quantified over deterministic
  full-history prefixes (dynamics) and deterministic (s, c)-form profiles
  (utility / cross-agent);
* general sufficiency (``check_sufficient_general``): the same shape for
  values that may fold in commonly computable quantities, with the right-hand
  conditioning on the compressed value alone (no common history).

The continuum of randomized profiles cannot be enumerated; a HOLDS verdict
means "holds on the checked family", and every report records its coverage.
A FAILS verdict always carries a replayable counterexample: feed it to
``replay_counterexample`` to reproduce the deviation from the exact model
distributions.
"""

import itertools
import random

from .errors import SizeGuardError
from .model import (HistoryPolicy, StagePatchedPolicy, UniformPolicy,
                    agent_private, forward_runs)
from .reporting import CheckReport, ConditionResult, FAILS, HOLDS
from .schemes import GENERAL, PRIVATE

DEFAULT_TOL = 1e-9
OPEN_LOOP_CAP = 10 ** 5
DEFAULT_BUDGET = 400

EXHAUSTIVE = "exhaustive"


# ---------------------------------------------------------------------------
# Profile families
# ---------------------------------------------------------------------------

def _full_history_cell(m, scheme, prefix, i, t, c, p):
    return (i, c, p)


def _sib_form_cell(m, scheme, prefix, i, t, c, p):
    return (i, c, scheme.value(m, i, t, c, p, prefix=prefix))


def _open_loop_cell(m, scheme, prefix, i, t, c, p):
    return (i,)


def _stage_cells(m, scheme, pol, t, cellfn):
    """Group the reachable stage-t histories (under the stages < t already
    filled in ``pol``) into assignment cells: histories in one cell are
    forced to share an action."""
    cells = {}
    for prob, xs, ys, zs, acts in forward_runs(m, pol, upto=t):
        c = tuple(zs)
        for i in range(m.num_agents):
            p = agent_private(ys, acts, i)
            k = cellfn(m, scheme, pol, i, t, c, p)
            cells.setdefault(k, {})[(i, c, p)] = True
    return cells


def _copy_policy(m, pol):
    return HistoryPolicy(m, {k: dict(v) for k, v in pol.tables.items()},
                         default_action=pol.default_action)


def enumerate_profiles(m, scheme, upto, cellfn, limit):
    """Deterministic profiles over stages 0..upto, all actions per
    assignment cell, depth first.  Stops after ``limit`` profiles and
    reports whether the family was exhausted.

    Returns (profiles, exhausted)."""
    out = []
    pol = HistoryPolicy(m, {}, default_action=0)
    exhausted = [True]

    def rec(t):
        if len(out) > limit:
            exhausted[0] = False
            return
        if t > upto:
            out.append(_copy_policy(m, pol))
            return
        cells = _stage_cells(m, scheme, pol, t, cellfn)
        keys = sorted(cells, key=repr)
        ranges = [range(m.n_actions(t, k[0])) for k in keys]
        for combo in itertools.product(*ranges):
            if len(out) > limit:
                exhausted[0] = False
                break
            for k, a in zip(keys, combo):
                for (i, c, p) in cells[k]:
                    pol.set(t, i, c, p, a)
            rec(t + 1)
        for i in range(m.num_agents):
            pol.tables.pop((t, i), None)

    if upto < 0:
        return [HistoryPolicy(m, {}, default_action=0)], True
    rec(0)
    return out[:limit], exhausted[0]


def sample_profiles(m, scheme, upto, cellfn, count, rng):
    """Random deterministic profiles: an independent uniform action per
    assignment cell, stage by stage."""
    out = []
    for _ in range(count):
        pol = HistoryPolicy(m, {}, default_action=0)
        for t in range(upto + 1):
            cells = _stage_cells(m, scheme, pol, t, cellfn)
            for k in sorted(cells, key=repr):
                a = rng.randrange(m.n_actions(t, k[0]))
                for (i, c, p) in cells[k]:
                    pol.set(t, i, c, p, a)
        out.append(pol)
    return out


def _profile_family(m, scheme, upto, cellfn, budget, rng):
    profiles, exhausted = enumerate_profiles(m, scheme, upto, cellfn, budget)
    if exhausted:
        return profiles, EXHAUSTIVE
    return (sample_profiles(m, scheme, upto, cellfn, budget, rng),
            f"sampled({budget})")


def open_loop_profiles(m, cap=OPEN_LOOP_CAP):
    """Every fixed joint action sequence, as policies."""
    per_stage = []
    count = 1
    for t in range(m.horizon):
        per_stage.append(m.joint_actions(t))
        count *= len(per_stage[-1])
        if count > cap:
            raise SizeGuardError("open-loop profile enumeration", count, cap)
    from .model import OpenLoopPolicy
    return [OpenLoopPolicy(m, list(seq)) for seq in itertools.product(*per_stage)]


# ---------------------------------------------------------------------------
# Conditional comparison plumbing
# ---------------------------------------------------------------------------

def _compare_dists(rows, tol):
    """rows: (weight, left_key, right_key, outcome), the left conditioning
    refining the right.  Compares, per left group, the conditional outcome
    distribution with its right group's.  Returns (worst deviation,
    counterexample fields, group count)."""
    left = {}
    right = {}
    for w, lk, rk, out in rows:
        cell = left.setdefault(lk, [rk, {}])
        cell[1][out] = cell[1].get(out, 0) + w
        rcell = right.setdefault(rk, {})
        rcell[out] = rcell.get(out, 0) + w
    worst = 0
    ce = None
    for lk in sorted(left, key=repr):
        rk, dist = left[lk]
        zl = sum(dist.values())
        rdist = right[rk]
        zr = sum(rdist.values())
        keys = set(dist) | set(rdist)
        dev = max((abs(dist.get(o, 0) / zl - rdist.get(o, 0) / zr) for o in keys),
                  default=0)
        if dev > worst:
            worst = dev
            if dev > tol:
                ce = {
                    "left_given": repr(lk),
                    "right_given": repr(rk),
                    "left_dist": {repr(o): float(dist.get(o, 0) / zl) for o in keys},
                    "right_dist": {repr(o): float(rdist.get(o, 0) / zr) for o in keys},
                }
    return worst, ce, len(left)


def _compare_means(rows, tol):
    """Same grouping, scalar outcomes, conditional expectations compared."""
    left = {}
    right = {}
    for w, lk, rk, u in rows:
        cell = left.setdefault(lk, [rk, 0, 0])
        cell[1] += w * u
        cell[2] += w
        rcell = right.setdefault(rk, [0, 0])
        rcell[0] += w * u
        rcell[1] += w
    worst = 0
    ce = None
    for lk in sorted(left, key=repr):
        rk, num, den = left[lk]
        rnum, rden = right[rk]
        dev = abs(num / den - rnum / rden)
        if dev > worst:
            worst = dev
            if dev > tol:
                ce = {
                    "left_given": repr(lk),
                    "right_given": repr(rk),
                    "left_mean": float(num / den),
                    "right_mean": float(rnum / rden),
                }
    return worst, ce, len(left)


def _serialize_policy(pol):
    if isinstance(pol, HistoryPolicy):
        return [[t, i, list(c), [list(p[0]), list(p[1])], a]
                for (t, i), tab in sorted(pol.tables.items())
                for (c, p), a in sorted(tab.items())]
    from .model import OpenLoopPolicy
    if isinstance(pol, OpenLoopPolicy):
        return {"open_loop": [list(a) for a in pol.joint]}
    raise TypeError(f"cannot serialize {type(pol).__name__}")


def _deserialize_policy(m, data):
    from .model import OpenLoopPolicy
    if isinstance(data, dict) and "open_loop" in data:
        return OpenLoopPolicy(m, [tuple(a) for a in data["open_loop"]])
    pol = HistoryPolicy(m, {}, default_action=0)
    for t, i, c, p, a in data:
        pol.set(t, i, tuple(c), (tuple(p[0]), tuple(p[1])), a)
    return pol


# ---------------------------------------------------------------------------
# Condition evaluators (single profile, single stage)
# ---------------------------------------------------------------------------

def _joint_parts(m, scheme, g, ys, zs, acts, t):
    c = tuple(zs[:t + 1])
    p = tuple(agent_private(ys[:t + 1], acts[:t], i) for i in range(m.num_agents))
    s = tuple(scheme.value(m, i, t, c, p[i], prefix=g)
              for i in range(m.num_agents))
    return c, p, s


def _eval_recursive_consistency(m, scheme, g, t, agent=None):
    """Values must be computable (total maps) on every reachable history and
    agree with one recursive step from the parent value.  For schemes that
    fold in strategy-dependent quantities only totality is checkable."""
    worst = 0
    ce = None
    n = 0
    for prob, xs, ys, zs, acts in forward_runs(m, g, upto=t):
        c = tuple(zs)
        for i in range(m.num_agents):
            p = agent_private(ys, acts, i)
            try:
                v = scheme.value(m, i, t, c, p, prefix=g)
            except KeyError as exc:
                return 1.0, {"left_given": repr((i, c, p)),
                             "error": f"value undefined: {exc!r}"}, n
            n += 1
            if t > 0 and not scheme.strategy_dependent:
                parent = scheme.value(m, i, t - 1, c[:-1],
                                      (p[0][:-1], p[1][:-1]), prefix=g)
                step = scheme.update_value(m, t, i, parent, p[0][-1], c[-1],
                                           p[1][-1])
                if step != v:
                    return 1.0, {"left_given": repr((i, c, p)),
                                 "error": "chained value differs from "
                                          "one-step update"}, n
    return worst, ce, n


def _eval_dynamics(m, scheme, g, t, joint, with_common_rhs):
    """Closure of the compressed dynamics: the next compressed value (and
    next common observation, in the joint form) given the full private part
    must match the version given only the compressed value."""
    rows = []
    for prob, xs, ys, zs, acts in forward_runs(m, g, upto=t + 1):
        c, p, s = _joint_parts(m, scheme, g, ys, zs, acts, t)
        a_t = acts[t]
        c2, p2, s2 = _joint_parts(m, scheme, g, ys, zs, acts, t + 1)
        if joint:
            out = (s2, zs[t + 1])
            rk = (c, s, a_t) if with_common_rhs else (s, a_t)
            rows.append((prob, (c, p, a_t), rk, out))
        else:
            for i in range(m.num_agents):
                out = s2[i]
                rk = (i, c, s[i], a_t) if with_common_rhs else (i, s[i], a_t)
                rows.append((prob, (i, c, p[i], a_t), rk, out))
    return rows


def _eval_utility(m, scheme, g, t, per_agent, with_common_rhs):
    """Measurability of the stage payoff: its conditional expectation given
    the full private part must match the version given the compressed
    value."""
    rows = []
    for prob, xs, ys, zs, acts in forward_runs(m, g, upto=t,
                                               include_last_action=True):
        c, p, s = _joint_parts(m, scheme, g, ys, zs, acts, t)
        a_t = acts[t]
        u = m.u_team(t, xs[-1], a_t)
        if per_agent:
            for i in range(m.num_agents):
                rk = (i, c, s[i], a_t) if with_common_rhs else (i, s[i], a_t)
                rows.append((prob, (i, c, p[i], a_t), rk, u))
        else:
            rk = (c, s, a_t) if with_common_rhs else (s, a_t)
            rows.append((prob, (c, p, a_t), rk, u))
    return rows


def _eval_cross_agent(m, scheme, g, t, with_common_rhs):
    """Cross-agent consistency: the other agents' compressed values given
    one agent's full private part must match the version given that agent's
    compressed value only."""
    rows = []
    for prob, xs, ys, zs, acts in forward_runs(m, g, upto=t):
        c, p, s = _joint_parts(m, scheme, g, ys, zs, acts, t)
        for i in range(m.num_agents):
            others = tuple(s[j] for j in range(m.num_agents) if j != i)
            rk = (i, c, s[i]) if with_common_rhs else (i, s[i])
            rows.append((prob, (i, c, p[i]), rk, others))
    return rows


# ---------------------------------------------------------------------------
# Checkers
# ---------------------------------------------------------------------------

_CONDITIONS = {}


def _run_condition(name, stages, profiles_by_stage, rows_fn, compare, tol,
                   coverage, meta):
    worst = 0
    ce = None
    n_profiles = 0
    n_groups = 0
    for t in stages:
        for idx, (g, replay_g) in enumerate(profiles_by_stage(t)):
            rows = rows_fn(g, t)
            dev, local_ce, groups = compare(rows, tol)
            n_profiles += 1
            n_groups += groups
            if dev > worst:
                worst = dev
                if local_ce is not None:
                    ce = dict(local_ce)
                    ce.update({"condition": name, "stage": t,
                               "profile": _serialize_policy(replay_g),
                               "deviation": float(dev)})
                    ce.update(meta)
    verdict = HOLDS if worst <= tol else FAILS
    return ConditionResult(name, verdict, worst, ce,
                           profiles_checked=n_profiles,
                           realizations_checked=n_groups,
                           coverage=coverage)


def check_payoff_relevant(m, scheme, tol=DEFAULT_TOL):
    """Per-agent closure conditions, quantified over every open-loop
    profile (all fixed joint action sequences)."""
    if scheme.kind != PRIVATE:
        raise ValueError("payoff-relevance applies to private compressions")
    T = m.horizon
    ol = open_loop_profiles(m)
    family = [(g, g) for g in ol]
    meta = {"definition": "payoff-relevant", "family": "open-loop"}
    conds = [
        _recursive_condition(m, scheme, tol, meta),
        _run_condition("dynamics-closure", range(T - 1), lambda t: family,
                       lambda g, t: _eval_dynamics(m, scheme, g, t,
                                                   joint=False,
                                                   with_common_rhs=True),
                       _compare_dists, tol, EXHAUSTIVE, meta),
        _run_condition("utility-measurability", range(T), lambda t: family,
                       lambda g, t: _eval_utility(m, scheme, g, t,
                                                  per_agent=True,
                                                  with_common_rhs=True),
                       _compare_means, tol, EXHAUSTIVE, meta),
    ]
    return CheckReport(f"payoff-relevant[{scheme.name}]", conds, tol)


def _recursive_condition(m, scheme, tol, meta, profile=None):
    if profile is None:
        profile = UniformPolicy(m)
    worst = 0
    ce = None
    n = 0
    for t in range(m.horizon):
        dev, local_ce, groups = _eval_recursive_consistency(
            m, scheme, profile, t)
        n += groups
        if dev > worst:
            worst = dev
            if local_ce is not None:
                ce = dict(local_ce)
                ce.update({"condition": "recursive-consistency", "stage": t})
                ce.update(meta)
    verdict = HOLDS if worst <= tol else FAILS
    return ConditionResult("recursive-consistency", verdict, worst, ce,
                           profiles_checked=1, realizations_checked=n,
                           coverage=EXHAUSTIVE)


def _prefix_plus_uniform(m, scheme, t, cellfn, budget, rng):
    """Profiles that are deterministic on stages < t and uniformly
    randomized from stage t on — the randomization gives every stage-t
    action positive probability so all conditionals are well-defined."""
    base, coverage = _profile_family(m, scheme, t - 1, cellfn, budget, rng)
    uni = UniformPolicy(m)
    return ([(StagePatchedPolicy(g, t, uni), g) for g in base], coverage)


def check_sufficient_private(m, scheme, profile_budget=DEFAULT_BUDGET,
                             tol=DEFAULT_TOL, seed=0):
    """Joint closure conditions for a private compression: dynamics of
    (s, z), utility measurability, and cross-agent consistency."""
    if scheme.kind != PRIVATE:
        raise ValueError("this checker applies to private compressions")
    T = m.horizon
    rng = random.Random(seed)
    meta = {"definition": "sufficient-private"}
    coverages = []

    def dyn_family(t):
        fam, cov = _prefix_plus_uniform(m, scheme, t, _full_history_cell,
                                        profile_budget, rng)
        coverages.append(cov)
        return fam

    def sib_family(t):
        fam, cov = _prefix_plus_uniform(m, scheme, t, _sib_form_cell,
                                        profile_budget, rng)
        coverages.append(cov)
        return fam

    conds = [_recursive_condition(m, scheme, tol, meta)]
    conds.append(_run_condition(
        "dynamics-closure", range(T - 1), dyn_family,
        lambda g, t: _eval_dynamics(m, scheme, g, t, joint=True,
                                    with_common_rhs=True),
        _compare_dists, tol, None,
        dict(meta, family="full-history-prefix+uniform")))
    conds.append(_run_condition(
        "utility-measurability", range(T), sib_family,
        lambda g, t: _eval_utility(m, scheme, g, t, per_agent=False,
                                   with_common_rhs=True),
        _compare_means, tol, None, dict(meta, family="sib-form+uniform")))
    conds.append(_run_condition(
        "cross-agent-consistency", range(T), sib_family,
        lambda g, t: _eval_cross_agent(m, scheme, g, t, with_common_rhs=True),
        _compare_dists, tol, None, dict(meta, family="sib-form+uniform")))
    _fill_coverage(conds, coverages)
    return CheckReport(f"sufficient-private[{scheme.name}]", conds, tol)


def check_sufficient_general(m, scheme, profile_budget=DEFAULT_BUDGET,
                             tol=DEFAULT_TOL, seed=0):
    """Closure conditions for a general compression; the right-hand sides
    condition on the compressed value alone, with no common history.

    Schemes whose values reconstruct realized actions from the profile
    (``requires_deterministic_profiles``) are checked against fully
    deterministic profiles through the conditioning stage instead of the
    prefix-plus-uniform family."""
    if scheme.kind != GENERAL:
        raise ValueError("this checker applies to general compressions")
    T = m.horizon
    rng = random.Random(seed)
    meta = {"definition": "sufficient-general"}
    coverages = []
    deterministic = getattr(scheme, "requires_deterministic_profiles", False)

    def prefix_family(t):
        if deterministic:
            fam, cov = _profile_family(m, scheme, t, _full_history_cell,
                                       profile_budget, rng)
            coverages.append(cov)
            return [(g, g) for g in fam]
        fam, cov = _prefix_plus_uniform(m, scheme, t, _full_history_cell,
                                        profile_budget, rng)
        coverages.append(cov)
        return fam

    family_name = ("full-history(deterministic)" if deterministic
                   else "full-history-prefix+uniform")
    base_profile = (HistoryPolicy(m, {}, default_action=0) if deterministic
                    else UniformPolicy(m))
    conds = [_recursive_condition(m, scheme, tol, meta, profile=base_profile)]
    conds.append(_run_condition(
        "dynamics-closure", range(T - 1), prefix_family,
        lambda g, t: _eval_dynamics(m, scheme, g, t, joint=True,
                                    with_common_rhs=False),
        _compare_dists, tol, None, dict(meta, family=family_name)))
    conds.append(_run_condition(
        "utility-measurability", range(T), prefix_family,
        lambda g, t: _eval_utility(m, scheme, g, t, per_agent=False,
                                   with_common_rhs=False),
        _compare_means, tol, None, dict(meta, family=family_name)))
    conds.append(_run_condition(
        "cross-agent-consistency", range(T), prefix_family,
        lambda g, t: _eval_cross_agent(m, scheme, g, t, with_common_rhs=False),
        _compare_dists, tol, None, dict(meta, family=family_name)))
    _fill_coverage(conds, coverages)
    return CheckReport(f"sufficient-general[{scheme.name}]", conds, tol)


def _fill_coverage(conds, coverages):
    overall = EXHAUSTIVE
    for cov in coverages:
        if cov != EXHAUSTIVE:
            overall = cov
    for c in conds[1:]:
        if c.coverage is None:
            c.coverage = overall


# ---------------------------------------------------------------------------
# Counterexample replay
# ---------------------------------------------------------------------------

def replay_counterexample(m, scheme, ce, tol=DEFAULT_TOL):
    """Re-run a FAILS counterexample against the exact model distributions
    and return the recomputed maximal deviation for its profile, stage and
    condition."""
    g = _deserialize_policy(m, ce["profile"])
    t = ce["stage"]
    definition = ce["definition"]
    with_common = definition != "sufficient-general"
    if (definition in ("sufficient-private", "sufficient-general")
            and ce.get("family") != "full-history(deterministic)"):
        g = StagePatchedPolicy(g, t, UniformPolicy(m))
    cond = ce["condition"]
    if cond == "dynamics-closure":
        rows = _eval_dynamics(m, scheme, g, t,
                              joint=(definition != "payoff-relevant"),
                              with_common_rhs=with_common)
        dev, _, _ = _compare_dists(rows, tol)
    elif cond == "utility-measurability":
        rows = _eval_utility(m, scheme, g, t,
                             per_agent=(definition == "payoff-relevant"),
                             with_common_rhs=with_common)
        dev, _, _ = _compare_means(rows, tol)
    elif cond == "cross-agent-consistency":
        rows = _eval_cross_agent(m, scheme, g, t, with_common_rhs=with_common)
        dev, _, _ = _compare_dists(rows, tol)
    else:
        raise ValueError(f"cannot replay condition {cond!r}")
    return dev
