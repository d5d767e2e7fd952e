"""Ground-truth machinery: brute-force policy search and the
randomization-device transfer of arbitrary profiles to belief-based form.

The brute-force search enumerates deterministic full-history profiles.  A
deterministic profile factors into one action assignment per common-history
branch, and total utility is additive across stages, so the search walks the
common-history tree depth-first, enumerating at each branch every assignment
of actions to the reachable private parts.  This covers exactly the set of
deterministic profiles (restricted to reachable histories, which is all that
matters for expected utility) without any belief compression, making it an
independent trust anchor for the solver.
"""

import itertools

import numpy as np

from .belief import sib_belief_all
from .errors import SizeGuardError
from .model import (HistoryPolicy, agent_private, expected_utility,
                    forward_runs)
from .reporting import CheckReport, ConditionResult, FAILS, HOLDS
from .schemes import IdentityScheme

DEFAULT_WORK_CAP = 10 ** 8


class OracleResult:
    def __init__(self, value, policy, profiles_enumerated, flows):
        self.value = value
        self.policy = policy
        self.profiles_enumerated = profiles_enumerated
        self.flows = flows

    def to_dict(self):
        return {
            "value": float(self.value),
            "profiles_enumerated": self.profiles_enumerated,
            "flows": [float(f) for f in self.flows],
        }


class _Search:
    def __init__(self, m, scheme, cap):
        self.m = m
        self.scheme = scheme
        self.cap = cap
        self.work = 0

    def root_conds(self):
        """Unnormalized joint distributions over (x, private parts), one per
        first common observation."""
        m = self.m
        N = m.num_agents
        out = {}
        for x, qx in enumerate(m.init):
            if qx <= 0:
                continue
            zrow = m.p_z(0, x, None)
            ysup = [[(y, q) for y, q in enumerate(m.p_y(0, i, x, None)) if q > 0]
                    for i in range(N)]
            for z, qz in enumerate(zrow):
                if qz <= 0:
                    continue
                for combo in itertools.product(*ysup):
                    w = qx * qz
                    for _, q in combo:
                        w = w * q
                    pj = tuple(((combo[i][0],), ()) for i in range(N))
                    cell = out.setdefault(z, {})
                    k = (x, pj)
                    cell[k] = cell.get(k, 0) + w
        return out

    def branch(self, t, c, cond):
        """Exact optimum of the tail utility over this common-history branch.

        Returns (value, assignment tree, number of profiles covered)."""
        m = self.m
        N = m.num_agents
        T = m.horizon
        # compression value per reachable private part
        smap = [{} for _ in range(N)]
        for (x, pj) in cond:
            for i in range(N):
                if pj[i] not in smap[i]:
                    smap[i][pj[i]] = self.scheme.value(m, i, t, c, pj[i])
        support = [sorted(set(smap[i].values())) for i in range(N)]
        per_agent = []
        for i in range(N):
            rows = []
            for combo in itertools.product(range(m.n_actions(t, i)),
                                           repeat=len(support[i])):
                rows.append(dict(zip(support[i], combo)))
            per_agent.append(rows)

        best = None
        best_tree = None
        total_profiles = 0
        for assign in itertools.product(*per_agent):
            self.work += 1
            if self.work > self.cap:
                raise SizeGuardError("brute-force profile search", self.work,
                                     self.cap)
            val = 0
            for (x, pj), w in cond.items():
                a = tuple(assign[i][smap[i][pj[i]]] for i in range(N))
                val = val + w * m.u_team(t, x, a)
            children = {}
            prof = 1
            if t < T - 1:
                conds2 = {}
                for (x, pj), w in cond.items():
                    a = tuple(assign[i][smap[i][pj[i]]] for i in range(N))
                    trow = m.p_trans(t, x, a)
                    for x2, q in enumerate(trow):
                        if q <= 0:
                            continue
                        w1 = w * q
                        zrow = m.p_z(t + 1, x2, a)
                        ysup = [[(y, qq) for y, qq in
                                 enumerate(m.p_y(t + 1, i, x2, a)) if qq > 0]
                                for i in range(N)]
                        for z2, qz in enumerate(zrow):
                            if qz <= 0:
                                continue
                            for combo in itertools.product(*ysup):
                                w2 = w1 * qz
                                for _, qq in combo:
                                    w2 = w2 * qq
                                pj2 = tuple(
                                    (pj[i][0] + (combo[i][0],), pj[i][1] + (a[i],))
                                    for i in range(N))
                                cell = conds2.setdefault(z2, {})
                                k = (x2, pj2)
                                cell[k] = cell.get(k, 0) + w2
                for z2 in sorted(conds2):
                    v2, tree2, n2 = self.branch(t + 1, c + (z2,), conds2[z2])
                    val = val + v2
                    children[z2] = tree2
                    prof *= n2
            total_profiles += prof
            if best is None or val > best:
                best = val
                best_tree = (assign, children)
        return best, best_tree, total_profiles

    def extract(self, t, c, cond, tree, policy):
        """Write the optimal assignment tree into a tabular profile."""
        m = self.m
        N = m.num_agents
        assign, children = tree
        smap = [{} for _ in range(N)]
        for (x, pj) in cond:
            for i in range(N):
                if pj[i] not in smap[i]:
                    smap[i][pj[i]] = self.scheme.value(m, i, t, c, pj[i])
        for (x, pj) in cond:
            for i in range(N):
                policy.set(t, i, c, pj[i], assign[i][smap[i][pj[i]]])
        if not children:
            return
        conds2 = {}
        for (x, pj), w in cond.items():
            a = tuple(assign[i][smap[i][pj[i]]] for i in range(N))
            trow = m.p_trans(t, x, a)
            for x2, q in enumerate(trow):
                if q <= 0:
                    continue
                zrow = m.p_z(t + 1, x2, a)
                ysup = [[(y, qq) for y, qq in enumerate(m.p_y(t + 1, i, x2, a))
                         if qq > 0] for i in range(N)]
                for z2, qz in enumerate(zrow):
                    if qz <= 0 or z2 not in children:
                        continue
                    for combo in itertools.product(*ysup):
                        pj2 = tuple((pj[i][0] + (combo[i][0],), pj[i][1] + (a[i],))
                                    for i in range(N))
                        cell = conds2.setdefault(z2, {})
                        cell[(x2, pj2)] = 1
        for z2, tree2 in children.items():
            self.extract(t + 1, c + (z2,), conds2[z2], tree2, policy)


def _run_search(m, scheme, cap):
    search = _Search(m, scheme, cap)
    roots = search.root_conds()
    value = 0
    total_profiles = 1
    policy = HistoryPolicy(m, {}, default_action=0)
    for z in sorted(roots):
        v, tree, n = search.branch(0, (z,), roots[z])
        value = value + v
        total_profiles *= n
        search.extract(0, (z,), roots[z], tree, policy)
    val2, flows = expected_utility(m, policy)
    return OracleResult(value, policy, total_profiles, flows)


def brute_force_optimal(m, cap=DEFAULT_WORK_CAP):
    """Exact maximum of expected team utility over all deterministic
    full-history profiles (deterministic profiles attain the optimum of the
    linear team objective).  Refuses with SizeGuardError beyond the work
    cap."""
    return _run_search(m, IdentityScheme(), cap)


def brute_force_sib_optimal(m, scheme, cap=DEFAULT_WORK_CAP):
    """Exact maximum over deterministic profiles that read only the scheme's
    compression value alongside the common history — an independent check of
    the belief-graph solver, computed without any belief machinery."""
    if scheme.strategy_dependent:
        raise ValueError("direct enumeration needs strategy-independent values")
    return _run_search(m, scheme, cap)


# ---------------------------------------------------------------------------
# Residual codes and the randomization-device transfer
# ---------------------------------------------------------------------------

class ResidualCode:
    """Per-cell conditional history distributions under a profile.

    A cell is (stage, agent, belief key, compression value); it stores the
    ordered positive-probability histories of that agent consistent with the
    cell, their conditional probabilities, and cumulative sums implementing
    the inverse-CDF reconstruction r -> first history whose cumulative sum
    reaches r (right-closed intervals; r = 0 maps to the first history).
    Joint cells over all agents' values carry the exact joint conditional
    used for correlated sampling."""

    def __init__(self, cells, joint_cells, pi_keys):
        self.cells = cells              # (t, i, pik, s) -> (hists, probs, cums)
        self.joint_cells = joint_cells  # (t, pik, s_joint) -> (tuples, probs, cums)
        self.pi_keys = pi_keys          # t -> {c: belief key}

    def invert(self, t, i, pik, s, r):
        hists, probs, cums = self.cells[(t, i, pik, s)]
        for k, cum in enumerate(cums):
            if r <= cum:
                return hists[k]
        return hists[-1]


def build_residual_code(m, scheme, g):
    """Exact conditional distributions of full histories within each
    (belief, compression value) cell under profile g."""
    N = m.num_agents
    cells = {}
    joint_cells = {}
    pi_keys = {}
    for t in range(m.horizon):
        beliefs = sib_belief_all(m, scheme, g, t)
        pi_keys[t] = {c: b.key() for c, (b, pc) in beliefs.items()}
        per_agent = {}
        joint = {}
        for prob, xs, ys, zs, acts in forward_runs(m, g, upto=t):
            c = tuple(zs)
            pik = pi_keys[t][c]
            pj = tuple(agent_private(ys, acts, i) for i in range(N))
            sj = tuple(scheme.value(m, i, t, c, pj[i], prefix=g) for i in range(N))
            for i in range(N):
                cell = per_agent.setdefault((t, i, pik, sj[i]), {})
                h = (c, pj[i])
                cell[h] = cell.get(h, 0) + prob
            jcell = joint.setdefault((t, pik, sj), {})
            k = (c, pj)
            jcell[k] = jcell.get(k, 0) + prob
        for key, cell in per_agent.items():
            hists = sorted(cell)
            tot = sum(cell.values())
            probs = [cell[h] / tot for h in hists]
            cums = list(itertools.accumulate(probs))
            cells[key] = (hists, probs, cums)
        for key, cell in joint.items():
            hists = sorted(cell)
            tot = sum(cell.values())
            probs = [cell[h] / tot for h in hists]
            cums = list(itertools.accumulate(probs))
            joint_cells[key] = (hists, probs, cums)
    return ResidualCode(cells, joint_cells, pi_keys)


def residual_independence_report(m, scheme, g, code=None, tol=1e-9):
    """Check that within every joint cell, each agent's conditional history
    distribution matches the per-agent cell table: the residual uniform any
    one agent would use is independent of the other agents' compression
    values given the belief."""
    if code is None:
        code = build_residual_code(m, scheme, g)
    worst = 0
    ce = None
    checked = 0
    for (t, pik, sj), (tuples, probs, cums) in code.joint_cells.items():
        for i in range(len(sj)):
            marg = {}
            for (cc, pj), q in zip(tuples, probs):
                h = (cc, pj[i])
                marg[h] = marg.get(h, 0) + q
            hists, aprobs, _ = code.cells[(t, i, pik, sj[i])]
            dev = max(abs(marg.get(h, 0) - q) for h, q in zip(hists, aprobs))
            checked += 1
            if dev > worst:
                worst = dev
                if dev > tol:
                    ce = {"stage": t + 1, "agent": i + 1, "deviation": float(dev)}
    verdict = HOLDS if worst <= tol else FAILS
    cond = ConditionResult("residual-independence", verdict, worst, ce,
                           realizations_checked=checked)
    return CheckReport("residual-independence", [cond], tol)


def _joint_action_dist(m, g, t, tuples, probs):
    """Joint action distribution induced by sampling a history tuple from the
    cell and letting every agent act as g would on the sampled history."""
    out = {}
    N = m.num_agents
    for (cc, pj), q in zip(tuples, probs):
        dists = [g.action_dist(t, i, cc, pj[i]) for i in range(N)]
        for combo in itertools.product(*dists):
            w = q
            for _, qq in combo:
                w = w * qq
            a = tuple(x for x, _ in combo)
            out[a] = out.get(a, 0) + w
    return out


def transfer_to_sib(m, scheme, g, sample_count=0, seed=0, tol=1e-9):
    """Build the belief-based profile equivalent to g via the residual code
    and verify equivalence.

    The constructed profile, at each stage, looks up the joint cell of the
    current (belief, compression values), samples a full history tuple from
    the exact joint conditional using a common random stream, and acts as g
    would on the sampled histories.

    Returns a report dict with (a) the exact induced distribution over
    (belief, compression values) at every stage compared against that under
    g, (b) exact per-stage utility flows under both, and (c) Monte-Carlo
    flow estimates with 3-sigma checks when sample_count > 0."""
    code = build_residual_code(m, scheme, g)
    N = m.num_agents
    T = m.horizon

    exact_total, g_flows = expected_utility(m, g)

    # exact forward recursion over (x, common history, joint value)
    dist = {}
    for x, qx in enumerate(m.init):
        if qx <= 0:
            continue
        zrow = m.p_z(0, x, None)
        ysup = [[(y, q) for y, q in enumerate(m.p_y(0, i, x, None)) if q > 0]
                for i in range(N)]
        for z, qz in enumerate(zrow):
            if qz <= 0:
                continue
            for combo in itertools.product(*ysup):
                w = qx * qz
                for _, q in combo:
                    w = w * q
                sj = tuple(scheme.init_value(m, i, combo[i][0], z)
                           for i in range(N))
                k = (x, (z,), sj)
                dist[k] = dist.get(k, 0) + w

    sigma_flows = []
    pi_s_devs = []
    stage_tables = []  # per stage: (dist snapshot, action kernels)
    for t in range(T):
        # (belief, value) distribution under sigma vs under g
        sigma_ps = {}
        for (x, c, sj), w in dist.items():
            pik = code.pi_keys[t].get(c)
            if pik is None:
                pik = ("unreachable-under-g", c)
            k = (pik, sj)
            sigma_ps[k] = sigma_ps.get(k, 0) + w
        g_ps = {}
        for prob, xs, ys, zs, acts in forward_runs(m, g, upto=t):
            c = tuple(zs)
            pj = tuple(agent_private(ys, acts, i) for i in range(N))
            sj = tuple(scheme.value(m, i, t, c, pj[i], prefix=g) for i in range(N))
            k = (code.pi_keys[t][c], sj)
            g_ps[k] = g_ps.get(k, 0) + prob
        keys = set(sigma_ps) | set(g_ps)
        dev = max((abs(sigma_ps.get(k, 0) - g_ps.get(k, 0)) for k in keys),
                  default=0)
        pi_s_devs.append(dev)

        # action kernels per (c, s_joint) and exact flow
        kernels = {}
        flow = 0
        for (x, c, sj), w in dist.items():
            kk = (c, sj)
            if kk not in kernels:
                pik = code.pi_keys[t][c]
                tuples, probs, cums = code.joint_cells[(t, pik, sj)]
                kernels[kk] = _joint_action_dist(m, g, t, tuples, probs)
            for a, qa in kernels[kk].items():
                flow = flow + w * qa * m.u_team(t, x, a)
        sigma_flows.append(flow)
        stage_tables.append((dict(dist), kernels))

        if t == T - 1:
            break
        dist2 = {}
        for (x, c, sj), w in dist.items():
            for a, qa in kernels[(c, sj)].items():
                if qa <= 0:
                    continue
                w0 = w * qa
                trow = m.p_trans(t, x, a)
                for x2, q in enumerate(trow):
                    if q <= 0:
                        continue
                    w1 = w0 * q
                    zrow = m.p_z(t + 1, x2, a)
                    ysup = [[(y, qq) for y, qq in
                             enumerate(m.p_y(t + 1, i, x2, a)) if qq > 0]
                            for i in range(N)]
                    for z2, qz in enumerate(zrow):
                        if qz <= 0:
                            continue
                        for combo in itertools.product(*ysup):
                            w2 = w1 * qz
                            for _, qq in combo:
                                w2 = w2 * qq
                            sj2 = tuple(
                                scheme.update_value(m, t + 1, j, sj[j],
                                                    combo[j][0], z2, a[j])
                                for j in range(N))
                            k = (x2, c + (z2,), sj2)
                            dist2[k] = dist2.get(k, 0) + w2
        dist = dist2

    report = {
        "stages": T,
        "exact_flow_under_g": [float(f) for f in g_flows],
        "exact_flow_under_construction": [float(f) for f in sigma_flows],
        "flow_deviation": [float(abs(a - b)) for a, b in zip(g_flows, sigma_flows)],
        "pi_s_distribution_deviation": [float(d) for d in pi_s_devs],
        "pi_s_match": all(d <= tol for d in pi_s_devs),
        "tolerance": tol,
        "seed": seed,
        "samples": sample_count,
    }

    if sample_count > 0:
        mc = _simulate_construction(m, scheme, g, code, stage_tables,
                                    sample_count, seed)
        report["mc_flows"] = mc["means"]
        report["mc_sigma"] = mc["sigmas"]
        report["mc_within_3sigma"] = [
            abs(mc["means"][t] - float(g_flows[t])) <= 3 * mc["sigmas"][t] + 1e-15
            for t in range(T)]
    return report


def _simulate_construction(m, scheme, g, code, stage_tables, n, seed):
    """Vectorized Monte-Carlo rollout of the constructed profile.

    All randomness comes from one counter-based generator keyed by the seed,
    drawn in a fixed per-stage order, so results do not depend on how samples
    are grouped."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    N = m.num_agents
    T = m.horizon

    def fl(v):
        return float(v)

    # initial draw: (x, z, y) jointly
    combos = []
    weights = []
    for x, qx in enumerate(m.init):
        if qx <= 0:
            continue
        zrow = m.p_z(0, x, None)
        ysup = [[(y, q) for y, q in enumerate(m.p_y(0, i, x, None)) if q > 0]
                for i in range(N)]
        for z, qz in enumerate(zrow):
            if qz <= 0:
                continue
            for combo in itertools.product(*ysup):
                w = fl(qx) * fl(qz)
                for _, q in combo:
                    w *= fl(q)
                sj = tuple(scheme.init_value(m, i, combo[i][0], z)
                           for i in range(N))
                combos.append((x, (z,), sj))
                weights.append(w)
    weights = np.asarray(weights)
    weights = weights / weights.sum()
    pick = rng.choice(len(combos), size=n, p=weights)

    # encode simulation states as indices into a growing table
    states = [combos[k] for k in range(len(combos))]
    state_index = {s: k for k, s in enumerate(states)}
    cur = np.asarray([pick], dtype=np.int64)[0]

    means, sigmas = [], []
    for t in range(T):
        u_cell = rng.random(n)
        u_act = rng.random(n)
        u_x2 = rng.random(n)
        u_z2 = rng.random(n)
        u_y2 = rng.random((N, n))

        util = np.zeros(n)
        next_states = []
        next_index = {}
        nxt = np.zeros(n, dtype=np.int64)
        for kstate in np.unique(cur):
            x, c, sj = states[kstate]
            idx = np.nonzero(cur == kstate)[0]
            pik = code.pi_keys[t][c]
            tuples, probs, cums = code.joint_cells[(t, pik, sj)]
            cums_f = np.asarray([fl(v) for v in cums])
            pick_h = np.searchsorted(cums_f, u_cell[idx], side="left")
            pick_h = np.minimum(pick_h, len(tuples) - 1)
            for kh in np.unique(pick_h):
                cc, pj = tuples[kh]
                sub = idx[pick_h == kh]
                # joint action of all agents on the sampled histories
                adists = [g.action_dist(t, i, cc, pj[i]) for i in range(N)]
                jsup = []
                _acc_joint(adists, 0, (), 1.0, jsup, fl)
                acums = np.cumsum([w for _, w in jsup])
                pick_a = np.searchsorted(acums, u_act[sub], side="left")
                pick_a = np.minimum(pick_a, len(jsup) - 1)
                for ka in np.unique(pick_a):
                    a = jsup[ka][0]
                    sub2 = sub[pick_a == ka]
                    util[sub2] = fl(m.u_team(t, x, a))
                    if t == T - 1:
                        continue
                    trow = [fl(v) for v in m.p_trans(t, x, a)]
                    x2s = np.searchsorted(np.cumsum(trow), u_x2[sub2], side="left")
                    x2s = np.minimum(x2s, len(trow) - 1)
                    for x2 in np.unique(x2s):
                        sub3 = sub2[x2s == x2]
                        zrow = [fl(v) for v in m.p_z(t + 1, int(x2), a)]
                        z2s = np.searchsorted(np.cumsum(zrow), u_z2[sub3], side="left")
                        z2s = np.minimum(z2s, len(zrow) - 1)
                        yrows = [[fl(v) for v in m.p_y(t + 1, i, int(x2), a)]
                                 for i in range(N)]
                        ypicks = []
                        for i in range(N):
                            yy = np.searchsorted(np.cumsum(yrows[i]),
                                                 u_y2[i][sub3], side="left")
                            ypicks.append(np.minimum(yy, len(yrows[i]) - 1))
                        for j, samp in enumerate(sub3):
                            z2 = int(z2s[j])
                            sj2 = tuple(
                                scheme.update_value(m, t + 1, i, sj[i],
                                                    int(ypicks[i][j]), z2, a[i])
                                for i in range(N))
                            st = (int(x2), c + (z2,), sj2)
                            kk = next_index.get(st)
                            if kk is None:
                                kk = len(next_states)
                                next_index[st] = kk
                                next_states.append(st)
                            nxt[samp] = kk
        means.append(float(util.mean()))
        sigmas.append(float(util.std(ddof=1) / np.sqrt(n)))
        states = next_states
        state_index = next_index
        cur = nxt.copy()
    return {"means": means, "sigmas": sigmas}


def _acc_joint(dists, i, acc, w, out, fl):
    if i == len(dists):
        out.append((acc, w))
        return
    for a, q in dists[i]:
        _acc_joint(dists, i + 1, acc + (a,), w * fl(q), out, fl)
