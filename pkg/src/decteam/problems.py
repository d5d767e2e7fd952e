"""Builders for classic decentralized-team problem families, each returning
a (TeamModel, CompressionScheme) pair, plus the small reference instance used
throughout the test-suite."""

import itertools
from fractions import Fraction

from .errors import SizeGuardError
from .model import TeamModel
from .schemes import (GENERAL, CompressionScheme, EmptyScheme, PerAgentScheme,
                      WindowScheme)


def _num(v, exact):
    return Fraction(v) if exact else float(Fraction(v))


# ---------------------------------------------------------------------------
# Reference instance
# ---------------------------------------------------------------------------

def build_tiny_team(exact=False, share_actions=True):
    """Two agents, two stages, binary hidden state.

    Each agent gets a noisy private reading of the state (flip probabilities
    0.1 and 0.2).  With ``share_actions`` both stage-1 actions become common
    knowledge at stage 2; without it the stage-2 common observation is
    uninformative.  The state persists with probability 0.8 under joint
    action (0,0), flips with probability 0.8 under (1,1), and mixes 50/50
    otherwise.  The team scores a point whenever both actions equal the
    state."""
    f = lambda v: _num(v, exact)
    half, p8, p2 = f("0.5"), f("0.8"), f("0.2")
    eps = [f("0.1"), f("0.2")]
    one, zero = f(1), f(0)

    def yrow(i, x):
        row = [eps[i], eps[i]]
        row[x] = 1 - eps[i]
        return row

    def trans_row(x, a):
        if a == (0, 0):
            row = [p2, p2]
            row[x] = p8
            return row
        if a == (1, 1):
            row = [p8, p8]
            row[x] = p2
            return row
        return [half, half]

    transition = [[[[trans_row(x, (a1, a2))
                     for a2 in range(2)] for a1 in range(2)]
                   for x in range(2)]]

    # stage-1 private kernels: [x][y]; stage-2: [x][a1][a2][y]
    pok = [
        [[yrow(i, x) for x in range(2)] for i in range(2)],
    ]
    pok.append([[[[yrow(i, x) for _a2 in range(2)] for _a1 in range(2)]
                 for x in range(2)] for i in range(2)])
    # reorder stage lists: private_obs_kernel[t][i]
    private_obs_kernel = [pok[0], pok[1]]

    if share_actions:
        z2_labels = ["00", "01", "10", "11"]
        z2 = [[[[one if z == 2 * a1 + a2 else zero for z in range(4)]
                for a2 in range(2)] for a1 in range(2)] for _x in range(2)]
    else:
        z2_labels = ["-"]
        z2 = [[[[one] for _a2 in range(2)] for _a1 in range(2)] for _x in range(2)]
    common_obs_kernel = [[[one] for _x in range(2)], z2]

    utility = [[[[one if a1 == a2 == x else zero
                  for a2 in range(2)] for a1 in range(2)] for x in range(2)]
               for _t in range(2)]

    return TeamModel(
        horizon=2, num_agents=2,
        states=[["0", "1"], ["0", "1"]],
        actions=[[["0", "1"], ["0", "1"]], [["0", "1"], ["0", "1"]]],
        private_obs=[[["0", "1"], ["0", "1"]], [["0", "1"], ["0", "1"]]],
        common_obs=[["-"], z2_labels],
        init=[half, half],
        transition=transition,
        private_obs_kernel=private_obs_kernel,
        common_obs_kernel=common_obs_kernel,
        utility=utility,
        name="tiny-team" if share_actions else "tiny-team-no-sharing",
    )


# ---------------------------------------------------------------------------
# Real-time source coding / decoding
# ---------------------------------------------------------------------------

def hamming_distortion(x, xhat):
    return 0 if x == xhat else 1


def build_source_coding(k, delay, T, source, msg_size, distortion=None,
                        exact=False):
    """Encoder/decoder chain: agent 1 watches a Markov source and sends one
    symbol per stage through a noiseless channel whose output becomes common
    knowledge next stage; agent 2 outputs estimates.  The model state is the
    window of recent source symbols long enough to carry both the Markov
    context and the delayed estimation target.

    ``source`` = {"init": dist over the source alphabet, "kernel": {context
    tuple (length min(k, t)) -> dist}}.  Utility at stage t >= delay+2
    (1-based) is minus the distortion between the estimate and the symbol
    from delay+1 stages back.  Scheme: encoder keeps the window, decoder
    keeps nothing."""
    if k < 1 or delay < 0 or T < 1:
        raise ValueError("k >= 1, delay >= 0, T >= 1 required")
    if distortion is None:
        distortion = hamming_distortion
    f = lambda v: _num(v, exact)
    alphabet = len(source["init"])
    w = max(k, delay + 2)
    one, zero = f(1), f(0)

    def windows(t):
        return list(itertools.product(range(alphabet), repeat=min(t + 1, w)))

    def src_row(ctx):
        ctx = tuple(ctx[-k:]) if len(ctx) > k else tuple(ctx)
        return [f(v) for v in source["kernel"][ctx]]

    states = [[str(win) for win in windows(t)] for t in range(T)]
    win_lists = [windows(t) for t in range(T)]
    win_index = [{win: j for j, win in enumerate(ws)} for ws in win_lists]

    init = []
    for win in win_lists[0]:
        init.append(f(source["init"][win[0]]))

    transition = []
    for t in range(T - 1):
        stage = []
        for win in win_lists[t]:
            per_a0 = []
            for _a0 in range(msg_size):
                per_a1 = []
                for _a1 in range(alphabet):
                    row = [zero] * len(win_lists[t + 1])
                    srow = src_row(win)
                    for xn in range(alphabet):
                        nw = (win + (xn,))[-w:]
                        row[win_index[t + 1][nw]] = row[win_index[t + 1][nw]] + srow[xn]
                    per_a1.append(row)
                per_a0.append(per_a1)
            stage.append(per_a0)
        transition.append(stage)

    # encoder observes the newest symbol, decoder observes nothing privately
    def enc_row(win):
        row = [zero] * alphabet
        row[win[-1]] = one
        return row

    private_obs_kernel = []
    for t in range(T):
        if t == 0:
            enc = [enc_row(win) for win in win_lists[t]]
            dec = [[one] for _ in win_lists[t]]
        else:
            enc = [[[enc_row(win) for _a1 in range(alphabet)]
                    for _a0 in range(msg_size)] for win in win_lists[t]]
            dec = [[[[one] for _a1 in range(alphabet)]
                    for _a0 in range(msg_size)] for _win in win_lists[t]]
        private_obs_kernel.append([enc, dec])

    common_obs = [["-"] if t == 0 else [f"m{j}" for j in range(msg_size)]
                  for t in range(T)]
    common_obs_kernel = []
    for t in range(T):
        if t == 0:
            common_obs_kernel.append([[one] for _ in win_lists[t]])
        else:
            common_obs_kernel.append(
                [[[[one if z == a0 else zero for z in range(msg_size)]
                   for _a1 in range(alphabet)] for a0 in range(msg_size)]
                 for _win in win_lists[t]])

    utility = []
    for t in range(T):
        stage = []
        for win in win_lists[t]:
            per_a0 = []
            for _a0 in range(msg_size):
                row = []
                for a1 in range(alphabet):
                    if t >= delay + 1:
                        target = win[len(win) - 2 - delay]
                        row.append(f(-distortion(target, a1)))
                    else:
                        row.append(zero)
                per_a0.append(row)
            stage.append(per_a0)
        utility.append(stage)

    m = TeamModel(
        horizon=T, num_agents=2,
        states=states,
        actions=[[[f"m{j}" for j in range(msg_size)],
                  [str(j) for j in range(alphabet)]] for _t in range(T)],
        private_obs=[[[str(j) for j in range(alphabet)], ["-"]]
                     for _t in range(T)],
        common_obs=common_obs,
        init=init,
        transition=transition,
        private_obs_kernel=private_obs_kernel,
        common_obs_kernel=common_obs_kernel,
        utility=utility,
        name=f"source-coding(k={k},delay={delay},T={T})",
    )
    scheme = PerAgentScheme([WindowScheme(w, 0), EmptyScheme()],
                            name="source-coding-window")
    return m, scheme


# ---------------------------------------------------------------------------
# Delayed sharing
# ---------------------------------------------------------------------------

def build_delayed_sharing(d, base, state_cap=5000):
    """d-stage delayed sharing of observations and actions.

    The augmented state carries the base state, the current joint private
    observation, and the last d (joint observation, joint action) memories;
    the common observation reveals the d-delayed memory.  Scheme: each agent
    keeps the window of its own last d observations and last d-1 actions
    (everything older is common)."""
    if d < 1:
        raise ValueError("delay must be >= 1")
    if d >= base.horizon:
        raise ValueError("delay must be smaller than the horizon")
    T, N = base.horizon, base.num_agents

    def joint_obs(t):
        return list(itertools.product(
            *[range(base.n_private_obs(t, i)) for i in range(N)]))

    def mem_slot(t, j):
        """Possible contents of memory slot j (info from stage t-j)."""
        tau = t - j
        if tau < 0:
            return [None]
        return [(yy, aa) for yy in joint_obs(tau) for aa in base.joint_actions(tau)]

    aug = []       # [t] -> list of (x, y_joint, mems)
    aug_index = []
    for t in range(T):
        slots = [mem_slot(t, j) for j in range(1, d + 1)]
        items = [(x, yy, mems)
                 for x in range(base.n_states(t))
                 for yy in joint_obs(t)
                 for mems in itertools.product(*slots)]
        if len(items) > state_cap:
            raise SizeGuardError("delayed-sharing augmented state",
                                 len(items), state_cap)
        aug.append(items)
        aug_index.append({s: j for j, s in enumerate(items)})

    zero, one = 0 * base.init[0], base.init[0] ** 0

    init = []
    for (x, yy, mems) in aug[0]:
        if any(mm is not None for mm in mems):
            init.append(zero)
            continue
        w = base.init[x]
        for i in range(N):
            w = w * base.p_y(0, i, x, None)[yy[i]]
        init.append(w)

    transition = []
    for t in range(T - 1):
        stage = []
        for (x, yy, mems) in aug[t]:
            rows = _nested_action_rows(
                base, t, lambda a, x=x, yy=yy, mems=mems: _ds_trans_row(
                    base, aug, aug_index, t, x, yy, mems, a, d))
            stage.append(rows)
        transition.append(stage)

    private_obs_kernel = []
    common_obs_kernel = []
    zsets = []
    for t in range(T):
        zset = [None] if t < d else mem_slot(t, d)
        zsets.append(zset)
        zindex = {v: j for j, v in enumerate(zset)}

        def yrow(i, s):
            x, yy, mems = s
            row = [zero] * base.n_private_obs(t, i)
            row[yy[i]] = one
            return row

        def zrow(s):
            x, yy, mems = s
            row = [zero] * len(zset)
            key = None if t < d else mems[d - 1]
            row[zindex[key]] = one
            return row

        if t == 0:
            private_obs_kernel.append(
                [[yrow(i, s) for s in aug[t]] for i in range(N)])
            common_obs_kernel.append([zrow(s) for s in aug[t]])
        else:
            private_obs_kernel.append(
                [[_nested_action_rows(base, t - 1, lambda a, s=s, i=i: yrow(i, s))
                  for s in aug[t]] for i in range(N)])
            common_obs_kernel.append(
                [_nested_action_rows(base, t - 1, lambda a, s=s: zrow(s))
                 for s in aug[t]])

    utility = []
    for t in range(T):
        stage = []
        for (x, yy, mems) in aug[t]:
            stage.append(_nested_action_rows(
                base, t, lambda a, x=x, t=t: base.u_team(t, x, a)))
        utility.append(stage)

    m = TeamModel(
        horizon=T, num_agents=N,
        states=[[str(s) for s in aug[t]] for t in range(T)],
        actions=base.actions,
        private_obs=base.private_obs,
        common_obs=[[str(v) for v in zsets[t]] for t in range(T)],
        init=init,
        transition=transition,
        private_obs_kernel=private_obs_kernel,
        common_obs_kernel=common_obs_kernel,
        utility=utility,
        name=f"delayed-sharing(d={d},{base.name})",
    )
    scheme = PerAgentScheme([WindowScheme(d, d - 1) for _ in range(N)],
                            name=f"delayed-window(d={d})")
    return m, scheme


def _ds_trans_row(base, aug, aug_index, t, x, yy, mems, a, d):
    N = base.num_agents
    zero = 0 * base.init[0]
    row = [zero] * len(aug[t + 1])
    for x2 in range(base.n_states(t + 1)):
        q = base.p_trans(t, x, a)[x2]
        if q <= 0:
            continue
        ydists = [base.p_y(t + 1, i, x2, a) for i in range(N)]
        for yy2 in itertools.product(*[range(len(r)) for r in ydists]):
            w = q
            for i in range(N):
                w = w * ydists[i][yy2[i]]
            if w <= 0:
                continue
            mems2 = ((yy, a),) + mems[:d - 1]
            j = aug_index[t + 1][(x2, yy2, mems2)]
            row[j] = row[j] + w
    return row


def _nested_action_rows(base, t, fn):
    """Build nested per-joint-action tables [a_1]...[a_N] -> fn(a)."""
    N = base.num_agents

    def rec(prefix, i):
        if i == N:
            return fn(prefix)
        return [rec(prefix + (ai,), i + 1) for ai in range(base.n_actions(t, i))]

    return rec((), 0)


# ---------------------------------------------------------------------------
# Remote and local controller over a lossy channel
# ---------------------------------------------------------------------------

class RemoteLocalScheme(CompressionScheme):
    """Information state for the remote/local control problem.

    Both agents track a symbolic tag for the common belief: the state at the
    last successful transmission, how many stages have elapsed since, and
    the remote controller's intervening actions (which are computable from
    common information under a deterministic profile).  The local controller
    additionally keeps the current state, which it observes perfectly.

    The tag (-1, e, ...) means no transmission has succeeded yet."""

    kind = GENERAL
    strategy_dependent = True
    requires_deterministic_profiles = True
    name = "remote-local"

    def __init__(self, n_plant_states):
        self.n_plant_states = n_plant_states

    def _common_tags(self, m, c, prefix):
        """Tag l^2_tau for every tau along the common history, reconstructing
        the remote controller's realized actions from the profile."""
        tags = []
        a2s = ()
        for tau, z in enumerate(c):
            if z < self.n_plant_states:
                tag = (z, 0, ())
            elif tau == 0:
                tag = (-1, 1, ())
            else:
                base, e, astr = tags[-1]
                tag = (base, e + 1, astr + (a2s[-1],))
            tags.append(tag)
            if tau < len(c) - 1:
                if prefix is None:
                    raise ValueError("profile prefix required")
                p2 = (tuple(0 for _ in range(tau + 1)), a2s)
                dist = prefix.action_dist(tau, 1, tuple(c[:tau + 1]), p2)
                if len(dist) != 1:
                    raise ValueError("deterministic profile required for "
                                     "remote-local information states")
                a2s = a2s + (dist[0][0],)
        return tags

    def value(self, m, i, t, c, p, prefix=None):
        tag = self._common_tags(m, c, prefix)[-1]
        if i == 0:
            return (p[0][-1], tag)
        return tag


def build_remote_local(p, plant, T, exact=False):
    """Local controller (agent 1) sees the plant state; a channel forwards
    it to common knowledge with success probability p per stage.  Agent 2
    controls remotely on common information alone."""
    if not 0 < p <= 1:
        raise ValueError("success probability must be in (0, 1]")
    f = lambda v: _num(v, exact)
    ps = f(p) if not isinstance(p, str) else f(p)
    nx = len(plant["states"])
    n1 = len(plant["actions"][0])
    n2 = len(plant["actions"][1])
    one, zero = f(1), f(0)
    drop = nx  # index of the "nothing arrived" symbol

    def zrow(x):
        row = [zero] * (nx + 1)
        row[x] = ps
        row[drop] = 1 - ps
        return row

    def yrow1(x):
        row = [zero] * nx
        row[x] = one
        return row

    trans = [[[[f(v) for v in plant["transition"][x][a1][a2]]
               for a2 in range(n2)] for a1 in range(n1)] for x in range(nx)]
    util = [[[f(plant["utility"][x][a1][a2]) for a2 in range(n2)]
             for a1 in range(n1)] for x in range(nx)]

    private_obs_kernel = []
    common_obs_kernel = []
    for t in range(T):
        if t == 0:
            private_obs_kernel.append([[yrow1(x) for x in range(nx)],
                                       [[one] for _x in range(nx)]])
            common_obs_kernel.append([zrow(x) for x in range(nx)])
        else:
            private_obs_kernel.append(
                [[[[yrow1(x) for _a2 in range(n2)] for _a1 in range(n1)]
                  for x in range(nx)],
                 [[[[one] for _a2 in range(n2)] for _a1 in range(n1)]
                  for _x in range(nx)]])
            common_obs_kernel.append(
                [[[zrow(x) for _a2 in range(n2)] for _a1 in range(n1)]
                 for x in range(nx)])

    m = TeamModel(
        horizon=T, num_agents=2,
        states=[list(plant["states"]) for _t in range(T)],
        actions=[[list(plant["actions"][0]), list(plant["actions"][1])]
                 for _t in range(T)],
        private_obs=[[list(plant["states"]), ["-"]] for _t in range(T)],
        common_obs=[list(plant["states"]) + ["drop"] for _t in range(T)],
        init=[f(v) for v in plant["init"]],
        transition=[trans for _t in range(T - 1)],
        private_obs_kernel=private_obs_kernel,
        common_obs_kernel=common_obs_kernel,
        utility=[util for _t in range(T)],
        name=f"remote-local(p={p},T={T})",
    )
    return m, RemoteLocalScheme(nx)
