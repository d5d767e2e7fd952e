"""Random desk-scale instance generator shared by the test suite.

Instances are sized so that both the belief DP and the exhaustive search
finish in well under a second each: T=2 draws allow a second common
observation value and two private observation values per agent; T=3 draws
keep later private observations singleton and the common observation
uninformative so the search tree stays small.
"""

import random

from decteam.model import TeamModel


def _dist(rng, n):
    w = [rng.uniform(0.05, 1.0) for _ in range(n)]
    z = sum(w)
    return [v / z for v in w]


def random_instance(seed):
    """A random two-agent team; even seeds give T=2, odd seeds T=3."""
    rng = random.Random(seed)
    T = 2 if seed % 2 == 0 else 3
    nx = rng.choice([2, 3])
    na = [2, 2]
    N = 2
    if T == 2:
        ny = [[2, 2], [2, 2]]
        nz = [rng.choice([1, 2]), 2]
    else:
        ny = [[2, 2], [1, 1], [1, 1]]
        nz = [1, 1, 1]

    def rows(shape_action, t, leaf):
        # nested per-action tables: [x][a1][a2] -> leaf() or [x] -> leaf()
        if not shape_action:
            return [leaf() for _ in range(nx)]
        return [[[leaf() for _ in range(na[1])] for _ in range(na[0])]
                for _ in range(nx)]

    states = [[f"x{j}" for j in range(nx)] for _ in range(T)]
    actions = [[[f"a{j}" for j in range(na[i])] for i in range(N)]
               for _ in range(T)]
    private_obs = [[[f"y{j}" for j in range(ny[t][i])] for i in range(N)]
                   for t in range(T)]
    common_obs = [[f"z{j}" for j in range(nz[t])] for t in range(T)]

    init = _dist(rng, nx)
    transition = [rows(True, t, lambda: _dist(rng, nx)) for t in range(T - 1)]
    private_obs_kernel = []
    common_obs_kernel = []
    for t in range(T):
        if t == 0:
            private_obs_kernel.append(
                [[_dist(rng, ny[0][i]) for _ in range(nx)] for i in range(N)])
            common_obs_kernel.append([_dist(rng, nz[0]) for _ in range(nx)])
        else:
            private_obs_kernel.append(
                [rows(True, t, lambda i=i: _dist(rng, ny[t][i]))
                 for i in range(N)])
            common_obs_kernel.append(rows(True, t, lambda: _dist(rng, nz[t])))
    utility = [[[[rng.uniform(-1, 1) for _ in range(na[1])]
                 for _ in range(na[0])] for _ in range(nx)] for _t in range(T)]

    return TeamModel(
        horizon=T, num_agents=N, states=states, actions=actions,
        private_obs=private_obs, common_obs=common_obs, init=init,
        transition=transition, private_obs_kernel=private_obs_kernel,
        common_obs_kernel=common_obs_kernel, utility=utility,
        name=f"random-{seed}")


def random_deterministic_policy(m, rng):
    """Deterministic full-history profile filled on reachable histories,
    stage by stage."""
    from decteam.model import HistoryPolicy, agent_private, forward_runs
    pol = HistoryPolicy(m, {}, default_action=0)
    for t in range(m.horizon):
        for prob, xs, ys, zs, acts in forward_runs(m, pol, upto=t):
            c = tuple(zs)
            for i in range(m.num_agents):
                p = agent_private(ys, acts, i)
                if pol.get(t, i, c, p) is None:
                    pol.set(t, i, c, p, rng.randrange(m.n_actions(t, i)))
    return pol
