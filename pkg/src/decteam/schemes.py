"""Candidate compressions of agents' private information.

A compression scheme replaces agent i's growing private part
p_t^i = (y_{1:t}^i, a_{1:t-1}^i) with a compact value s_t^i that is updated
recursively: an initializer maps the first (y, z) to a value, and an updater
folds in each stage's new information (y_t, z_t, a_{t-1}^i).

Two kinds exist.  PRIVATE schemes compress the private part only; GENERAL
schemes may also fold in commonly computable quantities (such as the common
belief), and their values may depend on the strategy prefix, which is then
passed explicitly.
"""

PRIVATE = "private"
GENERAL = "general"


class CompressionScheme:
    kind = PRIVATE
    strategy_dependent = False
    name = "scheme"

    def init_value(self, m, i, y1, z1):
        raise NotImplementedError

    def update_value(self, m, t, i, s_prev, y, z, a_prev):
        raise NotImplementedError

    def value(self, m, i, t, c, p, prefix=None):
        """Compressed value at stage t given common history c and private
        part p = (ys, acts), chained through the recursive update."""
        ys, acts = p
        s = self.init_value(m, i, ys[0], c[0])
        for tau in range(1, t + 1):
            s = self.update_value(m, tau, i, s, ys[tau], c[tau], acts[tau - 1])
        return s

    def one_step(self, m, t, i, parent, y, z, a_prev, prefix=None):
        """One recursive step from the parent value; the default simply
        applies the updater.  Strategy-dependent schemes may need the
        profile prefix."""
        return self.update_value(m, t, i, parent, y, z, a_prev)


class IdentityScheme(CompressionScheme):
    """The trivial compression s = p.  Always sufficient."""

    name = "identity"

    def init_value(self, m, i, y1, z1):
        return ((y1,), ())

    def update_value(self, m, t, i, s_prev, y, z, a_prev):
        return (s_prev[0] + (y,), s_prev[1] + (a_prev,))


class EmptyScheme(CompressionScheme):
    """Discards everything; single compression value per agent."""

    name = "empty"

    def init_value(self, m, i, y1, z1):
        return ()

    def update_value(self, m, t, i, s_prev, y, z, a_prev):
        return ()


class WindowScheme(CompressionScheme):
    """Keeps the last ``obs_window`` own observations and the last
    ``act_window`` own actions."""

    def __init__(self, obs_window, act_window):
        self.obs_window = obs_window
        self.act_window = act_window
        self.name = f"window(y{obs_window},a{act_window})"

    def _trim(self, ys, acts):
        ys = ys[len(ys) - self.obs_window:] if self.obs_window else ()
        acts = acts[len(acts) - self.act_window:] if self.act_window else ()
        return (ys, acts)

    def init_value(self, m, i, y1, z1):
        return self._trim((y1,), ())

    def update_value(self, m, t, i, s_prev, y, z, a_prev):
        return self._trim(s_prev[0] + (y,), s_prev[1] + (a_prev,))


class PerAgentScheme(CompressionScheme):
    """Different sub-scheme per agent (e.g. a window for one agent and the
    empty compression for another)."""

    def __init__(self, subs, name=None):
        self.subs = subs
        self.name = name or ("per-agent(" + ",".join(s.name for s in subs) + ")")

    def init_value(self, m, i, y1, z1):
        return self.subs[i].init_value(m, i, y1, z1)

    def update_value(self, m, t, i, s_prev, y, z, a_prev):
        return self.subs[i].update_value(m, t, i, s_prev, y, z, a_prev)


class TabularScheme(CompressionScheme):
    """Explicit finite maps, as declared in a problem-spec file.

    ``init[(i, y1, z1)]`` gives the initial value; ``update[(t, i, s_prev,
    y, z, a_prev)]`` the successor (t 0-based, indices integer)."""

    def __init__(self, init, update, kind=PRIVATE, name="tabular"):
        self.init = init
        self.update = update
        self.kind = kind
        self.name = name

    def init_value(self, m, i, y1, z1):
        return self.init[(i, y1, z1)]

    def update_value(self, m, t, i, s_prev, y, z, a_prev):
        return self.update[(t, i, s_prev, y, z, a_prev)]
