"""teamspec v1: the JSON problem-description format.

A teamspec document carries either an explicit finite model (label sets plus
nested kernel arrays), a reference to a built-in problem family with its
parameters, or a stationary single-stage model with a discount for
infinite-horizon runs.  Probabilities and utilities may be JSON numbers or
decimal/rational strings ("0.5", "1/3"); strings parse exactly in rational
mode.  ``parse_teamspec`` and ``serialize_model`` round-trip: parsing a
serialized document and serializing again is the identity on the canonical
form, which is what report digests hash.

Compression schemes are declared under "schemes" as named entries, each one
either a parametric built-in (identity, empty, window, per_agent, composite)
or an explicit tabular map.
"""

import hashlib
import json
from fractions import Fraction

from .errors import SpecFormatError
from .model import HistoryPolicy, TeamModel
from .schemes import (EmptyScheme, IdentityScheme, PerAgentScheme,
                      TabularScheme, WindowScheme)

VERSION = 1


def _num(v, exact):
    if isinstance(v, str):
        try:
            f = Fraction(v)
        except (ValueError, ZeroDivisionError) as exc:
            raise SpecFormatError(f"bad number {v!r}: {exc}")
        return f if exact else float(f)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SpecFormatError(f"bad number {v!r}")
    if exact:
        return Fraction(v)
    return float(v)


def _num_tree(tree, exact, where):
    if isinstance(tree, list):
        return [_num_tree(v, exact, where) for v in tree]
    try:
        return _num(tree, exact)
    except SpecFormatError as exc:
        raise SpecFormatError(f"{where}: {exc}")


def _labels(doc, field, horizon, per_agent, num_agents):
    """Label sets, accepting the stage-invariant shorthand (one set instead
    of one per stage)."""
    val = doc.get(field)
    if val is None:
        raise SpecFormatError(f"missing field {field!r}")
    if per_agent:
        shared = val and isinstance(val[0], list) and val[0] and \
            isinstance(val[0][0], str)
        if shared:
            if len(val) != num_agents:
                raise SpecFormatError(f"{field}: expected {num_agents} agents")
            return [val] * horizon
        return val
    shared = val and isinstance(val[0], str)
    return [val] * horizon if shared else val


def _require(doc, field):
    if field not in doc:
        raise SpecFormatError(f"missing field {field!r}")
    return doc[field]


def parse_model(doc, exact=False):
    """Build a finite model from an explicit teamspec body."""
    horizon = _require(doc, "horizon")
    num_agents = _require(doc, "num_agents")
    if not (isinstance(horizon, int) and horizon >= 1):
        raise SpecFormatError("horizon must be a positive integer")
    if not (isinstance(num_agents, int) and num_agents >= 1):
        raise SpecFormatError("num_agents must be a positive integer")
    m = TeamModel(
        horizon=horizon,
        num_agents=num_agents,
        states=_labels(doc, "states", horizon, False, num_agents),
        actions=_labels(doc, "actions", horizon, True, num_agents),
        private_obs=_labels(doc, "private_obs", horizon, True, num_agents),
        common_obs=_labels(doc, "common_obs", horizon, False, num_agents),
        init=_num_tree(_require(doc, "init"), exact, "init"),
        transition=_num_tree(doc.get("transition", []), exact, "transition"),
        private_obs_kernel=_num_tree(_require(doc, "private_obs_kernel"),
                                     exact, "private_obs_kernel"),
        common_obs_kernel=_num_tree(_require(doc, "common_obs_kernel"),
                                    exact, "common_obs_kernel"),
        utility=_num_tree(_require(doc, "utility"), exact, "utility"),
        agent_utilities=None if "agent_utilities" not in doc else _num_tree(
            doc["agent_utilities"], exact, "agent_utilities"),
        name=doc.get("name", ""))
    return m


def parse_scheme(decl, exact=False):
    if isinstance(decl, str):
        decl = {"type": decl}
    kind = decl.get("type")
    if kind == "identity":
        return IdentityScheme()
    if kind == "empty":
        return EmptyScheme()
    if kind == "window":
        return WindowScheme(decl.get("obs_window", 1), decl.get("act_window", 0))
    if kind == "per_agent":
        return PerAgentScheme([parse_scheme(d, exact) for d in decl["agents"]])
    if kind == "composite":
        return CompositeLazy(parse_scheme(decl["base"], exact))
    if kind == "tabular":
        init = {}
        for row in decl.get("init", []):
            i, y1, z1, v = row
            init[(i, y1, z1)] = _tuplify(v)
        update = {}
        for row in decl.get("update", []):
            t, i, s_prev, y, z, a_prev, v = row
            update[(t, i, _tuplify(s_prev), y, z, a_prev)] = _tuplify(v)
        return TabularScheme(init, update, name=decl.get("name", "tabular"))
    raise SpecFormatError(f"unknown scheme type {kind!r}")


def _tuplify(v):
    if isinstance(v, list):
        return tuple(_tuplify(x) for x in v)
    return v


class CompositeLazy:
    """Placeholder resolved against the model at load time (the composite
    scheme needs belief machinery bound to a model)."""

    def __init__(self, base):
        self.base = base

    def resolve(self, m):
        from .belief import compose_with_belief
        return compose_with_belief(m, self.base)


def parse_stationary(doc, exact=False, discount=None):
    from .infinite import StationaryModel
    body = _require(doc, "stationary")
    delta = discount if discount is not None else body.get("discount")
    if delta is None:
        raise SpecFormatError("stationary model needs a discount")
    delta = float(delta)
    num_agents = _require(body, "num_agents")
    return StationaryModel(
        num_agents=num_agents,
        states=_require(body, "states"),
        actions=_require(body, "actions"),
        private_obs=_require(body, "private_obs"),
        common_obs=_require(body, "common_obs"),
        init=_num_tree(_require(body, "init"), exact, "init"),
        transition=_num_tree(_require(body, "transition"), exact, "transition"),
        private_obs_kernel=_num_tree(_require(body, "private_obs_kernel"),
                                     exact, "private_obs_kernel"),
        common_obs_kernel=_num_tree(_require(body, "common_obs_kernel"),
                                    exact, "common_obs_kernel"),
        utility=_num_tree(_require(body, "utility"), exact, "utility"),
        discount=delta,
        name=doc.get("name", ""))


def build_problem(decl, exact=False):
    """Instantiate a built-in problem family from its parameter block.
    Returns (model, scheme)."""
    from . import problems
    family = decl.get("family")
    params = {k: v for k, v in decl.items() if k != "family"}
    if family == "tiny_team":
        m = problems.build_tiny_team(exact=exact, **params)
        return m, IdentityScheme()
    if family == "source_coding":
        if "distortion" not in params:
            params["distortion"] = problems.hamming_distortion
        src = dict(params["source"])
        kern = src.get("kernel")
        if isinstance(kern, list):
            # JSON form: list of [context, distribution] pairs
            src["kernel"] = {tuple(ctx): dist for ctx, dist in kern}
        params["source"] = src
        return problems.build_source_coding(exact=exact, **params)
    if family == "delayed_sharing":
        base = params.pop("base", None)
        if base is None:
            base_m = problems.build_tiny_team(exact=exact)
        else:
            base_m = parse_model(base, exact=exact)
        return problems.build_delayed_sharing(base=base_m, **params)
    if family == "remote_local":
        return problems.build_remote_local(exact=exact, **params)
    raise SpecFormatError(f"unknown problem family {family!r}")


class LoadedSpec:
    def __init__(self, doc, model, schemes, stationary, default_scheme):
        self.doc = doc
        self.model = model
        self.schemes = schemes          # name -> scheme or CompositeLazy
        self.stationary = stationary
        self.default_scheme = default_scheme

    def scheme(self, name=None):
        name = name or self.default_scheme
        if name is None:
            raise SpecFormatError("no scheme declared and none requested")
        if name == "identity" and name not in self.schemes:
            return IdentityScheme()
        if name == "empty" and name not in self.schemes:
            return EmptyScheme()
        if name not in self.schemes:
            raise SpecFormatError(f"unknown scheme {name!r}")
        s = self.schemes[name]
        if isinstance(s, CompositeLazy):
            if self.model is None:
                raise SpecFormatError("composite scheme needs a finite model")
            return s.resolve(self.model)
        return s


def parse_teamspec(doc, exact=False, discount=None):
    """Load a full teamspec document (already JSON-decoded)."""
    if not isinstance(doc, dict):
        raise SpecFormatError("teamspec document must be a JSON object")
    version = doc.get("teamspec")
    if version != VERSION:
        raise SpecFormatError(f"unsupported teamspec version {version!r}")
    schemes = {name: parse_scheme(decl, exact)
               for name, decl in doc.get("schemes", {}).items()}
    model = None
    stationary = None
    default_scheme = doc.get("default_scheme")
    if "problem" in doc:
        model, built_scheme = build_problem(doc["problem"], exact=exact)
        schemes.setdefault("problem", built_scheme)
        if default_scheme is None:
            default_scheme = "problem"
    elif "stationary" in doc:
        stationary = parse_stationary(doc, exact=exact, discount=discount)
    else:
        model = parse_model(doc, exact=exact)
    if default_scheme is None and schemes:
        default_scheme = sorted(schemes)[0]
    if default_scheme is None:
        default_scheme = "identity"
    return LoadedSpec(doc, model, schemes, stationary, default_scheme)


def load_teamspec(path, exact=False, discount=None):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecFormatError(f"not valid JSON: {exc}")
    return parse_teamspec(doc, exact=exact, discount=discount)


# ---------------------------------------------------------------------------
# Serialization / canonical form
# ---------------------------------------------------------------------------

def format_number(v):
    """Numbers serialize as strings: exact rationals verbatim, floats with
    17 significant digits (round-trip safe)."""
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def _str_tree(tree):
    if isinstance(tree, list):
        return [_str_tree(v) for v in tree]
    return format_number(tree)


def serialize_model(m):
    doc = {
        "teamspec": VERSION,
        "name": m.name,
        "horizon": m.horizon,
        "num_agents": m.num_agents,
        "states": m.states,
        "actions": m.actions,
        "private_obs": m.private_obs,
        "common_obs": m.common_obs,
        "init": _str_tree(m.init),
        "transition": _str_tree(m.transition),
        "private_obs_kernel": _str_tree(m.private_obs_kernel),
        "common_obs_kernel": _str_tree(m.common_obs_kernel),
        "utility": _str_tree(m.utility),
    }
    if m.agent_utilities is not None:
        doc["agent_utilities"] = _str_tree(m.agent_utilities)
    return doc


def canonical_json(doc):
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def spec_digest(doc):
    """Content hash of the document's canonical JSON form."""
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


# ---------------------------------------------------------------------------
# Policy files
# ---------------------------------------------------------------------------

def serialize_policy(pol):
    """Tabular profile as a list of [t, i, c, [ys, acts], row] entries."""
    rows = []
    for (t, i), tab in sorted(pol.tables.items()):
        for (c, p), row in sorted(tab.items()):
            if isinstance(row, dict):
                row = {str(a): format_number(q) for a, q in row.items()}
            rows.append([t, i, list(c), [list(p[0]), list(p[1])], row])
    return {"policy": rows, "default_action": pol.default_action}


def parse_policy(doc, m, exact=False):
    if "policy" not in doc:
        raise SpecFormatError("policy file needs a 'policy' list")
    pol = HistoryPolicy(m, {}, default_action=doc.get("default_action", 0))
    for entry in doc["policy"]:
        try:
            t, i, c, p, row = entry
        except (TypeError, ValueError):
            raise SpecFormatError(f"bad policy entry {entry!r}")
        if isinstance(row, dict):
            row = {int(a): _num(q, exact) for a, q in row.items()}
        elif not isinstance(row, int):
            raise SpecFormatError(f"bad policy row {row!r}")
        pol.set(t, i, tuple(c), (tuple(p[0]), tuple(p[1])), row)
    return pol
