"""HTTP service exposing the toolkit.

Every command takes a teamspec document and options, runs the corresponding
module, and wraps the output in a report envelope carrying the tool version,
the command name, a content digest of the canonical spec, the seeds used and
a status in {ok, fail, usage_error, size_guard}.  The CLI is a thin client
for these endpoints (in-process by default), so both surfaces share one
implementation and one report schema.

Timing is attached after the report body is built; the body itself is a
deterministic function of (spec, options, seeds).
"""

import time
from fractions import Fraction
from typing import Any, Optional

from fastapi import FastAPI
from pydantic import BaseModel

from . import __version__
from .errors import SizeGuardError, SpecFormatError
from .model import expected_utility, validate_model
from .teamspec import parse_policy, parse_teamspec, spec_digest

REPORT_VERSION = 1

OK = "ok"
FAIL = "fail"
USAGE_ERROR = "usage_error"
SIZE_GUARD = "size_guard"

EXIT_CODES = {OK: 0, FAIL: 1, USAGE_ERROR: 2, SIZE_GUARD: 3}


def jsonable(obj):
    """Reports carry floats as repr strings and rationals verbatim, so exact
    values survive the trip through JSON."""
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, float):
        return repr(obj)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# Command implementations
# ---------------------------------------------------------------------------

def _load(spec, exact=False, discount=None):
    return parse_teamspec(spec, exact=exact, discount=discount)


def cmd_validate(spec):
    loaded = _load(spec)
    if loaded.model is None:
        # stationary specs validate through a short unrolling
        diagnostics = validate_model(loaded.stationary.unroll(2))
    else:
        diagnostics = validate_model(loaded.model)
    status = OK if not diagnostics else FAIL
    return status, {"diagnostics": diagnostics}


def cmd_check(spec, scheme=None, definition=None, budget=None, tol=1e-9,
              rational=False, seed=0):
    from . import checks
    loaded = _load(spec, exact=rational)
    s = loaded.scheme(scheme)
    if definition is None:
        definition = ("sufficient-general" if s.kind == "general"
                      else "sufficient-private")
    kwargs = {}
    if budget is not None:
        kwargs["profile_budget"] = budget
    if definition == "payoff-relevant":
        report = checks.check_payoff_relevant(loaded.model, s, tol=tol)
    elif definition == "sufficient-private":
        report = checks.check_sufficient_private(loaded.model, s, tol=tol,
                                                 seed=seed, **kwargs)
    elif definition == "sufficient-general":
        report = checks.check_sufficient_general(loaded.model, s, tol=tol,
                                                 seed=seed, **kwargs)
    else:
        raise SpecFormatError(f"unknown definition {definition!r}")
    status = OK if report.holds else FAIL
    return status, {"definition": definition, "scheme": s.name,
                    "check": report.to_dict()}


def cmd_solve(spec, scheme=None, rational=False, oracle=False, lift=False,
              node_cap=None, tol=1e-9):
    from .oracle import brute_force_optimal
    from .solver import (expand_belief_graph, lift_to_history_policy,
                         solve_team_dp)
    loaded = _load(spec, exact=rational)
    s = loaded.scheme(scheme)
    kwargs = {} if node_cap is None else {"node_cap": node_cap}
    graph = expand_belief_graph(loaded.model, s, **kwargs)
    values, sib_policy, vstar = solve_team_dp(loaded.model, s, graph=graph)
    result = {
        "scheme": s.name,
        "value": vstar,
        "stage_node_counts": graph.stage_counts(),
        "prescriptions": {
            repr(k): graph.nodes[k].prescriptions[idx].to_jsonable()
            for k, idx in sib_policy.choices.items()},
    }
    status = OK
    if lift:
        from .teamspec import serialize_policy
        g = lift_to_history_policy(loaded.model, s, sib_policy)
        lifted_value, flows = expected_utility(loaded.model, g)
        result["lifted_policy"] = serialize_policy(g)
        result["lifted_value"] = lifted_value
        result["flows"] = flows
    if oracle:
        o = brute_force_optimal(loaded.model)
        result["oracle_value"] = o.value
        result["profiles_enumerated"] = o.profiles_enumerated
        gap = abs(vstar - o.value)
        result["oracle_gap"] = gap
        if gap > tol:
            status = FAIL
    return status, result


def cmd_infinite(spec, scheme=None, delta=None, tol=1e-8, points=6,
                 rational=False):
    from .infinite import (BeliefPointSet, reachable_points, value_at_start,
                           value_iteration)
    loaded = _load(spec, exact=rational, discount=delta)
    if loaded.stationary is None:
        raise SpecFormatError("infinite-horizon runs need a stationary spec")
    sm = loaded.stationary
    s = loaded.scheme(scheme)
    point_set, closed = reachable_points(sm, s, depth=points)
    closed_exact, worst = point_set.closure_report(sm, s)
    values, policy, info = value_iteration(sm, s, point_set, tol=tol)
    start = value_at_start(sm, s, values, point_set)
    return OK, {
        "scheme": s.name,
        "discount": sm.discount,
        "points": len(point_set),
        "closed": closed and closed_exact,
        "max_projection_distance": worst,
        "iterations": info["iterations"],
        "residual": info["residual"],
        "stop_threshold": info["stop_threshold"],
        "value_at_start": start,
        "values": {repr(k): v for k, v in sorted(values.items(), key=repr)},
    }


def cmd_transfer(spec, policy, scheme=None, samples=0, seed=0,
                 rational=False, tol=1e-9):
    from .oracle import transfer_to_sib
    loaded = _load(spec, exact=rational)
    s = loaded.scheme(scheme)
    g = parse_policy(policy, loaded.model, exact=rational)
    report = transfer_to_sib(loaded.model, s, g, sample_count=samples,
                             seed=seed, tol=tol)
    ok = report["pi_s_match"] and report.get("mc_within_3sigma", True)
    return (OK if ok else FAIL), {"scheme": s.name, "transfer": report}


# ---------------------------------------------------------------------------
# Report envelope
# ---------------------------------------------------------------------------

_COMMANDS = {
    "validate": cmd_validate,
    "check": cmd_check,
    "solve": cmd_solve,
    "infinite": cmd_infinite,
    "transfer": cmd_transfer,
}


def run_command(command, spec, options=None):
    """Execute one command and wrap the outcome in the report envelope."""
    options = dict(options or {})
    started = time.monotonic()
    report = {
        "report_version": REPORT_VERSION,
        "tool_version": __version__,
        "command": command,
        "options": jsonable(options),
        "seeds": {"seed": options.get("seed", 0)},
    }
    try:
        if command not in _COMMANDS:
            raise SpecFormatError(f"unknown command {command!r}")
        if not isinstance(spec, dict):
            raise SpecFormatError("spec must be a JSON object")
        report["spec_digest"] = spec_digest(spec)
        status, result = _COMMANDS[command](spec, **options)
        report["status"] = status
        report["result"] = jsonable(result)
    except SizeGuardError as exc:
        report["status"] = SIZE_GUARD
        report["error"] = {"type": type(exc).__name__, "message": str(exc),
                           "count": exc.count, "cap": exc.cap}
    except (SpecFormatError, ValueError, TypeError, KeyError,
            NotImplementedError) as exc:
        # includes NonTeamUtility / conditioning errors: bad usage of the API
        report["status"] = USAGE_ERROR
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
    report["timing_ms"] = round((time.monotonic() - started) * 1000, 3)
    return report


def exit_code(report):
    return EXIT_CODES[report["status"]]


# ---------------------------------------------------------------------------
# FastAPI surface
# ---------------------------------------------------------------------------

class CommandRequest(BaseModel):
    spec: dict
    options: dict = {}


class TransferRequest(BaseModel):
    spec: dict
    policy: dict
    options: dict = {}


class Report(BaseModel):
    report_version: int
    tool_version: str
    command: str
    options: dict
    seeds: dict
    spec_digest: Optional[str] = None
    status: str
    result: Optional[Any] = None
    error: Optional[dict] = None
    timing_ms: float


app = FastAPI(title="decteam", version=__version__)


@app.get("/v1/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/v1/validate", response_model=Report)
def validate_endpoint(req: CommandRequest):
    return run_command("validate", req.spec, req.options)


@app.post("/v1/check", response_model=Report)
def check_endpoint(req: CommandRequest):
    return run_command("check", req.spec, req.options)


@app.post("/v1/solve", response_model=Report)
def solve_endpoint(req: CommandRequest):
    return run_command("solve", req.spec, req.options)


@app.post("/v1/infinite", response_model=Report)
def infinite_endpoint(req: CommandRequest):
    return run_command("infinite", req.spec, req.options)


@app.post("/v1/transfer", response_model=Report)
def transfer_endpoint(req: TransferRequest):
    options = dict(req.options)
    options["policy"] = req.policy
    return run_command("transfer", req.spec, options)
