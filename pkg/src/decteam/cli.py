"""Command-line client for the decteam service.

By default each command runs against an in-process instance of the HTTP
service (no server required); ``--server URL`` points it at a remote one
instead.  Reports are printed as JSON to stdout and optionally written to a
file.  Exit codes: 0 ok, 1 assertion failure / counterexample, 2 usage or
spec error, 3 size-guard refusal.
"""

import json
import sys

import click
import httpx

from .service import EXIT_CODES, USAGE_ERROR

TRANSFER_ENDPOINT = "transfer"


def _client(server):
    if server:
        return httpx.Client(base_url=server, timeout=None)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient
    from .service import app
    return TestClient(app)


def _load_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"error: cannot read {what} {path!r}: {exc}", err=True)
        sys.exit(EXIT_CODES[USAGE_ERROR])


def _run(server, command, spec_path, options, policy_path=None, report_path=None):
    spec = _load_json(spec_path, "teamspec")
    body = {"spec": spec, "options": {k: v for k, v in options.items()
                                      if v is not None}}
    if policy_path is not None:
        body["policy"] = _load_json(policy_path, "policy file")
    with _client(server) as client:
        resp = client.post(f"/v1/{command}", json=body)
    if resp.status_code != 200:
        click.echo(f"error: service returned {resp.status_code}: {resp.text}",
                   err=True)
        sys.exit(EXIT_CODES[USAGE_ERROR])
    report = resp.json()
    text = json.dumps(report, indent=2, sort_keys=True)
    click.echo(text)
    if report.get("status") != "ok" and report.get("error"):
        click.echo(f"{command}: {report['error']['message']}", err=True)
    if report_path:
        with open(report_path, "w") as fh:
            fh.write(text + "\n")
    sys.exit(EXIT_CODES.get(report.get("status"), EXIT_CODES[USAGE_ERROR]))


server_option = click.option("--server", default=None,
                             help="URL of a running service; default runs "
                                  "in-process.")
report_option = click.option("--report", "report_path", default=None,
                             type=click.Path(), help="Also write the report "
                                                     "JSON to this file.")
rational_option = click.option("--rational", is_flag=True,
                               help="Exact rational arithmetic.")
threads_option = click.option("--threads", default=1, show_default=True,
                              help="Worker cap (results are identical for "
                                   "any value).")


@click.group()
def main():
    """Exact toolkit for finite decentralized team decision problems."""


@main.command()
@click.argument("spec_path", type=click.Path(exists=True))
@server_option
@report_option
def validate(spec_path, server, report_path):
    """Check a teamspec's model invariants."""
    _run(server, "validate", spec_path, {}, report_path=report_path)


@main.command()
@click.argument("spec_path", type=click.Path(exists=True))
@click.option("--scheme", default=None, help="Declared scheme name.")
@click.option("--definition", default=None,
              type=click.Choice(["payoff-relevant", "sufficient-private",
                                 "sufficient-general"]),
              help="Which sufficiency notion to verify (default: by scheme "
                   "kind).")
@click.option("--budget", default=None, type=int,
              help="Profile budget before sampling kicks in.")
@click.option("--tol", default=None, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@rational_option
@server_option
@report_option
@threads_option
def check(spec_path, scheme, definition, budget, tol, seed, rational, server,
          report_path, threads):
    """Verify a compression scheme's sufficiency conditions."""
    _run(server, "check", spec_path,
         {"scheme": scheme, "definition": definition, "budget": budget,
          "tol": tol, "seed": seed, "rational": rational or None},
         report_path=report_path)


@main.command()
@click.argument("spec_path", type=click.Path(exists=True))
@click.option("--scheme", default=None, help="Declared scheme name.")
@click.option("--oracle", is_flag=True,
              help="Also run the brute-force search and assert equality.")
@click.option("--lift", is_flag=True,
              help="Include the lifted full-history policy in the report.")
@click.option("--node-cap", default=None, type=int)
@rational_option
@server_option
@report_option
@threads_option
def solve(spec_path, scheme, oracle, lift, node_cap, rational, server,
          report_path, threads):
    """Backward induction over reachable common beliefs."""
    _run(server, "solve", spec_path,
         {"scheme": scheme, "oracle": oracle or None, "lift": lift or None,
          "node_cap": node_cap, "rational": rational or None},
         report_path=report_path)


@main.command()
@click.argument("spec_path", type=click.Path(exists=True))
@click.option("--scheme", default=None, help="Declared scheme name.")
@click.option("--delta", default=None, type=float,
              help="Discount override (must lie in (0,1)).")
@click.option("--tol", default=None, type=float)
@click.option("--points", default=None, type=int,
              help="Closure depth for the reachable belief point set.")
@server_option
@report_option
@threads_option
def infinite(spec_path, scheme, delta, tol, points, server, report_path,
             threads):
    """Value iteration for a stationary discounted team."""
    _run(server, "infinite", spec_path,
         {"scheme": scheme, "delta": delta, "tol": tol, "points": points},
         report_path=report_path)


@main.command()
@click.argument("spec_path", type=click.Path(exists=True))
@click.argument("policy_path", type=click.Path(exists=True))
@click.option("--scheme", default=None, help="Declared scheme name.")
@click.option("--samples", default=0, show_default=True, type=int,
              help="Monte-Carlo sample count (0 = exact checks only).")
@click.option("--seed", default=0, show_default=True, type=int)
@rational_option
@server_option
@report_option
@threads_option
def transfer(spec_path, policy_path, scheme, samples, seed, rational, server,
             report_path, threads):
    """Rebuild a full-history profile as an equivalent belief-based one and
    verify the equivalence."""
    _run(server, "transfer", spec_path,
         {"scheme": scheme, "samples": samples, "seed": seed,
          "rational": rational or None},
         policy_path=policy_path, report_path=report_path)


if __name__ == "__main__":
    main()
