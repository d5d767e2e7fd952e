import json
from fractions import Fraction
from pathlib import Path

import pytest

from decteam.errors import SpecFormatError
from decteam.model import expected_utility, validate_model
from decteam.problems import build_tiny_team
from decteam.schemes import EmptyScheme, IdentityScheme
from decteam.solver import lift_to_history_policy, solve_team_dp
from decteam.teamspec import (canonical_json, load_teamspec, parse_policy,
                              parse_teamspec, serialize_model,
                              serialize_policy, spec_digest)

SPECS = Path(__file__).resolve().parent.parent / "specs"


def test_shipped_specs_load_and_validate():
    for name in ("tiny_team", "source_coding", "delayed_sharing",
                 "remote_local"):
        spec = load_teamspec(SPECS / f"{name}.json")
        assert validate_model(spec.model) == [], name
    stat = load_teamspec(SPECS / "two_state_chain.json")
    assert stat.stationary is not None
    assert validate_model(stat.stationary.unroll(2)) == []


def test_roundtrip_preserves_canonical_form(tiny):
    doc = serialize_model(tiny)
    spec = parse_teamspec(doc)
    doc2 = serialize_model(spec.model)
    assert canonical_json(doc) == canonical_json(doc2)
    assert spec_digest(doc) == spec_digest(doc2)


def test_roundtrip_preserves_value(tiny):
    doc = serialize_model(tiny)
    m = parse_teamspec(doc).model
    _, _, v1 = solve_team_dp(tiny, IdentityScheme())
    _, _, v2 = solve_team_dp(m, IdentityScheme())
    assert abs(v1 - v2) < 1e-12


def test_exact_mode_parses_rationals(tiny_exact):
    doc = serialize_model(tiny_exact)
    m = parse_teamspec(doc, exact=True).model
    assert isinstance(m.init[0], Fraction)
    assert m.init[0] == Fraction(1, 2)
    _, _, v = solve_team_dp(m, IdentityScheme())
    assert v == Fraction(1859, 1250)


def test_digest_is_order_insensitive(tiny):
    doc = serialize_model(tiny)
    shuffled = json.loads(json.dumps(doc))
    assert spec_digest(doc) == spec_digest(shuffled)
    # but sensitive to any value change
    shuffled["init"][0] = "0.4999"
    assert spec_digest(doc) != spec_digest(shuffled)


def test_scheme_declarations(tiny):
    doc = dict(serialize_model(tiny),
               schemes={"id": "identity", "none": "empty",
                        "win": {"type": "window", "obs": 1, "acts": 0},
                        "mix": {"type": "per_agent",
                                "agents": ["identity", "empty"]},
                        "comp": {"type": "composite", "base": "identity"}},
               default_scheme="id")
    spec = parse_teamspec(doc)
    assert spec.scheme("id").name == IdentityScheme().name
    assert spec.scheme("none").name == EmptyScheme().name
    assert spec.scheme().name == IdentityScheme().name
    comp = spec.scheme("comp")
    assert comp.kind == "general"
    with pytest.raises(SpecFormatError):
        spec.scheme("nope")


def test_problem_family_becomes_default_scheme():
    spec = load_teamspec(SPECS / "source_coding.json")
    s = spec.scheme()
    assert s.name == "source-coding-window"
    # identity and empty resolve even without declarations
    assert spec.scheme("identity").name == IdentityScheme().name


def test_version_and_format_errors(tiny):
    with pytest.raises(SpecFormatError):
        parse_teamspec(dict(serialize_model(tiny), teamspec=99))
    with pytest.raises(SpecFormatError):
        parse_teamspec(["not", "an", "object"])
    with pytest.raises(SpecFormatError):
        parse_teamspec({"teamspec": 1})  # no body
    bad = serialize_model(tiny)
    del bad["init"]
    with pytest.raises(SpecFormatError):
        parse_teamspec(bad)


def test_bad_numbers_rejected(tiny):
    doc = serialize_model(tiny)
    doc["init"] = ["1/0x", "0.5"]
    with pytest.raises(SpecFormatError):
        parse_teamspec(doc)
    doc["init"] = [True, False]
    with pytest.raises(SpecFormatError):
        parse_teamspec(doc)


def test_policy_roundtrip(tiny):
    scheme = IdentityScheme()
    _, pol, v = solve_team_dp(tiny, scheme)
    g = lift_to_history_policy(tiny, scheme, pol)
    doc = serialize_policy(g)
    g2 = parse_policy(doc, tiny)
    total, _ = expected_utility(tiny, g2)
    assert abs(total - v) < 1e-12


def test_policy_parse_rejects_garbage(tiny):
    with pytest.raises(SpecFormatError):
        parse_policy({"nope": []}, tiny)
    with pytest.raises(SpecFormatError):
        parse_policy({"policy": [[0, 0, [0]]]}, tiny)


def test_load_rejects_invalid_json(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    with pytest.raises(SpecFormatError):
        load_teamspec(p)
