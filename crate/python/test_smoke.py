"""Smoke test for the Python bindings. Build them first with
`pip install --no-build-isolation crates/py`."""

from pathlib import Path

import petrel_py

FIXTURE = (Path(__file__).resolve().parents[1] / "crates" / "core" / "examples" / "peterson.tla").read_text()


def test_translate_is_idempotent():
    text, summary = petrel_py.translate(FIXTURE)
    assert summary == "translated: 7 actions, 12 definitions"
    assert text == FIXTURE


def test_reachable_states():
    assert petrel_py.reachable_states(FIXTURE, ["MutualExclusion"]) == (58, True)


def test_obligations_have_fingerprints():
    obs = petrel_py.obligations(FIXTURE)
    assert [o[0] for o in obs][:3] == ["<1>1", "<2>1", "<2>2"]
    assert all(len(fp) == 64 for _, fp, _ in obs)
    assert obs[0][2].startswith("ASSUME NEW VARIABLE flag,")


def test_prove_step():
    code, steps = petrel_py.prove(FIXTURE, "<1>1")
    assert code == 0
    assert steps == [("<1>1", "proved")]


def test_cli_usage_error():
    code, out = petrel_py.run(["frobnicate"])
    assert code == 64
    assert "frobnicate" in out


def test_parse_error_is_value_error():
    try:
        petrel_py.obligations("---- MODULE M ----\nA == \n====")
    except ValueError as e:
        assert "syntax error" in str(e)
    else:
        raise AssertionError("expected ValueError")
