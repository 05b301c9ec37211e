import pytest

import spacekam.harness as harness
from spacekam.harness import VerificationReport, fuzz, random_closed_term, verify
from spacekam.kam import OpenTerm
from spacekam.terms import parse_term

CHECK_NAMES = [
    "wh_beta_count",
    "skam_beta_count",
    "decode_final",
    "decode_final_skam",
    "space_derivation",
    "space_weight",
    "time_derivation",
    "time_weight",
    "derivation_size",
    "correspondence",
    "kam_derivation",
    "kam_weight",
    "env_domain_invariant",
]


def test_verify_the_example(example_term):
    rep = verify(example_term, 100)
    assert rep.complete and rep.all_pass
    assert rep.wh_steps == 3
    assert [name for name, _ in rep.checks] == CHECK_NAMES
    assert all(ok for _, ok in rep.checks)
    assert rep.notes == {}
    assert rep.kam == {
        "transitions": 7,
        "counts": {"sea": 3, "beta": 3, "sub": 1},
        "decarvalho_weight": 7,
    }
    assert rep.skam == {
        "transitions": 7,
        "counts": {"sea_v": 1, "sea_nv": 2, "beta_w": 1, "beta_nw": 2, "sub": 1},
        "space": 4,
        "time": 11,
        "space_weight": 4,
        "time_weight": 11,
    }


def test_verify_incomplete_run_reports_stats_only():
    rep = verify(parse_term(r"(\x.x x) (\x.x x)"), 40)
    assert not rep.complete
    assert rep.checks == []
    assert rep.all_pass  # vacuously: nothing failed, nothing was checked
    assert rep.wh_steps is None
    assert rep.kam["decarvalho_weight"] is None
    assert rep.skam["space"] == 2
    assert rep.skam["space_weight"] is None


def test_verify_rejects_open_terms():
    with pytest.raises(OpenTerm):
        verify(parse_term("x y"), 10)


def test_report_json_roundtrip(example_term):
    for rep in (verify(example_term, 100), verify(parse_term(r"(\x.x x) (\x.x x)"), 20)):
        assert VerificationReport.from_json(rep.to_json()) == rep


def test_all_pass_property(example_term):
    rep = VerificationReport(example_term, None, {}, {}, [("a", True)], True)
    assert rep.all_pass
    rep.checks.append(("b", False))
    assert not rep.all_pass


# ---------------------------------------------------------------- generation

def test_random_terms_are_deterministic():
    assert random_closed_term(7, 25) == random_closed_term(7, 25)


def test_random_terms_vary_with_the_seed():
    terms = {random_closed_term(s, 25) for s in range(20)}
    assert len(terms) > 10


def test_random_term_minimal_budget():
    t = random_closed_term(3, 1)
    assert t == parse_term(r"\v0.v0")


# ---------------------------------------------------------------- fuzz

def test_fuzz_summary_shape_and_determinism():
    a = fuzz(30, seed=5, size_budget=20, fuel=500)
    b = fuzz(30, seed=5, size_budget=20, fuel=500)
    assert a == b
    assert a["count"] == 30 and a["seed"] == 5
    assert a["size_budget"] == 20 and a["fuel"] == 500
    assert a["complete"] + a["incomplete"] == 30
    assert a["failed"] == 0 and a["failures"] == []


def test_fuzz_counts_internal_errors_as_failures(monkeypatch):
    real = verify

    def flaky(t, fuel):
        if t == random_closed_term(11, 15):
            raise RuntimeError("boom")
        return real(t, fuel)

    monkeypatch.setattr(harness, "verify", flaky)
    out = fuzz(3, seed=10, size_budget=15, fuel=500)
    assert out["failed"] == 1
    assert out["failures"][0]["seed"] == 11
    assert "boom" in out["failures"][0]["error"]
