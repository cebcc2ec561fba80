import json

import pytest

from errchains.report import NO_FINDINGS, grouped_lines, render_json, render_text
from conftest import CORPUS, run_fixture

CIS = "RPE:CipherInputStream@s13:s13:preparedCipher"


def test_grouped_fixture(fixture_report):
    text = render_text(fixture_report, group_chains=True)
    lines = grouped_lines(fixture_report)
    tops = [eid for depth, _, eid, _ in lines if depth == 0]
    assert len(tops) == 4
    under = [(parent, note) for depth, parent, eid, note in lines if eid == CIS]
    assert len(under) == 4
    assert all(note == "also caused by 3 other root(s)" for _, note in under)
    assert text.count("fix these first") == 1
    assert "Unrelated errors" not in text


def test_flat_lists_every_error(fixture_report):
    text = render_text(fixture_report)
    for e in fixture_report.errors:
        assert e.id in text


def test_empty_report():
    assert render_text(run_fixture("secure_encrypt")).strip() == NO_FINDINGS


def test_sed_off_notice():
    text = render_text(run_fixture("fileencrypt", sed=False), group_chains=True)
    assert "note:" in text and "fix these first" not in text


def test_isolated_section():
    text = render_text(run_fixture("never_type_of"), group_chains=True)
    assert "Unrelated errors:" in text


def test_cycle_grouping_terminates():
    r = run_fixture("cycle")
    lines = grouped_lines(r)
    assert any(note == "cycle" for *_, note in lines)
    assert "cycle back to" in render_text(r, group_chains=True)


def test_json_fixture(fixture_report):
    doc = json.loads(render_json(fixture_report))
    assert list(doc) == ["version", "config", "errors", "components", "stats"]
    assert doc["stats"]["avg_preceding_per_subsequent"] == 2.0
    assert len(doc["errors"]) == 7


def test_json_cycle():
    doc = json.loads(render_json(run_fixture("cycle")))
    assert any(c["cyclic"] for c in doc["components"])


def test_json_timings_optional():
    r = run_fixture("fileencrypt", collect_timings=True)
    doc = json.loads(render_json(r))
    assert set(doc["timings"]) >= {"propagation_ms", "total_ms"}
    assert "timings" not in json.loads(render_json(r, include_timings=False))


@pytest.mark.parametrize("name", CORPUS)
def test_grouped_and_json_agree(name):
    """Parent/child pairs of the grouped view are exactly the JSON edges."""
    r = run_fixture(name)
    doc = json.loads(render_json(r))
    edges = {tuple(e) for c in doc["components"] for e in c["edges"]}
    shown = {(parent, eid) for _, parent, eid, _ in grouped_lines(r) if parent is not None}
    assert shown == edges


@pytest.mark.parametrize("name", CORPUS)
def test_json_deterministic(name):
    assert render_json(run_fixture(name), False) == render_json(run_fixture(name), False)
