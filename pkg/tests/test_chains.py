from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from errchains.chains import build_graph, classify, compute_stats, dependent_error_tree
from errchains.model import ErrorKind, ErrorReport, Role, SourceLocation
from conftest import CORPUS, run_fixture

CE_SKF = "CE:SecretKeyFactory@s3@c10:s3"
RPE_GS = "RPE:SecretKeyFactory@s3@c10:s4:speccedKey"
RPE_IV = "RPE:IvParameterSpec@s7:s7:randomizedBytes"
CE_C = "CE:Cipher@s8:s8"
RPE_KEY = "RPE:Cipher@s8:s11:generatedKey"
RPE_PIV = "RPE:Cipher@s8:s11:preparedIV"
RPE_CIS = "RPE:CipherInputStream@s13:s13:preparedCipher"

# Hand-derived edge list of the fixture chain.
FIXTURE_EDGES = {
    (CE_SKF, RPE_KEY), (RPE_GS, RPE_KEY), (RPE_IV, RPE_PIV),
    (CE_C, RPE_CIS), (RPE_KEY, RPE_CIS), (RPE_PIV, RPE_CIS),
}


def _err(i, kind=ErrorKind.CONSTRAINT, pre=(), sub=()):
    pred = "p" if kind is ErrorKind.REQUIRED_PREDICATE else None
    e = ErrorReport.create(kind, SourceLocation(i, i + 1), f"C{i}", f"C{i}@s{i}", "m", pred)
    return replace(e, id=str(i), preceding_ids=frozenset(map(str, pre)), subsequent_ids=frozenset(map(str, sub)))


def test_fixture_links(fixture_report):
    r = fixture_report
    assert r.error(RPE_KEY).preceding_ids == {CE_SKF, RPE_GS}
    assert r.error(RPE_IV).preceding_ids == frozenset()
    assert r.graph.edges == FIXTURE_EDGES


def test_fixture_roles(fixture_report):
    roles = fixture_report.roles
    assert {k for k, v in roles.items() if v is Role.ROOT} == {CE_SKF, RPE_GS, RPE_IV, CE_C}
    assert {k for k, v in roles.items() if v is Role.SUBSEQUENT} == {RPE_KEY, RPE_PIV, RPE_CIS}


def test_sed_off_no_links():
    r = run_fixture("fileencrypt", sed=False)
    assert len(r.errors) == 7
    assert all(not e.preceding_ids and not e.subsequent_ids for e in r.errors)
    assert r.graph.edges == frozenset()


def test_fixture_tree(fixture_report):
    t = dependent_error_tree(RPE_CIS, fixture_report.graph)
    assert len(t.nodes) == 7 and len(t.edges) == 6
    assert t.depth == 3 and not t.cyclic


def test_isolated_tree():
    errs = [_err(1)]
    g = build_graph(errs)
    t = dependent_error_tree("1", g)
    assert (len(t.nodes), len(t.edges), t.depth) == (1, 0, 1)
    assert classify(errs) == {"1": Role.ISOLATED}


def test_two_independent_pairs():
    rp = ErrorKind.REQUIRED_PREDICATE
    errs = [_err(1, sub=[2]), _err(2, rp, pre=[1]), _err(3, sub=[4]), _err(4, rp, pre=[3])]
    roles = classify(errs)
    assert sorted(r.value for r in roles.values()) == ["ROOT", "ROOT", "SUBSEQUENT", "SUBSEQUENT"]
    assert len(build_graph(errs).components) == 2


def test_cycle_fixture():
    r = run_fixture("cycle")
    comps = [c for c in r.graph.components if c.edges]
    assert len(comps) == 1 and comps[0].cyclic
    for eid in comps[0].node_ids:
        t = dependent_error_tree(eid, r.graph)
        assert t.cyclic and t.depth == 2


def test_fixture_stats(fixture_report):
    s = fixture_report.stats
    assert s.total_errors == 7
    assert s.per_kind_counts == {ErrorKind.CONSTRAINT: 2, ErrorKind.REQUIRED_PREDICATE: 5}
    assert s.per_kind_root_counts == {ErrorKind.CONSTRAINT: 2, ErrorKind.REQUIRED_PREDICATE: 2}
    assert s.subsequent_count == 3
    # roots: CE_SKF->1, RPE_GS->1, RPE_IV->1, CE_C->1
    assert s.avg_direct_subsequent_per_root == 4 / 4
    # subsequent: key has 2, iv has 1, cis has 3
    assert s.avg_preceding_per_subsequent == (2 + 1 + 3) / 3
    assert s.trees_depth_ge_3 == 1
    assert s.tree_sizes == [7]
    assert s.class_dependency_edges == {("SecretKeyFactory", "Cipher"): 2, ("IvParameterSpec", "Cipher"): 1,
                                        ("Cipher", "CipherInputStream"): 3}
    assert not any(r["self_loop"] for r in s.class_edge_records())


def test_empty_stats():
    s = compute_stats([], build_graph([]))
    assert (s.total_errors, s.subsequent_count, s.avg_direct_subsequent_per_root,
            s.avg_preceding_per_subsequent, s.tree_sizes, s.trees_depth_ge_3) == (0, 0, 0.0, 0.0, [], 0)


def test_self_loop_flagged():
    rp = ErrorKind.REQUIRED_PREDICATE
    errs = [_err(1, rp, sub=[2]), _err(2, rp, pre=[1])]
    errs = [replace(e, rule_class="SecureRandom") for e in errs]
    s = compute_stats(errs, build_graph(errs))
    assert s.class_edge_records() == [{"from": "SecureRandom", "to": "SecureRandom", "count": 1, "self_loop": True}]


@pytest.mark.parametrize("name", CORPUS)
def test_corpus_invariants(name):
    r = run_fixture(name)
    for e in r.errors:
        if r.roles[e.id] is Role.SUBSEQUENT:
            assert e.kind is ErrorKind.REQUIRED_PREDICATE
        for p in e.preceding_ids:
            assert e.id in r.error(p).subsequent_ids
        for q in e.subsequent_ids:
            assert e.id in r.error(q).preceding_ids
    # link locality: each edge comes from a hidden predicate reaching the requirement
    prop = r.propagation
    for a, b in r.graph.edges:
        assert any(a in prop.env.hidden_reaching(req) for req in prop.requirement_sites[b])
    cyclic = any(c.cyclic for c in r.graph.components)
    assert cyclic == (name == "cycle")


@settings(max_examples=100, deadline=None)
@given(st.sets(st.tuples(st.integers(0, 5), st.integers(0, 5)).filter(lambda t: t[0] != t[1]), max_size=10))
def test_graph_properties(edges):
    rp = ErrorKind.REQUIRED_PREDICATE
    nodes = range(6)
    errs = [_err(n, rp, pre=[a for a, b in edges if b == n], sub=[b for a, b in edges if a == n])
            for n in nodes]
    g = build_graph(errs)
    assert g.edges == {(str(a), str(b)) for a, b in edges}
    assert sum(len(c.node_ids) for c in g.components) == 6
    roles = classify(errs)
    for e in errs:
        assert (roles[e.id] is Role.SUBSEQUENT) == bool(e.preceding_ids)
    for n in nodes:
        t = dependent_error_tree(str(n), g)
        assert 1 <= t.depth <= len(t.nodes)
