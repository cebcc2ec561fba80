import pytest
from hypothesis import given, settings, strategies as st

from errchains.constraints import evaluate_constraints, resolve_required
from errchains.model import ErrorKind
from errchains.program import enumerate_paths, parse_program
from errchains.typestate import detect_seeds, run_typestate
from conftest import run_fixture


def _seed_state(rules, text, cls):
    paths = enumerate_paths(parse_program(text), rules=rules)
    seed = [s for s in detect_seeds(paths, rules) if s.rule_class == cls][0]
    firings, _ = run_typestate(seed, paths)
    return seed, firings


def _check(rules, text, cls, bet=True):
    seed, firings = _seed_state(rules, text, cls)
    errors, env = evaluate_constraints(seed, firings, bet)
    return errors, resolve_required(seed, firings, env, bet)


def test_fixture_constraint_errors(fixture_report):
    ce = [e for e in fixture_report.errors if e.kind is ErrorKind.CONSTRAINT]
    assert {(e.rule_class, e.location.line) for e in ce} == {("SecretKeyFactory", 7), ("Cipher", 15)}
    assert '"DES"' in [e for e in ce if e.rule_class == "SecretKeyFactory"][0].message


@pytest.mark.parametrize("trans,n", [("AES/GCM/NoPadding", 0), ("DES/CBC/PKCS5Padding", 1)])
def test_transformation(rules, trans, n):
    errors, _ = _check(rules, f'fun main(k) {{ c = Cipher.getInstance("{trans}"); c.init(2, k); }}', "Cipher")
    assert len(errors) == n


def test_hard_coded(rules):
    text = 'fun main() { kb = bytes("0123456789abcdef"); k = new SecretKeySpec(kb, "AES"); }'
    errors, _ = _check(rules, text, "SecretKeySpec")
    assert [e.kind for e in errors] == [ErrorKind.HARD_CODED]


def test_unknown_never_claims(rules):
    text = 'fun main(t, kb) { c = Cipher.getInstance(t); k = new SecretKeySpec(kb, "AES"); }'
    assert _check(rules, text, "Cipher")[0] == []
    assert _check(rules, text, "SecretKeySpec")[0] == []


DECRYPT = 'fun main(k, iv) { c = Cipher.getInstance("AES/GCM/NoPadding"); c.init(MODE, k, iv); }'


def _preds(reqs):
    return sorted(r.predicate for r in reqs)


def test_bet_drops_decrypt_iv(rules):
    text = DECRYPT.replace("MODE", "2")
    assert _preds(_check(rules, text, "Cipher", bet=True)[1]) == ["generatedKey"]
    assert _preds(_check(rules, text, "Cipher", bet=False)[1]) == ["generatedKey", "preparedIV"]


def test_bet_keeps_encrypt_iv(rules):
    text = DECRYPT.replace("MODE", "1")
    assert _preds(_check(rules, text, "Cipher", bet=True)[1]) == ["generatedKey", "preparedIV"]


def test_unknown_guard_stays_active(rules):
    text = 'fun main(k, iv, cfg) { m = cfg.mode(); c = Cipher.getInstance("AES/GCM/NoPadding"); c.init(m, k, iv); }'
    seed, firings = _seed_state(rules, text, "Cipher")
    _, env = evaluate_constraints(seed, firings, True)
    assert None in env.values()
    assert "preparedIV" in _preds(resolve_required(seed, firings, env, True))


def test_unguarded_always_active(rules):
    for bet in (True, False):
        assert "generatedKey" in _preds(_check(rules, DECRYPT.replace("MODE", "2"), "Cipher", bet)[1])


def test_decrypt_fixture_bet():
    on = run_fixture("decrypt_bet", bet=True)
    off = run_fixture("decrypt_bet", bet=False)
    iv = lambda r: [e for e in r.errors if e.predicate_name == "preparedIV"]
    assert iv(on) == [] and len(iv(off)) == 1
    assert {e.id for e in off.errors} - {e.id for e in on.errors} == {iv(off)[0].id}


@settings(max_examples=60, deadline=None)
@given(modes=st.lists(st.sampled_from(["1", "2", "3", "m"]), min_size=1, max_size=3))
def test_bet_monotone(rules, modes):
    arms = [f"c.init({m}, k, iv);" for m in modes]
    body = arms[0]
    for a in arms[1:]:
        body = f"if {{ {body} }} else {{ {a} }}"
    text = f'fun main(k, iv, m) {{ c = Cipher.getInstance("AES/GCM/NoPadding"); {body} }}'
    on = set(_check(rules, text, "Cipher", True)[1])
    off = set(_check(rules, text, "Cipher", False)[1])
    assert on <= off
