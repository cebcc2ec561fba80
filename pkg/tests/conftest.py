import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from errchains import CORPUS_DIR, RULES_DIR
from errchains.model import AnalysisConfig
from errchains.pipeline import analyze, analyze_text
from errchains.rules import load_rules

CORPUS = sorted(p.stem for p in CORPUS_DIR.glob("*.mprog"))


@pytest.fixture(scope="session")
def rules():
    return load_rules(RULES_DIR)


@pytest.fixture(scope="session")
def rule(rules):
    by_name = {r.class_name: r for r in rules}
    return by_name.__getitem__


def config(sed=True, bet=None, **kw):
    bet = sed if bet is None else bet
    return AnalysisConfig(sed_enabled=sed, bet_enabled=bet, **kw)


def run_fixture(name, sed=True, bet=None, **kw):
    return analyze(RULES_DIR, CORPUS_DIR / f"{name}.mprog", config(sed, bet, **kw))


def run_text(rules, text, sed=True, bet=None):
    return analyze_text(rules, text, config(sed, bet))


@pytest.fixture(scope="session")
def fixture_report():
    return run_fixture("fileencrypt")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
