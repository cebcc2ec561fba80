"""End-to-end analysis with per-phase timing."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import __version__
from .chains import ChainGraph, build_graph, classify, compute_stats, map_subsequent
from .constraints import evaluate_constraints, resolve_required
from .model import AnalysisConfig, ChainStatistics, ErrorReport, PhaseTimings, Role
from .program import Program, enumerate_paths, load_program, parse_program
from .propagation import PropagationResult, propagate
from .rules import RuleSpec, load_rules
from .typestate import Seed, detect_seeds, forbidden_method_check, run_typestate


@dataclass
class ReportDocument:
    version: str
    config: AnalysisConfig
    errors: List[ErrorReport]
    roles: Dict[str, Role]
    graph: ChainGraph
    stats: ChainStatistics
    timings: Optional[PhaseTimings] = None
    # intermediate results, kept for inspection and tests; never serialized
    seeds: List[Seed] = field(default_factory=list, repr=False)
    paths: list = field(default_factory=list, repr=False)
    firings: dict = field(default_factory=dict, repr=False)
    requirements: dict = field(default_factory=dict, repr=False)
    propagation: Optional[PropagationResult] = field(default=None, repr=False)

    def error(self, error_id) -> ErrorReport:
        for e in self.errors:
            if e.id == error_id:
                return e
        raise KeyError(error_id)


class _Clock:
    def __init__(self, enabled):
        self.enabled = enabled
        self.timings = PhaseTimings()
        self.start = time.perf_counter()
        self.last = self.start

    def lap(self, phase):
        now = time.perf_counter()
        if self.enabled:
            setattr(self.timings, phase, getattr(self.timings, phase) + (now - self.last) * 1000.0)
        self.last = now

    def finish(self):
        if not self.enabled:
            return None
        self.timings.total_ms = (time.perf_counter() - self.start) * 1000.0
        return self.timings


def analyze_program(rules: Sequence[RuleSpec], program: Program,
                    config: AnalysisConfig = AnalysisConfig(), clock=None) -> ReportDocument:
    clock = clock or _Clock(config.collect_timings)
    for rule in rules:
        rule.fsm  # compile once, outside the timed analysis phases
    paths = enumerate_paths(program, config.max_paths, rules)
    clock.lap("program_parse_ms")

    seeds = detect_seeds(paths, rules)
    clock.lap("seed_detection_ms")

    firings, own_errors = {}, {}
    for seed in seeds:
        fs, errs = run_typestate(seed, paths)
        firings[seed.seed_id] = fs
        own_errors[seed.seed_id] = errs + forbidden_method_check(seed, paths)
    clock.lap("typestate_ms")

    requirements = {}
    for seed in seeds:
        errs, guard_env = evaluate_constraints(seed, firings[seed.seed_id], config.bet_enabled)
        own_errors[seed.seed_id] += errs
        requirements[seed.seed_id] = resolve_required(seed, firings[seed.seed_id], guard_env,
                                                      config.bet_enabled)
    clock.lap("constraints_ms")

    prop = propagate(seeds, firings, requirements, own_errors, config.sed_enabled)
    clock.lap("propagation_ms")

    errors = [e for seed in seeds for e in own_errors[seed.seed_id]] + prop.rp_errors
    if config.chain_phase:
        errors = map_subsequent(errors, prop, config.sed_enabled)
    clock.lap("chain_mapping_ms")

    errors.sort(key=ErrorReport.sort_key)
    roles = classify(errors)
    graph = build_graph(errors)
    stats = compute_stats(errors, graph)
    clock.lap("reporting_ms")

    return ReportDocument(__version__, config, errors, roles, graph, stats, clock.finish(),
                          seeds, paths, firings, requirements, prop)


def analyze(rules_dir, program_file, config: AnalysisConfig = AnalysisConfig()) -> ReportDocument:
    clock = _Clock(config.collect_timings)
    rules = load_rules(rules_dir)
    for rule in rules:
        rule.fsm
    clock.lap("rule_parse_ms")
    program = load_program(program_file)
    return analyze_program(rules, program, config, clock)


def analyze_text(rules: Sequence[RuleSpec], text: str, config: AnalysisConfig = AnalysisConfig(),
                 source: str = "<memory>") -> ReportDocument:
    return analyze_program(rules, parse_program(text, source), config)
