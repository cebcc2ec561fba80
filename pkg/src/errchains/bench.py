"""Benchmark harness comparing chain-unaware and chain-aware configurations."""

from __future__ import annotations

import csv
import gc
import statistics
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .model import PHASES, AnalysisConfig
from .pipeline import analyze
from .program import ProgramError, load_program
from .report import render_json

CONFIGS: Dict[str, AnalysisConfig] = {
    "sast": AnalysisConfig(sed_enabled=False, bet_enabled=False, chain_phase=False),
    "subs-off": AnalysisConfig(sed_enabled=False, bet_enabled=False),
    "subs-on": AnalysisConfig(sed_enabled=True, bet_enabled=False),
    "subs-bet": AnalysisConfig(sed_enabled=True, bet_enabled=True),
}
BASELINE = "sast"


class CorpusError(ValueError):
    pass


@dataclass
class BenchResult:
    raw: List[dict] = field(default_factory=list)
    summary: List[dict] = field(default_factory=list)

    def overall_overhead(self, config: str) -> Optional[float]:
        for row in self.summary:
            if row["program"] == "ALL" and row["config"] == config:
                return row["overhead_vs_sast_pct"]
        return None


def timed_run(rules_dir, program_file, config: AnalysisConfig):
    """One full analysis including report rendering; returns PhaseTimings."""
    config = replace(config, collect_timings=True)
    report = analyze(rules_dir, program_file, config)
    start = time.perf_counter()
    render_json(report, include_timings=False)
    extra = (time.perf_counter() - start) * 1000.0
    report.timings.reporting_ms += extra
    report.timings.total_ms += extra
    return report.timings


def _overhead(value, base):
    if base is None or base <= 0:
        return None
    return (value / base - 1.0) * 100.0


def bench(rules_dir, corpus_dir, reps: int = 10, configs: Sequence[str] = tuple(CONFIGS),
          warmup: bool = True) -> BenchResult:
    unknown = [c for c in configs if c not in CONFIGS]
    if unknown:
        raise ValueError(f"unknown configuration(s): {', '.join(unknown)}")
    if reps < 1:
        raise ValueError("reps must be positive")
    programs = sorted(Path(corpus_dir).glob("*.mprog"))
    if not programs:
        raise CorpusError(f"no .mprog files in {corpus_dir}")
    for p in programs:
        try:
            load_program(p)
        except ProgramError as exc:
            raise CorpusError(f"{p}: {exc}") from exc

    result = BenchResult()
    totals = {(p.stem, c): [] for p in programs for c in configs}
    if warmup:
        for p in programs:
            for c in configs:
                timed_run(rules_dir, p, CONFIGS[c])
    gc_was_enabled = gc.isenabled()
    try:
        # configurations interleaved per repetition so drift hits all alike
        for rep in range(reps):
            for p in programs:
                for c in configs:
                    gc.collect()
                    gc.disable()
                    t = timed_run(rules_dir, p, CONFIGS[c])
                    gc.enable()
                    for phase, ms in t.as_dict().items():
                        result.raw.append({"program": p.stem, "config": c, "rep": rep,
                                           "phase": phase, "ms": ms})
                    totals[(p.stem, c)].append(t.total_ms)
    finally:
        if gc_was_enabled:
            gc.enable()

    per_config_overheads = {c: [] for c in configs}
    for p in programs:
        base = statistics.median(totals[(p.stem, BASELINE)]) if BASELINE in configs else None
        for c in configs:
            med = statistics.median(totals[(p.stem, c)])
            ov = None if c == BASELINE else _overhead(med, base)
            if ov is not None:
                per_config_overheads[c].append(ov)
            result.summary.append({"program": p.stem, "config": c, "total_median_ms": med,
                                   "overhead_vs_sast_pct": ov})
    for c in configs:
        meds = [statistics.median(totals[(p.stem, c)]) for p in programs]
        ovs = per_config_overheads[c]
        result.summary.append({"program": "ALL", "config": c,
                               "total_median_ms": statistics.median(meds),
                               "overhead_vs_sast_pct": statistics.median(ovs) if ovs else None})
    return result


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def summary_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.stem + ".summary.csv")


def write_csv(result: BenchResult, out) -> Path:
    out = Path(out)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["program", "config", "rep", "phase", "ms"])
        for r in result.raw:
            w.writerow([r["program"], r["config"], r["rep"], r["phase"], _fmt(r["ms"])])
    summary = summary_path(out)
    with summary.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["program", "config", "total_median_ms", "overhead_vs_sast_pct"])
        for r in result.summary:
            w.writerow([r["program"], r["config"], _fmt(r["total_median_ms"]),
                        _fmt(r["overhead_vs_sast_pct"])])
    return summary
