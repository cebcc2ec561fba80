"""Text and JSON renderings of a report."""

from __future__ import annotations

import json
from collections import defaultdict

from .model import Role

NO_FINDINGS = "No violations found."


def _line(err):
    return f"[{err.kind.value}] {err.rule_class} at {err.location} - {err.message} ({err.id})"


def _roots_reaching(report):
    """error id -> ids of root errors it is (transitively) subsequent to."""
    succ = report.graph.successors()
    reach = defaultdict(set)
    for e in report.errors:
        if report.roles[e.id] is not Role.ROOT:
            continue
        seen = {e.id}
        stack = [e.id]
        while stack:
            for m in succ[stack.pop()]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        for n in seen - {e.id}:
            reach[n].add(e.id)
    return reach


def grouped_lines(report):
    """Lines of the grouped view as ``(depth, parent_id, error_id, annotation)``."""
    by_id = {e.id: e for e in report.errors}
    succ = report.graph.successors()
    reach = _roots_reaching(report)
    out = []

    def walk(eid, parent, depth, stack, root):
        note = ""
        if root is not None and len(reach[eid]) > 1:
            note = f"also caused by {len(reach[eid]) - 1} other root(s)"
        out.append((depth, parent, eid, note))
        for child in sorted(succ[eid], key=lambda c: by_id[c].sort_key()):
            if child in stack:
                out.append((depth + 1, eid, child, "cycle"))
                continue
            walk(child, eid, depth + 1, stack | {child}, root)

    printed = set()
    for e in report.errors:
        if report.roles[e.id] is Role.ROOT:
            walk(e.id, None, 0, {e.id}, e.id)
            printed.add(e.id)
    printed |= set(reach)
    # Chains without a root (cycles) start from their first member.
    for comp in report.graph.components:
        if not comp.edges or any(n in printed for n in comp.node_ids):
            continue
        walk(comp.node_ids[0], None, 0, {comp.node_ids[0]}, None)
        printed.update(comp.node_ids)
    return out


def render_text(report, group_chains: bool = False) -> str:
    if not report.errors:
        return NO_FINDINGS + "\n"
    out = []
    by_id = {e.id: e for e in report.errors}
    n = len(report.errors)
    out.append(f"{n} violation{'s' if n != 1 else ''} found.")
    if group_chains and not report.config.sed_enabled:
        out.append("note: chain grouping needs subsequent error detection (--sed on); listing flat.")
        group_chains = False
    if not group_chains:
        out.append("")
        for e in report.errors:
            role = report.roles[e.id].value.lower()
            out.append(f"{_line(e)} [{role}]")
        return "\n".join(out) + "\n"

    lines = grouped_lines(report)
    roots = sum(1 for r in report.roles.values() if r is Role.ROOT)
    out.append(f"{roots} root error(s); fix these first:")
    for depth, parent, eid, note in lines:
        if depth == 0:
            out.append("")
        indent = "    " * depth
        prefix = "" if depth == 0 else "-> "
        if note == "cycle":
            out.append(f"{indent}{prefix}(cycle back to {eid})")
            continue
        text = f"{indent}{prefix}{_line(by_id[eid])}"
        if note:
            text += f"  [{note}]"
        out.append(text)
    isolated = [e for e in report.errors if report.roles[e.id] is Role.ISOLATED]
    if isolated:
        out.append("")
        out.append("Unrelated errors:")
        out.extend(_line(e) for e in isolated)
    return "\n".join(out) + "\n"


def _stats_dict(stats):
    return {
        "total_errors": stats.total_errors,
        "per_kind_counts": {k.value: v for k, v in stats.per_kind_counts.items()},
        "per_kind_root_counts": {k.value: v for k, v in stats.per_kind_root_counts.items()},
        "subsequent_count": stats.subsequent_count,
        "avg_direct_subsequent_per_root": stats.avg_direct_subsequent_per_root,
        "avg_preceding_per_subsequent": stats.avg_preceding_per_subsequent,
        "tree_sizes": list(stats.tree_sizes),
        "trees_depth_ge_3": stats.trees_depth_ge_3,
        "class_dependency_edges": stats.class_edge_records(),
    }


def report_dict(report, include_timings=True) -> dict:
    errors = []
    for e in report.errors:
        item = {
            "id": e.id,
            "kind": e.kind.value,
            "rule_class": e.rule_class,
            "seed_id": e.seed_id,
            "location": {"file": e.location.file, "line": e.location.line,
                         "statement_id": e.location.statement_id},
            "message": e.message,
        }
        if e.predicate_name is not None:
            item["predicate"] = e.predicate_name
        item["preceding_ids"] = sorted(e.preceding_ids)
        item["subsequent_ids"] = sorted(e.subsequent_ids)
        item["role"] = report.roles[e.id].value
        errors.append(item)
    doc = {
        "version": report.version,
        "config": {"sed": report.config.sed_enabled, "bet": report.config.bet_enabled},
        "errors": errors,
        "components": [
            {"node_ids": list(c.node_ids), "edges": [list(edge) for edge in c.edges], "cyclic": c.cyclic}
            for c in report.graph.components
        ],
        "stats": _stats_dict(report.stats),
    }
    if include_timings and report.timings is not None:
        doc["timings"] = {k: round(v, 3) for k, v in report.timings.as_dict().items()}
    return doc


def render_json(report, include_timings=True) -> str:
    return json.dumps(report_dict(report, include_timings), indent=2) + "\n"
