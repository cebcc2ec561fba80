"""Error chains: preceding/subsequent links, roles, dependent error trees, statistics."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from typing import Dict, FrozenSet, List, Sequence, Tuple

from .model import ChainStatistics, ErrorKind, ErrorReport, Role
from .propagation import PropagationResult


def map_subsequent(errors: Sequence[ErrorReport], propagation: PropagationResult,
                   sed_enabled: bool = True) -> List[ErrorReport]:
    """Attach preceding/subsequent ids to the full error set.

    A required-predicate error whose requirement was reached by hidden
    predicates gets those predicates' causes as its preceding errors.
    """
    errors = list(errors)
    if not sed_enabled:
        return errors
    preceding = {}
    for err in errors:
        if err.kind is not ErrorKind.REQUIRED_PREDICATE:
            continue
        causes = set()
        for req in propagation.requirement_sites.get(err.id, ()):
            causes |= propagation.env.hidden_reaching(req)
        causes.discard(err.id)
        if causes:
            preceding[err.id] = frozenset(causes)
    known = {e.id for e in errors}
    subsequent = defaultdict(set)
    for eid, pre in preceding.items():
        missing = pre - known
        if missing:
            raise AssertionError(f"{eid} links to unknown errors {sorted(missing)}")
        for p in pre:
            subsequent[p].add(eid)
    return [replace(e, preceding_ids=preceding.get(e.id, frozenset()),
                    subsequent_ids=frozenset(subsequent.get(e.id, ())))
            for e in errors]


def classify(errors: Sequence[ErrorReport]) -> Dict[str, Role]:
    roles = {}
    for e in errors:
        if e.preceding_ids:
            roles[e.id] = Role.SUBSEQUENT
        elif e.subsequent_ids:
            roles[e.id] = Role.ROOT
        else:
            roles[e.id] = Role.ISOLATED
    return roles


@dataclass(frozen=True)
class Component:
    node_ids: Tuple[str, ...]
    edges: Tuple[Tuple[str, str], ...]
    cyclic: bool


@dataclass(frozen=True)
class ChainGraph:
    nodes: FrozenSet[str]
    edges: FrozenSet[Tuple[str, str]]
    components: Tuple[Component, ...]

    def successors(self):
        out = defaultdict(list)
        for a, b in sorted(self.edges):
            out[a].append(b)
        return out

    def predecessors(self):
        out = defaultdict(list)
        for a, b in sorted(self.edges):
            out[b].append(a)
        return out


@dataclass(frozen=True)
class DependentTree:
    nodes: FrozenSet[str]
    edges: FrozenSet[Tuple[str, str]]
    depth: int
    cyclic: bool


def _has_cycle(nodes, edges) -> bool:
    succ = defaultdict(list)
    for a, b in edges:
        succ[a].append(b)
    color = {}
    for start in sorted(nodes):
        if start in color:
            continue
        color[start] = 1
        stack = [(start, iter(succ[start]))]
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
            elif color.get(nxt) == 1:
                return True
            elif nxt not in color:
                color[nxt] = 1
                stack.append((nxt, iter(succ[nxt])))
    return False


def longest_path_nodes(nodes, edges) -> int:
    """Node count of the longest simple directed path."""
    if not nodes:
        return 0
    succ = defaultdict(list)
    for a, b in edges:
        succ[a].append(b)
    if not _has_cycle(nodes, edges):
        memo = {}

        def depth(n):
            if n not in memo:
                memo[n] = 1 + max((depth(m) for m in succ[n]), default=0)
            return memo[n]

        return max(depth(n) for n in nodes)

    best = 1

    def walk(n, on_path):
        nonlocal best
        best = max(best, len(on_path))
        for m in succ[n]:
            if m not in on_path:
                on_path.add(m)
                walk(m, on_path)
                on_path.discard(m)

    for n in sorted(nodes):
        walk(n, {n})
    return best


def build_graph(errors: Sequence[ErrorReport]) -> ChainGraph:
    nodes = frozenset(e.id for e in errors)
    edges = frozenset((p, e.id) for e in errors for p in e.preceding_ids)
    parent = {n: n for n in nodes}

    def find(n):
        while parent[n] != n:
            parent[n] = parent[parent[n]]
            n = parent[n]
        return n

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups = defaultdict(set)
    for n in nodes:
        groups[find(n)].add(n)
    order = {e.id: e.sort_key() for e in errors}
    components = []
    for members in groups.values():
        comp_edges = tuple(sorted((a, b) for a, b in edges if a in members))
        components.append(Component(tuple(sorted(members, key=order.get)), comp_edges,
                                    _has_cycle(members, comp_edges)))
    components.sort(key=lambda c: order[c.node_ids[0]])
    return ChainGraph(nodes, edges, tuple(components))


def _closure(start, adjacency):
    seen = {start}
    stack = [start]
    while stack:
        for m in adjacency[stack.pop()]:
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return seen


def dependent_error_tree(error_id: str, graph: ChainGraph) -> DependentTree:
    """Ancestors and descendants of one error, with the edges among them."""
    if error_id not in graph.nodes:
        raise KeyError(error_id)
    nodes = _closure(error_id, graph.predecessors()) | _closure(error_id, graph.successors())
    edges = frozenset((a, b) for a, b in graph.edges if a in nodes and b in nodes)
    return DependentTree(frozenset(nodes), edges, longest_path_nodes(nodes, edges),
                         _has_cycle(nodes, edges))


def compute_stats(errors: Sequence[ErrorReport], graph: ChainGraph) -> ChainStatistics:
    roles = classify(errors)
    by_id = {e.id: e for e in errors}
    stats = ChainStatistics(total_errors=len(errors))
    kinds = Counter(e.kind for e in errors)
    stats.per_kind_counts = {k: kinds[k] for k in ErrorKind if kinds[k]}
    root_kinds = Counter(e.kind for e in errors if roles[e.id] is Role.ROOT)
    stats.per_kind_root_counts = {k: root_kinds[k] for k in ErrorKind if root_kinds[k]}
    roots = [e for e in errors if roles[e.id] is Role.ROOT]
    subs = [e for e in errors if roles[e.id] is Role.SUBSEQUENT]
    stats.subsequent_count = len(subs)
    if roots:
        stats.avg_direct_subsequent_per_root = sum(len(e.subsequent_ids) for e in roots) / len(roots)
    if subs:
        stats.avg_preceding_per_subsequent = sum(len(e.preceding_ids) for e in subs) / len(subs)
    for comp in graph.components:
        if not comp.edges:
            continue
        stats.tree_sizes.append(len(comp.node_ids))
        if longest_path_nodes(set(comp.node_ids), comp.edges) >= 3:
            stats.trees_depth_ge_3 += 1
    pairs = Counter((by_id[a].rule_class, by_id[b].rule_class) for a, b in graph.edges)
    stats.class_dependency_edges = dict(sorted(pairs.items()))
    return stats
