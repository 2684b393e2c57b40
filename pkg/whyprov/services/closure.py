"""Graph of rule instances and downward closures of goal facts."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Tuple

from ..errors import GoalNotDerivable
from ..models import Database, Fact, Program
from .engine import FixpointResult
from .logging_service import log_event


@dataclass(frozen=True, order=True)
class Hyperedge:
    head: Fact
    body: Tuple[Fact, ...]

    @classmethod
    def of(cls, head: Fact, body: Iterable[Fact]) -> "Hyperedge":
        return cls(head, tuple(sorted(set(body))))

    def __str__(self) -> str:
        return f"{self.head} <- {', '.join(str(f) for f in self.body)}"


class Hypergraph:
    def __init__(self, nodes: Iterable[Fact], hyperedges: Iterable[Hyperedge]):
        self.nodes: FrozenSet[Fact] = frozenset(nodes)
        self.hyperedges: Tuple[Hyperedge, ...] = tuple(sorted(set(hyperedges)))
        by_head: Dict[Fact, List[Hyperedge]] = {}
        by_member: Dict[Fact, List[Hyperedge]] = {}
        for edge in self.hyperedges:
            by_head.setdefault(edge.head, []).append(edge)
            for member in edge.body:
                by_member.setdefault(member, []).append(edge)
        self.by_head = {k: tuple(v) for k, v in by_head.items()}
        self.by_member = {k: tuple(v) for k, v in by_member.items()}

    def outgoing(self, fact: Fact) -> Tuple[Hyperedge, ...]:
        return self.by_head.get(fact, ())

    def edge_pairs(self) -> List[Tuple[Fact, Fact]]:
        """Distinct (head, body member) pairs, in canonical order."""
        return sorted({(e.head, m) for e in self.hyperedges for m in e.body})

    def stats(self) -> Dict[str, int]:
        return {
            "nodes": len(self.nodes),
            "hyperedges": len(self.hyperedges),
            "edges": len(self.edge_pairs()),
        }


@dataclass(frozen=True)
class DownwardClosure:
    graph: Hypergraph
    goal: Fact

    @property
    def nodes(self) -> FrozenSet[Fact]:
        return self.graph.nodes

    @property
    def hyperedges(self) -> Tuple[Hyperedge, ...]:
        return self.graph.hyperedges

    def database_facts(self, db: Database) -> List[Fact]:
        return sorted(f for f in self.graph.nodes if f in db)


def build_gri(p: Program, db: Database, fix: FixpointResult) -> Hypergraph:
    edges = (Hyperedge.of(inst.head, inst.body) for inst in fix.instantiations)
    return Hypergraph(fix.facts.facts | db.facts, edges)


def _closure(goal: Fact, expand) -> Tuple[set, List[Hyperedge]]:
    seen = {goal}
    kept: List[Hyperedge] = []
    queue = deque([goal])
    while queue:
        node = queue.popleft()
        for edge in expand(node):
            kept.append(edge)
            for member in edge.body:
                if member not in seen:
                    seen.add(member)
                    queue.append(member)
    return seen, kept


def downward_closure(gri: Hypergraph, goal: Fact) -> DownwardClosure:
    """Nodes reachable from ``goal`` and the hyperedges headed by them.

    A hyperedge whose head is unreachable never appears in a compressed DAG rooted at the
    goal, so only hyperedges with a reachable head (and hence a reachable body) are kept.
    """
    if goal not in gri.nodes:
        raise GoalNotDerivable(goal)
    nodes, edges = _closure(goal, gri.outgoing)
    dc = DownwardClosure(Hypergraph(nodes, edges), goal)
    log_event("closure_built", meta={"goal": str(goal), **dc.graph.stats()})
    return dc


def closure_for(fix: FixpointResult, goal: Fact) -> DownwardClosure:
    """Same result as ``downward_closure(build_gri(...), goal)`` without grounding the
    whole program: hyperedges are found by goal-directed joins on demand."""
    if goal not in fix:
        raise GoalNotDerivable(goal)

    def expand(node: Fact) -> List[Hyperedge]:
        if node.predicate not in fix.program.idb:
            return []
        return sorted({Hyperedge.of(i.head, i.body) for i in fix.instantiations_for_head(node)})

    nodes, edges = _closure(goal, expand)
    dc = DownwardClosure(Hypergraph(nodes, edges), goal)
    log_event("closure_built", meta={"goal": str(goal), **dc.graph.stats()})
    return dc


def render_closure(dc: DownwardClosure) -> str:
    return "".join(f"{edge}\n" for edge in dc.hyperedges)
