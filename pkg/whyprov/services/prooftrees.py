"""Proof trees and proof DAGs, their validity and shape predicates, unravelling, and
exhaustive oracles that compute why-provenance at small scale."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, FrozenSet, Hashable, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple, TypeVar, Union

import networkx as nx

from ..errors import GoalNotDerivable, OracleTooLarge
from ..models import Atom, Constant, Database, Fact, Program, Query
from .closure import DownwardClosure, Hyperedge, closure_for
from .engine import FixpointResult, Instantiation, fixpoint

Support = FrozenSet[Fact]
V = TypeVar("V")

DEFAULT_ORACLE_MAX_NODES = 64
DEFAULT_ORACLE_MAX_PRODUCT = 1000
DEFAULT_ORACLE_MAX_FAMILY = 100_000
DEFAULT_ORACLE_MAX_STEPS = 1_000_000


@dataclass(frozen=True)
class ProofTree:
    """A labelled rooted tree. Subtrees are values, so equal subtrees may share objects."""

    label: Fact
    children: Tuple["ProofTree", ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @cached_property
    def depth(self) -> int:
        depths: Dict[int, int] = {}
        for node in _postorder(self):
            depths[id(node)] = 1 + max((depths[id(c)] for c in node.children), default=-1)
        return depths[id(self)]

    def nodes(self) -> Iterator["ProofTree"]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def leaves(self) -> Iterator["ProofTree"]:
        return (node for node in self.nodes() if node.is_leaf)

    def render(self, indent: int = 0) -> str:
        lines = []
        stack = [(self, indent)]
        while stack:
            node, level = stack.pop()
            lines.append("  " * level + str(node.label))
            stack.extend((c, level + 1) for c in reversed(node.children))
        return "\n".join(lines)


def _postorder(t: ProofTree) -> List[ProofTree]:
    """Distinct node objects of ``t``, children before parents."""
    order: List[ProofTree] = []
    seen: Set[int] = set()
    stack: List[Tuple[ProofTree, bool]] = [(t, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        stack.extend((c, False) for c in node.children)
    return order


class ProofDag:
    """A labelled rooted DAG on top of a networkx DiGraph; labels live in the ``label``
    node attribute. Compressed DAGs use the facts themselves as nodes."""

    def __init__(self, graph: nx.DiGraph):
        self.graph = graph

    @classmethod
    def from_edges(cls, labels: Mapping[Hashable, Fact], edges: Iterable[Tuple[Hashable, Hashable]]) -> "ProofDag":
        graph = nx.DiGraph()
        for node, label in labels.items():
            graph.add_node(node, label=label)
        graph.add_edges_from(edges)
        return cls(graph)

    @classmethod
    def compressed(cls, root: Fact, edges: Iterable[Tuple[Fact, Fact]]) -> "ProofDag":
        graph = nx.DiGraph()
        graph.add_node(root, label=root)
        for head, member in edges:
            graph.add_node(head, label=head)
            graph.add_node(member, label=member)
            graph.add_edge(head, member)
        return cls(graph)

    def label(self, node: Hashable) -> Fact:
        return self.graph.nodes[node]["label"]

    def _key(self, node: Hashable):
        return (self.label(node), repr(node))

    def children(self, node: Hashable) -> List[Hashable]:
        return sorted(self.graph.successors(node), key=self._key)

    @property
    def roots(self) -> List[Hashable]:
        return sorted((n for n, d in self.graph.in_degree() if d == 0), key=self._key)

    @property
    def root(self) -> Hashable:
        roots = self.roots
        if len(roots) != 1:
            raise ValueError(f"proof DAG has {len(roots)} roots")
        return roots[0]

    def leaves(self) -> List[Hashable]:
        return sorted((n for n, d in self.graph.out_degree() if d == 0), key=self._key)

    @property
    def is_compressed(self) -> bool:
        labels = [self.label(n) for n in self.graph]
        return len(set(labels)) == len(labels)

    def edge_labels(self) -> List[Tuple[Fact, Fact]]:
        return sorted((self.label(a), self.label(b)) for a, b in self.graph.edges())


def support(x: Union[ProofTree, ProofDag]) -> Support:
    if isinstance(x, ProofDag):
        return frozenset(x.label(n) for n in x.leaves())
    return frozenset(node.label for node in _postorder(x) if node.is_leaf)


def _match(atom: Atom, fact: Fact, binding: Dict[str, str]) -> Optional[Dict[str, str]]:
    if atom.predicate != fact.predicate or atom.arity != fact.arity:
        return None
    out = dict(binding)
    for term, value in zip(atom.args, fact.args):
        if isinstance(term, Constant):
            if term.symbol != value:
                return None
        elif out.setdefault(term.name, value) != value:
            return None
    return out


def _tree_triggers(p: Program, head: Fact, labels: Sequence[Fact]) -> Iterator[Tuple[int, Dict[str, str]]]:
    """Rule instantiations whose body atoms map one-to-one onto ``labels``."""
    for index, rule in enumerate(p.rules):
        if len(rule.body) != len(labels):
            continue
        start = _match(rule.head, head, {})
        if start is None:
            continue
        used = [False] * len(labels)

        def assign(i: int, binding: Dict[str, str]) -> Iterator[Dict[str, str]]:
            if i == len(rule.body):
                yield binding
                return
            for j, label in enumerate(labels):
                if used[j]:
                    continue
                extended = _match(rule.body[i], label, binding)
                if extended is None:
                    continue
                used[j] = True
                yield from assign(i + 1, extended)
                used[j] = False

        for binding in assign(0, start):
            yield index, binding


def _set_triggers(p: Program, head: Fact, labels: FrozenSet[Fact]) -> Iterator[Tuple[int, Dict[str, str], Tuple[Fact, ...]]]:
    """Rule instantiations whose set of body images equals ``labels``."""
    candidates = sorted(labels)
    for index, rule in enumerate(p.rules):
        start = _match(rule.head, head, {})
        if start is None:
            continue

        def assign(i: int, binding: Dict[str, str], images: Tuple[Fact, ...]):
            if i == len(rule.body):
                if frozenset(images) == labels:
                    yield binding, images
                return
            for label in candidates:
                extended = _match(rule.body[i], label, binding)
                if extended is not None:
                    yield from assign(i + 1, extended, images + (label,))

        for binding, images in assign(0, start, ()):
            yield index, binding, images


def _trigger(p: Program, head: Fact, labels: FrozenSet[Fact]) -> Optional[Tuple[int, Tuple[Fact, ...]]]:
    """Lowest rule index first, then the lexicographically least homomorphism."""
    best = None
    for index, binding, images in _set_triggers(p, head, labels):
        if best is not None and index > best[0]:
            break
        key = (index, tuple(sorted(binding.items())))
        if best is None or key < best[:2]:
            best = (index, key[1], images)
    if best is None:
        return None
    return best[0], best[2]


def validate_tree(t: ProofTree, p: Program, db: Database, goal: Fact) -> bool:
    if t.label != goal:
        return False
    for node in _postorder(t):
        if node.is_leaf:
            if node.label not in db:
                return False
        elif next(_tree_triggers(p, node.label, [c.label for c in node.children]), None) is None:
            return False
    return True


def validate_dag(g: ProofDag, p: Program, db: Database, goal: Fact) -> bool:
    graph = g.graph
    if graph.number_of_nodes() == 0 or not nx.is_directed_acyclic_graph(graph):
        return False
    roots = g.roots
    if len(roots) != 1 or g.label(roots[0]) != goal:
        return False
    for node in graph:
        kids = list(graph.successors(node))
        if not kids:
            if g.label(node) not in db:
                return False
            continue
        labels = frozenset(g.label(k) for k in kids)
        if next(_set_triggers(p, g.label(node), labels), None) is None:
            return False
    return True


def validate_compressed_dag(g: ProofDag, p: Program, db: Database, goal: Fact) -> bool:
    return g.is_compressed and validate_dag(g, p, db, goal)


def is_unambiguous(t: ProofTree) -> bool:
    # hash-consed canonical forms: isomorphic subtrees get the same id
    table: Dict[Tuple[Fact, Tuple[int, ...]], int] = {}
    canon: Dict[int, int] = {}
    by_label: Dict[Fact, int] = {}
    for node in _postorder(t):
        key = (node.label, tuple(sorted(canon[id(c)] for c in node.children)))
        form = table.setdefault(key, len(table))
        canon[id(node)] = form
        if by_label.setdefault(node.label, form) != form:
            return False
    return True


def is_nonrecursive_tree(t: ProofTree) -> bool:
    below: Dict[int, FrozenSet[Fact]] = {}
    for node in _postorder(t):
        labels: Set[Fact] = set()
        for child in node.children:
            labels.add(child.label)
            labels |= below[id(child)]
        if node.label in labels:
            return False
        below[id(node)] = frozenset(labels)
    return True


def is_minimal_depth_tree(t: ProofTree, fix: FixpointResult) -> bool:
    rank = fix.rank.get(t.label)
    if rank is None:
        raise GoalNotDerivable(t.label)
    return t.depth == rank


def unravel(g: ProofDag, p: Program) -> ProofTree:
    """Unfold ``g`` into a proof tree, one child per body atom of each node's trigger.

    Nodes are shared by value, so a compressed DAG unravels into an unambiguous tree.
    """
    built: Dict[Hashable, ProofTree] = {}
    for node in reversed(list(nx.topological_sort(g.graph))):
        label = g.label(node)
        kids = g.children(node)
        if not kids:
            built[node] = ProofTree(label)
            continue
        by_label: Dict[Fact, Hashable] = {}
        for kid in kids:
            by_label.setdefault(g.label(kid), kid)
        trigger = _trigger(p, label, frozenset(by_label))
        if trigger is None:
            raise ValueError(f"no rule instantiation derives {label} from its children")
        _, images = trigger
        built[node] = ProofTree(label, tuple(built[by_label[image]] for image in images))
    return built[g.root]


def _goal_closure(q: Query, db: Database, answer: Sequence[str], fix: Optional[FixpointResult]):
    goal = q.fact(tuple(answer))
    fix = fix or fixpoint(q.program, db)
    if goal not in fix:
        return goal, fix, None
    return goal, fix, closure_for(fix, goal)


def oracle_unwhy_witnesses(
    q: Query,
    db: Database,
    answer: Sequence[str],
    *,
    max_nodes: int = DEFAULT_ORACLE_MAX_NODES,
    max_steps: int = DEFAULT_ORACLE_MAX_STEPS,
    fix: Optional[FixpointResult] = None,
) -> Dict[Support, ProofDag]:
    """Every support of a compressed DAG of the answer fact, with one DAG per support.

    Searches all ways to give each reached intensional fact one outgoing hyperedge of the
    downward closure, pruning a choice as soon as it closes a cycle.
    """
    goal, fix, dc = _goal_closure(q, db, answer, fix)
    if dc is None:
        return {}
    if len(dc.nodes) > max_nodes:
        raise OracleTooLarge("downward closure nodes", len(dc.nodes), max_nodes)

    p = q.program
    found: Dict[Support, ProofDag] = {}
    chosen: Set[Fact] = set()
    graph = nx.DiGraph()
    graph.add_node(goal)
    steps = 0

    def closes_cycle(node: Fact, edge: Hyperedge) -> bool:
        return any(m == node or (m in graph and nx.has_path(graph, m, node)) for m in edge.body)

    def search(frontier: Tuple[Fact, ...]) -> None:
        nonlocal steps
        steps += 1
        if steps > max_steps:
            raise OracleTooLarge("oracle search steps", steps, max_steps)
        pending = [f for f in frontier if f not in chosen and p.is_intensional(f)]
        if not pending:
            leaves = frozenset(f for f in graph if not p.is_intensional(f))
            if leaves not in found:
                found[leaves] = ProofDag.compressed(goal, list(graph.edges()))
            return
        node, rest = pending[0], tuple(pending[1:])
        for edge in dc.graph.outgoing(node):
            if closes_cycle(node, edge):
                continue
            added = [(node, m) for m in edge.body]
            chosen.add(node)
            graph.add_edges_from(added)
            search(rest + tuple(m for m in edge.body if m not in chosen))
            graph.remove_edges_from(added)
            graph.remove_nodes_from([m for m in edge.body if m != goal and graph.degree(m) == 0])
            chosen.discard(node)

    search((goal,))
    return found


def oracle_unwhy(
    q: Query,
    db: Database,
    answer: Sequence[str],
    *,
    max_nodes: int = DEFAULT_ORACLE_MAX_NODES,
    fix: Optional[FixpointResult] = None,
) -> Set[Support]:
    return set(oracle_unwhy_witnesses(q, db, answer, max_nodes=max_nodes, fix=fix))


def _combine(families: List[FrozenSet[Support]], cap: int) -> Set[Support]:
    acc: Set[Support] = {frozenset()}
    for family in families:
        acc = {a | s for a in acc for s in family}
        if len(acc) > cap:
            raise OracleTooLarge("support family", len(acc), cap)
    return acc


def _by_depth_budget(
    p: Program,
    fix: FixpointResult,
    nodes: Iterable[Fact],
    bound: int,
    leaf: Callable[[Fact], V],
    start: V,
    step: Callable[[V, Instantiation, Mapping[Fact, V]], V],
) -> Iterator[Dict[Fact, V]]:
    """Values for proof trees of depth at most 0, 1, ..., ``bound``.

    Budget k+1 is computed from budget k alone, one instantiation at a time; body atoms
    are visited with their multiplicity. Stops early once a budget changes nothing.
    """
    nodes = sorted(nodes)
    heads = [f for f in nodes if p.is_intensional(f)]
    triggers = {f: fix.instantiations_for_head(f) for f in heads}
    current: Dict[Fact, V] = {f: start if p.is_intensional(f) else leaf(f) for f in nodes}
    yield current
    for _ in range(bound):
        following = dict(current)
        for node in heads:
            value = current[node]
            for inst in triggers[node]:
                value = step(value, inst, current)
            following[node] = value
        if following == current:
            return
        current = following
        yield current


def support_families(
    p: Program,
    fix: FixpointResult,
    dc: DownwardClosure,
    bound: int,
    max_family: int = DEFAULT_ORACLE_MAX_FAMILY,
) -> Dict[Fact, FrozenSet[Support]]:
    """Supports of proof trees of depth at most ``bound`` for every closure node.

    Each body atom occurrence gets its own subtree, so an instantiation with a repeated
    body fact also yields the unions of that fact's supports.
    """

    def step(family: FrozenSet[Support], inst: Instantiation, current: Mapping[Fact, FrozenSet[Support]]):
        grown = family | _combine([current[m] for m in inst.body], max_family)
        if len(grown) > max_family:
            raise OracleTooLarge("support family", len(grown), max_family)
        return frozenset(grown)

    last: Dict[Fact, FrozenSet[Support]] = {}
    for last in _by_depth_budget(
        p, fix, dc.nodes, bound, lambda f: frozenset({frozenset({f})}), frozenset(), step
    ):
        pass
    return last


def oracle_why(
    q: Query,
    db: Database,
    answer: Sequence[str],
    *,
    max_product: int = DEFAULT_ORACLE_MAX_PRODUCT,
    max_family: int = DEFAULT_ORACLE_MAX_FAMILY,
    fix: Optional[FixpointResult] = None,
) -> Set[Support]:
    """Why-provenance over all proof trees, ambiguous ones included.

    The depth bound is (fixpoint size) × (database size) rather than (base size) ×
    (database size). It is still sound: take a smallest tree for a support; along any
    root-to-leaf path the subtree supports shrink, and within a stretch of equal support
    no label repeats, or the lower copy's subtree could replace the upper one.
    """
    goal = q.fact(tuple(answer))
    fix = fix or fixpoint(q.program, db)
    if goal not in fix:
        return set()
    bound = len(fix.facts) * len(db)
    if bound > max_product:
        raise OracleTooLarge("fixpoint size × database size", bound, max_product)
    dc = closure_for(fix, goal)
    return set(support_families(q.program, fix, dc, bound, max_family)[goal])


def oracle_min_depth(p: Program, db: Database, fix: Optional[FixpointResult] = None) -> Dict[Fact, int]:
    """Minimal proof-tree depth of every derivable fact: the first depth budget under
    which some proof tree of the fact exists, by the recursion ``oracle_why`` runs."""
    fix = fix or fixpoint(p, db)

    def step(found: bool, inst: Instantiation, current: Mapping[Fact, bool]) -> bool:
        return found or all(current[m] for m in inst.body)

    depth: Dict[Fact, int] = {}
    budgets = _by_depth_budget(p, fix, fix.facts, len(fix.facts), lambda f: True, False, step)
    for budget, provable in enumerate(budgets):
        for f, ok in provable.items():
            if ok and f not in depth:
                depth[f] = budget
    return depth


def _dot_label(fact: Fact) -> str:
    return str(fact).replace("\\", "\\\\").replace('"', '\\"')


def tree_to_dot(t: ProofTree, name: str = "proof") -> str:
    lines = [f"digraph {name} {{"]
    counter = 0
    stack: List[Tuple[ProofTree, Optional[str]]] = [(t, None)]
    while stack:
        node, parent = stack.pop()
        ident = f"n{counter}"
        counter += 1
        lines.append(f'  {ident} [label="{_dot_label(node.label)}"];')
        if parent is not None:
            lines.append(f"  {parent} -> {ident};")
        stack.extend((c, ident) for c in reversed(node.children))
    lines.append("}")
    return "\n".join(lines) + "\n"


def dag_to_dot(g: ProofDag, name: str = "proof") -> str:
    order = sorted(g.graph, key=g._key)
    ids = {node: f"n{i}" for i, node in enumerate(order)}
    lines = [f"digraph {name} {{"]
    lines.extend(f'  {ids[n]} [label="{_dot_label(g.label(n))}"];' for n in order)
    lines.extend(
        f"  {ids[a]} -> {ids[b]};"
        for a, b in sorted(g.graph.edges(), key=lambda e: (g._key(e[0]), g._key(e[1])))
    )
    lines.append("}")
    return "\n".join(lines) + "\n"
