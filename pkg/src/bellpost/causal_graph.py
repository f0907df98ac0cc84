"""Finite causal DAGs and d-separation.

Two decision procedures are provided and cross-checked on every query:

* exhaustive enumeration of simple paths, each classified node by node
  with the three blocking rules (this is what produces proof diagnostics);
* the linear-time "reachable" (Bayes-ball) traversal over active trails.

Graphs are immutable values; erasing an arrow returns a new graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

ROLES = ("setting", "outcome", "hidden", "selection", "generic")

FORWARD = "forward"
BACKWARD = "backward"

RULE1 = "Rule1"
RULE2 = "Rule2"
RULE3 = "Rule3-override"


class GraphError(ValueError):
    """Malformed graph or invalid query."""


class ConsistencyError(RuntimeError):
    """The two d-separation procedures disagreed."""


class CausalGraph:
    """Immutable directed acyclic graph with role-tagged nodes.

    >>> g = CausalGraph(["B", "T", "C"], [("B", "C"), ("T", "C")])
    >>> sorted(g.children("B"))
    ['C']
    """

    __slots__ = ("_nodes", "_edges", "_roles", "_labels", "_parents", "_children", "_hash", "_memo")

    def __init__(
        self,
        nodes: Iterable[str],
        edges: Iterable[tuple[str, str]] = (),
        roles: Mapping[str, str] | None = None,
        labels: Mapping[str, str] | None = None,
    ):
        node_list = list(nodes)
        for n in node_list:
            if not isinstance(n, str) or not n:
                raise GraphError(f"node ids must be nonempty strings, got {n!r}")
        if len(set(node_list)) != len(node_list):
            raise GraphError("duplicate node ids")
        node_set = set(node_list)

        edge_list = [tuple(e) for e in edges]
        seen = set()
        for e in edge_list:
            if len(e) != 2:
                raise GraphError(f"edge must be a (parent, child) pair, got {e!r}")
            u, v = e
            if u not in node_set or v not in node_set:
                raise GraphError(f"edge {u!r}->{v!r} references an undeclared node")
            if u == v:
                raise GraphError(f"self-loop on {u!r}")
            if e in seen:
                raise GraphError(f"duplicate edge {u!r}->{v!r}")
            seen.add(e)

        roles = dict(roles or {})
        for n, r in roles.items():
            if n not in node_set:
                raise GraphError(f"role given for undeclared node {n!r}")
            if r not in ROLES:
                raise GraphError(f"unknown role {r!r} for node {n!r}")

        self._nodes = tuple(sorted(node_set))
        self._edges = frozenset(seen)
        self._roles = {n: roles.get(n, "generic") for n in self._nodes}
        self._labels = {n: (labels or {}).get(n, n) for n in self._nodes}
        parents: dict[str, set[str]] = {n: set() for n in self._nodes}
        children: dict[str, set[str]] = {n: set() for n in self._nodes}
        for u, v in self._edges:
            parents[v].add(u)
            children[u].add(v)
        self._parents = {n: frozenset(p) for n, p in parents.items()}
        self._children = {n: frozenset(c) for n, c in children.items()}
        self._hash = hash((self._nodes, self._edges, tuple(self._roles.items())))
        self._memo: dict = {}  # derived facts only; the graph itself never changes

        cycle = self._find_cycle()
        if cycle:
            raise GraphError("directed cycle: " + "->".join(cycle))

    def _find_cycle(self) -> list[str] | None:
        state = {n: 0 for n in self._nodes}  # 0 new, 1 on stack, 2 done
        for root in self._nodes:
            if state[root]:
                continue
            stack = [(root, iter(sorted(self._children[root])))]
            trail = [root]
            state[root] = 1
            while stack:
                node, it = stack[-1]
                nxt = next(it, None)
                if nxt is None:
                    stack.pop()
                    trail.pop()
                    state[node] = 2
                elif state[nxt] == 1:
                    return trail[trail.index(nxt):] + [nxt]
                elif state[nxt] == 0:
                    state[nxt] = 1
                    trail.append(nxt)
                    stack.append((nxt, iter(sorted(self._children[nxt]))))
        return None

    @property
    def nodes(self) -> tuple[str, ...]:
        return self._nodes

    @property
    def edges(self) -> frozenset[tuple[str, str]]:
        return self._edges

    def role(self, node: str) -> str:
        self._check(node)
        return self._roles[node]

    def label(self, node: str) -> str:
        self._check(node)
        return self._labels[node]

    def parents(self, node: str) -> frozenset[str]:
        self._check(node)
        return self._parents[node]

    def children(self, node: str) -> frozenset[str]:
        self._check(node)
        return self._children[node]

    def neighbors(self, node: str) -> frozenset[str]:
        self._check(node)
        return self._parents[node] | self._children[node]

    def has_edge(self, u: str, v: str) -> bool:
        return (u, v) in self._edges

    def __contains__(self, node: object) -> bool:
        return node in self._roles

    def _check(self, node: str) -> None:
        if node not in self._roles:
            raise GraphError(f"unknown node {node!r}")

    def without_edge(self, u: str, v: str) -> "CausalGraph":
        """Return a copy with the arrow ``u -> v`` erased."""
        if (u, v) not in self._edges:
            raise GraphError(f"no edge {u!r}->{v!r} to erase")
        return CausalGraph(self._nodes, self._edges - {(u, v)}, self._roles, self._labels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CausalGraph):
            return NotImplemented
        return (self._nodes, self._edges, self._roles) == (other._nodes, other._edges, other._roles)

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        arcs = ", ".join(f"{u}->{v}" for u, v in sorted(self._edges))
        return f"CausalGraph(nodes={list(self._nodes)}, edges=[{arcs}])"

    def to_dict(self) -> dict:
        nodes = []
        for n in self._nodes:
            entry = {"id": n, "role": self._roles[n]}
            if self._labels[n] != n:
                entry["label"] = self._labels[n]
            nodes.append(entry)
        return {"nodes": nodes, "edges": [list(e) for e in sorted(self._edges)]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "CausalGraph":
        try:
            raw_nodes = data["nodes"]
            raw_edges = data.get("edges", [])
        except (KeyError, TypeError, AttributeError) as exc:
            raise GraphError("graph JSON needs a 'nodes' list") from exc
        ids, roles, labels = [], {}, {}
        for i, entry in enumerate(raw_nodes):
            if isinstance(entry, str):
                ids.append(entry)
                continue
            if not isinstance(entry, Mapping) or "id" not in entry:
                raise GraphError(f"nodes[{i}]: expected a string or an object with 'id'")
            nid = entry["id"]
            if not isinstance(nid, str) or not nid.isascii():
                raise GraphError(f"nodes[{i}]: node id must be an ASCII string")
            ids.append(nid)
            if "role" in entry:
                roles[nid] = entry["role"]
            if "label" in entry:
                labels[nid] = entry["label"]
        edges = []
        for i, e in enumerate(raw_edges):
            if not isinstance(e, (list, tuple)) or len(e) != 2:
                raise GraphError(f"edges[{i}]: expected [parent, child]")
            edges.append((e[0], e[1]))
        return cls(ids, edges, roles, labels)

    @classmethod
    def from_json(cls, text: str) -> "CausalGraph":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Path:
    """Simple path ``nodes[0] .. nodes[m]``; ``directions[i]`` orients the
    edge between ``nodes[i]`` and ``nodes[i + 1]``."""

    nodes: tuple[str, ...]
    directions: tuple[str, ...]

    def __post_init__(self):
        if len(self.nodes) < 2 or len(self.directions) != len(self.nodes) - 1:
            raise GraphError("a path needs m >= 1 edges and one direction per edge")
        if len(set(self.nodes)) != len(self.nodes):
            raise GraphError("paths must be simple")
        if any(d not in (FORWARD, BACKWARD) for d in self.directions):
            raise GraphError("directions must be 'forward' or 'backward'")
        kinds = tuple(
            (n, self.directions[i - 1] == FORWARD and self.directions[i] == BACKWARD)
            for i, n in enumerate(self.nodes[1:-1], 1)
        )
        object.__setattr__(self, "_kinds", kinds)

    @property
    def interior(self) -> tuple[str, ...]:
        return self.nodes[1:-1]

    def is_collider(self, i: int) -> bool:
        """Whether interior position ``i`` has arrows meeting head-to-head."""
        if not 0 < i < len(self.nodes) - 1:
            raise GraphError(f"position {i} is not interior")
        return self.directions[i - 1] == FORWARD and self.directions[i] == BACKWARD

    def colliders(self) -> tuple[str, ...]:
        return tuple(n for i, n in enumerate(self.nodes[1:-1], 1) if self.is_collider(i))

    def __str__(self) -> str:
        out = [self.nodes[0]]
        for d, n in zip(self.directions, self.nodes[1:]):
            out.append("->" if d == FORWARD else "<-")
            out.append(n)
        return "".join(out)


@dataclass(frozen=True)
class BlockingVerdict:
    path: Path
    blocked: bool
    witnesses: tuple[tuple[str, str], ...] = field(default=())

    @property
    def blockers(self) -> tuple[tuple[str, str], ...]:
        return tuple(w for w in self.witnesses if w[1] != RULE3)

    def to_dict(self) -> dict:
        return {
            "path": str(self.path),
            "blocked": self.blocked,
            "witnesses": [{"node": n, "rule": r} for n, r in self.witnesses],
        }


@dataclass(frozen=True)
class Separation:
    """Outcome of a d-separation query together with its proof object."""

    separated: bool
    verdicts: tuple[BlockingVerdict, ...]

    def __bool__(self) -> bool:
        return self.separated

    def to_dict(self) -> dict:
        return {"separated": self.separated, "paths": [v.to_dict() for v in self.verdicts]}


def descendants(graph: CausalGraph, node: str) -> frozenset[str]:
    """All nodes reachable from ``node`` along directed edges, ``node`` excluded."""
    graph._check(node)
    return _descendants(graph, node)


def _descendants(graph: CausalGraph, node: str) -> frozenset[str]:
    key = ("desc", node)
    found = graph._memo.get(key)
    if found is None:
        children = graph._children
        seen: set[str] = set()
        stack = list(children[node])
        while stack:
            n = stack.pop()
            if n not in seen:
                seen.add(n)
                stack.extend(children[n])
        found = graph._memo[key] = frozenset(seen)
    return found


def ancestors(graph: CausalGraph, nodes: Iterable[str]) -> frozenset[str]:
    """``nodes`` together with everything that has a directed path into them."""
    parents = graph._parents
    seen: set[str] = set()
    stack = list(nodes)
    while stack:
        n = stack.pop()
        if n not in seen:
            seen.add(n)
            stack.extend(parents[n])
    return frozenset(seen)


def all_paths(graph: CausalGraph, x: str, y: str) -> list[Path]:
    """Every simple path between ``x`` and ``y`` in the skeleton, in
    lexicographic order of node-id sequences."""
    graph._check(x)
    graph._check(y)
    if x == y:
        raise GraphError("path endpoints must differ")
    return list(_all_paths(graph, x, y))


def _all_paths(graph: CausalGraph, x: str, y: str) -> tuple[Path, ...]:
    key = ("paths", x, y)
    found = graph._memo.get(key)
    if found is None:
        found = graph._memo[key] = _enumerate_paths(graph, x, y)
    return found


def _enumerate_paths(graph: CausalGraph, x: str, y: str) -> tuple[Path, ...]:
    # depth-first in sorted neighbour order yields lexicographic order
    adjacency = {n: sorted(graph.neighbors(n)) for n in graph.nodes}
    found: list[Path] = []
    trail = [x]
    on_trail = {x}

    def extend(node: str) -> None:
        for nxt in adjacency[node]:
            if nxt in on_trail:
                continue
            trail.append(nxt)
            if nxt == y:
                dirs = tuple(
                    FORWARD if graph.has_edge(a, b) else BACKWARD
                    for a, b in zip(trail, trail[1:])
                )
                found.append(Path(tuple(trail), dirs))
            else:
                on_trail.add(nxt)
                extend(nxt)
                on_trail.discard(nxt)
            trail.pop()

    extend(x)
    return tuple(found)


def path_blocked(graph: CausalGraph, path: Path, given: Iterable[str] = ()) -> BlockingVerdict:
    """Classify every interior node of ``path`` under conditioning set ``given``.

    A non-collider in ``given`` blocks (Rule 2). A collider blocks (Rule 1)
    unless it or one of its descendants is in ``given``, in which case it is
    reported as a Rule 3 override and does not block.
    """
    given = frozenset(given)
    for n in given:
        graph._check(n)
    for (a, b), d in zip(zip(path.nodes, path.nodes[1:]), path.directions):
        edge = (a, b) if d == FORWARD else (b, a)
        if not graph.has_edge(*edge):
            raise GraphError(f"path {path} uses a non-existent edge {edge[0]}->{edge[1]}")
    if path.nodes[0] in given or path.nodes[-1] in given:
        raise GraphError("path endpoints may not be in the conditioning set")
    return _verdict(graph, path, given)


def _verdict(graph: CausalGraph, path: Path, given: frozenset[str]) -> BlockingVerdict:
    witnesses = []
    for node, collider in path._kinds:
        if collider:
            if node in given or not given.isdisjoint(_descendants(graph, node)):
                witnesses.append((node, RULE3))
            else:
                witnesses.append((node, RULE1))
        elif node in given:
            witnesses.append((node, RULE2))
    blocked = any(rule != RULE3 for _, rule in witnesses)
    return BlockingVerdict(path, blocked, tuple(witnesses))


def _as_set(nodes: str | Iterable[str]) -> frozenset[str]:
    if isinstance(nodes, str):
        return frozenset([nodes])
    return frozenset(nodes)


def _check_query(graph, xs, ys, given):
    for n in xs | ys | given:
        graph._check(n)
    if not xs or not ys:
        raise GraphError("both sides of a d-separation query must be nonempty")
    if xs & ys or xs & given or ys & given:
        raise GraphError("query sets must be pairwise disjoint")


def reachable(graph: CausalGraph, sources: str | Iterable[str], given: Iterable[str] = ()) -> frozenset[str]:
    """Nodes connected to ``sources`` by an active trail given ``given``
    (Bayes-ball traversal, linear in the size of the graph)."""
    sources = _as_set(sources)
    given = frozenset(given)
    for n in sources | given:
        graph._check(n)
    # colliders are passable iff they have a descendant in ``given``, i.e.
    # they lie in the ancestral closure of ``given``
    opened = ancestors(graph, given)

    parents, children = graph._parents, graph._children
    # up: arrived from a child; down: arrived from a parent
    seen_up: set[str] = set()
    seen_down: set[str] = set()
    result: set[str] = set()
    frontier = [(s, True) for s in sources]
    while frontier:
        node, up = frontier.pop()
        if up:
            if node in seen_up:
                continue
            seen_up.add(node)
            if node not in given:
                result.add(node)
                frontier.extend((p, True) for p in parents[node])
                frontier.extend((c, False) for c in children[node])
        else:
            if node in seen_down:
                continue
            seen_down.add(node)
            if node not in given:
                result.add(node)
                frontier.extend((c, False) for c in children[node])
            if node in opened:
                frontier.extend((p, True) for p in parents[node])
    return frozenset(result - sources)


def d_separated_by_paths(graph, xs, ys, given=()) -> Separation:
    """d-separation by exhaustive path enumeration only."""
    xs, ys, given = _as_set(xs), _as_set(ys), frozenset(given)
    _check_query(graph, xs, ys, given)
    verdicts = [
        _verdict(graph, p, given)
        for x in sorted(xs)
        for y in sorted(ys)
        for p in _all_paths(graph, x, y)
    ]
    return Separation(all(v.blocked for v in verdicts), tuple(verdicts))


def d_separated_by_reachability(graph, xs, ys, given=()) -> bool:
    """d-separation by the Bayes-ball traversal only."""
    xs, ys, given = _as_set(xs), _as_set(ys), frozenset(given)
    _check_query(graph, xs, ys, given)
    return not (reachable(graph, xs, given) & ys)


_SENTINEL = np.uint64(1 << 63)
_CHUNK = 1 << 22


def _path_masks(graph: CausalGraph, x: str, y: str):
    key = ("masks", x, y)
    found = graph._memo.get(key)
    if found is None:
        bit = {n: i for i, n in enumerate(graph.nodes)}
        plain, closures = [], []
        for path in _all_paths(graph, x, y):
            m = 0
            cols = []
            for node, collider in path._kinds:
                if collider:
                    c = 1 << bit[node]
                    for d in _descendants(graph, node):
                        c |= 1 << bit[d]
                    cols.append(c)
                else:
                    m |= 1 << bit[node]
            plain.append(m)
            closures.append(cols)
        width = max((len(c) for c in closures), default=0)
        pad = int(_SENTINEL)
        d = np.array([c + [pad] * (width - len(c)) for c in closures], dtype=np.uint64)
        found = graph._memo[key] = (bit, np.array(plain, dtype=np.uint64), d.reshape(len(plain), width))
    return found


def paths_separate_many(graph: CausalGraph, x: str, y: str, givens: Sequence[Iterable[str]]) -> list[bool]:
    """Path-enumeration verdicts for ``x`` vs ``y`` under many conditioning sets.

    Each path is compiled to a bitmask of its non-collider interior nodes
    and one mask per collider holding the collider and its descendants. A
    path is open under Z iff Z misses the first mask (no Rule 2 block) and
    meets every collider mask (each collider overridden by Rule 3). These
    are the rules of :func:`path_blocked`, evaluated in bulk.
    """
    graph._check(x)
    graph._check(y)
    givens = [frozenset(z) for z in givens]
    for z in givens:
        _check_query(graph, frozenset([x]), frozenset([y]), z)
    if len(graph.nodes) > 63:
        return [d_separated_by_paths(graph, x, y, z).separated for z in givens]
    bit, plain, closures = _path_masks(graph, x, y)
    if not len(plain):
        return [True] * len(givens)
    zs = np.array([sum(1 << bit[n] for n in z) for z in givens], dtype=np.uint64) | _SENTINEL
    out = []
    step = max(1, _CHUNK // (len(plain) * max(1, closures.shape[1])))
    for i in range(0, len(zs), step):
        z = zs[i:i + step, None]
        open_ = ((z & plain) == 0) & ((z[..., None] & closures) != 0).all(axis=2)
        out.extend((~open_.any(axis=1)).tolist())
    return out


def d_separated(graph: CausalGraph, xs, ys, given=()) -> Separation:
    """Decide whether ``xs`` and ``ys`` are d-separated given ``given``.

    Accepts single node ids or iterables of them. The returned
    :class:`Separation` carries one :class:`BlockingVerdict` per connecting
    path; its truth value is the verdict.

    Raises
    ------
    GraphError
        Unknown nodes or overlapping argument sets.
    ConsistencyError
        The path-enumeration and reachability procedures disagree.
    """
    by_paths = d_separated_by_paths(graph, xs, ys, given)
    by_reach = d_separated_by_reachability(graph, xs, ys, given)
    if by_paths.separated != by_reach:
        raise ConsistencyError(
            f"path enumeration says {by_paths.separated}, reachability says {by_reach} "
            f"for {sorted(_as_set(xs))} vs {sorted(_as_set(ys))} given {sorted(given)}"
        )
    return by_paths
