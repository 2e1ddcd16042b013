"""Causal DAGs with typed nodes, the canonical no-common-cause scenarios, and
the rewriting procedures that embed any such DAG into them.

Node labels in the canonical scenarios are frozensets of party indices: a
latent node is labelled by the set of observed nodes it can influence, an
observed node ``A_i`` by ``{i}``.  Edges run from each set ``S`` to every
``S' \\subset S`` with ``|S'| = |S| - 1``, so observed nodes are terminal.
"""
from __future__ import annotations

import enum
import itertools
import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Union

import networkx as nx
import numpy as np

from .errors import DomainError, InvalidArityError, InvariantError, ValidationError

Label = Union[frozenset, str]

LAMBDA_LABEL = "lambda"


class NodeKind(enum.Enum):
    OBSERVED_CLASSICAL = "observed-classical"
    OBSERVED_QUANTUM = "observed-quantum"
    LATENT_CLASSICAL = "latent-classical"
    LATENT_QUANTUM = "latent-quantum"

    @property
    def observed(self) -> bool:
        return self in (NodeKind.OBSERVED_CLASSICAL, NodeKind.OBSERVED_QUANTUM)

    @property
    def quantum(self) -> bool:
        return self in (NodeKind.OBSERVED_QUANTUM, NodeKind.LATENT_QUANTUM)


@dataclass(frozen=True)
class Node:
    id: int
    kind: NodeKind
    label: Label


def label_key(label: Label):
    """Sort key giving the label-lexicographic order used for serialization."""
    if isinstance(label, frozenset):
        return (0, len(label), tuple(sorted(label)), "")
    return (1, 0, (), str(label))


def format_label(label: Label) -> str:
    if isinstance(label, frozenset):
        return "{" + ",".join(str(p) for p in sorted(label)) + "}"
    return str(label)


def parse_label(text: str) -> Label:
    if text.startswith("{") and text.endswith("}"):
        body = text[1:-1].strip()
        return frozenset(int(p) for p in body.split(",")) if body else frozenset()
    return text


class CausalDag:
    """Immutable directed acyclic graph over typed nodes.

    Parameters
    ----------
    nodes : iterable of Node
    edges : iterable of (int, int)
        Ordered pairs of node ids, parent first.
    """

    def __init__(self, nodes: Iterable[Node], edges: Iterable[tuple[int, int]]):
        nodes = tuple(sorted(nodes, key=lambda nd: nd.id))
        ids = [nd.id for nd in nodes]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate node ids")
        self._nodes = {nd.id: nd for nd in nodes}
        edges = frozenset((int(u), int(v)) for u, v in edges)
        for u, v in edges:
            if u not in self._nodes or v not in self._nodes:
                raise ValidationError(f"edge ({u}, {v}) references a missing node")
            if u == v:
                raise ValidationError(f"self-loop on node {u}")
        self._edges = edges
        g = nx.DiGraph()
        g.add_nodes_from(self._nodes)
        g.add_edges_from(edges)
        if not nx.is_directed_acyclic_graph(g):
            raise ValidationError("graph contains a directed cycle")
        self._g = g
        self._anc: dict[int, frozenset] = {}
        self._desc: dict[int, frozenset] = {}

    # -- structure -------------------------------------------------------
    @property
    def nodes(self) -> tuple[Node, ...]:
        return tuple(self._nodes.values())

    @property
    def edges(self) -> frozenset:
        return self._edges

    def node(self, node_id: int) -> Node:
        return self._nodes[node_id]

    def __contains__(self, node_id) -> bool:
        return node_id in self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    def find(self, label: Label) -> int:
        for nd in self._nodes.values():
            if nd.label == label:
                return nd.id
        raise KeyError(format_label(label))

    def parents(self, node_id: int) -> frozenset:
        return frozenset(self._g.predecessors(node_id))

    def children(self, node_id: int) -> frozenset:
        return frozenset(self._g.successors(node_id))

    def ancestors(self, node_id: int) -> frozenset:
        if node_id not in self._anc:
            self._anc[node_id] = frozenset(nx.ancestors(self._g, node_id))
        return self._anc[node_id]

    def descendants(self, node_id: int) -> frozenset:
        if node_id not in self._desc:
            self._desc[node_id] = frozenset(nx.descendants(self._g, node_id))
        return self._desc[node_id]

    @property
    def observed(self) -> tuple[int, ...]:
        return tuple(i for i, nd in self._nodes.items() if nd.kind.observed)

    @property
    def latent(self) -> tuple[int, ...]:
        return tuple(i for i, nd in self._nodes.items() if not nd.kind.observed)

    def topological_order(self) -> list[int]:
        return list(nx.lexicographical_topological_sort(self._g))

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        for nd in self._nodes.values():
            g.add_node(nd.id, kind=nd.kind, label=nd.label)
        g.add_edges_from(self._edges)
        return g

    def observed_reach(self, node_id: int) -> frozenset:
        """Observed nodes among ``node_id`` and its descendants."""
        reach = self.descendants(node_id) | {node_id}
        return frozenset(i for i in reach if self._nodes[i].kind.observed)

    def __eq__(self, other):
        if not isinstance(other, CausalDag):
            return NotImplemented
        return self._nodes == other._nodes and self._edges == other._edges

    def __hash__(self):
        return hash((frozenset(self._nodes.values()), self._edges))

    def __repr__(self):
        return f"CausalDag({len(self._nodes)} nodes, {len(self._edges)} edges)"

    # -- serialization ---------------------------------------------------
    def _ordered(self):
        nodes = sorted(self._nodes.values(), key=lambda nd: (label_key(nd.label), nd.id))
        rank = {nd.id: k for k, nd in enumerate(nodes)}
        edges = sorted(self._edges, key=lambda e: (rank[e[0]], rank[e[1]]))
        return nodes, edges

    def to_text(self) -> str:
        nodes, edges = self._ordered()
        lines = [f"node {nd.id} {nd.kind.value} {format_label(nd.label)}" for nd in nodes]
        lines += [f"edge {u} {v}" for u, v in edges]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        nodes, edges = self._ordered()
        payload = {
            "nodes": [
                {"id": nd.id, "kind": nd.kind.value, "label": format_label(nd.label)}
                for nd in nodes
            ],
            "edges": [[u, v] for u, v in edges],
        }
        return json.dumps(payload, indent=2) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CausalDag":
        nodes, edges = [], []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                if parts[0] == "node" and len(parts) == 4:
                    nodes.append(Node(int(parts[1]), NodeKind(parts[2]), parse_label(parts[3])))
                elif parts[0] == "edge" and len(parts) == 3:
                    edges.append((int(parts[1]), int(parts[2])))
                else:
                    raise ValueError("unrecognised record")
            except ValueError as exc:
                raise ValidationError(f"line {lineno}: {exc}: {raw!r}") from None
        return cls(nodes, edges)

    @classmethod
    def from_json(cls, text: str) -> "CausalDag":
        data = json.loads(text)
        nodes = [Node(int(d["id"]), NodeKind(d["kind"]), parse_label(d["label"])) for d in data["nodes"]]
        return cls(nodes, [tuple(e) for e in data["edges"]])


# ---------------------------------------------------------------------------
# canonical scenarios


def _check_arity(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < 3:
        raise InvalidArityError(f"need n >= 3 parties, got {n!r}")


def build_gstar(n: int, observed_kind: NodeKind = NodeKind.OBSERVED_CLASSICAL) -> CausalDag:
    """The most general ``n``-party DAG without a global common cause.

    Nodes are the nonempty proper subsets of ``{1..n}``; singletons are the
    observed parties and every other subset is a quantum latent.
    """
    _check_arity(n)
    subsets = [
        frozenset(c)
        for size in range(1, n)
        for c in itertools.combinations(range(1, n + 1), size)
    ]
    ids = {s: k for k, s in enumerate(subsets)}
    nodes = [
        Node(ids[s], observed_kind if len(s) == 1 else NodeKind.LATENT_QUANTUM, s)
        for s in subsets
    ]
    edges = [(ids[s], ids[s - {p}]) for s in subsets if len(s) > 1 for p in sorted(s)]
    return CausalDag(nodes, edges)


def build_gstar_q(n: int) -> CausalDag:
    """``build_gstar`` with quantum parties plus a classical source broadcasting to all."""
    base = build_gstar(n, observed_kind=NodeKind.OBSERVED_QUANTUM)
    lam = len(base)
    nodes = list(base.nodes) + [Node(lam, NodeKind.LATENT_CLASSICAL, LAMBDA_LABEL)]
    edges = set(base.edges) | {(lam, i) for i in base.observed}
    return CausalDag(nodes, edges)


def gstar_edge_count(n: int) -> int:
    return sum(len(c) for size in range(2, n) for c in itertools.combinations(range(n), size))


# ---------------------------------------------------------------------------
# common-cause queries


def common_causes(dag: CausalDag, quantum_only: bool = False) -> list[int]:
    """Nodes that influence every observed node.

    A node counts as a cause of itself, so an observed node with a directed
    path to all other observed nodes is a common cause.
    """
    observed = frozenset(dag.observed)
    if not observed:
        return []
    return [
        nd.id
        for nd in dag.nodes
        if (nd.kind.quantum or not quantum_only) and dag.observed_reach(nd.id) == observed
    ]


def all_share_common_cause(dag: CausalDag) -> bool:
    return bool(common_causes(dag))


def all_share_quantum_common_cause(dag: CausalDag) -> bool:
    return bool(common_causes(dag, quantum_only=True))


def is_terminal(dag: CausalDag) -> bool:
    """True when no observed node has children."""
    return all(not dag.children(i) for i in dag.observed)


# ---------------------------------------------------------------------------
# containment rewriting


@dataclass(frozen=True)
class ContainmentWitnessMap:
    """Record of how a source DAG sits inside a target DAG.

    ``node_map`` sends source ids to target ids (many-to-one where latents
    were merged).  ``removed_edges`` and ``rerouted_edges`` list the only
    source edges without a direct image; each is justified by the rewriting
    step that produced it.
    """

    source: CausalDag
    target: CausalDag
    node_map: dict
    added_nodes: frozenset = frozenset()
    added_edges: frozenset = frozenset()
    removed_edges: frozenset = frozenset()
    rerouted_edges: frozenset = frozenset()
    dropped_nodes: frozenset = frozenset()
    designated: dict = field(default_factory=dict)

    def surviving_edges_preserved(self) -> bool:
        """Every source edge not explicitly removed maps onto a directed path (or a merge)."""
        for u, v in self.source.edges:
            if (u, v) in self.removed_edges:
                continue
            if u not in self.node_map or v not in self.node_map:
                return False
            a, b = self.node_map[u], self.node_map[v]
            if a == b:
                continue
            if (u, v) in self.rerouted_edges:
                if b not in self.target.descendants(a):
                    return False
            elif (a, b) not in self.target.edges:
                return False
        return True


def _maximal_sets(sets: Iterable[frozenset]) -> list[frozenset]:
    uniq = set(sets)
    maximal = [s for s in uniq if not any(s < t for t in uniq)]
    return sorted(maximal, key=lambda s: (-len(s), sorted(s)))


def make_terminal(dag: CausalDag) -> tuple[CausalDag, ContainmentWitnessMap]:
    """Rewrite ``dag`` so that every observed node is terminal.

    Three passes: a quantum latent is added above each maximal common-caused
    set of observed nodes; intermediate latents are added generation by
    generation for maximal shared-descendant sets of the previous generation;
    finally observed-to-observed edges are removed, each one simulated by a
    designated latent parent that forwards its outcome down the chain.
    """
    if all_share_common_cause(dag):
        raise DomainError("all observed nodes share a common cause; input is not in G_N")
    if is_terminal(dag):
        ident = {nd.id: nd.id for nd in dag.nodes}
        return dag, ContainmentWitnessMap(dag, dag, ident)

    nodes = {nd.id: nd for nd in dag.nodes}
    edges = set(dag.edges)
    next_id = max(nodes) + 1
    added_nodes: list[int] = []

    def add_latent(children: frozenset, parents: Iterable[int] = ()) -> int:
        nonlocal next_id
        nid = next_id
        next_id += 1
        nodes[nid] = Node(nid, NodeKind.LATENT_QUANTUM, f"aux{len(added_nodes)}")
        added_nodes.append(nid)
        edges.update((nid, c) for c in children)
        edges.update((p, nid) for p in parents)
        return nid

    # step 1
    reach = {nd.id: dag.observed_reach(nd.id) for nd in dag.nodes}
    generation = {
        add_latent(m): m
        for m in _maximal_sets(r for r in reach.values() if len(r) >= 2)
    }
    # step 2
    while True:
        shared = [
            generation[a] & generation[b]
            for a, b in itertools.combinations(sorted(generation), 2)
        ]
        targets = _maximal_sets(s for s in shared if len(s) >= 2)
        if not targets:
            break
        new_generation = {}
        for s in targets:
            parents = [g for g, m in generation.items() if s <= m]
            new_generation[add_latent(s, parents)] = s
        generation = new_generation

    augmented = CausalDag(nodes.values(), edges)

    # step 3
    obs_edges = sorted(
        ((u, v) for u, v in dag.edges if nodes[u].kind.observed and nodes[v].kind.observed),
        key=lambda e: (dag.topological_order().index(e[0]), e[1]),
    )
    designated: dict[tuple[int, int], int] = {}
    forwarding: set[tuple[int, int]] = set()
    for u, w in obs_edges:
        candidates = [
            p for p in augmented.parents(u) & augmented.parents(w)
            if not nodes[p].kind.observed and augmented.observed_reach(p) >= reach[u]
        ]
        upstream = [designated[e] for e in designated if e[1] == u]
        preferred = [
            c for c in candidates
            if any(c == l or c in augmented.descendants(l) for l in upstream)
        ]
        pool = preferred or candidates
        if not pool:
            raise InvariantError(f"no latent parent simulates edge {u}->{w}")
        chosen = max(pool, key=lambda c: (len(augmented.ancestors(c)), -c))
        designated[(u, w)] = chosen
        for l in upstream:
            if l != chosen and chosen not in augmented.descendants(l):
                forwarding.add((l, chosen))

    removed = frozenset(obs_edges)
    final_edges = (edges | forwarding) - removed
    result = CausalDag(nodes.values(), final_edges)
    if not is_terminal(result) or all_share_common_cause(result):
        raise InvariantError("terminalization left the set of no-common-cause DAGs")
    witness = ContainmentWitnessMap(
        source=dag,
        target=result,
        node_map={i: i for i in dag._nodes},
        added_nodes=frozenset(added_nodes),
        added_edges=frozenset(final_edges - dag.edges),
        removed_edges=removed,
        designated=designated,
    )
    return result, witness


def _party_of(dag: CausalDag, n: int) -> dict[int, int]:
    observed = sorted(dag.observed)
    if len(observed) != n:
        raise InvalidArityError(f"DAG has {len(observed)} observed nodes, expected {n}")
    labels = [dag.node(i).label for i in observed]
    if all(isinstance(l, frozenset) and len(l) == 1 for l in labels):
        parties = {i: next(iter(l)) for i, l in zip(observed, labels)}
        if sorted(parties.values()) == list(range(1, n + 1)):
            return parties
    return {i: k + 1 for k, i in enumerate(observed)}


def extend_to_gstar(dag: CausalDag, n: int) -> ContainmentWitnessMap:
    """Embed a terminal DAG from G_N into ``build_gstar(n)``.

    Latents are labelled by their observed descendant sets, equal labels are
    merged (a latent reaching a single party is absorbed by that party), the
    missing subsets and subset edges are added, and edges that skip a layer
    are relayed through the intermediate subsets.  The constructed graph is
    checked for isomorphism with ``build_gstar(n)`` before returning.
    """
    _check_arity(n)
    if not is_terminal(dag):
        raise DomainError("observed nodes must be terminal; run make_terminal first")
    party = _party_of(dag, n)
    full = frozenset(range(1, n + 1))

    image: dict[int, frozenset] = {}
    dropped = set()
    for nd in dag.nodes:
        if nd.kind.observed:
            image[nd.id] = frozenset({party[nd.id]})
            continue
        s = frozenset(party[i] for i in dag.observed_reach(nd.id))
        if s == full:
            raise DomainError(f"latent {nd.id} reaches every party; input is not in G_N")
        if not s:
            dropped.add(nd.id)
        else:
            image[nd.id] = s

    # merged graph, then the additions that complete it to the full lattice
    merged_edges = set()
    rerouted = set()
    for u, v in dag.edges:
        if u in dropped or v in dropped:
            continue
        a, b = image[u], image[v]
        if a == b:
            continue
        if not b < a:
            raise InvariantError(f"edge {u}->{v} does not shrink the descendant set")
        if len(a) - len(b) == 1:
            merged_edges.add((a, b))
        else:
            rerouted.add((u, v))
    lattice = [frozenset(c) for size in range(1, n) for c in itertools.combinations(sorted(full), size)]
    lattice_edges = {(s, s - {p}) for s in lattice if len(s) > 1 for p in s}

    g = nx.DiGraph()
    g.add_nodes_from(lattice)
    g.add_edges_from(merged_edges | lattice_edges)
    for s in lattice:
        g.nodes[s]["observed"] = len(s) == 1
    reference = build_gstar(n)
    ref = reference.to_networkx()
    for i in ref.nodes:
        ref.nodes[i]["observed"] = reference.node(i).kind.observed
    if not nx.is_isomorphic(g, ref, node_match=lambda x, y: x["observed"] == y["observed"]):
        raise InvariantError("extension is not isomorphic to the two-layer lattice")

    tid = {reference.node(i).label: i for i in ref.nodes}
    node_map = {i: tid[s] for i, s in image.items()}
    mapped_edges = {(node_map[u], node_map[v]) for u, v in dag.edges if u in node_map and v in node_map}
    return ContainmentWitnessMap(
        source=dag,
        target=reference,
        node_map=node_map,
        added_nodes=frozenset(set(tid.values()) - set(node_map.values())),
        added_edges=frozenset(reference.edges - mapped_edges),
        rerouted_edges=frozenset(rerouted),
        dropped_nodes=frozenset(dropped),
    )


def is_isomorphic(a: CausalDag, b: CausalDag) -> bool:
    """Isomorphism respecting the observed/latent split."""
    ga, gb = a.to_networkx(), b.to_networkx()
    return nx.is_isomorphic(ga, gb, node_match=lambda x, y: x["kind"].observed == y["kind"].observed)


# ---------------------------------------------------------------------------
# random members of G_N


def random_gn_member(
    rng: np.random.Generator,
    n: int = 4,
    max_latents: int = 6,
    p_edge: float = 0.35,
    p_observed_edge: float = 0.15,
    max_tries: int = 10_000,
) -> CausalDag:
    """Draw a random DAG with ``n`` observed nodes and no global common cause.

    Latents are placed in a random order; each latent may point to any later
    latent and to any observed node, and observed nodes may point to later
    observed nodes.  Draws that give some node influence over every observed
    node are rejected, which keeps the sampler unbiased with respect to
    membership.
    """
    _check_arity(n)
    for _ in range(max_tries):
        k = int(rng.integers(1, max_latents + 1))
        nodes = [Node(i, NodeKind.OBSERVED_CLASSICAL, frozenset({i + 1})) for i in range(n)]
        kinds = (NodeKind.LATENT_CLASSICAL, NodeKind.LATENT_QUANTUM)
        nodes += [Node(n + j, kinds[int(rng.integers(2))], f"L{j}") for j in range(k)]
        edges = set()
        for j in range(k):
            src = n + j
            for t in range(j + 1, k):
                if rng.random() < p_edge:
                    edges.add((src, n + t))
            for o in range(n):
                if rng.random() < p_edge:
                    edges.add((src, o))
            if not any(e[0] == src for e in edges):
                edges.add((src, int(rng.integers(n))))
        order = rng.permutation(n)
        for a, b in itertools.combinations(order, 2):
            if rng.random() < p_observed_edge:
                edges.add((int(a), int(b)))
        dag = CausalDag(nodes, edges)
        if not all_share_common_cause(dag):
            return dag
    raise RuntimeError("rejection sampler exhausted its budget")
