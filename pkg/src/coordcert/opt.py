"""The counterexample operational probabilistic theory.

Tests come in three layers.  Preparation ``~Ak`` emits three systems, one
for each transformation whose label contains ``Ak``.  Transformation
``~AjAk`` takes one system from ``~Aj`` and one from ``~Ak`` and emits one
system to each of the two observations not named in its label.  Observation
``Ai`` consumes one system from each transformation that does not name it.
System types are numbered 1..24; every type is produced by exactly one kind
of test and consumed by exactly one kind, so a port is identified by its
type number.

The probability rule: every observation whose causal past is not a copy of
its past in the two-layer tetrahedron deterministically yields outcome 0;
every maximal tetrahedron-embeddable set of observations shares one
uniformly random bit; distinct sets are independent.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

import networkx as nx
import numpy as np

from .errors import ValidationError

PREP, TRANS, OBS = "prep", "trans", "obs"


@dataclass(frozen=True)
class TestKind:
    name: str
    layer: str
    inputs: tuple = ()
    outputs: tuple = ()

    @property
    def parties(self) -> tuple:
        """Party indices named in the label (excluded ones for prep/trans)."""
        return tuple(int(c) for c in self.name if c.isdigit())


KINDS = {
    k.name: k
    for k in (
        TestKind("~A4", PREP, (), (1, 2, 3)),
        TestKind("~A3", PREP, (), (4, 5, 6)),
        TestKind("~A2", PREP, (), (7, 8, 9)),
        TestKind("~A1", PREP, (), (10, 11, 12)),
        TestKind("~A3A4", TRANS, (1, 4), (13, 16)),
        TestKind("~A2A4", TRANS, (2, 7), (14, 19)),
        TestKind("~A2A3", TRANS, (5, 8), (15, 22)),
        TestKind("~A1A4", TRANS, (3, 10), (17, 20)),
        TestKind("~A1A3", TRANS, (6, 11), (18, 23)),
        TestKind("~A1A2", TRANS, (9, 12), (21, 24)),
        TestKind("A1", OBS, (13, 14, 15), ()),
        TestKind("A2", OBS, (16, 17, 18), ()),
        TestKind("A3", OBS, (19, 20, 21), ()),
        TestKind("A4", OBS, (22, 23, 24), ()),
    )
}
PREP_KINDS = tuple(k for k, v in KINDS.items() if v.layer == PREP)
TRANS_KINDS = tuple(k for k, v in KINDS.items() if v.layer == TRANS)
OBS_KINDS = tuple(k for k, v in KINDS.items() if v.layer == OBS)
PRODUCER = {t: k for k, v in KINDS.items() for t in v.outputs}
CONSUMER = {t: k for k, v in KINDS.items() for t in v.inputs}


@dataclass(frozen=True)
class Test:
    __test__ = False  # not a pytest class

    id: str
    kind: str

    @property
    def spec(self) -> TestKind:
        return KINDS[self.kind]


@dataclass(frozen=True, order=True)
class Wire:
    src: str
    src_port: int
    dst: str
    dst_port: int


@dataclass(frozen=True)
class Issue:
    code: str
    message: str

    def __str__(self):
        return f"{self.code}: {self.message}"


@dataclass(frozen=True)
class Circuit:
    """Test instances, wires between ports, and trace markers on outputs."""

    tests: tuple
    wires: tuple = ()
    traces: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "tests", tuple(sorted(self.tests, key=lambda t: t.id)))
        object.__setattr__(self, "wires", tuple(sorted(self.wires)))
        object.__setattr__(self, "traces", tuple(sorted(self.traces)))

    @property
    def by_id(self) -> dict:
        return {t.id: t for t in self.tests}

    def of_layer(self, layer: str) -> list[Test]:
        return [t for t in self.tests if t.spec.layer == layer]

    @property
    def observations(self) -> tuple[str, ...]:
        return tuple(t.id for t in self.of_layer(OBS))

    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(t.id for t in self.tests)
        g.add_edges_from((w.src, w.dst) for w in self.wires)
        return g

    # -- text format -----------------------------------------------------
    def to_text(self) -> str:
        lines = [f"{t.spec.layer} {t.id} {t.kind}" for t in self.tests]
        lines += [f"wire {w.src}.{w.src_port} {w.dst}.{w.dst_port}" for w in self.wires]
        lines += [f"trace {s}.{p}" for s, p in self.traces]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        tests, wires, traces = [], [], []

        def port(tok: str, lineno: int):
            tid, sep, p = tok.rpartition(".")
            if not sep or not tid:
                raise ValidationError(f"line {lineno}: bad port reference {tok!r}")
            try:
                return tid, int(p)
            except ValueError:
                raise ValidationError(f"line {lineno}: bad port number in {tok!r}") from None

        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            head = parts[0]
            if head in (PREP, TRANS, OBS) and len(parts) == 3:
                kind = parts[2]
                if kind not in KINDS:
                    raise ValidationError(f"line {lineno}: unknown test kind {kind!r}")
                if KINDS[kind].layer != head:
                    raise ValidationError(f"line {lineno}: {kind} is not a {head}")
                tests.append(Test(parts[1], kind))
            elif head == "wire" and len(parts) == 3:
                (s, sp), (d, dp) = port(parts[1], lineno), port(parts[2], lineno)
                wires.append(Wire(s, sp, d, dp))
            elif head == "trace" and len(parts) == 2:
                traces.append(port(parts[1], lineno))
            else:
                raise ValidationError(f"line {lineno}: unrecognised record {raw!r}")
        return cls(tuple(tests), tuple(wires), tuple(traces))


def validate_circuit(c: Circuit) -> list[Issue]:
    """All composition-rule violations; an empty list means a valid closed circuit."""
    issues = []
    ids = [t.id for t in c.tests]
    for dup in sorted({i for i in ids if ids.count(i) > 1}):
        issues.append(Issue("duplicate-id", f"test id {dup} used more than once"))
    tests = c.by_id
    used_out: dict = {}
    fed_in: dict = {}
    for w in c.wires:
        src, dst = tests.get(w.src), tests.get(w.dst)
        if src is None or dst is None:
            issues.append(Issue("unknown-test", f"wire {w.src}.{w.src_port} -> {w.dst}.{w.dst_port}"))
            continue
        if w.src_port not in src.spec.outputs:
            issues.append(Issue("bad-port", f"{w.src}.{w.src_port} is not an output of {src.kind}"))
            continue
        if w.dst_port not in dst.spec.inputs:
            issues.append(Issue("bad-port", f"{w.dst}.{w.dst_port} is not an input of {dst.kind}"))
            continue
        if w.src_port != w.dst_port:
            issues.append(Issue(
                "type-mismatch",
                f"{w.src}.{w.src_port} (type {w.src_port}) wired into {w.dst}.{w.dst_port} (type {w.dst_port})",
            ))
        used_out.setdefault((w.src, w.src_port), []).append(f"{w.dst}.{w.dst_port}")
        fed_in.setdefault((w.dst, w.dst_port), []).append(f"{w.src}.{w.src_port}")
    for s, p in c.traces:
        t = tests.get(s)
        if t is None or p not in t.spec.outputs:
            issues.append(Issue("bad-trace", f"trace on {s}.{p}, which is not an output"))
            continue
        used_out.setdefault((s, p), []).append("trace")
    for (s, p), users in sorted(used_out.items()):
        if len(users) > 1:
            issues.append(Issue("broadcast", f"output {s}.{p} feeds {', '.join(users)}"))
    for (d, p), feeders in sorted(fed_in.items()):
        if len(feeders) > 1:
            issues.append(Issue("double-feed", f"input {d}.{p} fed by {', '.join(feeders)}"))
    g = c.graph()
    if not nx.is_directed_acyclic_graph(g):
        cycle = nx.find_cycle(g)
        issues.append(Issue("cycle", " -> ".join(u for u, _ in cycle)))
    for t in c.tests:
        for p in t.spec.inputs:
            if (t.id, p) not in fed_in:
                issues.append(Issue("unfed-input", f"{t.id}.{p} ({t.kind}) has no source"))
        for p in t.spec.outputs:
            if (t.id, p) not in used_out:
                issues.append(Issue("open-output", f"{t.id}.{p} ({t.kind}) is neither wired nor traced"))
    return issues


def require_valid(c: Circuit) -> None:
    issues = validate_circuit(c)
    if issues:
        raise ValidationError("; ".join(map(str, issues)))


def close_circuit(tests: Iterable[Test], wires: Iterable[Wire]) -> Circuit:
    """Build a circuit, tracing every output that no wire consumes."""
    tests, wires = tuple(tests), tuple(wires)
    used = {(w.src, w.src_port) for w in wires}
    traces = tuple(
        (t.id, p) for t in tests for p in t.spec.outputs if (t.id, p) not in used
    )
    return Circuit(tests, wires, traces)


def trace_observations(c: Circuit, obs_ids: Iterable[str]) -> Circuit:
    """Remove observations and trace the systems they consumed."""
    drop = set(obs_ids)
    tests = tuple(t for t in c.tests if t.id not in drop)
    wires = tuple(w for w in c.wires if w.dst not in drop)
    traces = tuple(c.traces) + tuple((w.src, w.src_port) for w in c.wires if w.dst in drop)
    return Circuit(tests, wires, traces)


# ---------------------------------------------------------------------------
# causal pasts and embeddability


class CausalView:
    """Ancestor sets and embeddability queries for one valid circuit."""

    def __init__(self, c: Circuit):
        self.circuit = c
        self.tests = c.by_id
        g = c.graph()
        self.past = {o: frozenset(nx.ancestors(g, o)) for o in c.observations}

    def kind(self, tid: str) -> str:
        return self.tests[tid].kind

    def independent(self, a: str, b: str) -> bool:
        return not (self.past[a] & self.past[b])

    def signature(self, obs: Iterable[str]) -> tuple:
        """Sorted kind multiset of a set of observations together with their pasts."""
        members = set(obs)
        for o in list(members):
            members |= self.past[o]
        return tuple(sorted(self.kind(t) for t in members))

    def embeddable(self, obs: Iterable[str]) -> bool:
        """Does this set see exactly the two-layer tetrahedron past of its kinds?"""
        obs = tuple(obs)
        kinds = [self.kind(o) for o in obs]
        if not obs or len(set(kinds)) != len(kinds):
            return False
        return self.signature(obs) == reference_signature(frozenset(kinds))


_REFERENCE: dict = {}


def reference_signature(obs_kinds: frozenset) -> tuple:
    """Signature of the given observation kinds inside the full tetrahedron circuit."""
    if obs_kinds not in _REFERENCE:
        ref = tetrahedron_circuit()
        view = CausalView(ref)
        ids = [t.id for t in ref.tests if t.kind in obs_kinds]
        _REFERENCE[obs_kinds] = view.signature(ids)
    return _REFERENCE[obs_kinds]


@dataclass(frozen=True)
class Classification:
    """Maximal embeddable sets and non-embeddable observations of a circuit."""

    embeddable_sets: tuple
    non_embeddable: tuple
    merge_failures: tuple = ()


def classify(c: Circuit, view: Optional[CausalView] = None) -> Classification:
    """Group individually embeddable observations by shared causal past.

    Non-independent embeddable observations are merged transitively; the
    propositions guarantee each merged group is jointly embeddable, and any
    group that is not is reported in ``merge_failures``.
    """
    view = view or CausalView(c)
    obs = c.observations
    single = [o for o in obs if view.embeddable([o])]
    g = nx.Graph()
    g.add_nodes_from(single)
    g.add_edges_from((a, b) for a, b in itertools.combinations(single, 2) if not view.independent(a, b))
    groups = sorted(tuple(sorted(comp)) for comp in nx.connected_components(g))
    failures = tuple(grp for grp in groups if not view.embeddable(grp))
    rest = tuple(sorted(o for o in obs if o not in set(single)))
    return Classification(tuple(groups), rest, failures)


@dataclass(frozen=True)
class OutcomeDistribution:
    """Joint outcome distribution over ``observations`` (outcome 0 is the first)."""

    observations: tuple
    probs: np.ndarray = field(compare=False)

    def marginal(self, keep: Iterable[str]) -> "OutcomeDistribution":
        keep = [o for o in self.observations if o in set(keep)]
        axes = tuple(i for i, o in enumerate(self.observations) if o not in keep)
        return OutcomeDistribution(tuple(keep), self.probs.sum(axis=axes))

    def support(self) -> dict:
        out = {}
        for idx in itertools.product((0, 1), repeat=len(self.observations)):
            p = float(self.probs[idx])
            if p > 0:
                out["".join(map(str, idx))] = p
        return out

    def to_json(self) -> str:
        return json.dumps({"observations": list(self.observations), "probs": self.support()}, indent=2) + "\n"


def assign_probability(c: Circuit, classification: Optional[Classification] = None) -> OutcomeDistribution:
    """Apply the probability rule to a valid closed circuit."""
    cls = classification or classify(c)
    obs = c.observations
    p = np.ones(())
    order = []
    for grp in cls.embeddable_sets:
        block = np.zeros((2,) * len(grp))
        block[(0,) * len(grp)] = block[(1,) * len(grp)] = 0.5
        p = np.multiply.outer(p, block)
        order += list(grp)
    for o in cls.non_embeddable:
        p = np.multiply.outer(p, np.array([1.0, 0.0]))
        order.append(o)
    perm = [order.index(o) for o in obs]
    probs = np.transpose(p, perm) if obs else p
    return OutcomeDistribution(obs, probs)


@dataclass
class NsiReport:
    circuits: int = 0
    marginal_checks: int = 0
    independence_checks: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def merge(self, other: "NsiReport") -> None:
        self.circuits += other.circuits
        self.marginal_checks += other.marginal_checks
        self.independence_checks += other.independence_checks
        self.failures += other.failures


def _independent_groups(view: CausalView, obs: tuple) -> list[tuple]:
    g = nx.Graph()
    g.add_nodes_from(obs)
    g.add_edges_from((a, b) for a, b in itertools.combinations(obs, 2) if not view.independent(a, b))
    return sorted(tuple(sorted(comp)) for comp in nx.connected_components(g))


def check_nsi(c: Circuit, tol: float = 1e-12) -> NsiReport:
    """No-signalling and independence checks on one circuit.

    Marginalising any subset of observations must agree with the rule applied
    to the circuit in which those observations are traced out (a unique
    deterministic effect).  Observations with disjoint causal pasts must have
    a factorising joint distribution.
    """
    report = NsiReport(circuits=1)
    view = CausalView(c)
    dist = assign_probability(c, classify(c, view))
    obs = c.observations
    if abs(dist.probs.sum() - 1) > tol:
        report.failures.append(f"distribution not normalised ({dist.probs.sum()})")
    for r in range(1, len(obs) + 1):
        for traced in itertools.combinations(obs, r):
            keep = [o for o in obs if o not in traced]
            lhs = dist.marginal(keep)
            rhs = assign_probability(trace_observations(c, traced))
            report.marginal_checks += 1
            if lhs.observations != rhs.observations or not np.allclose(lhs.probs, rhs.probs, atol=tol, rtol=0):
                report.failures.append(f"marginal over {keep} differs after tracing {list(traced)}")
    groups = _independent_groups(view, obs)
    if len(groups) > 1:
        prod = np.ones(())
        order = []
        for grp in groups:
            prod = np.multiply.outer(prod, dist.marginal(grp).probs)
            order += list(grp)
        prod = np.transpose(prod, [order.index(o) for o in obs])
        report.independence_checks += 1
        if not np.allclose(prod, dist.probs, atol=tol, rtol=0):
            report.failures.append(f"joint does not factorise over independent groups {groups}")
    for a, b in itertools.combinations(obs, 2):
        if view.independent(a, b):
            m = dist.marginal([a, b]).probs
            report.independence_checks += 1
            if not np.allclose(m, np.multiply.outer(m.sum(axis=1), m.sum(axis=0)), atol=tol, rtol=0):
                report.failures.append(f"independent pair ({a}, {b}) is correlated")
    return report


@dataclass
class PropositionReport:
    circuits: int = 0
    pair_checks: int = 0
    set_checks: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def merge(self, other: "PropositionReport") -> None:
        self.circuits += other.circuits
        self.pair_checks += other.pair_checks
        self.set_checks += other.set_checks
        self.failures += other.failures


def check_propositions(c: Circuit) -> PropositionReport:
    """Check both closure properties of embeddable sets on one circuit.

    Pairs: non-independent, individually embeddable observations are jointly
    embeddable.  Sets: any two non-independent embeddable sets have an
    embeddable union.
    """
    report = PropositionReport(circuits=1)
    view = CausalView(c)
    single = [o for o in c.observations if view.embeddable([o])]
    for a, b in itertools.combinations(single, 2):
        if not view.independent(a, b):
            report.pair_checks += 1
            if not view.embeddable([a, b]):
                report.failures.append(f"pair ({a}, {b}) is not jointly embeddable")
    sets = [
        s for r in range(1, len(single) + 1)
        for s in itertools.combinations(single, r)
        if view.embeddable(s)
    ]
    for s1, s2 in itertools.combinations(sets, 2):
        linked = any(not view.independent(a, b) for a in s1 for b in s2)
        if linked:
            report.set_checks += 1
            union = tuple(sorted(set(s1) | set(s2)))
            if not view.embeddable(union):
                report.failures.append(f"union of {s1} and {s2} is not embeddable")
    return report


# ---------------------------------------------------------------------------
# structural form, canonical keys and enumeration
#
# A closed circuit is fixed by: how many preparations of each kind it has,
# which preparation pairs feed each transformation instance, and which
# transformation triples feed each observation.  Preparations are indexed
# within their kind; relabelling those indices is the only freedom left.


def _trans_inputs(tkind: str) -> tuple[str, str]:
    return tuple(PRODUCER[t] for t in KINDS[tkind].inputs)


def _obs_inputs(okind: str) -> tuple[str, ...]:
    return tuple(PRODUCER[t] for t in KINDS[okind].inputs)


@dataclass(frozen=True)
class Structure:
    counts: tuple  # per PREP_KINDS
    trans: tuple  # sorted (tkind, i, j)
    obs: tuple  # sorted (okind, t1, t2, t3)

    def relabel(self, perms: dict) -> "Structure":
        def rt(t):
            a, b = _trans_inputs(t[0])
            return (t[0], perms[a][t[1]], perms[b][t[2]])

        trans = tuple(sorted(rt(t) for t in self.trans))
        obs = tuple(sorted((o[0],) + tuple(rt(t) for t in o[1:]) for o in self.obs))
        return Structure(self.counts, trans, obs)

    def canonical(self) -> "Structure":
        ranges = [itertools.permutations(range(n)) for n in self.counts]
        best = None
        for combo in itertools.product(*ranges):
            cand = self.relabel(dict(zip(PREP_KINDS, combo)))
            key = (cand.trans, cand.obs)
            if best is None or key < best[0]:
                best = (key, cand)
        return best[1]

    def to_circuit(self) -> Circuit:
        tests, wires = [], []
        pid = {}
        for kind, n in zip(PREP_KINDS, self.counts):
            for i in range(n):
                name = f"P{kind[2:]}_{i}"
                pid[(kind, i)] = name
                tests.append(Test(name, kind))
        tid = {}
        for k, t in enumerate(self.trans):
            name = f"T{t[0][1:]}_{k}"
            tid[t] = name
            tests.append(Test(name, t[0]))
            for port, src_kind, idx in zip(KINDS[t[0]].inputs, _trans_inputs(t[0]), t[1:]):
                wires.append(Wire(pid[(src_kind, idx)], port, name, port))
        for k, o in enumerate(self.obs):
            name = f"{o[0]}_{k}"
            tests.append(Test(name, o[0]))
            for port, t in zip(KINDS[o[0]].inputs, o[1:]):
                wires.append(Wire(tid[t], port, name, port))
        return close_circuit(tests, wires)


def structure_of(c: Circuit) -> Structure:
    """Structural form of a valid closed circuit."""
    require_valid(c)
    feeder = {(w.dst, w.dst_port): w.src for w in c.wires}
    counts = []
    pidx = {}
    for kind in PREP_KINDS:
        ids = sorted(t.id for t in c.tests if t.kind == kind)
        counts.append(len(ids))
        pidx.update({i: k for k, i in enumerate(ids)})
    tdesc = {}
    for t in c.of_layer(TRANS):
        ports = t.spec.inputs
        tdesc[t.id] = (t.kind, pidx[feeder[(t.id, ports[0])]], pidx[feeder[(t.id, ports[1])]])
    # identical (kind, i, j) transformations would need a broadcast; validation rules that out
    obs = []
    for o in c.of_layer(OBS):
        obs.append((o.kind,) + tuple(tdesc[feeder[(o.id, p)]] for p in o.spec.inputs))
    return Structure(tuple(counts), tuple(sorted(tdesc.values())), tuple(sorted(obs)))


def canonical_key(c: Circuit) -> Structure:
    return structure_of(c).canonical()


def partial_matchings(a: int, b: int) -> list[tuple]:
    """All partial matchings between ``range(a)`` and ``range(b)`` as sorted pair tuples."""
    out = []
    for r in range(min(a, b) + 1):
        for left in itertools.combinations(range(a), r):
            for right in itertools.permutations(range(b), r):
                out.append(tuple(zip(left, right)))
    return out


def partial_3d_matchings(xs: list, ys: list, zs: list) -> list[tuple]:
    """All sets of disjoint triples drawn from ``xs x ys x zs``."""
    out = []

    def rec(i: int, used_y: frozenset, used_z: frozenset, acc: tuple):
        if i == len(xs):
            out.append(acc)
            return
        rec(i + 1, used_y, used_z, acc)
        for y in ys:
            if y in used_y:
                continue
            for z in zs:
                if z in used_z:
                    continue
                rec(i + 1, used_y | {y}, used_z | {z}, acc + ((xs[i], y, z),))

    rec(0, frozenset(), frozenset(), ())
    return out


MAX_BOUND = 8


def _count_vectors(bound: int) -> Iterator[tuple]:
    for total in range(1, bound + 1):
        for combo in itertools.combinations_with_replacement(range(len(PREP_KINDS)), total):
            yield tuple(combo.count(k) for k in range(len(PREP_KINDS)))


def enumerate_circuits(max_preparations: int) -> Iterator[Circuit]:
    """All valid closed circuits with at most ``max_preparations`` preparations.

    Circuits are generated once per isomorphism class: transformation layers
    are reduced to canonical representatives before observations are
    attached, then full circuits are deduplicated by canonical form.
    """
    for s in enumerate_structures(max_preparations):
        yield s.to_circuit()


def enumerate_structures(max_preparations: int) -> Iterator[Structure]:
    if not 0 <= max_preparations <= MAX_BOUND:
        raise ValidationError(f"bound must lie in 0..{MAX_BOUND}, got {max_preparations}")
    for counts in _count_vectors(max_preparations):
        cnt = dict(zip(PREP_KINDS, counts))
        per_kind = []
        for tk in TRANS_KINDS:
            a, b = _trans_inputs(tk)
            per_kind.append([tuple((tk, i, j) for i, j in m) for m in partial_matchings(cnt[a], cnt[b])])
        seen_layers = set()
        seen = set()
        for choice in itertools.product(*per_kind):
            layer = Structure(counts, tuple(sorted(itertools.chain(*choice))), ()).canonical()
            if layer.trans in seen_layers:
                continue
            seen_layers.add(layer.trans)
            by_kind = {tk: [t for t in layer.trans if t[0] == tk] for tk in TRANS_KINDS}
            obs_options = []
            for ok in OBS_KINDS:
                feeds = [CONSUMER_SOURCE[(ok, p)] for p in KINDS[ok].inputs]
                triples = partial_3d_matchings(*(by_kind[f] for f in feeds))
                obs_options.append([tuple((ok,) + tr for tr in m) for m in triples])
            for ochoice in itertools.product(*obs_options):
                s = Structure(counts, layer.trans, tuple(sorted(itertools.chain(*ochoice))))
                key = s.canonical() if s.obs else s
                if (key.trans, key.obs) in seen:
                    continue
                seen.add((key.trans, key.obs))
                yield key


# transformation kind feeding each observation port
CONSUMER_SOURCE = {(ok, p): PRODUCER[p] for ok in OBS_KINDS for p in KINDS[ok].inputs}


@dataclass
class CorpusReport:
    bound: int
    circuits: int
    nsi: NsiReport
    propositions: PropositionReport
    keys: set = field(repr=False, default_factory=set)

    @property
    def ok(self) -> bool:
        return self.nsi.ok and self.propositions.ok

    def summary(self) -> str:
        return (
            f"{len(self.nsi.failures)} NSI failures, "
            f"Props 1–2 {'hold' if self.propositions.ok else 'FAIL'} on {self.circuits} circuits "
            f"(bound {self.bound}; {self.nsi.marginal_checks} marginal checks, "
            f"{self.propositions.pair_checks} pair checks, {self.propositions.set_checks} set checks)"
        )


def check_corpus(bound: int) -> CorpusReport:
    """Enumerate every circuit up to ``bound`` and run all rule checks on each."""
    nsi, props = NsiReport(), PropositionReport()
    keys = set()
    count = 0
    for s in enumerate_structures(bound):
        c = s.to_circuit()
        count += 1
        nsi.failures += [f"invalid enumerated circuit: {i}" for i in validate_circuit(c)]
        keys.add(s)
        nsi.merge(check_nsi(c))
        props.merge(check_propositions(c))
    return CorpusReport(bound, count, nsi, props, keys)


# ---------------------------------------------------------------------------
# reference circuits


def _build(preps: dict, trans: dict, obs: dict) -> Circuit:
    """Circuit from ``{id: kind}`` layers and the feeding maps.

    ``trans`` maps id -> (kind, (prep ids in input order)); ``obs`` maps
    id -> (kind, (trans ids in input order)).
    """
    tests = [Test(i, k) for i, k in preps.items()]
    wires = []
    for tid, (kind, srcs) in trans.items():
        tests.append(Test(tid, kind))
        wires += [Wire(s, p, tid, p) for s, p in zip(srcs, KINDS[kind].inputs)]
    for oid, (kind, srcs) in obs.items():
        tests.append(Test(oid, kind))
        wires += [Wire(s, p, oid, p) for s, p in zip(srcs, KINDS[kind].inputs)]
    return close_circuit(tests, wires)


_PREP_FOR = {"4": "P4", "3": "P3", "2": "P2", "1": "P1"}


def _tetra_layers(trans_ids: Iterable[str], obs_ids: Iterable[str], prep_override: Optional[dict] = None):
    preps = {f"P{k}": f"~A{k}" for k in "1234"}
    trans = {}
    for tk in trans_ids:
        a, b = _trans_inputs(tk)
        srcs = [_PREP_FOR[a[-1]], _PREP_FOR[b[-1]]]
        if prep_override and tk in prep_override:
            srcs = list(prep_override[tk])
        trans["T" + tk[1:]] = (tk, tuple(srcs))
    obs = {}
    for ok in obs_ids:
        srcs = tuple("T" + PRODUCER[p][1:] for p in KINDS[ok].inputs)
        obs[ok] = (ok, srcs)
    return preps, trans, obs


def tetrahedron_circuit() -> Circuit:
    """Every test used once: the two-layer tetrahedron itself."""
    return _build(*_tetra_layers(TRANS_KINDS, OBS_KINDS))


def embeddable_pair_circuit() -> Circuit:
    """``A1`` and ``A2`` with their full tetrahedron pasts; everything else traced."""
    needed = sorted({PRODUCER[p] for ok in ("A1", "A2") for p in KINDS[ok].inputs})
    return _build(*_tetra_layers(needed, ("A1", "A2")))


def duplicated_prep_circuit() -> Circuit:
    """A single ``A1`` whose two ``~A4``-fed transformations use different ``~A4`` copies."""
    needed = [PRODUCER[p] for p in KINDS["A1"].inputs]
    preps, trans, obs = _tetra_layers(needed, ("A1",), {"~A2A4": ("P4b", "P2")})
    preps = {k: v for k, v in preps.items() if k != "P1"}
    preps["P4b"] = "~A4"
    return _build(preps, trans, obs)
