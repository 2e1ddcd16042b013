import itertools

import networkx as nx
import numpy as np
import pytest
from networkx.algorithms.isomorphism import categorical_node_match

from coordcert.errors import ValidationError
from coordcert.opt import (
    CONSUMER_SOURCE,
    KINDS,
    OBS_KINDS,
    PREP_KINDS,
    TRANS_KINDS,
    Circuit,
    CausalView,
    Structure,
    Test,
    Wire,
    assign_probability,
    canonical_key,
    check_corpus,
    check_nsi,
    check_propositions,
    classify,
    duplicated_prep_circuit,
    embeddable_pair_circuit,
    enumerate_structures,
    partial_3d_matchings,
    partial_matchings,
    require_valid,
    tetrahedron_circuit,
    trace_observations,
    validate_circuit,
)


@pytest.fixture(scope="module")
def corpus5():
    return check_corpus(5)


def codes(c):
    return {i.code for i in validate_circuit(c)}


def test_type_table_is_a_bijection():
    produced = [t for k in KINDS.values() for t in k.outputs]
    consumed = [t for k in KINDS.values() for t in k.inputs]
    assert sorted(produced) == sorted(consumed) == list(range(1, 25))


def test_tetrahedron_is_valid():
    c = tetrahedron_circuit()
    assert validate_circuit(c) == []
    assert len(c.tests) == 14 and len(c.wires) == 24 and not c.traces


def test_text_round_trip():
    c = embeddable_pair_circuit()
    assert Circuit.from_text(c.to_text()) == c


@pytest.mark.parametrize(
    "mutate, code",
    [
        (lambda t, w, tr: (t, w, tr + [("P4", 1)]), "broadcast"),
        (lambda t, w, tr: (t, [x for x in w if x.dst != "A1"], tr), "unfed-input"),
        (lambda t, w, tr: (t, [Wire(x.src, x.src_port, x.dst, 5) if x.dst_port == 4 else x for x in w], tr), "bad-port"),
        (lambda t, w, tr: (t + [Test("P4", "~A3")], w, tr), "duplicate-id"),
        (lambda t, w, tr: (t, w + [Wire("ghost", 1, "A1", 13)], tr), "unknown-test"),
        (lambda t, w, tr: (t, w, tr + [("A1", 13)]), "bad-trace"),
        (lambda t, w, tr: (t, w + [Wire("P3", 4, "TA3A4", 4)], tr), "double-feed"),
    ],
)
def test_validation_errors(mutate, code):
    c = tetrahedron_circuit()
    tests, wires, traces = mutate(list(c.tests), list(c.wires), list(c.traces))
    bad = Circuit(tuple(tests), tuple(wires), tuple(traces))
    assert code in codes(bad)
    with pytest.raises(ValidationError):
        require_valid(bad)


def test_type_mismatch_and_open_output():
    c = Circuit((Test("P", "~A4"), Test("T", "~A2A3")), (Wire("P", 1, "T", 5),))
    assert {"type-mismatch", "open-output", "unfed-input"} <= codes(c)


def test_cycle_is_rejected():
    c = Circuit((Test("T", "~A3A4"), Test("U", "~A3A4")), (Wire("T", 13, "U", 1), Wire("U", 13, "T", 1)))
    assert "cycle" in codes(c)


def test_from_text_diagnostics():
    with pytest.raises(ValidationError, match="line 1"):
        Circuit.from_text("prep P4 ~A9\n")
    with pytest.raises(ValidationError, match="line 2"):
        Circuit.from_text("prep P4 ~A4\nwire P4 T.1\n")


def test_tetrahedron_probability():
    dist = assign_probability(tetrahedron_circuit())
    assert dist.support() == {"0000": 0.5, "1111": 0.5}
    assert len(classify(tetrahedron_circuit()).embeddable_sets) == 1


def test_embeddable_pair_probability():
    c = embeddable_pair_circuit()
    cls = classify(c)
    assert cls.embeddable_sets == (("A1", "A2"),)
    assert assign_probability(c).support() == {"00": 0.5, "11": 0.5}


def test_duplicated_preparation_is_deterministic():
    c = duplicated_prep_circuit()
    require_valid(c)
    assert len([t for t in c.tests if t.kind in PREP_KINDS]) == 4
    cls = classify(c)
    assert cls.non_embeddable == ("A1",)
    assert assign_probability(c).support() == {"0": 1.0}


def test_tracing_matches_marginal():
    c = tetrahedron_circuit()
    traced = trace_observations(c, ["A3", "A4"])
    require_valid(traced)
    assert assign_probability(traced).support() == {"00": 0.5, "11": 0.5}


def test_independence_of_disjoint_pasts():
    past = (("~A3A4", 0, 0), ("~A2A4", 0, 0), ("~A2A3", 0, 0))  # input order of A1
    twin = tuple((k, 1, 1) for k, _, _ in past)
    s = Structure((2, 2, 2, 0), tuple(sorted(past + twin)), (("A1",) + past, ("A1",) + twin))
    c = s.to_circuit()
    require_valid(c)
    cls = classify(c)
    assert len(cls.embeddable_sets) == 2
    assert assign_probability(c).support() == {k: 0.25 for k in ("00", "01", "10", "11")}
    assert check_nsi(c).ok


@pytest.mark.parametrize("builder", [tetrahedron_circuit, embeddable_pair_circuit, duplicated_prep_circuit])
def test_reference_circuits_pass_checks(builder):
    c = builder()
    assert check_nsi(c).ok
    assert check_propositions(c).ok
    assert classify(c).merge_failures == ()


def test_partial_matchings_count():
    # sum_r C(a,r) * b!/(b-r)!
    assert len(partial_matchings(2, 2)) == 7
    assert len(partial_matchings(3, 1)) == 4
    assert len(partial_matchings(0, 3)) == 1


def test_partial_3d_matchings_disjoint():
    for m in partial_3d_matchings([0, 1], ["a", "b"], ["x"]):
        assert len({t[2] for t in m}) == len(m)
    assert len(partial_3d_matchings([0], [0], [0])) == 2


def _iso_classes(bound):
    from coordcert.opt import _count_vectors, _trans_inputs

    match = categorical_node_match("kind", None)
    classes = []
    for counts in _count_vectors(bound):
        cnt = dict(zip(PREP_KINDS, counts))
        per_kind = []
        for tk in TRANS_KINDS:
            a, b = _trans_inputs(tk)
            per_kind.append([tuple((tk, i, j) for i, j in m) for m in partial_matchings(cnt[a], cnt[b])])
        for choice in itertools.product(*per_kind):
            trans = tuple(sorted(itertools.chain(*choice)))
            by_kind = {tk: [t for t in trans if t[0] == tk] for tk in TRANS_KINDS}
            opts = []
            for ok in OBS_KINDS:
                feeds = [CONSUMER_SOURCE[(ok, p)] for p in KINDS[ok].inputs]
                opts.append([tuple((ok,) + tr for tr in m) for m in partial_3d_matchings(*(by_kind[f] for f in feeds))])
            for oc in itertools.product(*opts):
                c = Structure(counts, trans, tuple(sorted(itertools.chain(*oc)))).to_circuit()
                g = c.graph()
                nx.set_node_attributes(g, {t.id: t.kind for t in c.tests}, "kind")
                h = nx.weisfeiler_lehman_graph_hash(g, node_attr="kind")
                if not any(h == hh and nx.is_isomorphic(g, gg, node_match=match) for hh, gg in classes):
                    classes.append((h, g))
    return len(classes)


@pytest.mark.parametrize("bound", [1, 2, 3, 4])
def test_dedup_matches_graph_isomorphism(bound):
    assert sum(1 for _ in enumerate_structures(bound)) == _iso_classes(bound)


def test_enumeration_bound_guard():
    with pytest.raises(ValidationError):
        list(enumerate_structures(9))


def test_canonical_key_ignores_prep_names():
    c = tetrahedron_circuit()
    renamed = Circuit.from_text(c.to_text().replace("P4", "Zprep"))
    assert canonical_key(renamed) == canonical_key(c)


@pytest.mark.parametrize("bound", [1, 4])
def test_small_corpora_clean(bound):
    r = check_corpus(bound)
    assert r.ok, r.nsi.failures[:3] + r.propositions.failures[:3]


def test_bound5_corpus(corpus5):
    assert corpus5.ok
    assert corpus5.circuits == 1947
    assert corpus5.propositions.pair_checks > 0
    for builder in (tetrahedron_circuit, embeddable_pair_circuit, duplicated_prep_circuit):
        assert canonical_key(builder()) in corpus5.keys


def test_causal_view_queries():
    view = CausalView(tetrahedron_circuit())
    assert not view.independent("A1", "A2")
    assert view.embeddable(["A1", "A2", "A3", "A4"])
    assert len(view.past["A1"]) == 3 + 3
