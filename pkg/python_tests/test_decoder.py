#!/usr/bin/env python3
"""
Tests for target, frame and role decoding over scored graphs
"""

from itertools import combinations

import numpy as np
import pytest

from fsgraph.corpus import Span
from fsgraph.decoder import (
    DecodedPredicate,
    DecodeOptions,
    ParseGraph,
    SuppliedPredicate,
    UnionFind,
    decode_frame,
    decode_graph,
    decode_roles,
    decode_targets,
)
from fsgraph.errors import DecodingError
from fsgraph.node_builder import NodeType

CONNECTED = np.array([0.1, 0.9])
NOT_CONNECTED = np.array([0.9, 0.1])


def _graph(ontology):
    return ParseGraph(ontology.frames, ontology.role_labels)


def _pr(ontology, **probs):
    """A pr distribution over the global labels plus NULL from keyword probabilities."""
    labels = list(ontology.role_labels) + ["NULL"]
    out = np.zeros(len(labels))
    for name, p in probs.items():
        out[labels.index(name)] = p
    return out


def test_single_fprd_node(ontology):
    """One FPRD node is one single-piece predicate"""
    g = _graph(ontology)
    g.add_node(Span(2, 2), NodeType.FPRD)
    assert decode_targets(g) == [DecodedPredicate((Span(2, 2),), (Span(2, 2),))]


def test_components_and_singletons(ontology):
    """Connected PPRD nodes form one predicate; isolated PPRD nodes are dropped"""
    a, b, c = Span(0, 0), Span(2, 2), Span(4, 4)
    g = _graph(ontology)
    for s in (a, b, c):
        g.add_node(s, NodeType.PPRD)
    g.set_pp(a, b, CONNECTED)
    g.set_pp(b, c, NOT_CONNECTED)
    g.set_pp(a, c, NOT_CONNECTED)
    assert [p.pieces for p in decode_targets(g)] == [(a, b)]
    assert [p.pieces for p in decode_targets(g, promote_singletons=True)] == [(a, b), (c,)]


def test_transitive_closure(ontology):
    """Connected edges (a,b) and (b,c) join all three pieces"""
    a, b, c = Span(0, 0), Span(2, 2), Span(4, 4)
    g = _graph(ontology)
    for s in (a, b, c):
        g.add_node(s, NodeType.PPRD)
    g.set_pp(a, b, CONNECTED)
    g.set_pp(c, b, CONNECTED)
    g.set_pp(a, c, NOT_CONNECTED)
    assert [p.pieces for p in decode_targets(g)] == [(a, b, c)]


def test_tied_pp_edge_is_not_connected(ontology):
    """Connected must strictly beat NULL"""
    a, b = Span(0, 0), Span(2, 2)
    g = _graph(ontology)
    g.add_node(a, NodeType.PPRD)
    g.add_node(b, NodeType.PPRD)
    g.set_pp(a, b, [0.5, 0.5])
    assert decode_targets(g) == []


def _oracle_components(nodes, connected):
    """Partition by repeated relabeling, independent of UnionFind."""
    label = {n: i for i, n in enumerate(nodes)}
    changed = True
    while changed:
        changed = False
        for a, b in connected:
            lo = min(label[a], label[b])
            if label[a] != lo or label[b] != lo:
                label[a] = label[b] = lo
                changed = True
    groups = {}
    for n in nodes:
        groups.setdefault(label[n], []).append(n)
    return sorted(tuple(sorted(g)) for g in groups.values() if len(g) >= 2)


def test_decode_targets_matches_oracle(ontology):
    """decode_targets agrees with a brute-force partition on random graphs"""
    rng = np.random.default_rng(0)
    for _ in range(1000):
        k = int(rng.integers(0, 7))
        nodes = [Span(2 * i, 2 * i) for i in range(k)]
        g = _graph(ontology)
        for s in nodes:
            g.add_node(s, NodeType.PPRD)
        connected = []
        for a, b in combinations(nodes, 2):
            p = float(rng.random())
            g.set_pp(a, b, [1 - p, p])
            if p > 1 - p:
                connected.append((a, b))
        got = [p.pieces for p in decode_targets(g)]
        assert got == _oracle_components(nodes, connected)


def test_union_find_groups():
    """Union-find merges sets transitively"""
    uf = UnionFind(range(5))
    uf.union(0, 1)
    uf.union(3, 4)
    uf.union(1, 4)
    assert sorted(sorted(g) for g in uf.groups()) == [[0, 1, 3, 4], [2]]


def test_decode_frame_single_and_summed(ontology):
    """Frame distributions of a predicate's nodes are summed"""
    a, b = Span(0, 0), Span(2, 2)
    g = _graph(ontology)
    g.add_node(a, NodeType.PPRD).frame_probs = np.array([0.6, 0.4, 0.0])
    g.add_node(b, NodeType.PPRD).frame_probs = np.array([0.3, 0.7, 0.0])
    assert decode_frame(DecodedPredicate((a,), (a,)), g) == "Social_event"
    assert decode_frame(DecodedPredicate((a, b), (a, b)), g) == "Motion"


def test_decode_frame_tie_takes_lowest_index(ontology):
    """Exactly opposite distributions tie; the lowest frame index wins"""
    a, b = Span(0, 0), Span(2, 2)
    g = _graph(ontology)
    g.add_node(a, NodeType.PPRD).frame_probs = np.array([0.25, 0.75, 0.0])
    g.add_node(b, NodeType.PPRD).frame_probs = np.array([0.75, 0.25, 0.0])
    assert decode_frame(DecodedPredicate((a, b), (a, b)), g) == "Social_event"


def test_decode_frame_order_invariant(ontology):
    """Summation does not depend on node order"""
    rng = np.random.default_rng(1)
    for _ in range(50):
        spans = [Span(i, i) for i in range(4)]
        g = _graph(ontology)
        for s in spans:
            g.add_node(s, NodeType.PPRD).frame_probs = rng.dirichlet(np.ones(3))
        forward = decode_frame(DecodedPredicate(tuple(spans), tuple(spans)), g)
        backward = decode_frame(DecodedPredicate(tuple(spans), tuple(reversed(spans))), g)
        assert forward == backward


def test_decode_frame_missing_distribution(ontology):
    """A source node without a frame distribution is an error"""
    g = _graph(ontology)
    g.add_node(Span(0, 0), NodeType.FPRD)
    with pytest.raises(DecodingError):
        decode_frame(DecodedPredicate((Span(0, 0),), (Span(0, 0),)), g)


def test_decode_frame_whole_predicate_license(ontology):
    """A licensed set restricts the summed distribution"""
    a = Span(0, 0)
    g = _graph(ontology)
    g.add_node(a, NodeType.FPRD).frame_probs = np.array([0.7, 0.2, 0.1])
    pred = DecodedPredicate((a,), (a,))
    assert decode_frame(pred, g, frozenset({"Removing"})) == "Removing"


def test_decode_roles_restricted_argmax(ontology):
    """Roles outside the frame are masked; NULL maximal means no role"""
    p, r1, r2 = Span(0, 0), Span(2, 2), Span(4, 4)
    g = _graph(ontology)
    g.add_node(p, NodeType.FPRD)
    g.add_node(r1, NodeType.ROLE)
    g.add_node(r2, NodeType.ROLE)
    # Motion roles are Theme and Goal; Agent is masked out
    g.pr_edges[(p, r1)] = _pr(ontology, Theme=0.3, Agent=0.6, NULL=0.1)
    g.pr_edges[(p, r2)] = _pr(ontology, Theme=0.2, NULL=0.8)
    roles = decode_roles(DecodedPredicate((p,), (p,)), "Motion", g, ontology)
    assert [(r.role_name, r.value) for r in roles] == [("Theme", r1)]


def test_decode_roles_average_tie_goes_to_null(ontology):
    """Averaged over two nodes, a tie between a role and NULL emits nothing"""
    a, b, r = Span(0, 0), Span(2, 2), Span(4, 4)
    g = _graph(ontology)
    g.add_node(a, NodeType.PPRD)
    g.add_node(b, NodeType.PPRD)
    g.add_node(r, NodeType.ROLE)
    g.pr_edges[(a, r)] = _pr(ontology, Theme=0.6, NULL=0.4)
    g.pr_edges[(b, r)] = _pr(ontology, Theme=0.4, NULL=0.6)
    assert decode_roles(DecodedPredicate((a, b), (a, b)), "Motion", g, ontology) == []


def test_decode_roles_unknown_frame(ontology):
    """Decoding roles for a frame outside the ontology fails"""
    with pytest.raises(DecodingError):
        decode_roles(DecodedPredicate((Span(0, 0),), (Span(0, 0),)), "Nope", _graph(ontology), ontology)


def test_emitted_roles_belong_to_frame(ontology):
    """Over random distributions, every emitted role is a role of the frame"""
    rng = np.random.default_rng(3)
    n_labels = len(ontology.role_labels) + 1
    for _ in range(100):
        g = _graph(ontology)
        p = Span(0, 0)
        g.add_node(p, NodeType.FPRD)
        for i in range(1, 5):
            g.add_node(Span(i, i), NodeType.ROLE)
            g.pr_edges[(p, Span(i, i))] = rng.dirichlet(np.ones(n_labels))
        frame = ontology.frames[int(rng.integers(0, 3))]
        for role in decode_roles(DecodedPredicate((p,), (p,)), frame, g, ontology):
            assert role.role_name in ontology.roles_of[frame]


def test_decode_graph_end_to_end(ontology):
    """Targets, frames and roles come together into frame tuples"""
    a, b, r = Span(1, 1), Span(4, 4), Span(2, 3)
    g = _graph(ontology)
    for s in (a, b):
        g.add_node(s, NodeType.PPRD).frame_probs = np.array([0.2, 0.3, 0.5])
    g.add_node(r, NodeType.ROLE)
    g.set_pp(a, b, CONNECTED)
    g.pr_edges[(a, r)] = _pr(ontology, Theme=0.9, NULL=0.1)
    g.pr_edges[(b, r)] = _pr(ontology, Theme=0.7, NULL=0.3)
    g.validate()
    lemmas = ["john", "take", "the", "trash", "out"]
    [t] = decode_graph(g, ontology, lemmas)
    assert t.predicate.pieces == (a, b)
    assert t.frame == "Removing"
    assert [(x.role_name, x.value) for x in t.roles] == [("Theme", r)]


def test_decode_graph_uses_supplied_predicates(ontology):
    """Supplied predicates replace target decoding and keep their frames"""
    a = Span(0, 0)
    g = _graph(ontology)
    g.add_node(a, NodeType.FPRD)
    g.supplied = [SuppliedPredicate((a,), "Motion"), SuppliedPredicate((a,), "Motion")]
    tuples = decode_graph(g, ontology, ["move"], DecodeOptions(lu_mask=True))
    assert [(t.predicate.pieces, t.frame) for t in tuples] == [((a,), "Motion")]


def test_decode_graph_without_frame_head_uses_placeholder(ontology):
    """Without frame distributions the first ontology frame is a placeholder"""
    g = _graph(ontology)
    g.add_node(Span(0, 0), NodeType.FPRD)
    [t] = decode_graph(g, ontology, ["x"])
    assert t.frame == ontology.frames[0] and t.roles == ()


def test_validate_rejects_bad_endpoints(ontology):
    """pp edges must join PPRD nodes"""
    g = _graph(ontology)
    g.add_node(Span(0, 0), NodeType.FPRD)
    g.add_node(Span(1, 1), NodeType.PPRD)
    g.set_pp(Span(0, 0), Span(1, 1), CONNECTED)
    with pytest.raises(DecodingError):
        g.validate()


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
