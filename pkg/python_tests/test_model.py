#!/usr/bin/env python3
"""
Tests for the parser model: variants, scored graphs and end-to-end parsing
"""

import numpy as np
import pytest
import torch

from fsgraph.config import Flags, TrainConfig
from fsgraph.corpus import AnnotatedSentence, FrameOntology, FrameTuple, Predicate, RoleAssignment, Span
from fsgraph.decoder import DecodeOptions, SuppliedPredicate, decode_graph
from fsgraph.edge_builder import PP_CONNECTED, PP_NULL
from fsgraph.encoder import Vocabulary
from fsgraph.errors import ConfigError
from fsgraph.metrics import evaluate
from fsgraph.model import SUPPLIED_FRAMES, SUPPLIED_PREDICATES, VARIANT_HEADS, FrameGraphModel, canonical_variant
from fsgraph.node_builder import gold_node_types, license_predicate_frames
from fsgraph.training import build_variant, compute_loss, make_optimizer


def _model(fixture_corpus, vocab, tiny_encoder, variant="joint", **kwargs):
    ontology, _ = fixture_corpus
    return FrameGraphModel(ontology, vocab, tiny_encoder, variant=variant, **kwargs)


def test_variant_names():
    """Aliases resolve to canonical names and unknown names are rejected"""
    assert canonical_variant("predicate-frame") == "predicate∘frame"
    assert canonical_variant("semicrf") == "semi-crf"
    assert canonical_variant("joint") == "joint"
    with pytest.raises(ConfigError):
        canonical_variant("node+edge+more")
    assert SUPPLIED_FRAMES <= SUPPLIED_PREDICATES <= set(VARIANT_HEADS)


def test_inactive_heads_are_frozen(fixture_corpus, vocab, tiny_encoder):
    """Only the heads of the variant take gradients"""
    model = _model(fixture_corpus, vocab, tiny_encoder, "frame")
    assert all(p.requires_grad for p in model.frame_head.parameters())
    for head in (model.node_head, model.pp_head, model.pr_head, model.semicrf_head):
        assert not any(p.requires_grad for p in head.parameters())


def test_parse_is_total(fixture_corpus, vocab, tiny_encoder):
    """An untrained joint model parses every sentence into well-formed tuples"""
    ontology, sentences = fixture_corpus
    model = _model(fixture_corpus, vocab, tiny_encoder)
    for s in sentences:
        for t in model.parse_sentence(s.without_annotation()):
            assert all(0 <= p.start <= p.end < len(s) for p in t.predicate.pieces)
            assert t.frame in ontology.roles_of
            assert all(r.role_name in ontology.roles_of[t.frame] for r in t.roles)


def test_empty_sentence(fixture_corpus, vocab, tiny_encoder):
    """An empty sentence parses to nothing and scores no terms"""
    model = _model(fixture_corpus, vocab, tiny_encoder)
    empty = AnnotatedSentence.from_words([], [])
    assert model.parse_sentence(empty) == []
    scores = model.sentence_scores(empty)
    assert scores.node is None and scores.pr is None


def test_lexical_unit_mask_invariant(fixture_corpus, vocab, tiny_encoder):
    """With masking on, a predicate covered by the lexicon gets a licensed frame"""
    ontology, sentences = fixture_corpus
    model = _model(fixture_corpus, vocab, tiny_encoder, flags=Flags(lu_mask=True))
    checked = 0
    for s in sentences:
        for t in model.parse_sentence(s.without_annotation()):
            licensed = license_predicate_frames(t.predicate.pieces, s.lemmas, ontology)
            if licensed:
                assert t.frame in licensed
                checked += 1
    # the frame variant reads gold predicates, so covered predicates are guaranteed
    frame_model = _model(fixture_corpus, vocab, tiny_encoder, "frame")
    for s in sentences:
        for t in frame_model.parse_sentence(s):
            licensed = license_predicate_frames(t.predicate.pieces, s.lemmas, ontology)
            if licensed:
                assert t.frame in licensed
                checked += 1
    assert checked > 0


def test_frame_variant_keeps_supplied_predicates(fixture_corpus, vocab, tiny_encoder):
    """Frame identification classifies exactly the given predicates"""
    _, sentences = fixture_corpus
    model = _model(fixture_corpus, vocab, tiny_encoder, "frame")
    for s in sentences[:10]:
        got = sorted(t.predicate.pieces for t in model.parse_sentence(s))
        assert got == sorted({t.predicate.pieces for t in s.tuples})
        assert all(t.roles == () for t in model.parse_sentence(s))


def test_role_variant_keeps_supplied_frames(fixture_corpus, vocab, tiny_encoder):
    """Role labeling keeps given frames and labels only their roles"""
    ontology, sentences = fixture_corpus
    model = _model(fixture_corpus, vocab, tiny_encoder, "role")
    s = sentences[3]
    supplied = [SuppliedPredicate(t.predicate.pieces, t.frame) for t in s.tuples]
    for t in model.parse_sentence(s.without_annotation(), supplied=supplied):
        frame = next(sp.frame for sp in supplied if tuple(sorted(sp.pieces)) == t.predicate.pieces)
        assert t.frame == frame
        assert all(r.role_name in ontology.roles_of[frame] for r in t.roles)


def test_semicrf_variant_parses_segments(fixture_corpus, vocab, tiny_encoder):
    """Semi-CRF roles are non-overlapping and belong to the given frame"""
    ontology, sentences = fixture_corpus
    model = _model(fixture_corpus, vocab, tiny_encoder, "semi-crf")
    for s in sentences[:6]:
        tuples = model.parse_sentence(s)
        assert [(t.predicate.pieces, t.frame) for t in tuples] == [
            (tuple(sorted(t.predicate.pieces)), t.frame) for t in s.tuples
        ]
        for t in tuples:
            spans = sorted(r.value for r in t.roles)
            assert all(a.end < b.start for a, b in zip(spans, spans[1:]))
            assert all(r.role_name in ontology.roles_of[t.frame] for r in t.roles)


def test_scored_graph_is_valid(fixture_corpus, vocab, tiny_encoder):
    """Every scored graph passes its own structural check"""
    _, sentences = fixture_corpus
    model = _model(fixture_corpus, vocab, tiny_encoder)
    model.eval()
    for s in sentences[:8]:
        graph = model.score_sentence(s.without_annotation())
        graph.validate()
        for node in graph.nodes.values():
            if node.node_type.is_predicate:
                assert node.frame_probs is not None


def test_edge_variant_scores_given_nodes(fixture_corpus, vocab, tiny_encoder):
    """Without a node stage the edge model scores edges among gold nodes"""
    _, sentences = fixture_corpus
    model = _model(fixture_corpus, vocab, tiny_encoder, "edge")
    model.eval()
    s = sentences[3]
    graph = model.score_sentence(s)
    gold_pieces = {p for t in s.tuples for p in t.predicate.pieces}
    assert gold_pieces <= set(graph.nodes)
    assert graph.pr_edges


def _tuple_key(t):
    return (t.predicate.pieces, t.frame, frozenset((r.role_name, r.value) for r in t.roles))


def test_edge_variant_decodes_gold_frames(ontology, vocab, tiny_encoder, sentence):
    """Scoring on its own annotation, the edge model carries the gold frame into decoding"""
    assert ontology.frames[0] != "Removing"
    model = FrameGraphModel(ontology, vocab, tiny_encoder, variant="edge").eval()
    graph = model.score_sentence(sentence)
    removing = ontology.frame_index["Removing"]
    for piece in (Span(1, 1), Span(4, 4)):
        assert int(np.argmax(graph.nodes[piece].frame_probs)) == removing

    # force gold edges so only the frame source is under test
    graph.set_pp(Span(1, 1), Span(4, 4), [0.0, 1.0])
    gold_roles = {Span(0, 0): "Agent", Span(2, 3): "Theme"}
    for (p, r) in list(graph.pr_edges):
        row = np.zeros(len(graph.role_labels) + 1)
        row[graph.role_labels.index(gold_roles[r]) if r in gold_roles else graph.null_role] = 1.0
        graph.pr_edges[(p, r)] = row
    tuples = decode_graph(graph, ontology, sentence.lemmas, DecodeOptions(lu_mask=False))
    assert [t.frame for t in tuples] == ["Removing"]
    parsed = AnnotatedSentence(sentence.tokens, tuple(tuples), sentence.lemmas)
    assert evaluate([parsed], [sentence]).role.f1 == 1.0


def test_pieces_are_licensed_by_the_whole_predicate(tiny_encoder):
    """Piece entries in the lexicon do not hide frames licensed for the joined predicate"""
    ontology = FrameOntology(
        frames=("Taking", "Removing", "Dining"),
        roles_of={"Taking": ("Agent", "Theme"), "Removing": ("Agent", "Theme"), "Dining": ("Ingestor",)},
        lexicon={"take": {"Taking"}, "out": {"Taking"}, "take out": {"Removing", "Dining"}},
    )
    words = ["john", "took", "the", "trash", "out", "and", "took", "a", "nap"]
    lemmas = ["john", "take", "the", "trash", "out", "and", "take", "a", "nap"]
    sentence = AnnotatedSentence.from_words(
        words,
        [
            FrameTuple(Predicate((Span(1, 1), Span(4, 4))), "Removing"),
            FrameTuple(Predicate((Span(6, 6),)), "Taking"),
        ],
        lemmas,
    )
    model = FrameGraphModel(ontology, Vocabulary(words), tiny_encoder, variant="frame", flags=Flags(lu_mask=True)).eval()
    # constant scores: Dining far above Taking far above Removing
    with torch.no_grad():
        model.frame_head.mlp.output.weight.zero_()
        model.frame_head.mlp.output.bias.copy_(torch.tensor([0.0, -50.0, 50.0]))

    tuples, graph = model.parse_with_graph(sentence)
    frames = {t.predicate.pieces: t.frame for t in tuples}
    assert frames[(Span(1, 1), Span(4, 4))] == "Dining"
    assert frames[(Span(6, 6),)] == "Taking"
    assert not graph.nodes[Span(1, 1)].mask_applied and not graph.nodes[Span(4, 4)].mask_applied
    assert graph.nodes[Span(6, 6)].mask_applied


@pytest.mark.slow
def test_joint_model_overfits_edges(ontology, tiny_encoder):
    """Fitted to one sentence, the edge heads and the decoder reproduce its annotation"""
    words = ["john", "took", "the", "trash", "out", "and", "put", "the", "car", "away"]
    lemmas = ["john", "take", "the", "trash", "out", "and", "put", "the", "car", "away"]
    gold = AnnotatedSentence.from_words(
        words,
        [
            FrameTuple(
                Predicate((Span(1, 1), Span(4, 4))),
                "Removing",
                (RoleAssignment("Agent", Span(0, 0)), RoleAssignment("Theme", Span(2, 3))),
            ),
            FrameTuple(Predicate((Span(6, 6), Span(9, 9))), "Motion", (RoleAssignment("Theme", Span(7, 8)),)),
        ],
        lemmas,
    )
    model = build_variant("joint", ontology, Vocabulary(words), tiny_encoder, train_config=TrainConfig(seed=7))
    optimizer = make_optimizer(model, TrainConfig(lr_other=1e-2))
    model.train()
    for _ in range(300):
        optimizer.zero_grad()
        compute_loss([gold], model).total.backward()
        optimizer.step()
    model.eval()

    with torch.no_grad():
        batch = model.encoder(words)
        pp = model.pp_head(batch.rows([Span(1, 1), Span(1, 1)]), batch.rows([Span(4, 4), Span(9, 9)])).argmax(dim=-1)
        pr = model.pr_head(batch.rows([Span(1, 1)]), batch.rows([Span(0, 0)])).argmax(dim=-1)
    assert pp.tolist() == [PP_CONNECTED, PP_NULL]
    assert pr.item() == model.role_index["Agent"]

    stripped = gold.without_annotation()
    graph = model.score_sentence(stripped)
    assert {s: n.node_type for s, n in graph.nodes.items()} == gold_node_types(gold)[0]
    assert {_tuple_key(t) for t in model.parse_sentence(stripped)} == {_tuple_key(t) for t in gold.tuples}


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
