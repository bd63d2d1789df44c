#!/usr/bin/env python3
"""
Tests for pipeline systems, the comparison harness and throughput measurement
"""

import pytest

from fsgraph.decoder import SuppliedPredicate
from fsgraph.errors import CheckpointError, ConfigError
from fsgraph.metrics import evaluate
from fsgraph.model import FrameGraphModel
from fsgraph.pipeline import (
    SYSTEMS,
    build_system,
    benchmark,
    load_system,
    run_comparison,
    single_model_system,
    write_system_file,
)
from fsgraph.training import parse_corpus, train, train_stages


@pytest.fixture
def stage_models(fixture_corpus, vocab, tiny_encoder):
    """One untrained model per variant that any system uses."""
    ontology, _ = fixture_corpus
    variants = {v for stages in SYSTEMS.values() for v in stages}
    return {v: FrameGraphModel(ontology, vocab, tiny_encoder, variant=v).eval() for v in variants}


def _config(run_config, **train_updates):
    return run_config.model_copy(train=run_config.train.model_copy(**train_updates).model_dump())


def test_build_system_errors(stage_models):
    """Unknown systems, missing stages and mismatched models are configuration errors"""
    with pytest.raises(ConfigError):
        build_system("Everything", stage_models)
    with pytest.raises(ConfigError):
        build_system("Node+Edge", {"node": stage_models["node"]})
    with pytest.raises(ConfigError):
        build_system("Node+Edge", {"node": stage_models["node"], "edge": stage_models["node"]})
    assert build_system("Predicate+Frame+Role", stage_models).variants == ("predicate", "frame", "role")


def test_chained_stages_see_earlier_output(fixture_corpus, stage_models):
    """Later stages keep the predicates (and frames) decoded before them"""
    _, sentences = fixture_corpus
    system = build_system("Predicate+Frame+Role", stage_models)
    predicate, frame = stage_models["predicate"], stage_models["frame"]
    for s in sentences[:6]:
        s = s.without_annotation()
        targets = predicate.parse_sentence(s)
        framed = frame.parse_sentence(s, supplied=[SuppliedPredicate(t.predicate.pieces) for t in targets])
        got = system.parse_sentence(s)
        assert [(t.predicate.pieces, t.frame) for t in got] == [(t.predicate.pieces, t.frame) for t in framed]


def test_node_edge_system_uses_node_graph(fixture_corpus, stage_models):
    """Node+Edge decodes predicates only from the node stage's predicate nodes"""
    _, sentences = fixture_corpus
    system = build_system("Node+Edge", stage_models)
    for s in sentences[:6]:
        s = s.without_annotation()
        graph = stage_models["node"].score_sentence(s)
        predicate_nodes = {span for span, n in graph.nodes.items() if n.node_type.is_predicate}
        for t in system.parse_sentence(s):
            assert set(t.predicate.pieces) <= predicate_nodes


def test_every_system_parses(fixture_corpus, stage_models):
    """Each named system produces tuples with frames from the ontology"""
    ontology, sentences = fixture_corpus
    test = [s.without_annotation() for s in sentences[:3]]
    for name in SYSTEMS:
        system = build_system(name, stage_models)
        for parsed in parse_corpus(system, test):
            assert all(t.frame in ontology.roles_of for t in parsed.tuples)


def test_single_model_system_name(stage_models):
    """A lone joint model is the Joint system"""
    assert single_model_system(stage_models["joint"]).name == "Joint"
    assert single_model_system(stage_models["frame"]).variants == ("frame",)


def test_system_graph_unions_stage_graphs(fixture_corpus, stage_models):
    """The merged graph holds the node stage's nodes and yields the same tuples as parse_sentence"""
    _, sentences = fixture_corpus
    system = build_system("Node+Edge", stage_models)
    for s in sentences[:4]:
        s = s.without_annotation()
        tuples, graph = system.parse_with_graph(s)
        assert tuples == system.parse_sentence(s)
        node_graph = stage_models["node"].score_sentence(s)
        assert set(node_graph.nodes) <= set(graph.nodes)
        for span, node in node_graph.nodes.items():
            assert graph.nodes[span].node_type == node.node_type


def test_module_metrics_from_parsed_graphs(fixture_corpus, stage_models):
    """Graphs returned alongside parses feed the node, frame and edge metrics"""
    _, sentences = fixture_corpus
    gold = sentences[:5]
    parsed, graphs = parse_corpus(single_model_system(stage_models["joint"]), [s.without_annotation() for s in gold], return_graphs=True)
    assert len(graphs) == len(parsed) == len(gold)
    report = evaluate(parsed, gold, graphs=graphs, breakdown=False)
    assert report.node.gold_count > 0 and report.edge.gold_count > 0
    assert evaluate(parsed, gold, breakdown=False).node.gold_count == 0


def test_benchmark_reports_each_run(fixture_corpus, stage_models):
    """Throughput has one positive rate per timed run"""
    _, sentences = fixture_corpus
    result = benchmark(single_model_system(stage_models["joint"]), sentences[:4], runs=3, warmup=0)
    assert result.sentences == 4 and len(result.runs) == 3
    assert result.median > 0
    with pytest.raises(ConfigError):
        benchmark(single_model_system(stage_models["joint"]), [], runs=3)


def test_train_and_load_node_edge(fixture_corpus, run_config, tmp_path):
    """Staged training saves one checkpoint per stage and loads back as Node+Edge"""
    ontology, sentences = fixture_corpus
    config = _config(run_config, model_variant="node+edge", max_epochs=1)
    checkpoints = train_stages(sentences[:8], sentences[8:10], ontology, config, output_dir=tmp_path, progress=False)
    assert set(checkpoints) == {"node", "edge"}
    assert (tmp_path / "node" / "model.pt").exists() and (tmp_path / "edge" / "meta.json").exists()
    system = load_system(tmp_path)
    assert system.name == "Node+Edge" and system.variants == ("node", "edge")
    write_system_file(tmp_path, "Node+Edge")
    assert load_system(tmp_path).name == "Node+Edge"


def test_load_system_errors(tmp_path):
    """A directory that is neither a checkpoint nor a system fails"""
    with pytest.raises(CheckpointError):
        load_system(tmp_path)
    with pytest.raises(ConfigError):
        load_system(tmp_path, "Nope")


@pytest.mark.slow
def test_run_comparison_rows(fixture_corpus, run_config):
    """The comparison trains shared stages once and reports one row per system"""
    ontology, sentences = fixture_corpus
    config = _config(run_config, max_epochs=1)
    systems = ["Predicate∘Frame+Role", "Predicate∘Frame+Semi-CRF", "Joint"]
    rows = run_comparison(sentences[:12], sentences[12:16], sentences[16:], ontology, config, systems=systems, progress=False)
    assert [r.system for r in rows] == systems
    for row in rows:
        for prf in (row.target, row.frame, row.role):
            assert 0.0 <= prf.f1 <= 1.0
            assert prf.gold_count > 0
    # both pipelines share the predicate∘frame stage, so their targets agree
    assert rows[0].target == rows[1].target
    assert rows[0].frame == rows[1].frame


@pytest.mark.slow
def test_joint_decodes_faster_than_semicrf_pipeline(fixture_corpus, run_config):
    """One encoder pass beats two passes plus segment Viterbi on the same sentences"""
    ontology, sentences = fixture_corpus
    config = _config(run_config, max_epochs=10)
    models = {}
    for variant in ("joint", "predicate∘frame", "semi-crf"):
        stage = _config(config, model_variant=variant)
        models[variant] = train(sentences[:16], sentences[16:], ontology, stage, progress=False).model
    joint = benchmark(build_system("Joint", models), sentences, runs=3)
    semicrf = benchmark(build_system("Predicate∘Frame+Semi-CRF", models), sentences, runs=3)
    assert joint.median > semicrf.median


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
