"""
Pipeline systems built from separately trained derived models.

A system is a chain of stage models. Each later stage receives the predicates
(and, where it does not predict them itself, the frames) decoded by the earlier
stages as supplied structure. The node+edge system hands over the scored node
graph instead of decoded tuples.
"""

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import torch
from tqdm import tqdm

from .config import RunConfig
from .corpus import AnnotatedSentence, FrameOntology, FrameTuple, ensure_lemmas
from .decoder import ParseGraph, SuppliedPredicate
from .deserializable import Deserializable
from .encoder import Vocabulary
from .errors import CheckpointError, ConfigError
from .metrics import PRF, evaluate
from .model import SUPPLIED_FRAMES, FrameGraphModel, canonical_variant
from .training import Checkpoint, load_checkpoint, parse_corpus, save_checkpoint, train

logger = logging.getLogger(__name__)

SYSTEMS: Dict[str, Tuple[str, ...]] = {
    "Predicate+Frame+Role": ("predicate", "frame", "role"),
    "Predicate∘Frame+Role": ("predicate∘frame", "role"),
    "Predicate+Frame∘Role": ("predicate", "frame∘role"),
    "Predicate∘Frame+Semi-CRF": ("predicate∘frame", "semi-crf"),
    "Node+Edge": ("node", "edge"),
    "Joint": ("joint",),
}
SYSTEM_FILE = "system.json"


class PipelineSystem:
    """A named chain of stage models with the ``parse_sentence`` interface of a single model."""

    def __init__(self, name: str, stages: Sequence[Tuple[str, FrameGraphModel]]):
        if not stages:
            raise ConfigError(f"system {name!r} has no stages")
        self.name = name
        self.stages = list(stages)

    @property
    def variants(self) -> Tuple[str, ...]:
        return tuple(v for v, _ in self.stages)

    def eval(self) -> "PipelineSystem":
        for _, model in self.stages:
            model.eval()
        return self

    def parse_sentence(self, sentence: AnnotatedSentence) -> List[FrameTuple]:
        return self.parse_with_graph(sentence)[0]

    @torch.no_grad()
    def parse_with_graph(self, sentence: AnnotatedSentence) -> Tuple[List[FrameTuple], ParseGraph]:
        """Final tuples and the union of every stage's scored graph."""
        sentence = ensure_lemmas(sentence)
        ontology = self.stages[0][1].ontology
        merged = ParseGraph(ontology.frames, ontology.role_labels)
        supplied: Optional[List[SuppliedPredicate]] = None
        graph: Optional[ParseGraph] = None
        tuples: List[FrameTuple] = []
        for i, (variant, model) in enumerate(self.stages):
            last = i == len(self.stages) - 1
            if variant == "node" and not last:
                model.eval()
                graph = model.score_sentence(sentence) if len(sentence) else ParseGraph(ontology.frames, ontology.role_labels)
                merged.absorb(graph)
                continue
            if variant == "edge":
                tuples, stage_graph = model.parse_with_graph(sentence, supplied_graph=graph)
            else:
                tuples, stage_graph = model.parse_with_graph(sentence, supplied=supplied)
            merged.absorb(stage_graph)
            if not last:
                next_variant = self.stages[i + 1][0]
                keep_frame = next_variant in SUPPLIED_FRAMES
                supplied = [SuppliedPredicate(t.predicate.pieces, t.frame if keep_frame else None) for t in tuples]
        return tuples, merged


def build_system(name: str, models: Mapping[str, FrameGraphModel]) -> PipelineSystem:
    """
    Assemble the system ``name`` from trained models keyed by variant.

    Raises ConfigError for an unknown system, a missing stage, or a model whose
    variant is not the one its key names.
    """
    if name not in SYSTEMS:
        raise ConfigError(f"unknown system {name!r}; known: {', '.join(SYSTEMS)}")
    stages = []
    for variant in SYSTEMS[name]:
        model = models.get(variant)
        if model is None:
            raise ConfigError(f"system {name!r} needs a trained {variant!r} model")
        if model.variant != variant:
            raise ConfigError(f"model given for {variant!r} is a {model.variant!r} model")
        stages.append((variant, model))
    return PipelineSystem(name, stages)


def single_model_system(model: FrameGraphModel) -> PipelineSystem:
    name = "Joint" if model.variant == "joint" else model.variant
    return PipelineSystem(name, [(model.variant, model)])


def load_system(path: Union[str, Path], name: Optional[str] = None, ontology: Optional[FrameOntology] = None) -> PipelineSystem:
    """
    Load a checkpoint directory as a system.

    A directory holding ``meta.json`` is one model. Otherwise its stage
    checkpoints live in subdirectories named after their variants, and the
    system name comes from ``name``, from ``system.json`` or, for a node and
    an edge stage, defaults to Node+Edge.
    """
    path = Path(path)
    if (path / "meta.json").exists() and name is None:
        return single_model_system(load_checkpoint(path, ontology).model)
    if name is None and (path / SYSTEM_FILE).exists():
        name = json.loads((path / SYSTEM_FILE).read_text(encoding="utf-8"))["system"]
    if name is None and (path / "node").is_dir() and (path / "edge").is_dir():
        name = "Node+Edge"
    if name is None:
        raise CheckpointError(f"{path}: not a checkpoint and no system name given")
    if name not in SYSTEMS:
        raise ConfigError(f"unknown system {name!r}; known: {', '.join(SYSTEMS)}")
    models = {}
    for variant in SYSTEMS[name]:
        stage_dir = path / variant
        if variant == "joint" and (path / "meta.json").exists():
            stage_dir = path
        models[variant] = load_checkpoint(stage_dir, ontology).model
    return build_system(name, models)


def write_system_file(path: Union[str, Path], name: str) -> None:
    Path(path, SYSTEM_FILE).write_text(json.dumps({"system": name}) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------


class ComparisonRow(Deserializable):
    system: str = ""
    target: PRF
    frame: PRF
    role: PRF
    node: Optional[PRF] = None
    frame_module: Optional[PRF] = None
    edge: Optional[PRF] = None


def run_comparison(
    train_corpus: Sequence[AnnotatedSentence],
    dev_corpus: Sequence[AnnotatedSentence],
    test_corpus: Sequence[AnnotatedSentence],
    ontology: FrameOntology,
    config: Optional[RunConfig] = None,
    systems: Sequence[str] = tuple(SYSTEMS),
    output_dir: Optional[Union[str, Path]] = None,
    progress: bool = True,
) -> List[ComparisonRow]:
    """
    Train every stage the requested systems need (once, shared across systems)
    and evaluate each system end to end on ``test_corpus``.
    """
    config = config or RunConfig()
    unknown = [s for s in systems if s not in SYSTEMS]
    if unknown:
        raise ConfigError(f"unknown systems: {', '.join(unknown)}")
    needed: List[str] = []
    for name in systems:
        needed.extend(v for v in SYSTEMS[name] if v not in needed)

    vocab = Vocabulary.build([ensure_lemmas(s) for s in train_corpus])
    models: Dict[str, FrameGraphModel] = {}
    for variant in needed:
        stage_config = config.model_copy(train=config.train.model_copy(model_variant=variant).model_dump())
        logger.info("training stage %s", variant)
        checkpoint: Checkpoint = train(train_corpus, dev_corpus, ontology, stage_config, vocab=vocab, progress=progress)
        if output_dir is not None:
            save_checkpoint(checkpoint, Path(output_dir) / variant)
        models[canonical_variant(variant)] = checkpoint.model

    rows = []
    for name in systems:
        system = build_system(name, models).eval()
        # later stages never see the test annotation
        inputs = [s.without_annotation() for s in test_corpus]
        pred, graphs = parse_corpus(system, inputs, progress=progress, return_graphs=True)
        report = evaluate(pred, test_corpus, graphs=graphs, breakdown=False)
        rows.append(
            ComparisonRow(
                system=name,
                target=report.target,
                frame=report.frame,
                role=report.role,
                node=report.node,
                frame_module=report.frame_module,
                edge=report.edge,
            )
        )
        logger.info("%s: role F1 %.4f", name, report.role.f1)
    return rows


# ---------------------------------------------------------------------------
# Throughput
# ---------------------------------------------------------------------------


@dataclass
class Throughput:
    sentences: int
    runs: List[float]  # sentences per second, one entry per timed run

    @property
    def median(self) -> float:
        return float(np.median(self.runs))


def benchmark(system, sentences: Sequence[AnnotatedSentence], runs: int = 3, warmup: int = 1, progress: bool = False) -> Throughput:
    """Decoding throughput in sentences per second over ``runs`` timed passes after ``warmup`` passes."""
    if runs < 1:
        raise ConfigError("runs must be >= 1")
    if not sentences:
        raise ConfigError("benchmark corpus is empty")
    inputs = [ensure_lemmas(s.without_annotation()) for s in sentences]
    for _ in range(warmup):
        for s in inputs:
            system.parse_sentence(s)
    timings = []
    for _ in tqdm(range(runs), desc="benchmark", disable=not progress, leave=False):
        start = time.perf_counter()
        for s in inputs:
            system.parse_sentence(s)
        elapsed = max(time.perf_counter() - start, 1e-9)
        timings.append(len(inputs) / elapsed)
    return Throughput(len(inputs), timings)
