"""
The graph-construction parser and its derived variants.

One FrameGraphModel owns the encoder and every head (node typing, frame
classification, predicate-predicate edges, predicate-role edges, Semi-CRF
role labeling). A variant decides which heads are active; inactive heads are
frozen and contribute no loss. Variants that do not identify predicates
themselves take them (and, for role labeling, their frames) as supplied input.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn

from .corpus import AnnotatedSentence, FrameOntology, FrameTuple, Predicate, Span, ensure_lemmas
from .decoder import DecodeOptions, ParseGraph, SuppliedPredicate, decode_graph
from .edge_builder import (
    CandidateMode,
    PPEdgeScorer,
    PREdgeScorer,
    build_candidate_pairs,
    gold_edge_labels,
    pair_rows,
    select_node_types,
)
from .encoder import EncoderConfig, SentenceEncoder, SpanBatch, Vocabulary
from .config import Flags
from .errors import ConfigError
from .node_builder import NODE_TYPES, FrameClassifier, NodeType, NodeTypeClassifier, gold_frames, gold_node_types, node_license
from .semicrf import SemiCRFRoleLabeler

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HeadSet:
    type_predicates: bool = False
    type_roles: bool = False
    frames: bool = False
    pp_edges: bool = False
    pr_edges: bool = False
    semicrf: bool = False

    @property
    def types_nodes(self) -> bool:
        return self.type_predicates or self.type_roles


VARIANT_HEADS: Dict[str, HeadSet] = {
    "joint": HeadSet(True, True, True, True, True),
    "predicate": HeadSet(type_predicates=True, pp_edges=True),
    "frame": HeadSet(frames=True),
    "role": HeadSet(type_roles=True, pr_edges=True),
    "predicate∘frame": HeadSet(type_predicates=True, frames=True, pp_edges=True),
    "frame∘role": HeadSet(type_roles=True, frames=True, pr_edges=True),
    "node": HeadSet(type_predicates=True, type_roles=True, frames=True),
    "edge": HeadSet(pp_edges=True, pr_edges=True),
    "semi-crf": HeadSet(semicrf=True),
}

# variants that read predicates from their input instead of identifying them
SUPPLIED_PREDICATES = {"frame", "role", "frame∘role", "semi-crf"}
# variants that also read frames from their input
SUPPLIED_FRAMES = {"role", "semi-crf"}

VARIANT_ALIASES = {
    "predicate-frame": "predicate∘frame",
    "predicate_frame": "predicate∘frame",
    "frame-role": "frame∘role",
    "frame_role": "frame∘role",
    "semicrf": "semi-crf",
}


def canonical_variant(name: str) -> str:
    name = VARIANT_ALIASES.get(name, name)
    if name not in VARIANT_HEADS:
        raise ConfigError(f"unknown model variant {name!r}")
    return name


@dataclass
class ScoredTerm:
    """Log-probabilities of one classification term and the gold label of every row."""

    log_probs: torch.Tensor
    gold: torch.Tensor

    def nll(self) -> torch.Tensor:
        if self.gold.numel() == 0:
            return self.log_probs.new_zeros(())
        return -self.log_probs.gather(1, self.gold.unsqueeze(1)).sum()


@dataclass
class SentenceScores:
    """Everything the loss needs for one sentence; absent terms are None."""

    node: Optional[ScoredTerm] = None
    frame: Optional[ScoredTerm] = None
    pp: Optional[ScoredTerm] = None
    pr: Optional[ScoredTerm] = None
    semicrf: Optional[torch.Tensor] = None


def _long(values, device) -> torch.Tensor:
    return torch.tensor(list(values), dtype=torch.long, device=device)


class FrameGraphModel(nn.Module):
    def __init__(
        self,
        ontology: FrameOntology,
        vocab: Vocabulary,
        encoder_config: Optional[EncoderConfig] = None,
        variant: str = "joint",
        flags: Optional[Flags] = None,
        null_sample_rate: float = 1.0,
        seed: int = 0,
    ):
        super().__init__()
        self.ontology = ontology
        self.vocab = vocab
        self.config = encoder_config or EncoderConfig()
        self.variant = canonical_variant(variant)
        self.heads = VARIANT_HEADS[self.variant]
        self.flags = flags or Flags()
        self.null_sample_rate = null_sample_rate
        self._null_sampler = np.random.default_rng(seed)

        cfg = self.config
        dim = cfg.span_dim
        self.encoder = SentenceEncoder(cfg, vocab)
        self.node_head = NodeTypeClassifier(dim, cfg.mlp_hidden, cfg.dropout_mlp)
        self.frame_head = FrameClassifier(dim, ontology, cfg.mlp_hidden, cfg.dropout_mlp)
        self.pp_head = PPEdgeScorer(dim, cfg.mlp_hidden, cfg.dropout_mlp)
        self.pr_head = PREdgeScorer(dim, ontology, cfg.mlp_hidden, cfg.dropout_mlp)
        self.semicrf_head = SemiCRFRoleLabeler(dim, ontology, cfg.max_span_length)
        self.role_index = {r: i for i, r in enumerate(self.pr_head.role_labels)}

        active = {
            self.node_head: self.heads.types_nodes,
            self.frame_head: self.heads.frames,
            self.pp_head: self.heads.pp_edges,
            self.pr_head: self.heads.pr_edges,
            self.semicrf_head: self.heads.semicrf,
        }
        for module, on in active.items():
            module.requires_grad_(on)
        if self.heads.semicrf and cfg.encoder_kind == "external-contextual":
            self.encoder.embedder.freeze()

    # ------------------------------------------------------------------
    # helpers
    # ------------------------------------------------------------------

    @property
    def device(self) -> torch.device:
        return next(self.parameters()).device

    def encoder_parameters(self) -> List[nn.Parameter]:
        if self.config.encoder_kind == "external-contextual":
            return [p for p in self.encoder.embedder.parameters() if p.requires_grad]
        return []

    def trainable_parameters(self) -> List[nn.Parameter]:
        return [p for p in self.parameters() if p.requires_grad]

    def _project(self, node_type: NodeType) -> NodeType:
        return node_type.project(self.heads.type_predicates, self.heads.type_roles)

    def _predicted_types(self, batch: SpanBatch, log_probs: torch.Tensor) -> Dict[Span, NodeType]:
        L = self.config.max_span_length
        best = log_probs.argmax(dim=-1).tolist()
        out = {}
        for span, k in zip(batch.spans, best):
            if span.length > L:
                continue
            t = self._project(NODE_TYPES[k])
            if t != NodeType.NULL:
                out[span] = t
        return out

    def _frame_terms(
        self,
        batch: SpanBatch,
        nodes: Sequence[Tuple[Span, NodeType]],
        lemmas: Sequence[str],
        use_mask: bool,
    ) -> Tuple[torch.Tensor, List[bool]]:
        licensed = [node_license(s, t, lemmas, self.ontology) if use_mask else None for s, t in nodes]
        return self.frame_head(batch.rows([s for s, _ in nodes]), licensed)

    def _gold_node_graph(self, sentence: AnnotatedSentence) -> ParseGraph:
        """Node graph from the annotation, with one-hot gold frames on predicate nodes."""
        gold_types, _ = gold_node_types(sentence)
        frames = gold_frames(sentence)
        graph = ParseGraph(self.ontology.frames, self.ontology.role_labels)
        for span, t in gold_types.items():
            node = graph.add_node(span, t)
            if span in frames:
                node.frame_probs = np.zeros(len(self.ontology.frames))
                node.frame_probs[self.ontology.frame_index[frames[span]]] = 1.0
        return graph

    def _supplied_from(self, sentence: AnnotatedSentence) -> List[SuppliedPredicate]:
        keep_frame = self.variant in SUPPLIED_FRAMES
        return [SuppliedPredicate(t.predicate.pieces, t.frame if keep_frame else None) for t in sentence.tuples]

    # ------------------------------------------------------------------
    # training scores
    # ------------------------------------------------------------------

    def sentence_scores(self, sentence: AnnotatedSentence) -> SentenceScores:
        """Log-probabilities and gold labels for every active term of one gold sentence."""
        if len(sentence) == 0:
            return SentenceScores()
        sentence = ensure_lemmas(sentence)
        lemmas = sentence.lemmas
        heads = self.heads
        device = self.device
        L = self.config.max_span_length

        gold_types, _ = gold_node_types(sentence)
        extra = [s for s in gold_types if s.length > L]
        batch = self.encoder(sentence.words, extra_spans=extra)
        scores = SentenceScores()

        node_log_probs = None
        if heads.types_nodes:
            rows, labels = [], []
            for i, span in enumerate(batch.spans):
                if span.length > L:
                    continue
                t = self._project(gold_types.get(span, NodeType.NULL))
                if t == NodeType.NULL and self.null_sample_rate < 1.0:
                    if self._null_sampler.random() >= self.null_sample_rate:
                        continue
                rows.append(i)
                labels.append(t.label_id)
            node_log_probs = self.node_head(batch.g)
            scores.node = ScoredTerm(node_log_probs.index_select(0, _long(rows, device)), _long(labels, device))

        if heads.frames:
            frames = gold_frames(sentence)
            spans = [s for s in sorted(frames) if s in batch.row]
            licensed = []
            for s in spans:
                lic = node_license(s, gold_types[s], lemmas, self.ontology) if self.flags.lu_mask_training else None
                licensed.append(lic if lic is None or frames[s] in lic else None)
            if spans:
                log_probs, _ = self.frame_head(batch.rows(spans), licensed)
            else:
                log_probs = batch.g.new_zeros(0, len(self.ontology.frames))
            gold = _long((self.ontology.frame_index[frames[s]] for s in spans), device)
            scores.frame = ScoredTerm(log_probs, gold)

        if heads.pp_edges or heads.pr_edges:
            gold_full = {s: t for s, t in gold_types.items() if s in batch.row}
            if CandidateMode(self.flags.exposure) == CandidateMode.PREDICTED_NODES and node_log_probs is not None:
                predicted = self._predicted_types(batch, node_log_probs.detach())
                # components this model does not type come from gold
                for span, t in gold_full.items():
                    kept = t.project(not heads.type_predicates, not heads.type_roles)
                    if kept != NodeType.NULL:
                        predicted[span] = predicted.get(span, NodeType.NULL).merge(kept)
                nodes = select_node_types(CandidateMode.PREDICTED_NODES, gold_full, predicted)
            else:
                nodes = select_node_types(CandidateMode.GOLD_NODES, gold_full, {})
            pairs = build_candidate_pairs(nodes)
            edges = gold_edge_labels(sentence)

            if heads.pp_edges:
                scores.pp = self._pair_term(self.pp_head, batch, pairs.pp, [edges.pp_label(p) for p in pairs.pp], 2)
            if heads.pr_edges:
                null = self.pr_head.null_index
                labels = [edges.pr_label(p, self.role_index, null) for p in pairs.pr]
                scores.pr = self._pair_term(self.pr_head, batch, pairs.pr, labels, null + 1)

        if heads.semicrf:
            n = len(sentence)
            terms = [
                self.semicrf_head.nll(batch, t.predicate.pieces, t.frame, t.roles, n)
                for t in sentence.tuples
                if all(p in batch.row for p in t.predicate.pieces)
            ]
            scores.semicrf = torch.stack(terms).sum() if terms else batch.g.new_zeros(())
        return scores

    def _pair_term(self, head: nn.Module, batch: SpanBatch, pairs, labels, n_classes: int) -> ScoredTerm:
        device = batch.g.device
        if not pairs:
            return ScoredTerm(batch.g.new_zeros(0, n_classes), _long([], device))
        left, right = pair_rows(pairs, batch.row, device)
        return ScoredTerm(head(batch.g[left], batch.g[right]), _long(labels, device))

    # ------------------------------------------------------------------
    # inference
    # ------------------------------------------------------------------

    def score_sentence(
        self,
        sentence: AnnotatedSentence,
        supplied: Optional[Sequence[SuppliedPredicate]] = None,
        supplied_graph: Optional[ParseGraph] = None,
    ) -> ParseGraph:
        """
        Build the scored parse graph of one sentence.

        Variants that take predicates as input read them from ``supplied``, or
        from the sentence's own tuples when ``supplied`` is None. The edge
        variant scores edges over the nodes of ``supplied_graph`` (the node
        stage's output), or over the sentence's own annotation.
        """
        return self._score(sentence, supplied, supplied_graph)[0]

    def _score(
        self,
        sentence: AnnotatedSentence,
        supplied: Optional[Sequence[SuppliedPredicate]] = None,
        supplied_graph: Optional[ParseGraph] = None,
    ) -> Tuple[ParseGraph, SpanBatch]:
        sentence = ensure_lemmas(sentence)
        lemmas = sentence.lemmas
        heads = self.heads

        if self.variant in SUPPLIED_PREDICATES and supplied is None:
            supplied = self._supplied_from(sentence)
        if self.variant == "edge" and supplied_graph is None:
            supplied_graph = self._gold_node_graph(sentence)

        extra: List[Span] = []
        if supplied:
            extra.extend(p for sp in supplied for p in sp.pieces)
        if supplied_graph is not None:
            extra.extend(supplied_graph.nodes)
        batch = self.encoder(sentence.words, extra_spans=extra)

        graph = ParseGraph(self.ontology.frames, self.ontology.role_labels)
        if supplied_graph is not None:
            for span, node in supplied_graph.nodes.items():
                if span in batch.row:
                    copy = graph.add_node(span, node.node_type)
                    copy.frame_probs, copy.mask_applied = node.frame_probs, node.mask_applied
        if heads.types_nodes:
            for span, t in self._predicted_types(batch, self.node_head(batch.g)).items():
                graph.add_node(span, t)
        if supplied is not None:
            graph.supplied = [sp for sp in supplied if all(p in batch.row for p in sp.pieces)]
            for sp in graph.supplied:
                kind = NodeType.FPRD if len(sp.pieces) == 1 else NodeType.PPRD
                for piece in sp.pieces:
                    graph.add_node(piece, kind)

        if heads.frames:
            spans = sorted(s for s, n in graph.nodes.items() if n.node_type.is_predicate)
            if spans:
                nodes = [(s, graph.nodes[s].node_type) for s in spans]
                log_probs, applied = self._frame_terms(batch, nodes, lemmas, self.flags.lu_mask)
                probs = log_probs.exp().detach().cpu().numpy()
                for span, row, was_masked in zip(spans, probs, applied):
                    graph.nodes[span].frame_probs = row
                    graph.nodes[span].mask_applied = was_masked

        if heads.pp_edges or heads.pr_edges:
            pairs = build_candidate_pairs({s: n.node_type for s, n in graph.nodes.items()})
            if heads.pp_edges and pairs.pp:
                left, right = pair_rows(pairs.pp, batch.row, batch.g.device)
                probs = self.pp_head(batch.g[left], batch.g[right]).exp().detach().cpu().numpy()
                for (a, b), row in zip(pairs.pp, probs):
                    graph.set_pp(a, b, row)
            if heads.pr_edges and pairs.pr:
                left, right = pair_rows(pairs.pr, batch.row, batch.g.device)
                probs = self.pr_head(batch.g[left], batch.g[right]).exp().detach().cpu().numpy()
                for pair, row in zip(pairs.pr, probs):
                    graph.pr_edges[pair] = row
        return graph, batch

    @torch.no_grad()
    def parse_sentence(
        self,
        sentence: AnnotatedSentence,
        supplied: Optional[Sequence[SuppliedPredicate]] = None,
        supplied_graph: Optional[ParseGraph] = None,
    ) -> List[FrameTuple]:
        return self.parse_with_graph(sentence, supplied, supplied_graph)[0]

    @torch.no_grad()
    def parse_with_graph(
        self,
        sentence: AnnotatedSentence,
        supplied: Optional[Sequence[SuppliedPredicate]] = None,
        supplied_graph: Optional[ParseGraph] = None,
    ) -> Tuple[List[FrameTuple], ParseGraph]:
        """Decoded tuples together with the scored graph they were decoded from."""
        if len(sentence) == 0:
            return [], ParseGraph(self.ontology.frames, self.ontology.role_labels)
        was_training = self.training
        self.eval()
        try:
            sentence = ensure_lemmas(sentence)
            graph, batch = self._score(sentence, supplied, supplied_graph)
            if self.heads.semicrf:
                return self._semicrf_tuples(sentence, graph, batch), graph
            options = DecodeOptions(self.flags.lu_mask, self.flags.promote_singleton_pprd)
            return decode_graph(graph, self.ontology, sentence.lemmas, options), graph
        finally:
            self.train(was_training)

    def _semicrf_tuples(self, sentence: AnnotatedSentence, graph: ParseGraph, batch: SpanBatch) -> List[FrameTuple]:
        out = []
        for sp in graph.supplied or []:
            frame = sp.frame if sp.frame in self.ontology.roles_of else self.ontology.frames[0]
            roles = self.semicrf_head.srl_with_semicrf(batch, sp.pieces, frame, len(sentence))
            out.append(FrameTuple(Predicate(tuple(sorted(sp.pieces))), frame, tuple(roles)))
        return out
