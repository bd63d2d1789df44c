"""
Node building: span typing and frame classification.

Every candidate span gets one of eight node types, the composites of full
predicate (FPRD), partial predicate (PPRD, one piece of a discontinuous
predicate) and role (ROLE). Predicate nodes are then classified into frames,
optionally restricted to the frames the lexicon licenses for the span's lemmas.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np
import torch
import torch.nn as nn

from .corpus import AnnotatedSentence, FrameOntology, Span
from .layers import MLP, masked_log_softmax

logger = logging.getLogger(__name__)


class NodeType(str, Enum):
    FPRD = "FPRD"
    PPRD = "PPRD"
    ROLE = "ROLE"
    FPRD_PPRD = "FPRD-PPRD"
    FPRD_ROLE = "FPRD-ROLE"
    PPRD_ROLE = "PPRD-ROLE"
    FPRD_PPRD_ROLE = "FPRD-PPRD-ROLE"
    NULL = "NULL"

    @property
    def is_full_predicate(self) -> bool:
        return "FPRD" in self.value

    @property
    def is_partial_predicate(self) -> bool:
        return "PPRD" in self.value

    @property
    def is_role(self) -> bool:
        return "ROLE" in self.value

    @property
    def is_predicate(self) -> bool:
        return self.is_full_predicate or self.is_partial_predicate

    @property
    def label_id(self) -> int:
        return NODE_TYPES.index(self)

    @classmethod
    def from_flags(cls, full: bool, partial: bool, role: bool) -> "NodeType":
        parts = [name for name, on in (("FPRD", full), ("PPRD", partial), ("ROLE", role)) if on]
        return cls("-".join(parts)) if parts else cls.NULL

    def project(self, keep_predicate: bool = True, keep_role: bool = True) -> "NodeType":
        """Drop the predicate and/or role components of the type."""
        return NodeType.from_flags(
            self.is_full_predicate and keep_predicate,
            self.is_partial_predicate and keep_predicate,
            self.is_role and keep_role,
        )

    def merge(self, other: "NodeType") -> "NodeType":
        return NodeType.from_flags(
            self.is_full_predicate or other.is_full_predicate,
            self.is_partial_predicate or other.is_partial_predicate,
            self.is_role or other.is_role,
        )


NODE_TYPES: List[NodeType] = list(NodeType)


# ---------------------------------------------------------------------------
# Gold labels
# ---------------------------------------------------------------------------


@dataclass
class SpanCoverage:
    """Gold node spans kept as training targets vs. dropped for exceeding L."""

    kept: int = 0
    dropped: int = 0
    dropped_spans: List[Span] = field(default_factory=list)

    @property
    def recall(self) -> float:
        total = self.kept + self.dropped
        return self.kept / total if total else 1.0


def gold_node_sets(sentence: AnnotatedSentence) -> Tuple[Set[Span], Set[Span], Set[Span]]:
    """(full predicate spans, partial predicate spans, role spans) of the gold tuples."""
    full, partial, roles = set(), set(), set()
    for t in sentence.tuples:
        if t.predicate.is_discontinuous:
            partial.update(t.predicate.pieces)
        else:
            full.update(t.predicate.pieces)
        roles.update(r.value for r in t.roles)
    return full, partial, roles


def gold_node_types(sentence: AnnotatedSentence, max_span_length: Optional[int] = None) -> Tuple[Dict[Span, NodeType], SpanCoverage]:
    """
    Non-NULL gold node type of every span that is a predicate piece or role value.

    Spans longer than ``max_span_length`` are left out and counted in the coverage.
    """
    full, partial, roles = gold_node_sets(sentence)
    labels: Dict[Span, NodeType] = {}
    coverage = SpanCoverage()
    for span in sorted(full | partial | roles):
        if max_span_length is not None and span.length > max_span_length:
            coverage.dropped += 1
            coverage.dropped_spans.append(span)
            continue
        coverage.kept += 1
        labels[span] = NodeType.from_flags(span in full, span in partial, span in roles)
    return labels, coverage


def node_sets_from_labels(labels: Mapping[Span, NodeType]) -> Tuple[Set[Span], Set[Span], Set[Span]]:
    full = {s for s, t in labels.items() if t.is_full_predicate}
    partial = {s for s, t in labels.items() if t.is_partial_predicate}
    roles = {s for s, t in labels.items() if t.is_role}
    return full, partial, roles


def gold_frames(sentence: AnnotatedSentence) -> Dict[Span, str]:
    """Frame of every predicate piece; the first tuple wins when a piece is shared."""
    frames: Dict[Span, str] = {}
    for t in sentence.tuples:
        for piece in t.predicate.pieces:
            frames.setdefault(piece, t.frame)
    return frames


# ---------------------------------------------------------------------------
# Lexical-unit licensing
# ---------------------------------------------------------------------------


def lemma_key(lemmas: Sequence[str], spans: Sequence[Span]) -> str:
    return " ".join(lemmas[i] for s in spans for i in range(s.start, s.end + 1))


def license_frames(predicate_span: Span, lemmas: Sequence[str], ontology: FrameOntology) -> Optional[FrozenSet[str]]:
    """Frames licensed for the span's pseudo lexical unit, or None when the lexicon has no entry."""
    return ontology.lexicon.get(lemma_key(lemmas, [predicate_span]))


def license_predicate_frames(pieces: Sequence[Span], lemmas: Sequence[str], ontology: FrameOntology) -> Optional[FrozenSet[str]]:
    return ontology.lexicon.get(lemma_key(lemmas, pieces))


def node_license(span: Span, node_type: NodeType, lemmas: Sequence[str], ontology: FrameOntology) -> Optional[FrozenSet[str]]:
    """
    Per-node frame license, or None for an unmasked distribution.

    Only a node that is a full predicate and nothing else is masked by its own
    lexicon entry. A PPRD piece is part of a larger lexical unit ("take" in
    "take ... out"), so its entry says nothing about the predicate's frame; the
    whole-predicate license is applied when the pieces are summed.
    """
    if not node_type.is_full_predicate or node_type.is_partial_predicate:
        return None
    return license_frames(span, lemmas, ontology)


# ---------------------------------------------------------------------------
# Classifiers
# ---------------------------------------------------------------------------


@dataclass
class FrameDistribution:
    probs: np.ndarray
    mask_applied: bool


class NodeTypeClassifier(nn.Module):
    def __init__(self, input_dim: int, hidden_dim: int = 150, dropout: float = 0.2):
        super().__init__()
        self.mlp = MLP(input_dim, hidden_dim, len(NODE_TYPES), dropout)

    def forward(self, g: torch.Tensor) -> torch.Tensor:
        """Log-probabilities over the eight node types."""
        return torch.log_softmax(self.mlp(g), dim=-1)

    def classify_node_type(self, g: torch.Tensor) -> torch.Tensor:
        return self.forward(g).exp()


class FrameClassifier(nn.Module):
    """
    Frame classification over the ontology frame list with lexical-unit masking.

    ``empty_license_count`` counts licensed sets that were empty and therefore
    treated as no mask.
    """

    def __init__(self, input_dim: int, ontology: FrameOntology, hidden_dim: int = 150, dropout: float = 0.2):
        super().__init__()
        self.frames = ontology.frames
        self.frame_index = ontology.frame_index
        self.mlp = MLP(input_dim, hidden_dim, len(self.frames), dropout)
        self.empty_license_count = 0

    def mask_for(self, licensed: Optional[FrozenSet[str]]) -> Optional[torch.Tensor]:
        if licensed is None:
            return None
        if not licensed:
            self.empty_license_count += 1
            logger.debug("empty licensed frame set treated as no mask (%d so far)", self.empty_license_count)
            return None
        mask = torch.zeros(len(self.frames), dtype=torch.bool)
        for frame in licensed:
            if frame in self.frame_index:
                mask[self.frame_index[frame]] = True
        return mask

    def forward(self, g: torch.Tensor, licensed: Sequence[Optional[FrozenSet[str]]]) -> Tuple[torch.Tensor, List[bool]]:
        """
        Log-probabilities over frames for each row of ``g``.

        ``licensed[i]`` is the licensed set of row i (None = no mask). Returns
        the log-probabilities and, per row, whether a mask was applied.
        """
        logits = self.mlp(g)
        masks = [self.mask_for(lic) for lic in licensed]
        applied = [m is not None for m in masks]
        if not any(applied):
            return torch.log_softmax(logits, dim=-1), applied
        full = torch.ones(len(self.frames), dtype=torch.bool)
        stacked = torch.stack([m if m is not None else full for m in masks]).to(logits.device)
        return masked_log_softmax(logits, stacked), applied

    def classify_frame(self, g: torch.Tensor, licensed: Optional[FrozenSet[str]]) -> FrameDistribution:
        log_probs, applied = self.forward(g.unsqueeze(0), [licensed])
        return FrameDistribution(log_probs[0].exp().detach().cpu().numpy(), applied[0])
