"""
Edge building between typed span nodes.

Predicate-predicate edges decide whether two partial-predicate pieces belong to
the same discontinuous predicate. Predicate-role edges label a (predicate node,
role node) pair with a role name from the global role list, or NULL. Both
classifiers read the pair feature ``[g_i; g_j; g_i * g_j]``.
"""

from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import torch
import torch.nn as nn

from .corpus import AnnotatedSentence, FrameOntology, Span
from .layers import MLP
from .node_builder import NodeType

PP_NULL = 0
PP_CONNECTED = 1

SpanPair = Tuple[Span, Span]


class CandidateMode(str, Enum):
    GOLD_NODES = "gold-nodes"
    PREDICTED_NODES = "predicted-nodes"


def pair_feature(gi: torch.Tensor, gj: torch.Tensor) -> torch.Tensor:
    return torch.cat([gi, gj, gi * gj], dim=-1)


def canonical_pair(a: Span, b: Span) -> SpanPair:
    if a == b:
        raise ValueError(f"an edge needs two distinct spans, got {a!r} twice")
    return (a, b) if a < b else (b, a)


class PPEdgeScorer(nn.Module):
    """Binary Connected/NULL classifier over unordered PPRD pairs."""

    def __init__(self, span_dim: int, hidden_dim: int = 150, dropout: float = 0.2):
        super().__init__()
        self.mlp = MLP(3 * span_dim, hidden_dim, 2, dropout)

    def forward(self, gi: torch.Tensor, gj: torch.Tensor) -> torch.Tensor:
        return torch.log_softmax(self.mlp(pair_feature(gi, gj)), dim=-1)

    def score_pp_edge(self, a: Tuple[Span, torch.Tensor], b: Tuple[Span, torch.Tensor]) -> torch.Tensor:
        """Probabilities [NULL, Connected] of one pair; argument order does not matter."""
        (sa, ga), (sb, gb) = a, b
        first, _ = canonical_pair(sa, sb)
        gi, gj = (ga, gb) if first == sa else (gb, ga)
        return self.forward(gi, gj).exp()


class PREdgeScorer(nn.Module):
    """Multiclass classifier over the global role labels plus NULL (last index)."""

    def __init__(self, span_dim: int, ontology: FrameOntology, hidden_dim: int = 150, dropout: float = 0.2):
        super().__init__()
        self.role_labels = ontology.role_labels
        self.null_index = len(self.role_labels)
        self.mlp = MLP(3 * span_dim, hidden_dim, len(self.role_labels) + 1, dropout)

    def forward(self, gp: torch.Tensor, gr: torch.Tensor) -> torch.Tensor:
        return torch.log_softmax(self.mlp(pair_feature(gp, gr)), dim=-1)

    def score_pr_edge(self, gp: torch.Tensor, gr: torch.Tensor) -> torch.Tensor:
        return self.forward(gp, gr).exp()


@dataclass
class CandidatePairs:
    pp: List[SpanPair]
    pr: List[SpanPair]


def build_candidate_pairs(nodes: Mapping[Span, NodeType]) -> CandidatePairs:
    """
    Candidate edges over typed nodes.

    pp: every unordered pair of PPRD-typed spans, canonically ordered.
    pr: every (predicate-typed span, ROLE-typed span) pair of distinct spans.
    """
    partial = sorted(s for s, t in nodes.items() if t.is_partial_predicate)
    predicates = sorted(s for s, t in nodes.items() if t.is_predicate)
    roles = sorted(s for s, t in nodes.items() if t.is_role)
    pp = list(combinations(partial, 2))
    pr = [(p, r) for p in predicates for r in roles if p != r]
    return CandidatePairs(pp, pr)


def select_node_types(
    mode: CandidateMode,
    gold: Mapping[Span, NodeType],
    predicted: Mapping[Span, NodeType],
) -> Dict[Span, NodeType]:
    """Type source for candidate pairs: gold labels or the model's own predictions."""
    source = gold if CandidateMode(mode) == CandidateMode.GOLD_NODES else predicted
    return {s: t for s, t in source.items() if t != NodeType.NULL}


@dataclass
class GoldEdges:
    connected: set
    roles: Dict[SpanPair, str]

    def pp_label(self, pair: SpanPair) -> int:
        return PP_CONNECTED if canonical_pair(*pair) in self.connected else PP_NULL

    def pr_label(self, pair: SpanPair, role_index: Mapping[str, int], null_index: int) -> int:
        name = self.roles.get(pair)
        return null_index if name is None else role_index[name]


def gold_edge_labels(sentence: AnnotatedSentence) -> GoldEdges:
    """
    Gold edges of a sentence.

    Pieces of one discontinuous predicate are pairwise Connected. Every piece of
    a predicate carries each of the predicate's role labels; the first label
    wins when two tuples label the same pair.
    """
    connected = set()
    roles: Dict[SpanPair, str] = {}
    for t in sentence.tuples:
        pieces = t.predicate.pieces
        if len(pieces) > 1:
            connected.update(combinations(sorted(pieces), 2))
        for piece in pieces:
            for role in t.roles:
                if role.value != piece:
                    roles.setdefault((piece, role.value), role.role_name)
    return GoldEdges(connected, roles)


def pair_rows(pairs: Sequence[SpanPair], row: Mapping[Span, int], device: Optional[torch.device] = None) -> Tuple[torch.Tensor, torch.Tensor]:
    left = torch.tensor([row[a] for a, _ in pairs], dtype=torch.long, device=device)
    right = torch.tensor([row[b] for _, b in pairs], dtype=torch.long, device=device)
    return left, right
