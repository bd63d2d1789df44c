"""
Zeroth-order semi-Markov CRF for semantic role labeling.

A labeled segmentation covers tokens ``0..n-1`` exactly with segments of length
1..L; its score is the sum of its segment scores (no label transitions). The
lattice holds ``scores[start, length - 1, label]``; entries with
``start + length > n`` are ignored. Labels are the frame's roles followed by
``O`` (outside), which is always the last label.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import torch
import torch.nn as nn

from .corpus import FrameOntology, RoleAssignment, Span
from .edge_builder import pair_feature
from .encoder import SpanBatch
from .errors import OntologyError, SegmentationError

logger = logging.getLogger(__name__)

# outside label; reserved, so no ontology role may use it
OUTSIDE = "<O>"


@dataclass
class SegmentLattice:
    scores: torch.Tensor  # (n, L, C)
    labels: Tuple[str, ...]

    def __post_init__(self):
        if self.scores.dim() != 3:
            raise ValueError("lattice scores must have shape (n, L, C)")
        if self.scores.size(2) != len(self.labels):
            raise ValueError("label count does not match the lattice")

    @property
    def n(self) -> int:
        return self.scores.size(0)

    @property
    def max_length(self) -> int:
        return self.scores.size(1)

    def segment_score(self, start: int, end: int, label: int) -> torch.Tensor:
        return self.scores[start, end - start, label]


@dataclass(frozen=True)
class Segmentation:
    """Ordered (start, end, label index) segments, ends inclusive."""

    segments: Tuple[Tuple[int, int, int], ...]

    def validate(self, n: int, max_length: int, n_labels: int) -> None:
        pos = 0
        for start, end, label in self.segments:
            if start != pos:
                raise SegmentationError(f"segment starting at {start} leaves a gap or overlap at {pos}")
            if end < start or end - start + 1 > max_length:
                raise SegmentationError(f"segment [{start}, {end}] has invalid length")
            if not 0 <= label < n_labels:
                raise SegmentationError(f"label index {label} out of range")
            pos = end + 1
        if pos != n:
            raise SegmentationError(f"segmentation covers {pos} of {n} tokens")

    def score(self, lattice: SegmentLattice) -> torch.Tensor:
        total = lattice.scores.new_zeros(())
        for start, end, label in self.segments:
            total = total + lattice.segment_score(start, end, label)
        return total


def forward_logZ(lattice: SegmentLattice) -> torch.Tensor:
    """Log partition function over all labeled segmentations (differentiable)."""
    n, L, _ = lattice.scores.shape
    if n < 1:
        raise ValueError("empty lattice")
    alpha = [lattice.scores.new_zeros(())]
    for j in range(1, n + 1):
        terms = [
            alpha[j - l] + lattice.scores[j - l, l - 1]
            for l in range(1, min(L, j) + 1)
        ]
        alpha.append(torch.logsumexp(torch.cat(terms), dim=0))
    return alpha[n]


def viterbi(lattice: SegmentLattice) -> Segmentation:
    """
    Best segmentation. Ties go to the shorter first segment, then to the lower
    label index.
    """
    n, L, C = lattice.scores.shape
    scores = lattice.scores.detach().tolist()
    best = [0.0] * (n + 1)  # best[i]: best score of tokens i..n-1
    choice: List[Optional[Tuple[int, int]]] = [None] * (n + 1)
    for i in range(n - 1, -1, -1):
        top, arg = float("-inf"), None
        for l in range(1, min(L, n - i) + 1):
            row = scores[i][l - 1]
            for c in range(C):
                value = row[c] + best[i + l]
                if value > top:
                    top, arg = value, (l, c)
        best[i], choice[i] = top, arg

    segments = []
    i = 0
    while i < n:
        l, c = choice[i]
        segments.append((i, i + l - 1, c))
        i += l
    return Segmentation(tuple(segments))


def semicrf_nll(lattice: SegmentLattice, gold: Segmentation) -> torch.Tensor:
    gold.validate(lattice.n, lattice.max_length, len(lattice.labels))
    return forward_logZ(lattice) - gold.score(lattice)


def segment_marginals(lattice: SegmentLattice) -> torch.Tensor:
    """Posterior probability of every (start, length, label) segment."""
    scores = lattice.scores.detach().clone().requires_grad_(True)
    logz = forward_logZ(SegmentLattice(scores, lattice.labels))
    (grad,) = torch.autograd.grad(logz, scores)
    return grad


def gold_segmentation(
    roles: Sequence[RoleAssignment],
    n: int,
    max_length: int,
    labels: Sequence[str],
) -> Tuple[Segmentation, int]:
    """
    Encode role spans as a segmentation; uncovered tokens become length-1 outside segments.

    Overlapping roles cannot be represented: longer spans are kept first and
    the rest dropped. Roles longer than ``max_length`` are dropped too. Returns
    the segmentation and the number of dropped roles.
    """
    index = {name: i for i, name in enumerate(labels)}
    outside = index[OUTSIDE]
    kept: List[RoleAssignment] = []
    dropped = 0
    for role in sorted(roles, key=lambda r: (-r.value.length, r.value.start)):
        if role.value.length > max_length or role.role_name not in index or role.value.end >= n:
            dropped += 1
        elif any(role.value.overlaps(k.value) for k in kept):
            dropped += 1
        else:
            kept.append(role)

    by_start = {r.value.start: r for r in kept}
    segments = []
    i = 0
    while i < n:
        role = by_start.get(i)
        if role is not None:
            segments.append((i, role.value.end, index[role.role_name]))
            i = role.value.end + 1
        else:
            segments.append((i, i, outside))
            i += 1
    return Segmentation(tuple(segments)), dropped


class SemiCRFRoleLabeler(nn.Module):
    """
    Lattice scores from span representations: a per-label linear head over
    ``[g_span; g_pred; g_span * g_pred]`` where ``g_pred`` is the mean of the
    predicate pieces' representations. Label space is the global role list plus the
    reserved outside label.
    """

    def __init__(self, span_dim: int, ontology: FrameOntology, max_span_length: int):
        super().__init__()
        if OUTSIDE in ontology.role_labels:
            raise OntologyError(f"role name {OUTSIDE!r} is reserved for the outside label")
        self.ontology = ontology
        self.global_labels = ontology.role_labels + (OUTSIDE,)
        self.label_index = {name: i for i, name in enumerate(self.global_labels)}
        self.max_span_length = max_span_length
        self.head = nn.Linear(3 * span_dim, len(self.global_labels))
        self.dropped_roles = 0

    def frame_labels(self, frame: str) -> Tuple[str, ...]:
        return tuple(self.ontology.roles_of[frame]) + (OUTSIDE,)

    def lattice(self, batch: SpanBatch, pieces: Sequence[Span], frame: str, n: int) -> SegmentLattice:
        L = min(self.max_span_length, n)
        g_pred = batch.rows(pieces).mean(dim=0)
        spans = [Span(i, i + l - 1) for i in range(n) for l in range(1, L + 1) if i + l <= n]
        g = batch.rows(spans)
        all_scores = self.head(pair_feature(g, g_pred.expand_as(g)))

        labels = self.frame_labels(frame)
        columns = torch.tensor([self.label_index[x] for x in labels], dtype=torch.long, device=g.device)
        picked = all_scores.index_select(1, columns)

        scores = picked.new_zeros(n, L, len(labels))
        starts = torch.tensor([s.start for s in spans], dtype=torch.long, device=g.device)
        widths = torch.tensor([s.length - 1 for s in spans], dtype=torch.long, device=g.device)
        scores = scores.index_put((starts, widths), picked)
        return SegmentLattice(scores, labels)

    def nll(self, batch: SpanBatch, pieces: Sequence[Span], frame: str, roles: Sequence[RoleAssignment], n: int) -> torch.Tensor:
        lat = self.lattice(batch, pieces, frame, n)
        gold, dropped = gold_segmentation(roles, n, lat.max_length, lat.labels)
        if dropped:
            self.dropped_roles += dropped
            logger.debug("semi-CRF gold dropped %d overlapping or long roles (%d total)", dropped, self.dropped_roles)
        return semicrf_nll(lat, gold)

    def srl_with_semicrf(self, batch: SpanBatch, pieces: Sequence[Span], frame: str, n: int) -> List[RoleAssignment]:
        lat = self.lattice(batch, pieces, frame, n)
        best = viterbi(lat)
        return [
            RoleAssignment(lat.labels[label], Span(start, end))
            for start, end, label in best.segments
            if lat.labels[label] != OUTSIDE
        ]
