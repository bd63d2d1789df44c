"""
Decoding a scored parse graph into frame tuples.

1. Targets: every FPRD node is a one-piece predicate; PPRD nodes joined by
   Connected predicate-predicate edges form connected components, and each
   component of two or more nodes is one discontinuous predicate.
2. Frames: the frame distributions of a predicate's nodes are summed and the
   best frame taken (lowest frame index on ties).
3. Roles: for every role node, predicate-role distributions are averaged over
   the predicate's nodes, restricted to the predicted frame's roles plus NULL,
   and the best label kept unless NULL is at least as likely.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .corpus import AnnotatedSentence, FrameOntology, FrameTuple, Predicate, RoleAssignment, Span
from .edge_builder import PP_CONNECTED, PP_NULL, SpanPair, canonical_pair
from .errors import DecodingError
from .node_builder import NodeType, license_predicate_frames

logger = logging.getLogger(__name__)


@dataclass
class GraphNode:
    span: Span
    node_type: NodeType
    frame_probs: Optional[np.ndarray] = None
    mask_applied: bool = False


@dataclass
class SuppliedPredicate:
    """A predicate handed to the decoder by an earlier pipeline stage (or gold input)."""

    pieces: Tuple[Span, ...]
    frame: Optional[str] = None


@dataclass
class ParseGraph:
    frames: Tuple[str, ...]
    role_labels: Tuple[str, ...]
    nodes: Dict[Span, GraphNode] = field(default_factory=dict)
    pp_edges: Dict[SpanPair, np.ndarray] = field(default_factory=dict)
    pr_edges: Dict[SpanPair, np.ndarray] = field(default_factory=dict)
    supplied: Optional[List[SuppliedPredicate]] = None

    @property
    def null_role(self) -> int:
        return len(self.role_labels)

    def add_node(self, span: Span, node_type: NodeType) -> GraphNode:
        node = self.nodes.get(span)
        if node is None:
            node = self.nodes[span] = GraphNode(span, node_type)
        else:
            node.node_type = node.node_type.merge(node_type)
        return node

    def set_pp(self, a: Span, b: Span, probs) -> None:
        self.pp_edges[canonical_pair(a, b)] = np.asarray(probs, dtype=float)

    def pp(self, a: Span, b: Span) -> Optional[np.ndarray]:
        return self.pp_edges.get(canonical_pair(a, b))

    def absorb(self, other: "ParseGraph") -> None:
        """Merge a later pipeline stage's graph: node types are unioned, scores overwrite."""
        for span, node in other.nodes.items():
            mine = self.add_node(span, node.node_type)
            if node.frame_probs is not None:
                mine.frame_probs, mine.mask_applied = node.frame_probs, node.mask_applied
        self.pp_edges.update(other.pp_edges)
        self.pr_edges.update(other.pr_edges)

    def validate(self) -> None:
        for a, b in self.pp_edges:
            for s in (a, b):
                node = self.nodes.get(s)
                if node is None or not node.node_type.is_partial_predicate:
                    raise DecodingError(f"pp edge endpoint {s!r} is not a PPRD node")
        for p, r in self.pr_edges:
            if p not in self.nodes or r not in self.nodes:
                raise DecodingError(f"pr edge ({p!r}, {r!r}) has an endpoint outside the node set")


@dataclass(frozen=True)
class DecodedPredicate:
    pieces: Tuple[Span, ...]
    source_nodes: Tuple[Span, ...]


class UnionFind:
    """Disjoint sets with path compression and union by rank."""

    def __init__(self, elements: Iterable = ()):
        self.parent = {}
        self.rank = {}
        for e in elements:
            self.add(e)

    def add(self, element) -> None:
        if element not in self.parent:
            self.parent[element] = element
            self.rank[element] = 0

    def find(self, element):
        self.add(element)
        root = element
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[element] != root:
            self.parent[element], element = root, self.parent[element]
        return root

    def union(self, a, b) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1

    def groups(self) -> List[List]:
        out: Dict = {}
        for e in self.parent:
            out.setdefault(self.find(e), []).append(e)
        return list(out.values())


def decode_targets(graph: ParseGraph, promote_singletons: bool = False) -> List[DecodedPredicate]:
    """
    Assemble predicates from FPRD nodes and Connected components of PPRD nodes.

    Singleton PPRD components are dropped unless ``promote_singletons``.
    Duplicate piece sets are returned once.
    """
    found: Dict[Tuple[Span, ...], DecodedPredicate] = {}
    for span, node in graph.nodes.items():
        if node.node_type.is_full_predicate:
            found.setdefault((span,), DecodedPredicate((span,), (span,)))

    partial = sorted(s for s, n in graph.nodes.items() if n.node_type.is_partial_predicate)
    uf = UnionFind(partial)
    for (a, b), probs in graph.pp_edges.items():
        if a in uf.parent and b in uf.parent and probs[PP_CONNECTED] > probs[PP_NULL]:
            uf.union(a, b)
    for group in uf.groups():
        if len(group) < 2 and not promote_singletons:
            continue
        pieces = tuple(sorted(group))
        found.setdefault(pieces, DecodedPredicate(pieces, pieces))
    return [found[k] for k in sorted(found)]


def decode_frame(
    predicate: DecodedPredicate,
    graph: ParseGraph,
    licensed: Optional[FrozenSet[str]] = None,
) -> str:
    """
    Best frame after summing the frame distributions of the predicate's nodes.

    ``licensed`` optionally restricts the choice to a whole-predicate licensed set.
    """
    total = np.zeros(len(graph.frames))
    for span in predicate.source_nodes:
        node = graph.nodes.get(span)
        if node is None or node.frame_probs is None:
            raise DecodingError(f"node {span!r} has no frame distribution")
        total = total + node.frame_probs
    if licensed:
        allowed = np.array([f in licensed for f in graph.frames])
        if allowed.any():
            total = np.where(allowed, total, -np.inf)
    return graph.frames[int(np.argmax(total))]


def decode_roles(
    predicate: DecodedPredicate,
    frame: str,
    graph: ParseGraph,
    ontology: FrameOntology,
) -> List[RoleAssignment]:
    """
    Role assignments for one predicate, restricted to the roles of ``frame``.

    A role node gets at most one label per predicate; NULL wins ties.
    """
    if frame not in ontology.roles_of:
        raise DecodingError(f"frame {frame!r} is not in the ontology")
    label_index = {name: i for i, name in enumerate(graph.role_labels)}
    candidates = [label_index[r] for r in ontology.roles_of[frame] if r in label_index]
    null = graph.null_role

    assignments = []
    for span in sorted(s for s, n in graph.nodes.items() if n.node_type.is_role):
        dists = [graph.pr_edges[(p, span)] for p in predicate.source_nodes if (p, span) in graph.pr_edges]
        if not dists or not candidates:
            continue
        mean = np.mean(np.stack(dists), axis=0)
        restricted = mean[candidates]
        best = int(np.argmax(restricted))
        if restricted[best] > mean[null]:
            assignments.append(RoleAssignment(graph.role_labels[candidates[best]], span))
    return assignments


@dataclass
class DecodeOptions:
    lu_mask: bool = True
    promote_singleton_pprd: bool = False


def decode_graph(
    graph: ParseGraph,
    ontology: FrameOntology,
    lemmas: Optional[Sequence[str]] = None,
    options: Optional[DecodeOptions] = None,
) -> List[FrameTuple]:
    """Run target, frame and role decoding over one scored graph."""
    options = options or DecodeOptions()
    supplied_frames: Dict[Tuple[Span, ...], Optional[str]] = {}
    if graph.supplied is not None:
        predicates = []
        for sp in graph.supplied:
            pieces = tuple(sorted(sp.pieces))
            if pieces in supplied_frames:
                continue
            supplied_frames[pieces] = sp.frame
            predicates.append(DecodedPredicate(pieces, pieces))
    else:
        predicates = decode_targets(graph, options.promote_singleton_pprd)

    tuples = []
    for pred in predicates:
        frame = supplied_frames.get(pred.pieces)
        if frame is None:
            if all(graph.nodes.get(s) is not None and graph.nodes[s].frame_probs is not None for s in pred.source_nodes):
                licensed = None
                if options.lu_mask and lemmas is not None:
                    licensed = license_predicate_frames(pred.pieces, lemmas, ontology)
                frame = decode_frame(pred, graph, licensed)
            else:
                # no frame head in this model: placeholder, scored on targets only
                frame = ontology.frames[0]
        roles = decode_roles(pred, frame, graph, ontology) if graph.pr_edges else []
        tuples.append(FrameTuple(Predicate(pred.pieces), frame, tuple(roles)))
    return tuples


def parse(sentence: AnnotatedSentence, model) -> List[FrameTuple]:
    """
    End-to-end parse of one sentence.

    ``model`` is anything with ``parse_sentence`` (a trained FrameGraphModel or a
    pipeline system).
    """
    return model.parse_sentence(sentence)
