"""
Exact-match evaluation.

Targets match when the full sorted piece list matches; frames when the piece
list and the frame match; roles when the predicate's piece list, the role name
and the role span all match. Both sides are deduplicated before counting, and
module-level metrics score the node, frame and edge decisions of the scored
graphs before decoding.
"""

import logging
from typing import Callable, Dict, Hashable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .corpus import AnnotatedSentence, FrameTuple, Span
from .decoder import ParseGraph
from .deserializable import Deserializable
from .edge_builder import PP_CONNECTED, PP_NULL, gold_edge_labels
from .errors import AlignmentError
from .node_builder import NodeType, gold_frames, gold_node_types

logger = logging.getLogger(__name__)

TupleLists = Sequence[Sequence[FrameTuple]]

ROLE_LENGTH_BUCKETS: Tuple[Tuple[str, int, int], ...] = (
    ("1", 1, 1),
    ("2", 2, 2),
    ("3", 3, 3),
    ("4", 4, 4),
    ("5-6", 5, 6),
    ("7-9", 7, 9),
    ("10+", 10, 1 << 30),
)
PREDICATE_KINDS = ("single-word", "multi-word", "discontinuous")


class PRF(Deserializable):
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    tp: int = 0
    pred_count: int = 0
    gold_count: int = 0

    @classmethod
    def from_counts(cls, tp: int, pred_count: int, gold_count: int) -> "PRF":
        precision = tp / pred_count if pred_count else 0.0
        recall = tp / gold_count if gold_count else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return cls(precision=precision, recall=recall, f1=f1, tp=tp, pred_count=pred_count, gold_count=gold_count)

    @classmethod
    def from_sets(cls, pred: Set[Hashable], gold: Set[Hashable]) -> "PRF":
        return cls.from_counts(len(pred & gold), len(pred), len(gold))

    def __add__(self, other: "PRF") -> "PRF":
        return PRF.from_counts(self.tp + other.tp, self.pred_count + other.pred_count, self.gold_count + other.gold_count)


class ModuleReport(Deserializable):
    node: PRF
    frame_module: PRF
    edge: PRF


class Breakdown(Deserializable):
    target_by_kind: Dict[str, PRF]
    role_by_length: Dict[str, PRF]


class SentenceReport(Deserializable):
    index: int = 0
    target: PRF
    frame: PRF
    role: PRF


class EvalReport(Deserializable):
    target: PRF
    frame: PRF
    role: PRF
    node: PRF
    frame_module: PRF
    edge: PRF
    breakdown: Optional[Breakdown] = None
    sentences: Optional[List[SentenceReport]] = None

    @property
    def headline(self) -> Dict[str, float]:
        return {"target_f1": self.target.f1, "frame_f1": self.frame.f1, "role_f1": self.role.f1}


# ---------------------------------------------------------------------------
# Item extraction
# ---------------------------------------------------------------------------


def predicate_key(t: FrameTuple) -> Tuple[Span, ...]:
    return tuple(sorted(t.predicate.pieces))


def predicate_kind(t: FrameTuple) -> str:
    if t.predicate.is_discontinuous:
        return "discontinuous"
    return "single-word" if t.predicate.pieces[0].length == 1 else "multi-word"


def role_bucket(span: Span) -> str:
    for name, low, high in ROLE_LENGTH_BUCKETS:
        if low <= span.length <= high:
            return name
    raise ValueError(f"no bucket for span length {span.length}")


def target_items(corpus: TupleLists) -> Set[Hashable]:
    return {(i, predicate_key(t)) for i, tuples in enumerate(corpus) for t in tuples}


def frame_items(corpus: TupleLists) -> Set[Hashable]:
    return {(i, predicate_key(t), t.frame) for i, tuples in enumerate(corpus) for t in tuples}


def role_items(corpus: TupleLists) -> Set[Hashable]:
    return {
        (i, predicate_key(t), r.role_name, r.value)
        for i, tuples in enumerate(corpus)
        for t in tuples
        for r in t.roles
    }


def eval_target(pred: TupleLists, gold: TupleLists) -> PRF:
    """Target identification PRF over per-sentence tuple lists aligned by index."""
    return PRF.from_sets(target_items(pred), target_items(gold))


def eval_frame(pred: TupleLists, gold: TupleLists) -> PRF:
    return PRF.from_sets(frame_items(pred), frame_items(gold))


def eval_role(pred: TupleLists, gold: TupleLists) -> PRF:
    return PRF.from_sets(role_items(pred), role_items(gold))


# ---------------------------------------------------------------------------
# Module metrics
# ---------------------------------------------------------------------------


def graph_items(graphs: Sequence[ParseGraph]) -> Tuple[Set, Set, Set]:
    nodes, frames, edges = set(), set(), set()
    for i, graph in enumerate(graphs):
        for span, node in graph.nodes.items():
            if node.node_type != NodeType.NULL:
                nodes.add((i, span, node.node_type))
            if node.node_type.is_predicate and node.frame_probs is not None:
                frames.add((i, span, graph.frames[int(np.argmax(node.frame_probs))]))
        for (a, b), probs in graph.pp_edges.items():
            if probs[PP_CONNECTED] > probs[PP_NULL]:
                edges.add((i, "pp", a, b, None))
        for (p, r), probs in graph.pr_edges.items():
            best = int(np.argmax(probs))
            if best != graph.null_role:
                edges.add((i, "pr", p, r, graph.role_labels[best]))
    return nodes, frames, edges


def gold_graph_items(golds: Sequence[AnnotatedSentence]) -> Tuple[Set, Set, Set]:
    nodes, frames, edges = set(), set(), set()
    for i, sentence in enumerate(golds):
        types, _ = gold_node_types(sentence)
        nodes.update((i, span, t) for span, t in types.items())
        frames.update((i, span, f) for span, f in gold_frames(sentence).items())
        gold = gold_edge_labels(sentence)
        edges.update((i, "pp", a, b, None) for a, b in gold.connected)
        edges.update((i, "pr", p, r, name) for (p, r), name in gold.roles.items())
    return nodes, frames, edges


def eval_modules(graphs: Sequence[ParseGraph], golds: Sequence[AnnotatedSentence]) -> ModuleReport:
    """
    Node, frame and edge PRF of scored graphs before decoding.

    Node types must match exactly (FPRD against gold FPRD-ROLE is a miss); the
    frame metric covers every predicate node, PPRD pieces included; edges are
    the non-NULL labeled edges.
    """
    if len(graphs) != len(golds):
        raise AlignmentError(min(len(graphs), len(golds)), f"{len(graphs)} graphs for {len(golds)} gold sentences")
    pn, pf, pe = graph_items(graphs)
    gn, gf, ge = gold_graph_items(golds)
    return ModuleReport(node=PRF.from_sets(pn, gn), frame_module=PRF.from_sets(pf, gf), edge=PRF.from_sets(pe, ge))


# ---------------------------------------------------------------------------
# Breakdowns
# ---------------------------------------------------------------------------


def _filtered(corpus: TupleLists, keep: Callable[[FrameTuple], bool]) -> List[List[FrameTuple]]:
    return [[t for t in tuples if keep(t)] for tuples in corpus]


def target_by_kind(pred: TupleLists, gold: TupleLists) -> Dict[str, PRF]:
    out = {}
    for kind in PREDICATE_KINDS:
        def keep(t, kind=kind):
            return predicate_kind(t) == kind

        out[kind] = eval_target(_filtered(pred, keep), _filtered(gold, keep))
    return out


def role_by_length(pred: TupleLists, gold: TupleLists) -> Dict[str, PRF]:
    p_items, g_items = role_items(pred), role_items(gold)
    out = {}
    for name, _, _ in ROLE_LENGTH_BUCKETS:
        p = {x for x in p_items if role_bucket(x[3]) == name}
        g = {x for x in g_items if role_bucket(x[3]) == name}
        out[name] = PRF.from_sets(p, g)
    return out


def exclude_discontinuous(corpus: TupleLists) -> List[List[FrameTuple]]:
    return _filtered(corpus, lambda t: not t.predicate.is_discontinuous)


# ---------------------------------------------------------------------------
# Corpus-level report
# ---------------------------------------------------------------------------


def check_alignment(pred: Sequence[AnnotatedSentence], gold: Sequence[AnnotatedSentence]) -> None:
    """Sentences align by position and must carry identical tokens."""
    for i, (p, g) in enumerate(zip(pred, gold)):
        if p.words != g.words:
            raise AlignmentError(i, "tokens differ between prediction and gold")
    if len(pred) != len(gold):
        raise AlignmentError(min(len(pred), len(gold)), f"{len(pred)} predicted sentences for {len(gold)} gold sentences")


def evaluate(
    pred: Sequence[AnnotatedSentence],
    gold: Sequence[AnnotatedSentence],
    graphs: Optional[Sequence[ParseGraph]] = None,
    per_sentence: bool = False,
    exclude_discontinuous_predicates: bool = False,
    breakdown: bool = True,
) -> EvalReport:
    check_alignment(pred, gold)
    p_tuples = [list(s.tuples) for s in pred]
    g_tuples = [list(s.tuples) for s in gold]
    if exclude_discontinuous_predicates:
        p_tuples, g_tuples = exclude_discontinuous(p_tuples), exclude_discontinuous(g_tuples)

    modules = eval_modules(graphs, gold) if graphs is not None else ModuleReport()
    report = EvalReport(
        target=eval_target(p_tuples, g_tuples),
        frame=eval_frame(p_tuples, g_tuples),
        role=eval_role(p_tuples, g_tuples),
        node=modules.node,
        frame_module=modules.frame_module,
        edge=modules.edge,
    )
    if breakdown:
        report.breakdown = Breakdown(
            target_by_kind=target_by_kind(p_tuples, g_tuples),
            role_by_length=role_by_length(p_tuples, g_tuples),
        )
    if per_sentence:
        report.sentences = [
            SentenceReport(
                index=i,
                target=eval_target([p], [g]),
                frame=eval_frame([p], [g]),
                role=eval_role([p], [g]),
            )
            for i, (p, g) in enumerate(zip(p_tuples, g_tuples))
        ]
    logger.debug("evaluated %d sentences: %s", len(gold), report.headline)
    return report
