"""
fsgraph - frame-semantic parsing as graph construction

fsgraph parses a sentence into frame tuples (predicate, frame, roles) by typing
candidate spans as predicate and role nodes, classifying the frames of
predicate nodes, and linking nodes with predicate-predicate and predicate-role
edges. Discontinuous predicates come out of the predicate-predicate edges.
"""

from .corpus import (
    AnnotatedSentence,
    FrameOntology,
    FrameTuple,
    Predicate,
    RoleAssignment,
    Span,
    Token,
    load_corpus,
    load_ontology,
    save_corpus,
)
from .decoder import decode_frame, decode_graph, decode_roles, decode_targets, parse
from .deserializable import Deserializable
from .errors import FsGraphError
from .metrics import EvalReport, PRF, evaluate
from .model import FrameGraphModel
from .pipeline import PipelineSystem, build_system, run_comparison
from .rendering import render_package_template, render_template
from .training import build_variant, compute_loss, load_checkpoint, save_checkpoint, train

__version__ = "0.3.0"
__all__ = [
    "AnnotatedSentence",
    "Deserializable",
    "EvalReport",
    "FrameGraphModel",
    "FrameOntology",
    "FrameTuple",
    "FsGraphError",
    "PRF",
    "PipelineSystem",
    "Predicate",
    "RoleAssignment",
    "Span",
    "Token",
    "build_system",
    "build_variant",
    "compute_loss",
    "decode_frame",
    "decode_graph",
    "decode_roles",
    "decode_targets",
    "evaluate",
    "load_checkpoint",
    "load_corpus",
    "load_ontology",
    "parse",
    "render_package_template",
    "render_template",
    "run_comparison",
    "save_checkpoint",
    "save_corpus",
    "train",
]
