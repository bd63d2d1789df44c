"""
Conversion of a FrameNet release into the fsgraph corpus and ontology files.

The release is read with nltk's FrameNet corpus reader (install the
``framenet`` extra). The release itself is not shipped; point
``convert_fulltext`` at an unpacked copy.
"""

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

from .corpus import AnnotatedSentence, FrameOntology, FrameTuple, Predicate, RoleAssignment, Span, save_corpus, save_ontology
from .errors import ConfigError, CorpusError

logger = logging.getLogger(__name__)

_TOKEN = re.compile(r"\S+")


def _reader(root: Union[str, Path]):
    try:
        from nltk.corpus.reader.framenet import FramenetCorpusReader
    except ImportError as e:  # pragma: no cover - optional extra
        raise ConfigError("FrameNet conversion needs the 'framenet' extra (nltk)") from e
    return FramenetCorpusReader(str(root), [])


def lu_key(lu_name: str) -> str:
    """``"take off.v"`` -> ``"take off"``: the lemma without its POS suffix, lowercased."""
    head, dot, _ = lu_name.rpartition(".")
    return (head if dot else lu_name).lower()


def tokenize(text: str) -> Tuple[List[str], List[Tuple[int, int]]]:
    """Whitespace tokens with their ``[start, end)`` character offsets."""
    words, offsets = [], []
    for m in _TOKEN.finditer(text):
        words.append(m.group())
        offsets.append((m.start(), m.end()))
    return words, offsets


def char_span_to_tokens(start: int, end: int, offsets: Sequence[Tuple[int, int]]) -> Optional[Span]:
    """
    Token span covering characters ``[start, end)``, or None when the span does
    not start and end on token boundaries.
    """
    first = next((i for i, (s, _) in enumerate(offsets) if s == start), None)
    last = next((i for i, (_, e) in enumerate(offsets) if e == end), None)
    if first is None or last is None or last < first:
        return None
    return Span(first, last)


@dataclass
class ConversionStats:
    sentences: int = 0
    tuples: int = 0
    dropped_targets: int = 0
    dropped_roles: int = 0


def build_ontology(fn) -> FrameOntology:
    frames, roles_of = [], {}
    lexicon: Dict[str, Set[str]] = {}
    for frame in sorted(fn.frames(), key=lambda f: f.name):
        roles = tuple(sorted(frame.FE.keys()))
        if not roles:
            continue
        frames.append(frame.name)
        roles_of[frame.name] = roles
        for lu_name in frame.lexUnit.keys():
            lexicon.setdefault(lu_key(lu_name), set()).add(frame.name)
    return FrameOntology(tuple(frames), roles_of, {k: frozenset(v) for k, v in lexicon.items()})


def _convert_sentence(sent, ontology: FrameOntology, stats: ConversionStats) -> AnnotatedSentence:
    words, offsets = tokenize(sent.text)
    tuples = []
    for aset in sent.annotationSet:
        if "Target" not in aset or not aset.get("frameName"):
            continue
        frame = aset.frameName
        if frame not in ontology.roles_of:
            stats.dropped_targets += 1
            continue
        pieces = [char_span_to_tokens(s, e, offsets) for s, e in aset.Target]
        if not pieces or any(p is None for p in pieces):
            stats.dropped_targets += 1
            continue
        try:
            predicate = Predicate(tuple(sorted(set(pieces))))
        except CorpusError:
            stats.dropped_targets += 1
            continue

        roles = []
        fe_layer = aset.FE[0] if aset.get("FE") else []
        for start, end, name in fe_layer:
            span = char_span_to_tokens(start, end, offsets)
            if span is None or name not in ontology.roles_of[frame]:
                stats.dropped_roles += 1
                continue
            roles.append(RoleAssignment(name, span))
        tuples.append(FrameTuple(predicate, frame, tuple(roles)))
    stats.tuples += len(tuples)
    return AnnotatedSentence.from_words(words, tuples)


def convert_fulltext(framenet_root: Union[str, Path], out_dir: Union[str, Path]) -> ConversionStats:
    """
    Write ``ontology.json`` and ``fulltext.jsonl`` for a FrameNet release.

    Targets and roles whose character offsets do not fall on whitespace token
    boundaries are dropped and counted in the returned stats.
    """
    fn = _reader(framenet_root)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    ontology = build_ontology(fn)
    save_ontology(out / "ontology.json", ontology)

    stats = ConversionStats()
    sentences = []
    for doc in fn.docs():
        for sent in doc.sentence:
            sentences.append(_convert_sentence(sent, ontology, stats))
    stats.sentences = len(sentences)
    save_corpus(out / "fulltext.jsonl", sentences)
    logger.info(
        "converted %d sentences (%d tuples); dropped %d targets and %d roles off token boundaries",
        stats.sentences, stats.tuples, stats.dropped_targets, stats.dropped_roles,
    )
    return stats
