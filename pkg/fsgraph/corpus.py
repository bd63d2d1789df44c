"""
Frame-semantic corpus data model.

A sentence is a token list plus a set of frame tuples (predicate, frame, roles).
Predicates are ordered lists of token spans and may be discontinuous. Spans are
closed token intervals ``[start, end]``.

Sentences travel as JSONL, one sentence per line::

    {"tokens": [...], "lemmas": [...] | null,
     "tuples": [{"predicate": [[s, e], ...], "frame": "F",
                 "roles": [{"name": "R", "span": [s, e]}]}]}

An optional ``"id"`` key is accepted and ignored. The ontology is one JSON
object ``{"frames": {F: {"roles": [...]}}, "lexicon": {lemma: [F, ...]}}``;
multi-word lexicon keys join lemmas with a single space.
"""

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from types import MappingProxyType
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

from .errors import CorpusError, LemmatizationError, OntologyError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
Lemmatizer = Callable[[Sequence[str]], Sequence[str]]


@dataclass(frozen=True)
class Token:
    text: str
    index: int

    def __post_init__(self):
        if not self.text:
            raise CorpusError(f"token {self.index} has empty text")
        if self.index < 0:
            raise CorpusError(f"negative token index {self.index}")


@dataclass(frozen=True, order=True)
class Span:
    """Closed token interval; both ends inclusive."""

    start: int
    end: int

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise CorpusError(f"invalid span [{self.start}, {self.end}]")

    @property
    def length(self) -> int:
        return self.end - self.start + 1

    def overlaps(self, other: "Span") -> bool:
        return self.start <= other.end and other.start <= self.end

    def to_json(self) -> List[int]:
        return [self.start, self.end]

    @classmethod
    def from_json(cls, obj) -> "Span":
        if not isinstance(obj, (list, tuple)) or len(obj) != 2 or not all(isinstance(x, int) for x in obj):
            raise CorpusError(f"span must be [start, end], got {obj!r}")
        return cls(obj[0], obj[1])

    def __repr__(self):
        return f"Span({self.start}, {self.end})"


@dataclass(frozen=True)
class Predicate:
    pieces: Tuple[Span, ...]

    def __post_init__(self):
        pieces = tuple(self.pieces)
        object.__setattr__(self, "pieces", pieces)
        if not pieces:
            raise CorpusError("predicate has no pieces")
        for left, right in zip(pieces, pieces[1:]):
            if right.start <= left.end:
                raise CorpusError(f"predicate pieces unsorted or overlapping: {left!r}, {right!r}")

    @property
    def is_discontinuous(self) -> bool:
        return len(self.pieces) >= 2

    @classmethod
    def single(cls, start: int, end: int) -> "Predicate":
        return cls((Span(start, end),))


@dataclass(frozen=True)
class RoleAssignment:
    role_name: str
    value: Span


@dataclass(frozen=True)
class FrameTuple:
    predicate: Predicate
    frame: str
    roles: Tuple[RoleAssignment, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "roles", tuple(self.roles))


@dataclass(frozen=True)
class AnnotatedSentence:
    tokens: Tuple[Token, ...]
    tuples: Tuple[FrameTuple, ...] = ()
    lemmas: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "tuples", tuple(self.tuples))
        if self.lemmas is not None:
            object.__setattr__(self, "lemmas", tuple(self.lemmas))
        for i, token in enumerate(self.tokens):
            if token.index != i:
                raise CorpusError(f"token indices not contiguous at position {i}")

    @classmethod
    def from_words(
        cls,
        words: Sequence[str],
        tuples: Iterable[FrameTuple] = (),
        lemmas: Optional[Sequence[str]] = None,
    ) -> "AnnotatedSentence":
        return cls(
            tokens=tuple(Token(w, i) for i, w in enumerate(words)),
            tuples=tuple(tuples),
            lemmas=tuple(lemmas) if lemmas is not None else None,
        )

    @property
    def words(self) -> List[str]:
        return [t.text for t in self.tokens]

    def __len__(self) -> int:
        return len(self.tokens)

    def without_annotation(self) -> "AnnotatedSentence":
        return replace(self, tuples=())


@dataclass(frozen=True)
class FrameOntology:
    """Frame inventory, per-frame role lists and the lexical-unit lexicon.

    ``frames`` is ordered; that order is the frame index used by every classifier
    and by tie-breaking.
    """

    frames: Tuple[str, ...]
    roles_of: Mapping[str, Tuple[str, ...]]
    lexicon: Mapping[str, FrozenSet[str]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(
            self, "roles_of", MappingProxyType({f: tuple(r) for f, r in self.roles_of.items()})
        )
        object.__setattr__(
            self, "lexicon", MappingProxyType({k: frozenset(v) for k, v in self.lexicon.items()})
        )
        known = set(self.frames)
        if len(known) != len(self.frames):
            raise OntologyError("duplicate frame identifiers")
        for frame in self.frames:
            roles = self.roles_of.get(frame)
            if not roles:
                raise OntologyError(f"frame {frame!r} has no roles")
            if len(set(roles)) != len(roles):
                raise OntologyError(f"frame {frame!r} lists a role twice")
        extra = set(self.roles_of) - known
        if extra:
            raise OntologyError(f"roles defined for unknown frames: {sorted(extra)}")
        for key, frames in self.lexicon.items():
            missing = frames - known
            if missing:
                raise OntologyError(f"lexicon entry {key!r} names unknown frames {sorted(missing)}")

    def __hash__(self):
        return hash(self.digest())

    @property
    def frame_index(self) -> Dict[str, int]:
        return {f: i for i, f in enumerate(self.frames)}

    @property
    def role_labels(self) -> Tuple[str, ...]:
        """Deduplicated union of all role lists, in frame order then role order."""
        seen: Dict[str, None] = {}
        for frame in self.frames:
            for role in self.roles_of[frame]:
                seen.setdefault(role, None)
        return tuple(seen)

    def to_json(self) -> dict:
        return {
            "frames": {f: {"roles": list(self.roles_of[f])} for f in self.frames},
            "lexicon": {k: sorted(v, key=self.frame_index.__getitem__) for k, v in sorted(self.lexicon.items())},
        }

    @classmethod
    def from_json(cls, obj) -> "FrameOntology":
        if not isinstance(obj, dict) or "frames" not in obj:
            raise OntologyError("ontology JSON must be an object with a 'frames' key")
        frames = obj["frames"]
        if not isinstance(frames, dict):
            raise OntologyError("'frames' must map frame names to {'roles': [...]}")
        roles_of = {}
        for name, entry in frames.items():
            if not isinstance(entry, dict) or not isinstance(entry.get("roles"), list):
                raise OntologyError(f"frame {name!r} needs a 'roles' list")
            roles_of[name] = tuple(entry["roles"])
        lexicon = {k: frozenset(v) for k, v in obj.get("lexicon", {}).items()}
        return cls(frames=tuple(frames), roles_of=roles_of, lexicon=lexicon)

    def digest(self) -> str:
        canonical = json.dumps(self.to_json(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# JSON codec
# ---------------------------------------------------------------------------


def sentence_to_json(sentence: AnnotatedSentence) -> dict:
    return {
        "tokens": sentence.words,
        "lemmas": list(sentence.lemmas) if sentence.lemmas is not None else None,
        "tuples": [
            {
                "predicate": [p.to_json() for p in t.predicate.pieces],
                "frame": t.frame,
                "roles": [{"name": r.role_name, "span": r.value.to_json()} for r in t.roles],
            }
            for t in sentence.tuples
        ],
    }


def sentence_from_json(obj) -> AnnotatedSentence:
    if not isinstance(obj, dict):
        raise CorpusError("sentence must be a JSON object")
    unknown = set(obj) - {"tokens", "lemmas", "tuples", "id"}
    if unknown:
        raise CorpusError(f"unknown sentence keys {sorted(unknown)}")
    words = obj.get("tokens")
    if not isinstance(words, list) or not all(isinstance(w, str) for w in words):
        raise CorpusError("'tokens' must be a list of strings")
    lemmas = obj.get("lemmas")
    if lemmas is not None and (not isinstance(lemmas, list) or not all(isinstance(x, str) for x in lemmas)):
        raise CorpusError("'lemmas' must be null or a list of strings")

    tuples = []
    for t in obj.get("tuples", []):
        try:
            pieces = tuple(Span.from_json(p) for p in t["predicate"])
            roles = tuple(RoleAssignment(r["name"], Span.from_json(r["span"])) for r in t.get("roles", []))
            tuples.append(FrameTuple(Predicate(pieces), t["frame"], roles))
        except (KeyError, TypeError) as e:
            raise CorpusError(f"malformed tuple: {e!r}") from e
    return AnnotatedSentence.from_words(words, tuples, lemmas)


def validate_sentence(sentence: AnnotatedSentence, ontology: Optional[FrameOntology] = None) -> List[str]:
    """Return every invariant violation of ``sentence`` (empty when valid)."""
    errors = []
    n = len(sentence.tokens)
    if sentence.lemmas is not None:
        if len(sentence.lemmas) != n:
            errors.append(f"{len(sentence.lemmas)} lemmas for {n} tokens")
        if any(not lemma for lemma in sentence.lemmas):
            errors.append("empty lemma")

    for i, t in enumerate(sentence.tuples):
        for piece in t.predicate.pieces:
            if piece.end >= n:
                errors.append(f"tuple {i}: predicate piece {piece.to_json()} out of bounds for {n} tokens")
        for role in t.roles:
            if role.value.end >= n:
                errors.append(f"tuple {i}: role {role.role_name} span {role.value.to_json()} out of bounds")
        if ontology is None:
            continue
        if t.frame not in ontology.roles_of:
            errors.append(f"tuple {i}: unknown frame {t.frame!r}")
            continue
        allowed = ontology.roles_of[t.frame]
        for role in t.roles:
            if role.role_name not in allowed:
                errors.append(f"tuple {i}: role {role.role_name!r} not defined for frame {t.frame!r}")
    return errors


def load_corpus(path: PathLike, ontology: Optional[FrameOntology] = None) -> List[AnnotatedSentence]:
    """Load and validate a JSONL corpus; errors name the offending line."""
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"malformed JSON: {e.msg}", path=str(path), line=lineno) from e
            try:
                sentence = sentence_from_json(obj)
            except CorpusError as e:
                raise CorpusError(str(e), path=str(path), line=lineno) from e
            errors = validate_sentence(sentence, ontology)
            if errors:
                raise CorpusError("; ".join(errors), path=str(path), line=lineno)
            sentences.append(sentence)
    logger.info("loaded %d sentences from %s", len(sentences), path)
    return sentences


def save_corpus(path: PathLike, sentences: Iterable[AnnotatedSentence]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sentence in sentences:
            fh.write(json.dumps(sentence_to_json(sentence), ensure_ascii=False))
            fh.write("\n")


def load_ontology(path: PathLike) -> FrameOntology:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise OntologyError(f"{path}: malformed JSON: {e.msg}") from e
    return FrameOntology.from_json(obj)


def save_ontology(path: PathLike, ontology: FrameOntology) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(ontology.to_json(), fh, ensure_ascii=False, indent=2)
        fh.write("\n")


class CorpusStats(NamedTuple):
    sentences: int
    predicates: int
    roles: int

    def __add__(self, other):
        return CorpusStats(
            self.sentences + other.sentences,
            self.predicates + other.predicates,
            self.roles + other.roles,
        )


def corpus_stats(sentences: Iterable[AnnotatedSentence]) -> CorpusStats:
    stats = CorpusStats(0, 0, 0)
    for s in sentences:
        stats = stats + CorpusStats(1, len(s.tuples), sum(len(t.roles) for t in s.tuples))
    return stats


# ---------------------------------------------------------------------------
# Lemmatization
# ---------------------------------------------------------------------------

IRREGULAR_LEMMAS: Mapping[str, str] = MappingProxyType({
    "am": "be", "is": "be", "are": "be", "was": "be", "were": "be", "been": "be",
    "has": "have", "had": "have",
    "does": "do", "did": "do", "done": "do",
    "went": "go", "gone": "go",
    "gave": "give", "given": "give",
    "took": "take", "taken": "take",
    "made": "make", "said": "say", "met": "meet",
    "men": "man", "women": "woman", "children": "child", "people": "person",
})

# (suffix, replacement, minimum word length); first match wins
SUFFIX_RULES: Tuple[Tuple[str, str, int], ...] = (
    ("sses", "ss", 5),
    ("ies", "y", 5),
    ("xes", "x", 4),
    ("ches", "ch", 5),
    ("shes", "sh", 5),
    ("s", "", 4),
)

# words ending in these keep their final "s"
_KEEP_S = re.compile(r"(ss|us|is|ous)$")


class RuleLemmatizer:
    """
    Default lemmatizer: lowercase, an irregular-form table, then the first
    matching rule of SUFFIX_RULES. Already-lemmatized lowercase words are fixed
    points.
    """

    def lemma(self, word: str) -> str:
        w = word.lower()
        if w in IRREGULAR_LEMMAS:
            return IRREGULAR_LEMMAS[w]
        for suffix, replacement, min_len in SUFFIX_RULES:
            if len(w) >= min_len and w.endswith(suffix):
                if suffix == "s" and _KEEP_S.search(w):
                    continue
                return w[: len(w) - len(suffix)] + replacement
        return w

    def __call__(self, words: Sequence[str]) -> List[str]:
        return [self.lemma(w) for w in words]


def lemmatize(sentence: AnnotatedSentence, lemmatizer: Optional[Lemmatizer] = None) -> AnnotatedSentence:
    """Return a copy of ``sentence`` with lemmas filled by ``lemmatizer``."""
    lemmatizer = lemmatizer or RuleLemmatizer()
    lemmas = list(lemmatizer(sentence.words))
    if len(lemmas) != len(sentence.tokens):
        raise LemmatizationError(
            f"lemmatizer returned {len(lemmas)} lemmas for {len(sentence.tokens)} tokens"
        )
    for i, lemma in enumerate(lemmas):
        if not isinstance(lemma, str) or not lemma:
            raise LemmatizationError(f"empty lemma for token {i} ({sentence.tokens[i].text!r})")
    return replace(sentence, lemmas=tuple(lemmas))


def ensure_lemmas(sentence: AnnotatedSentence, lemmatizer: Optional[Lemmatizer] = None) -> AnnotatedSentence:
    return sentence if sentence.lemmas is not None else lemmatize(sentence, lemmatizer)
