"""
Synthetic frame-semantic corpora for desk-scale training and tests.

Everything is drawn from one ``numpy`` generator seeded by the caller, so a seed
fully determines the ontology and the sentences.
"""

from typing import Dict, List, Sequence, Tuple

import numpy as np

from .corpus import AnnotatedSentence, FrameOntology, FrameTuple, Predicate, RoleAssignment, RuleLemmatizer, Span

FRAME_NAMES = (
    "Social_event", "Discussion", "Motion", "Giving", "Commerce_buy", "Arriving",
    "Statement", "Locale_by_use", "Removing", "Activity_stop", "Perception_experience",
    "Placing", "Cause_harm", "Attempt", "Building", "Request",
)

ROLE_NAMES = (
    "Agent", "Theme", "Place", "Time", "Speaker", "Topic", "Recipient", "Goal",
    "Source", "Buyer", "Goods", "Manner", "Purpose", "Instrument", "Duration", "Degree",
)

# single-word lexical units; each licenses one or two frames
PREDICATE_WORDS = (
    "meeting", "talk", "move", "give", "buy", "arrive", "say", "garden", "remove",
    "visit", "see", "place", "hit", "try", "build", "ask", "walk", "sell", "party", "report",
)

# discontinuous lexical units (verb + particle separated by one role token)
PARTICLE_UNITS = (("pick", "up"), ("turn", "off"), ("take", "out"), ("put", "down"))

# contiguous multi-word lexical units
PHRASE_UNITS = (("give", "up"), ("look", "into"), ("set", "out"))

FILLER_WORDS = (
    "the", "a", "of", "and", "in", "on", "with", "then", "very", "old", "new", "quiet",
    "city", "river", "house", "morning", "road", "table", "window", "office",
)

ARGUMENT_WORDS = (
    "john", "mary", "the_team", "students", "parliament", "a_box", "the_keys", "lunch",
    "paris", "the_station", "yesterday", "monday", "quickly", "the_lamp", "a_letter",
    "the_committee", "her_friends", "the_car", "tomorrow", "the_budget",
)


def _build_ontology(rng: np.random.Generator, n_frames: int, max_roles: int) -> Tuple[FrameOntology, Dict[str, List[str]]]:
    frames = list(FRAME_NAMES[:n_frames])
    roles_of = {}
    for frame in frames:
        k = int(rng.integers(2, max_roles + 1))
        picks = rng.choice(len(ROLE_NAMES), size=k, replace=False)
        roles_of[frame] = [ROLE_NAMES[i] for i in sorted(picks)]

    lexicon: Dict[str, List[str]] = {}
    units = list(PREDICATE_WORDS) + [" ".join(u) for u in PARTICLE_UNITS + PHRASE_UNITS]
    for key in units:
        k = int(rng.integers(1, 3))
        picks = rng.choice(len(frames), size=min(k, len(frames)), replace=False)
        lexicon[key] = [frames[i] for i in sorted(picks)]
    ontology = FrameOntology(frames=tuple(frames), roles_of=roles_of, lexicon=lexicon)
    return ontology, lexicon


class _SentenceBuilder:
    def __init__(self, rng: np.random.Generator, length: int):
        self.rng = rng
        self.words = [FILLER_WORDS[int(i)] for i in rng.integers(0, len(FILLER_WORDS), size=length)]
        self.taken: List[Span] = []

    def free(self, span: Span) -> bool:
        return span.end < len(self.words) and not any(span.overlaps(t) for t in self.taken)

    def claim(self, length: int, tries: int = 30):
        for _ in range(tries):
            start = int(self.rng.integers(0, max(1, len(self.words) - length + 1)))
            span = Span(start, start + length - 1)
            if self.free(span):
                self.taken.append(span)
                return span
        return None

    def fill_argument(self, span: Span) -> None:
        for i in range(span.start, span.end + 1):
            self.words[i] = ARGUMENT_WORDS[int(self.rng.integers(0, len(ARGUMENT_WORDS)))]

    def roles(self, frame_roles: Sequence[str], max_roles: int = 2) -> Tuple[RoleAssignment, ...]:
        k = int(self.rng.integers(0, min(max_roles, len(frame_roles)) + 1))
        names = [frame_roles[i] for i in sorted(self.rng.choice(len(frame_roles), size=k, replace=False))]
        out = []
        for name in names:
            span = self.claim(int(self.rng.integers(1, 3)))
            if span is not None:
                self.fill_argument(span)
                out.append(RoleAssignment(name, span))
        return tuple(out)


def _pick_frame(rng, lexicon, key) -> str:
    options = lexicon[key]
    return options[int(rng.integers(0, len(options)))]


def generate_fixture(
    seed: int,
    n_sentences: int,
    n_frames: int = 6,
    max_roles: int = 4,
    min_length: int = 7,
    max_length: int = 14,
) -> Tuple[FrameOntology, List[AnnotatedSentence]]:
    """
    Generate an ontology and ``n_sentences`` annotated sentences.

    Sentence ``i`` with ``i % 5 == 3`` carries a discontinuous predicate and
    ``i % 5 == 4`` carries a span that is predicate of one tuple and role of
    another, so any fixture with at least ten sentences contains both. Lemmas are
    filled with the default rule lemmatizer. Discontinuous predicates have two
    pieces.
    """
    if n_sentences < 1:
        raise ValueError("n_sentences must be at least 1")
    if not 1 <= n_frames <= len(FRAME_NAMES):
        raise ValueError(f"n_frames must be in [1, {len(FRAME_NAMES)}]")
    if not 2 <= max_roles <= len(ROLE_NAMES):
        raise ValueError(f"max_roles must be in [2, {len(ROLE_NAMES)}]")

    rng = np.random.default_rng(seed)
    ontology, lexicon = _build_ontology(rng, n_frames, max_roles)
    lemmatizer = RuleLemmatizer()

    sentences = []
    for i in range(n_sentences):
        b = _SentenceBuilder(rng, int(rng.integers(min_length, max_length + 1)))
        tuples: List[FrameTuple] = []
        kind = i % 5

        if kind == 3:
            verb, particle = PARTICLE_UNITS[int(rng.integers(0, len(PARTICLE_UNITS)))]
            whole = b.claim(3)
            if whole is not None:
                first, middle, last = Span(whole.start, whole.start), Span(whole.start + 1, whole.start + 1), Span(whole.end, whole.end)
                b.words[first.start], b.words[last.start] = verb, particle
                frame = _pick_frame(rng, lexicon, f"{verb} {particle}")
                b.fill_argument(middle)
                roles = (RoleAssignment(ontology.roles_of[frame][0], middle),) + b.roles(ontology.roles_of[frame][1:], 1)
                tuples.append(FrameTuple(Predicate((first, last)), frame, roles))
        elif kind == 4:
            # a role-bearing predicate nested as the argument of another predicate
            outer_word = PREDICATE_WORDS[int(rng.integers(0, len(PREDICATE_WORDS)))]
            inner_word = PREDICATE_WORDS[int(rng.integers(0, len(PREDICATE_WORDS)))]
            pair = b.claim(2)
            if pair is not None:
                outer, inner = Span(pair.start, pair.start), Span(pair.end, pair.end)
                b.words[outer.start], b.words[inner.start] = outer_word, inner_word
                outer_frame = _pick_frame(rng, lexicon, outer_word)
                inner_frame = _pick_frame(rng, lexicon, inner_word)
                outer_roles = (RoleAssignment(ontology.roles_of[outer_frame][0], inner),)
                tuples.append(FrameTuple(Predicate((outer,)), outer_frame, outer_roles + b.roles(ontology.roles_of[outer_frame][1:], 1)))
                tuples.append(FrameTuple(Predicate((inner,)), inner_frame, b.roles(ontology.roles_of[inner_frame], 1)))
        elif kind == 2:
            unit = PHRASE_UNITS[int(rng.integers(0, len(PHRASE_UNITS)))]
            span = b.claim(2)
            if span is not None:
                b.words[span.start], b.words[span.end] = unit
                frame = _pick_frame(rng, lexicon, " ".join(unit))
                tuples.append(FrameTuple(Predicate((span,)), frame, b.roles(ontology.roles_of[frame])))

        n_single = 1 if tuples else int(rng.integers(1, 3))
        for _ in range(n_single):
            span = b.claim(1)
            if span is None:
                break
            word = PREDICATE_WORDS[int(rng.integers(0, len(PREDICATE_WORDS)))]
            b.words[span.start] = word
            frame = _pick_frame(rng, lexicon, word)
            tuples.append(FrameTuple(Predicate((span,)), frame, b.roles(ontology.roles_of[frame])))

        tuples.sort(key=lambda t: t.predicate.pieces)
        sentences.append(AnnotatedSentence.from_words(b.words, tuples, lemmatizer(b.words)))
    return ontology, sentences


def split_fixture(sentences: Sequence[AnnotatedSentence]) -> Tuple[list, list, list]:
    """80/10/10 train/dev/test split in generation order."""
    n = len(sentences)
    a, b = int(round(n * 0.8)), int(round(n * 0.9))
    return list(sentences[:a]), list(sentences[a:b]), list(sentences[b:])
