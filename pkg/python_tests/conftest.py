"""
Shared fixtures: a hand-written ontology, tiny encoder settings and a seeded
synthetic corpus.
"""

import pytest
import torch

from fsgraph.config import Flags, RunConfig, TrainConfig
from fsgraph.corpus import AnnotatedSentence, FrameOntology, FrameTuple, Predicate, RoleAssignment, Span
from fsgraph.encoder import EncoderConfig, Vocabulary
from fsgraph.fixtures import generate_fixture


@pytest.fixture
def ontology():
    return FrameOntology(
        frames=("Social_event", "Motion", "Removing"),
        roles_of={
            "Social_event": ("Attendee", "Place", "Time"),
            "Motion": ("Theme", "Goal"),
            "Removing": ("Agent", "Theme"),
        },
        lexicon={
            "party": {"Social_event"},
            "move": {"Motion"},
            "take out": {"Removing"},
            "go": {"Motion", "Social_event"},
        },
    )


@pytest.fixture
def sentence():
    """'john took the trash out at night': discontinuous 'took ... out' plus a nested role."""
    words = ["john", "took", "the", "trash", "out", "at", "night"]
    tuples = [
        FrameTuple(
            Predicate((Span(1, 1), Span(4, 4))),
            "Removing",
            (RoleAssignment("Agent", Span(0, 0)), RoleAssignment("Theme", Span(2, 3))),
        ),
    ]
    return AnnotatedSentence.from_words(words, tuples, ["john", "take", "the", "trash", "out", "at", "night"])


@pytest.fixture
def tiny_encoder():
    return EncoderConfig(
        word_dim=8,
        hidden_size=6,
        num_layers=2,
        max_span_length=4,
        width_embedding_dim=3,
        dropout_lstm=0.0,
        dropout_mlp=0.0,
        mlp_hidden=10,
    )


@pytest.fixture
def fixture_corpus():
    return generate_fixture(7, 20)


@pytest.fixture
def vocab(sentence, fixture_corpus):
    _, sentences = fixture_corpus
    return Vocabulary.build(list(sentences) + [sentence])


@pytest.fixture
def run_config(tiny_encoder):
    return RunConfig(
        encoder=tiny_encoder,
        train=TrainConfig(batch_size=4, max_epochs=2, seed=3, lr_other=1e-2),
        flags=Flags(),
    )


@pytest.fixture(autouse=True)
def _seed():
    torch.manual_seed(0)
