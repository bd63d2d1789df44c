"""
Token and span encoding.

Tokens are embedded (a trainable lookup table by default, or a pluggable
contextual encoder whose word-piece vectors are averaged per word), passed
through a stack of highway-gated bidirectional LSTMs, and every candidate span
``[start, end]`` is represented as::

    g = [h_start; h_end; h_attn; width_embedding(end - start + 1)]

where ``h_attn`` is an attention-weighted average of the states inside the span.
"""

import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import torch
import torch.nn as nn
import torch.nn.functional as F

from .corpus import AnnotatedSentence, Span
from .deserializable import Deserializable
from .errors import ConfigError

logger = logging.getLogger(__name__)

ENCODER_KINDS = ("tiny-embedding", "external-contextual")


class EncoderConfig(Deserializable):
    """Encoder hyperparameters. The defaults are full-size; tests use far smaller settings."""

    __strict__ = True

    encoder_kind: str = "tiny-embedding"
    word_dim: int = 100
    hidden_size: int = 200
    num_layers: int = 6
    max_span_length: int = 15
    width_embedding_dim: int = 20
    dropout_lstm: float = 0.4
    dropout_mlp: float = 0.2
    mlp_hidden: int = 150
    pretrained_name: str = "bert-base-cased"
    freeze_external: bool = False

    def validate(self) -> None:
        if self.encoder_kind not in ENCODER_KINDS:
            raise ConfigError(f"encoder_kind must be one of {ENCODER_KINDS}, got {self.encoder_kind!r}")
        if self.max_span_length < 1:
            raise ConfigError("max_span_length must be >= 1")
        for name in ("word_dim", "hidden_size", "num_layers", "width_embedding_dim", "mlp_hidden"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("dropout_lstm", "dropout_mlp"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must be in [0, 1)")

    @property
    def state_dim(self) -> int:
        return 2 * self.hidden_size

    @property
    def span_dim(self) -> int:
        return 2 * self.state_dim + self.state_dim + self.width_embedding_dim


class Vocabulary:
    """Lowercased word vocabulary with ``<unk>`` at index 0."""

    UNK = "<unk>"

    def __init__(self, words: Iterable[str] = ()):
        self.itos: List[str] = [self.UNK]
        self.stoi: Dict[str, int] = {self.UNK: 0}
        for w in words:
            w = w.lower()
            if w not in self.stoi:
                self.stoi[w] = len(self.itos)
                self.itos.append(w)

    @classmethod
    def build(cls, sentences: Iterable[AnnotatedSentence], min_count: int = 1) -> "Vocabulary":
        counts = Counter(w.lower() for s in sentences for w in s.words)
        return cls(sorted(w for w, c in counts.items() if c >= min_count))

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.stoi

    def index(self, word: str) -> int:
        return self.stoi.get(word.lower(), 0)

    def digest(self) -> str:
        return hashlib.sha256("\n".join(self.itos).encode("utf-8")).hexdigest()

    def save(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.itos, fh, ensure_ascii=False)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            itos = json.load(fh)
        if not itos or itos[0] != cls.UNK:
            raise ValueError(f"{path}: vocabulary must start with {cls.UNK}")
        return cls(itos[1:])


class TinyEmbedder(nn.Module):
    """Trainable lookup table over lowercased token text."""

    def __init__(self, vocab: Vocabulary, word_dim: int):
        super().__init__()
        self.vocab = vocab
        self.output_dim = word_dim
        self.embedding = nn.Embedding(len(vocab), word_dim)

    def forward(self, words: Sequence[str]) -> torch.Tensor:
        ids = torch.tensor([self.vocab.index(w) for w in words], dtype=torch.long, device=self.embedding.weight.device)
        return self.embedding(ids)


def average_word_pieces(piece_vectors: torch.Tensor, word_ids: Sequence[Optional[int]], n_words: int) -> torch.Tensor:
    """
    Average word-piece vectors into one vector per word.

    ``word_ids[k]`` is the word owning piece ``k`` (None for special pieces).
    Words without pieces (truncated input) get a zero vector.
    """
    keep = [k for k, w in enumerate(word_ids) if w is not None]
    out = piece_vectors.new_zeros(n_words, piece_vectors.size(-1))
    if not keep:
        return out
    index = torch.tensor([word_ids[k] for k in keep], dtype=torch.long, device=piece_vectors.device)
    pieces = piece_vectors[torch.tensor(keep, dtype=torch.long, device=piece_vectors.device)]
    out = out.index_add(0, index, pieces)
    counts = torch.zeros(n_words, dtype=piece_vectors.dtype, device=piece_vectors.device)
    counts = counts.index_add(0, index, torch.ones_like(index, dtype=piece_vectors.dtype))
    return out / counts.clamp(min=1).unsqueeze(-1)


class ExternalContextualEmbedder(nn.Module):
    """
    Adapter over a pretrained ``transformers`` encoder.

    Each word is split into word pieces; the word vector is the mean of its
    piece vectors from the last hidden layer. ``freeze`` keeps the pretrained
    weights fixed.
    """

    def __init__(self, pretrained_name: str, freeze: bool = False):
        super().__init__()
        try:
            from transformers import AutoModel, AutoTokenizer
        except ImportError as e:  # pragma: no cover - optional extra
            raise ConfigError("encoder_kind 'external-contextual' needs the 'contextual' extra (transformers)") from e
        self.tokenizer = AutoTokenizer.from_pretrained(pretrained_name)
        self.model = AutoModel.from_pretrained(pretrained_name)
        self.output_dim = self.model.config.hidden_size
        self.frozen = False
        if freeze:
            self.freeze()

    def freeze(self) -> None:
        self.frozen = True
        for p in self.model.parameters():
            p.requires_grad_(False)

    def forward(self, words: Sequence[str]) -> torch.Tensor:
        enc = self.tokenizer(list(words), is_split_into_words=True, truncation=True, return_tensors="pt")
        device = next(self.model.parameters()).device
        inputs = {k: v.to(device) for k, v in enc.items()}
        with torch.set_grad_enabled(torch.is_grad_enabled() and not self.frozen):
            hidden = self.model(**inputs).last_hidden_state[0]
        return average_word_pieces(hidden, enc.word_ids(0), len(words))


class HighwayLSTMLayer(nn.Module):
    """Bidirectional LSTM whose output is mixed with its input by a sigmoid gate."""

    def __init__(self, input_dim: int, hidden_size: int):
        super().__init__()
        self.lstm = nn.LSTM(input_dim, hidden_size, batch_first=True, bidirectional=True)
        self.gate = nn.Linear(input_dim + 2 * hidden_size, 2 * hidden_size)
        self.projection = nn.Linear(input_dim, 2 * hidden_size, bias=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        recurrent, _ = self.lstm(x.unsqueeze(0))
        recurrent = recurrent.squeeze(0)
        g = torch.sigmoid(self.gate(torch.cat([x, recurrent], dim=-1)))
        return g * recurrent + (1.0 - g) * self.projection(x)


class HighwayBiLSTM(nn.Module):
    def __init__(self, input_dim: int, hidden_size: int, num_layers: int, dropout: float):
        super().__init__()
        if num_layers < 1:
            raise ConfigError("num_layers must be >= 1")
        dims = [input_dim] + [2 * hidden_size] * (num_layers - 1)
        self.layers = nn.ModuleList(HighwayLSTMLayer(d, hidden_size) for d in dims)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for i, layer in enumerate(self.layers):
            if i > 0:
                x = self.dropout(x)
            x = layer(x)
        return x


def enumerate_spans(n: int, max_length: int) -> List[Span]:
    """All spans of length 1..min(max_length, n), ordered by (start, end)."""
    if n < 1 or max_length < 1:
        raise ValueError("n and max_length must be >= 1")
    return [Span(i, j) for i in range(n) for j in range(i, min(n, i + max_length))]


@dataclass
class SpanBatch:
    """Representations ``g`` (one row per span) plus the attention weights used."""

    spans: List[Span]
    g: torch.Tensor
    attention: torch.Tensor

    def __post_init__(self):
        self.row: Dict[Span, int] = {s: i for i, s in enumerate(self.spans)}

    def __len__(self) -> int:
        return len(self.spans)

    def of(self, span: Span) -> torch.Tensor:
        return self.g[self.row[span]]

    def rows(self, spans: Sequence[Span]) -> torch.Tensor:
        index = torch.tensor([self.row[s] for s in spans], dtype=torch.long, device=self.g.device)
        return self.g.index_select(0, index)


class SpanExtractor(nn.Module):
    """Endpoint + attention + width span representations."""

    def __init__(self, state_dim: int, max_span_length: int, width_dim: int):
        super().__init__()
        self.max_span_length = max_span_length
        self.attention = nn.Linear(state_dim, 1)
        self.width_embedding = nn.Embedding(max_span_length, width_dim)

    def forward(self, states: torch.Tensor, spans: Sequence[Span]) -> SpanBatch:
        n = states.size(0)
        device = states.device
        starts = torch.tensor([s.start for s in spans], dtype=torch.long, device=device)
        ends = torch.tensor([s.end for s in spans], dtype=torch.long, device=device)
        positions = torch.arange(n, device=device)
        inside = (positions.unsqueeze(0) >= starts.unsqueeze(1)) & (positions.unsqueeze(0) <= ends.unsqueeze(1))

        scores = self.attention(states).squeeze(-1)
        logits = scores.unsqueeze(0).expand(len(spans), n).masked_fill(~inside, float("-inf"))
        alpha = F.softmax(logits, dim=-1)
        h_attn = alpha @ states

        # spans longer than the maximum share the last width bucket
        widths = (ends - starts).clamp(max=self.max_span_length - 1)
        g = torch.cat([states[starts], states[ends], h_attn, self.width_embedding(widths)], dim=-1)
        return SpanBatch(list(spans), g, alpha)


class SentenceEncoder(nn.Module):
    def __init__(self, config: EncoderConfig, vocab: Vocabulary):
        super().__init__()
        self.config = config
        if config.encoder_kind == "tiny-embedding":
            self.embedder = TinyEmbedder(vocab, config.word_dim)
        else:
            self.embedder = ExternalContextualEmbedder(config.pretrained_name, config.freeze_external)
        self.contextualizer = HighwayBiLSTM(
            self.embedder.output_dim, config.hidden_size, config.num_layers, config.dropout_lstm
        )
        self.span_extractor = SpanExtractor(config.state_dim, config.max_span_length, config.width_embedding_dim)

    @property
    def output_dim(self) -> int:
        return self.config.span_dim

    def embed_tokens(self, words: Sequence[str]) -> torch.Tensor:
        return self.embedder(words)

    def contextualize(self, token_vectors: torch.Tensor) -> torch.Tensor:
        return self.contextualizer(token_vectors)

    def represent_spans(self, states: torch.Tensor, spans: Sequence[Span]) -> SpanBatch:
        return self.span_extractor(states, spans)

    def forward(self, words: Sequence[str], extra_spans: Iterable[Span] = ()) -> SpanBatch:
        """Encode a sentence and represent all enumerated spans plus ``extra_spans``."""
        spans = enumerate_spans(len(words), self.config.max_span_length)
        known = set(spans)
        for s in extra_spans:
            if s not in known and s.end < len(words):
                spans.append(s)
                known.add(s)
        states = self.contextualize(self.embed_tokens(words))
        return self.represent_spans(states, spans)
