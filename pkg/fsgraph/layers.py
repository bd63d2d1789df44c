"""Small neural building blocks shared by the classification heads."""

from typing import Optional

import torch
import torch.nn as nn
import torch.nn.functional as F


class MLP(nn.Module):
    """One hidden layer with ReLU and dropout, then a linear output layer."""

    def __init__(self, input_dim: int, hidden_dim: int, output_dim: int, dropout: float = 0.0):
        super().__init__()
        self.hidden = nn.Linear(input_dim, hidden_dim)
        self.dropout = nn.Dropout(dropout)
        self.output = nn.Linear(hidden_dim, output_dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.output(self.dropout(F.relu(self.hidden(x))))


def masked_log_softmax(logits: torch.Tensor, mask: Optional[torch.Tensor]) -> torch.Tensor:
    """
    Log-softmax over the last dimension with disallowed entries set to -inf.

    ``mask`` is boolean (True = allowed), broadcastable to ``logits``; rows whose
    mask allows nothing fall back to the unmasked distribution.
    """
    if mask is None:
        return F.log_softmax(logits, dim=-1)
    mask = mask.expand_as(logits)
    empty = ~mask.any(dim=-1, keepdim=True)
    mask = mask | empty
    return F.log_softmax(logits.masked_fill(~mask, float("-inf")), dim=-1)
