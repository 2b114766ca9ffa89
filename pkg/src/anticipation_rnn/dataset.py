"""Masked training examples: windows, binary masks, constraint sequences.

Each example pairs a shifted token window with a constraint sequence derived
from it by a random binary mask: kept positions carry the true token id,
dropped positions carry NC. Masks are resampled per epoch so one melody is
seen under many constraint patterns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .encoding import Corpus, Vocabulary
from .errors import InvalidInputError

MASK_POLICIES = ("uniform", "none", "all")


def sample_mask(n: int, rng: np.random.Generator, policy: str = "uniform") -> np.ndarray:
    """Binary mask of length n; 1 means the position is constrained.

    "uniform" draws an inclusion rate once per example from U(0,1) and then
    each bit Bernoulli(rate), covering sparse and dense constraint regimes.
    "none" and "all" are the unconstrained / fully-constrained boundaries.
    """
    if n < 1:
        raise InvalidInputError("mask length must be >= 1")
    if policy == "none":
        return np.zeros(n, dtype=np.int8)
    if policy == "all":
        return np.ones(n, dtype=np.int8)
    if policy == "uniform":
        rate = rng.random()
        return (rng.random(n) < rate).astype(np.int8)
    raise InvalidInputError(f"unknown mask policy {policy!r}")


def apply_mask(seq_ids: np.ndarray, mask: np.ndarray, nc_id: int) -> np.ndarray:
    """Constraint sequence: the token id where the bit is 1, NC where 0."""
    seq_ids = np.asarray(seq_ids)
    mask = np.asarray(mask)
    if seq_ids.shape != mask.shape:
        raise InvalidInputError("sequence and mask lengths differ")
    return np.where(mask == 1, seq_ids, nc_id)


@dataclass(frozen=True)
class TrainingExample:
    """One window: inputs are targets shifted right with START prepended.

    ``valid`` flags the positions that count toward the loss; positions after
    the first END are padding. Constraints only ever sit on real melody
    tokens, never on END or padding.
    """

    input_ids: np.ndarray
    constraint_ids: np.ndarray
    target_ids: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        n = len(self.target_ids)
        if not (len(self.input_ids) == len(self.constraint_ids) == len(self.valid) == n):
            raise InvalidInputError("example arrays must share one length")

    def __len__(self) -> int:
        return len(self.target_ids)


def _windows(seq_ids: list[int], window: int, end_id: int) -> list[tuple[list[int], list[int]]]:
    """Split one melody into fixed-size target windows.

    A window that ends exactly at the melody boundary stops mid-melody; only
    a final partial window gains the END token, followed by invalid END
    padding up to the window size.
    """
    out = []
    for lo in range(0, len(seq_ids), window):
        chunk = list(seq_ids[lo : lo + window])
        valid = [1] * len(chunk)
        if len(chunk) < window:
            chunk.append(end_id)
            valid.append(1)
        while len(chunk) < window:
            chunk.append(end_id)
            valid.append(0)
        out.append((chunk, valid))
    return out


def make_examples(
    corpus: Corpus,
    vocab: Vocabulary,
    window: int,
    rng: np.random.Generator,
    policy: str = "uniform",
) -> Iterator[TrainingExample]:
    """Deterministic stream of masked examples for one epoch."""
    if window < 2:
        raise InvalidInputError("window must be >= 2")
    if len(corpus) == 0:
        raise InvalidInputError("empty corpus")
    start_id, end_id, nc_id = vocab.start_id, vocab.end_id, vocab.nc_id
    for seq in corpus.sequences:
        ids = [vocab.id_of(t.surface) for t in seq.tokens]
        for targets, valid in _windows(ids, window, end_id):
            targets_arr = np.array(targets, dtype=np.int64)
            valid_arr = np.array(valid, dtype=bool)
            inputs = np.concatenate(([start_id], targets_arr[:-1]))
            mask = sample_mask(window, rng, policy)
            # END and padding can never be constrained
            maskable = valid_arr & (targets_arr != end_id)
            mask = mask * maskable
            constraints = apply_mask(targets_arr, mask, nc_id)
            yield TrainingExample(inputs, constraints, targets_arr, valid_arr)


@dataclass(frozen=True)
class Batch:
    """Stacked examples of one shared window length."""

    input_ids: np.ndarray  # (B, N) int64
    constraint_ids: np.ndarray  # (B, N) int64
    target_ids: np.ndarray  # (B, N) int64
    valid: np.ndarray  # (B, N) bool

    @property
    def size(self) -> int:
        return self.input_ids.shape[0]

    @property
    def window(self) -> int:
        return self.input_ids.shape[1]


def batch_examples(examples: Sequence[TrainingExample], batch_size: int) -> list[Batch]:
    """Group examples into batches of at most batch_size, preserving order."""
    if batch_size < 1:
        raise InvalidInputError("batch size must be >= 1")
    out = []
    for lo in range(0, len(examples), batch_size):
        group = examples[lo : lo + batch_size]
        out.append(
            Batch(
                np.stack([e.input_ids for e in group]),
                np.stack([e.constraint_ids for e in group]),
                np.stack([e.target_ids for e in group]),
                np.stack([e.valid for e in group]),
            )
        )
    return out
