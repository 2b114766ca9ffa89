"""Synthetic ground-truth corpora from order-1 Markov pitch chains.

Used as the verification workhorse: the generating process has an exactly
computable per-position entropy, so a trained model's NLL has an analytic
floor to be checked against. Each note lasts a fixed number of sixteenths,
so the emitted token stream alternates notes with deterministic holds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoding import HOLD, Corpus, MelodySequence, note
from .errors import InvalidInputError


def stationary_distribution(transition: np.ndarray) -> np.ndarray:
    """Left eigenvector of the transition matrix for eigenvalue 1."""
    t = np.asarray(transition, dtype=np.float64)
    n = t.shape[0]
    a = np.vstack([t.T - np.eye(n), np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


@dataclass(frozen=True)
class MarkovMelodyModel:
    """Pitch chain with fixed note duration (in sixteenths)."""

    pitches: tuple[str, ...]
    transition: np.ndarray
    initial: np.ndarray
    duration: int = 2

    def __post_init__(self):
        t = np.asarray(self.transition)
        p = np.asarray(self.initial)
        k = len(self.pitches)
        if t.shape != (k, k) or p.shape != (k,):
            raise InvalidInputError("transition/initial shapes must match pitch count")
        if not np.allclose(t.sum(axis=1), 1.0, atol=1e-9) or not np.isclose(p.sum(), 1.0):
            raise InvalidInputError("rows of transition and initial must sum to 1")
        if self.duration < 1:
            raise InvalidInputError("duration must be >= 1")

    def sample_sequence(self, notes_count: int, rng: np.random.Generator) -> MelodySequence:
        tokens = []
        state = int(rng.choice(len(self.pitches), p=self.initial))
        for i in range(notes_count):
            if i > 0:
                state = int(rng.choice(len(self.pitches), p=self.transition[state]))
            tokens.append(note(self.pitches[state]))
            tokens.extend([HOLD] * (self.duration - 1))
        return MelodySequence(tuple(tokens))

    def sample_corpus(
        self,
        sequences: int,
        notes_per_sequence: int | tuple[int, int],
        seed: int,
    ) -> Corpus:
        """Sample a corpus; a (lo, hi) pair draws note counts uniformly.

        Variable lengths matter for short-window generation: with one fixed
        length the backward constraint pass alone pins the END position, and
        a model trained that way ends every sampled window prematurely.
        """
        rng = np.random.default_rng(seed)
        if isinstance(notes_per_sequence, tuple):
            lo, hi = notes_per_sequence
            counts = rng.integers(lo, hi + 1, size=sequences)
        else:
            counts = np.full(sequences, notes_per_sequence)
        seqs = tuple(self.sample_sequence(int(k), rng) for k in counts)
        return Corpus(seqs, name=f"markov-{len(self.pitches)}p-d{self.duration}")

    def tokens_per_sequence(self, notes_per_sequence: int) -> int:
        return notes_per_sequence * self.duration

    def entropy_floor(self, notes_per_sequence: int) -> float:
        """Exact mean per-position NLL an ideal model attains on this source.

        Valid positions are the tokens plus the final END; holds and END are
        deterministic given the past, so only the initial pitch and the
        pitch transitions carry entropy.
        """

        def h(row: np.ndarray) -> float:
            nz = row[row > 0]
            return float(-(nz * np.log(nz)).sum())

        total = h(self.initial)
        marginal = self.initial.copy()
        for _ in range(notes_per_sequence - 1):
            total += float(sum(marginal[i] * h(self.transition[i]) for i in range(len(marginal))))
            marginal = marginal @ self.transition
        positions = self.tokens_per_sequence(notes_per_sequence) + 1
        return total / positions

    def sequence_log_prob(self, pitch_indices: list[int]) -> float:
        """Log-probability of a pitch path under the chain."""
        lp = float(np.log(self.initial[pitch_indices[0]]))
        for a, b in zip(pitch_indices, pitch_indices[1:]):
            lp += float(np.log(self.transition[a, b]))
        return lp


def _chain(pitches, rows, duration) -> MarkovMelodyModel:
    t = np.array(rows, dtype=np.float64)
    return MarkovMelodyModel(
        pitches=tuple(pitches),
        transition=t,
        initial=stationary_distribution(t),
        duration=duration,
    )


def default_chain() -> MarkovMelodyModel:
    """Five pentatonic pitches, neighbor-biased transitions, half-beat notes."""
    return _chain(
        ("C4", "D4", "E4", "G4", "A4"),
        [
            [0.05, 0.50, 0.25, 0.15, 0.05],
            [0.25, 0.05, 0.45, 0.15, 0.10],
            [0.10, 0.30, 0.10, 0.35, 0.15],
            [0.10, 0.15, 0.35, 0.10, 0.30],
            [0.05, 0.15, 0.25, 0.50, 0.05],
        ],
        duration=2,
    )


def tiny_chain() -> MarkovMelodyModel:
    """Three pitches, one sixteenth per note; small enough to enumerate."""
    return _chain(
        ("C4", "E4", "G4"),
        [
            [0.2, 0.5, 0.3],
            [0.4, 0.2, 0.4],
            [0.5, 0.3, 0.2],
        ],
        duration=1,
    )
