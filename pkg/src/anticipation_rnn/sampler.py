"""Constrained left-to-right sampling.

One backward pass digests the constraints, then tokens are drawn one step at
a time; a length-N generation costs exactly N constraint-cell and N
token-cell time-steps, counted by instrumentation and surfaced on the record.

Enforcement modes: "learned" (the default) trusts the trained model to honor
the constraints; "clamped" overwrites constrained positions after recording
the model's distribution, as a hard guarantee for interactive use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoding import TokenKind, Vocabulary
from .errors import InvalidInputError
from .model import AnticipationRNN, CellCounter, StepDistribution
from .numerics import softmax

MODES = ("learned", "clamped")


@dataclass(frozen=True)
class ConstraintSet:
    """User constraints: unique 1-based positions with required tokens."""

    pairs: tuple[tuple[int, str], ...]
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise InvalidInputError("constraint set length must be >= 1")
        seen = set()
        for pos, _ in self.pairs:
            if not 1 <= pos <= self.length:
                raise InvalidInputError(
                    f"constraint position {pos} outside 1..{self.length}"
                )
            if pos in seen:
                raise InvalidInputError(f"duplicate constraint position {pos}")
            seen.add(pos)

    @classmethod
    def of(cls, pairs, length: int) -> "ConstraintSet":
        return cls(tuple((int(p), str(s)) for p, s in pairs), length)

    def validate_tokens(self, vocab: Vocabulary) -> None:
        for _, surface in self.pairs:
            tok_id = vocab.id_of(surface)  # raises on unknown surface
            if vocab.token_of(tok_id).kind not in (TokenKind.NOTE, TokenKind.HOLD):
                raise InvalidInputError(
                    f"constraint value {surface!r} must be a note or hold token"
                )

    def dense_ids(self, vocab: Vocabulary) -> np.ndarray:
        """Dense constraint sequence: token ids with NC at free positions."""
        self.validate_tokens(vocab)
        out = np.full(self.length, vocab.nc_id, dtype=np.int64)
        for pos, surface in self.pairs:
            out[pos - 1] = vocab.id_of(surface)
        return out

    def satisfied_by(self, token_ids: np.ndarray, vocab: Vocabulary) -> list[bool]:
        token_ids = np.asarray(token_ids)
        return [bool(token_ids[pos - 1] == vocab.id_of(surface)) for pos, surface in self.pairs]

    def to_text(self) -> str:
        return ",".join(f"{pos}:{surface}" for pos, surface in self.pairs)


def parse_constraint_pairs(text: str) -> list[tuple[int, str]]:
    """Parse the "1:D4,9:G4" wire form; empty text means no constraints."""
    pairs: list[tuple[int, str]] = []
    text = text.strip()
    if not text:
        return pairs
    for chunk in text.split(","):
        piece = chunk.strip()
        if ":" not in piece:
            raise InvalidInputError(f"bad constraint {piece!r}, expected POS:TOKEN")
        pos_text, surface = piece.split(":", 1)
        try:
            pos = int(pos_text)
        except ValueError:
            raise InvalidInputError(f"bad constraint position {pos_text!r}") from None
        pairs.append((pos, surface.strip()))
    return pairs


def parse_constraints(text: str, length: int) -> ConstraintSet:
    return ConstraintSet.of(parse_constraint_pairs(text), length)


@dataclass
class GenerationRecord:
    """One sampled sequence plus everything diagnostics need to audit it."""

    token_ids: np.ndarray
    surfaces: list[str]
    distributions: list[StepDistribution]
    constraint_cell_calls: int
    token_cell_calls: int
    seed: int
    temperature: float
    mode: str
    hit_end: bool

    def to_line(self) -> str:
        return " ".join(self.surfaces)


def _draw_rows(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One categorical draw per row of a (B, V) probability matrix."""
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0])
    idx = (cdf < u[:, None]).sum(axis=1)
    return np.minimum(idx, probs.shape[1] - 1).astype(np.int64)


def generate(
    model: AnticipationRNN,
    constraints: ConstraintSet,
    temperature: float = 1.0,
    seed: int | None = None,
    mode: str = "learned",
) -> GenerationRecord:
    """Sample one sequence of length constraints.length.

    Recorded step distributions are the ones the tokens were drawn from
    (temperature already applied). In clamped mode the distribution is
    recorded unmodified and the token then overwritten with the constraint.
    """
    if mode not in MODES:
        raise InvalidInputError(f"mode must be one of {MODES}")
    if not temperature > 0:
        raise InvalidInputError("temperature must be positive")
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (2**63))
    vocab = model.vocab
    n = constraints.length
    cids = constraints.dense_ids(vocab)
    clamp = {pos: vocab.id_of(surface) for pos, surface in constraints.pairs}

    counter = CellCounter()
    o = model.constraint_summary(cids[None, :], counter)
    rng = np.random.default_rng(seed)
    state = model.fresh_token_state(1)
    prev = np.array([vocab.start_id], dtype=np.int64)
    ids = np.empty(n, dtype=np.int64)
    dists: list[StepDistribution] = []
    for t in range(1, n + 1):
        logits, state = model.token_step(prev, o[:, t - 1], state, counter)
        scaled = logits[0] / temperature
        probs = softmax(scaled)
        dists.append(StepDistribution(logits=scaled, probs=probs))
        tok = int(_draw_rows(probs[None, :], rng)[0])
        if mode == "clamped" and t in clamp:
            tok = clamp[t]
        ids[t - 1] = tok
        prev = np.array([tok], dtype=np.int64)

    return GenerationRecord(
        token_ids=ids,
        surfaces=[vocab.surface_of(i) for i in ids],
        distributions=dists,
        constraint_cell_calls=counter.constraint_steps,
        token_cell_calls=counter.token_steps,
        seed=seed,
        temperature=temperature,
        mode=mode,
        hit_end=bool((ids == vocab.end_id).any()),
    )


def generate_batch(
    model: AnticipationRNN,
    constraints: ConstraintSet,
    count: int,
    temperature: float = 1.0,
    seed: int = 0,
    mode: str = "learned",
    chunk: int = 8192,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample many sequences under one constraint set.

    Vectorized over a chunked batch; the shared constraint pass is computed
    once per chunk. Returns (ids (count, N) int64, log-probability of each
    sampled sequence under the sampling distributions).
    """
    if mode not in MODES:
        raise InvalidInputError(f"mode must be one of {MODES}")
    if count < 1:
        raise InvalidInputError("count must be >= 1")
    vocab = model.vocab
    n = constraints.length
    cids = constraints.dense_ids(vocab)
    clamp = {pos: vocab.id_of(surface) for pos, surface in constraints.pairs}
    o_single = model.constraint_summary(cids[None, :])  # (1, N, H)

    rng = np.random.default_rng(seed)
    all_ids = np.empty((count, n), dtype=np.int64)
    all_logp = np.empty(count)
    done = 0
    while done < count:
        b = min(chunk, count - done)
        o = np.repeat(o_single, b, axis=0)
        state = model.fresh_token_state(b)
        prev = np.full(b, vocab.start_id, dtype=np.int64)
        logp = np.zeros(b)
        ids = np.empty((b, n), dtype=np.int64)
        for t in range(1, n + 1):
            logits, state = model.token_step(prev, o[:, t - 1], state)
            probs = softmax(logits / temperature)
            tok = _draw_rows(probs, rng)
            if mode == "clamped" and t in clamp:
                tok = np.full(b, clamp[t], dtype=np.int64)
            logp += np.log(probs[np.arange(b), tok])
            ids[:, t - 1] = tok
            prev = tok
        all_ids[done : done + b] = ids
        all_logp[done : done + b] = logp
        done += b
    return all_ids, all_logp


def step_distributions(
    model: AnticipationRNN,
    constraints: ConstraintSet,
    token_ids: np.ndarray,
) -> list[StepDistribution]:
    """Teacher-forced per-step distributions for a realized sequence."""
    token_ids = np.asarray(token_ids, dtype=np.int64)
    if token_ids.ndim != 1 or token_ids.shape[0] != constraints.length:
        raise InvalidInputError("sequence length must equal the constraint set length")
    cids = constraints.dense_ids(model.vocab)
    probs = model.step_probabilities(cids[None, :], token_ids[None, :])[0]
    with np.errstate(divide="ignore"):
        logs = np.log(probs)
    return [StepDistribution(logits=logs[t], probs=probs[t]) for t in range(len(token_ids))]
